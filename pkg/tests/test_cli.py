import json

import numpy as np
import pytest

from lpd.cli import EXIT_INVALID, EXIT_OK, main, parse_observable, parse_state_spec
from lpd.pauli import PauliString


def _csv_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    header = json.loads(lines[0][2:])
    return header, lines[1].split(","), [line.split(",") for line in lines[2:]]


def test_parse_observable_forms(tmp_path):
    assert parse_observable("Z1", 4).keys.size == 1
    op = parse_observable("X1Z3", 4)
    assert dict(op.items()) == {PauliString.from_text("XIZI"): 1.0}
    assert dict(parse_observable("IZII", 4).items()) == {PauliString.from_text("IZII"): 1.0}
    f = tmp_path / "obs.txt"
    f.write_text("0.5 ZIII\n0.5 IIIZ\n")
    assert len(parse_observable(f"@{f}", 4)) == 2
    for bad in ("Z5", "Q1", "Z1Z1", "Z0"):
        with pytest.raises(ValueError):
            parse_observable(bad, 4)


def test_parse_state_spec():
    assert parse_state_spec("product:0101", 4) == {"kind": "product", "pattern": "0101"}
    assert parse_state_spec("product:", 4)["pattern"] == "0101"
    assert parse_state_spec("haar:42:100", 4) == {"kind": "haar", "seed": 42, "count": 100}
    assert parse_state_spec("mps:32", 4) == {"kind": "mps", "chi": 32}
    for bad in ("product:01", "haar:x", "mps:0", "dense:1"):
        with pytest.raises(ValueError):
            parse_state_spec(bad, 4)


def test_run_writes_csv_and_json(tmp_path, capsys):
    rc = main(["run", "--n", "6", "--t", "1", "--r", "5", "--w-star", "3", "--obs", "Z1",
               "--state", "product:010101", "--out-dir", str(tmp_path)])
    assert rc == EXIT_OK
    out = capsys.readouterr().out
    assert "schedule: p=2 r=5 dt=0.2" in out and "gates/step=36" in out
    header, cols, rows = _csv_rows(tmp_path / "run.csv")
    assert header["w_star"] == 3 and header["state"] == "product:010101"
    assert cols == ["d", "t", "mu", "discarded_norm", "term_count"]
    assert len(rows) == 5
    payload = json.loads((tmp_path / "run.json").read_text())
    assert "timestamp" in payload and payload["config"]["n"] == 6


def test_run_t_zero_single_row(tmp_path):
    assert main(["run", "--n", "4", "--t", "0", "--r", "1", "--state", "product:0000", "--out-dir", str(tmp_path)]) == 0
    _, _, rows = _csv_rows(tmp_path / "run.csv")
    assert len(rows) == 1 and float(rows[0][2]) == 1.0


def test_run_is_reproducible(tmp_path):
    args = ["run", "--n", "5", "--t", "1", "--r", "3", "--w-star", "2", "--state", "haar:3:4"]
    assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
    assert main(args + ["--out-dir", str(tmp_path / "b")]) == 0
    for name in ("run.csv", "run_haar_samples.csv"):
        a = (tmp_path / "a" / name).read_text().replace(str(tmp_path / "a"), "")
        b = (tmp_path / "b" / name).read_text().replace(str(tmp_path / "b"), "")
        assert a == b


def test_run_haar_columns(tmp_path, capsys):
    assert main(["run", "--n", "6", "--t", "1", "--r", "3", "--w-star", "2", "--state", "haar:42:10",
                 "--out-dir", str(tmp_path)]) == 0
    assert "haar truncation error" in capsys.readouterr().out
    _, cols, rows = _csv_rows(tmp_path / "run.csv")
    assert cols[-2:] == ["haar_mean_trunc_error", "haar_max_trunc_error"]
    assert all(float(r[-2]) <= float(r[-1]) for r in rows)
    _, cols, rows = _csv_rows(tmp_path / "run_haar_samples.csv")
    assert len(rows) == 10


def test_run_hybrid_state(tmp_path):
    assert main(["run", "--n", "6", "--t", "1", "--r", "4", "--state", "mps:8", "--t-forward", "0.5",
                 "--w-star", "4", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "run_entropy.csv").exists()
    assert main(["run", "--n", "6", "--state", "mps:8", "--out-dir", str(tmp_path)]) == EXIT_INVALID


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("LPD_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["run", "--n", "4", "--t", "0.5", "--r", "2"]) == 0
    assert (tmp_path / "env" / "run.csv").exists()


def test_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 4, "t": 0.5, "r": 2, "w_star": "2", "out_dir": str(tmp_path / "o")}))
    assert main(["--config", str(cfg), "run", "--r", "3"]) == 0
    header, _, rows = _csv_rows(tmp_path / "o" / "run.csv")
    assert header["n"] == 4 and len(rows) == 3
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["--config", str(cfg), "run"]) == EXIT_INVALID


def test_w_star_auto(capsys):
    assert main(["run", "--n", "6", "--t", "1", "--w-star", "auto"]) == EXIT_INVALID
    assert "theory:" in capsys.readouterr().out


def test_validation_exit_codes(capsys):
    assert main(["run", "--n", "6", "--obs", "Q1"]) == EXIT_INVALID
    assert main(["run", "--bogus"]) == EXIT_INVALID
    assert main(["run", "--n", "6", "--w-star", "0"]) == EXIT_INVALID
    assert main(["run", "--model", "heisenberg"]) == EXIT_INVALID
    assert main(["reproduce", "fig9"]) == EXIT_INVALID
    err = capsys.readouterr().err
    assert "fig3" in err and "fig4" in err


def test_threshold_command(capsys):
    assert main(["threshold", "--model-constants", "--t", "0.03", "--eps", "0.02"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["threshold"]["w_star"] == 7 and report["valid"]
    assert main(["threshold", "--n", "6", "--t", "5"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert not report["valid"] and not report["threshold"]["applicable"]


def test_trotter_steps_command(capsys):
    assert main(["trotter-steps", "--n", "4", "--t", "1", "--eps", "0.01", "--order", "1"]) == 0
    est = json.loads(capsys.readouterr().out)
    assert est["steps"] >= 1 and est["order"] == 1


def test_check_entanglement_command(capsys):
    assert main(["check-entanglement", "--n", "6", "--obs", "Z1", "--state", "haar:5", "--pairs"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["inequality_holds"] and rep["pairs"]
    assert main(["check-entanglement", "--n", "4", "--state", "mps:4"]) == EXIT_INVALID


def test_oracle_diff_command(capsys):
    assert main(["oracle-diff", "--n", "6", "--t", "1", "--r", "5"]) == 0
    assert "max |lpd - dense|" in capsys.readouterr().out


@pytest.mark.slow
def test_reproduce_fig4_tables(fig4):
    out, _ = fig4
    names = sorted(p.name for p in out.glob("*.csv"))
    assert names == ["fig4_entropy.csv", "fig4_hybrid.csv", "fig4_magic.csv"]
    for name in names:
        header, _, rows = _csv_rows(out / name)
        assert header["chi"] == 32 and header["w_star"] == 5 and "seed" in header
        assert rows


@pytest.mark.slow
def test_reproduce_fig4_entropy_tracks_exact(fig4):
    out, _ = fig4
    _, cols, rows = _csv_rows(out / "fig4_entropy.csv")
    s_mps = np.array([float(r[cols.index("S2_mps")]) for r in rows])
    s_exact = np.array([float(r[cols.index("S2_exact")]) for r in rows])
    assert np.max(np.abs(s_mps - s_exact)) < 1e-2


@pytest.mark.slow
def test_reproduce_fig4_entropy_monotone_until_saturation(fig4):
    # saturation: first time the entropy reaches 95% of its late-time mean
    out, _ = fig4
    _, cols, rows = _csv_rows(out / "fig4_entropy.csv")
    s = np.array([float(r[cols.index("S2_mps")]) for r in rows])
    plateau = s[len(s) // 2:].mean()
    k_sat = int(np.argmax(s >= 0.95 * plateau))
    assert np.all(np.diff(s[:k_sat + 1]) >= -1e-9)


@pytest.mark.slow
def test_reproduce_fig3_tables(fig3):
    out, elapsed = fig3
    names = sorted(p.name for p in out.glob("*.csv"))
    assert names == ["fig3_expectations.csv", "fig3_trotter_error.csv", "fig3_truncation_error.csv",
                     "fig3_weight_norms.csv"]
    header, cols, rows = _csv_rows(out / "fig3_weight_norms.csv")
    assert header["seed"] == 1234 and header["n"] == 10 and len(rows) == 51
    # squared norms by weight plus the lost part add up to ||O||^2 = 1
    for r in rows:
        assert sum(float(v) for v in r[2:]) == pytest.approx(1.0, abs=1e-9)
    assert elapsed < 600
