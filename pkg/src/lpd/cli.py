"""Command line front end.

Exit status is 0 on success, 1 for invalid input and 2 for failures while
running.  The default output directory comes from ``LPD_OUTPUT_DIR``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import re
import sys
import time
from pathlib import Path

import numpy as np

from .bounds import ModelConstants, entanglement_condition_report, time_validity, truncation_error_bound, \
    truncation_threshold
from .hamiltonian import MODELS, build_model, estimate_trotter_steps, load_hamiltonian, trotter_schedule
from .pauli import PauliOperator, PauliParseError, PauliString, read_operator

__all__ = ["main", "build_parser", "parse_observable", "parse_state_spec"]

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
ENV_OUTPUT_DIR = "LPD_OUTPUT_DIR"


class ConfigError(ValueError):
    """Invalid command line or config file input."""


# ----------------------------------------------------------------------------
# parsing helpers

_SPARSE = re.compile(r"([IXYZ])(\d+)")


def parse_observable(text: str, n: int) -> PauliOperator:
    """``Z1``/``X1Z3`` (1-based qubits), a full label like ``ZIII``, or ``@path`` to an operator file."""
    text = text.strip()
    if text.startswith("@"):
        return read_operator(text[1:], n)
    if len(text) == n and set(text.upper()) <= set("IXYZ"):
        return PauliOperator.from_label(text)
    parts = _SPARSE.findall(text.upper())
    if not parts or "".join(f"{a}{b}" for a, b in parts) != text.upper():
        raise ConfigError(f"cannot parse observable {text!r}; use e.g. Z1, X1Z2 or a length-{n} label")
    ops = {}
    for letter, idx in parts:
        q = int(idx) - 1
        if not 0 <= q < n:
            raise ConfigError(f"observable qubit {idx} out of range 1..{n}")
        if q in ops:
            raise ConfigError(f"qubit {idx} appears twice in {text!r}")
        ops[q] = letter
    return PauliOperator.from_pauli(PauliString.from_sparse(n, ops))


def parse_state_spec(spec: str, n: int) -> dict:
    """``product:PATTERN``, ``haar:SEED:COUNT`` or ``mps:CHI``."""
    kind, _, rest = spec.partition(":")
    if kind == "product":
        pattern = rest or "".join("01"[k % 2] for k in range(n))
        if len(pattern) != n:
            raise ConfigError(f"state pattern {pattern!r} has length {len(pattern)}, expected {n}")
        return {"kind": "product", "pattern": pattern}
    if kind == "haar":
        bits = rest.split(":")
        try:
            seed = int(bits[0])
            count = int(bits[1]) if len(bits) > 1 else 1
        except (ValueError, IndexError):
            raise ConfigError(f"haar state spec must be haar:SEED:COUNT, got {spec!r}") from None
        if count < 1:
            raise ConfigError("haar sample count must be >= 1")
        return {"kind": "haar", "seed": seed, "count": count}
    if kind == "mps":
        try:
            chi = int(rest)
        except ValueError:
            raise ConfigError(f"mps state spec must be mps:CHI, got {spec!r}") from None
        if chi < 1:
            raise ConfigError("chi must be >= 1")
        return {"kind": "mps", "chi": chi}
    raise ConfigError(f"unknown state spec {spec!r}; expected product:..., haar:SEED:COUNT or mps:CHI")


def _model_args(p):
    p.add_argument("--model", default="qmfi", help=f"built-in model ({', '.join(MODELS)})")
    p.add_argument("--hamiltonian-file", help="Hamiltonian as 'coefficient LABEL' lines")
    p.add_argument("--n", type=int, default=10, help="number of qubits")
    p.add_argument("--hx", type=float, default=0.8)
    p.add_argument("--hy", type=float, default=0.9)
    p.add_argument("--open", action="store_true", help="open instead of periodic boundary")


def _build_h(args):
    if args.hamiltonian_file:
        return load_hamiltonian(args.hamiltonian_file, args.n)
    if args.model not in MODELS:
        raise ConfigError(f"unknown model {args.model!r}; valid models: {', '.join(sorted(MODELS))}")
    return build_model(args.model, args.n, h_x=args.hx, h_y=args.hy, periodic=not args.open)


def _output_dir(args) -> Path:
    return Path(args.out_dir or os.environ.get(ENV_OUTPUT_DIR) or ".")


def _config_dict(args) -> dict:
    skip = {"func", "config"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# ----------------------------------------------------------------------------
# commands

def cmd_run(args) -> int:
    from .hybrid import hybrid_run
    from .oracle import haar_ensemble, dense_trotter_evolve
    from .experiments import haar_truncation_errors
    from .propagation import lpd_run
    from .states import ProductState

    h = _build_h(args)
    obs = parse_observable(args.obs, h.n_qubits)
    state_spec = parse_state_spec(args.state, h.n_qubits)
    if args.t < 0 or args.r < 1:
        raise ConfigError("need t >= 0 and r >= 1")
    w_star = _resolve_w_star(args, h, obs)
    config = _config_dict(args)
    config["w_star"] = w_star

    sched = trotter_schedule(h, args.order, args.t, args.r)
    summary = sched.summary()
    print(f"schedule: p={summary['order']} r={summary['n_steps']} dt={summary['dt']:.6g} "
          f"layers={summary['n_layers']} gates/step={summary['gates_per_step']}")
    out = _output_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    stem = out / args.name

    dust = None if args.no_prune else args.dust_tol
    if state_spec["kind"] == "mps":
        if args.t_forward is None:
            raise ConfigError("state mps:CHI needs --t-forward")
        start = ProductState.neel(h.n_qubits)
        r_f = max(1, int(round(args.r * args.t_forward / args.t))) if args.t else 1
        res = hybrid_run(h, obs, args.t, args.t_forward, state_spec["chi"], w_star, args.order,
                         r_f, max(1, args.r - r_f), start)
        Path(f"{stem}.json").write_text(json.dumps({"config": config, "timestamp": time.time(),
                                                    "result": json.loads(res.to_json())}, indent=2))
        header = json.dumps(config, sort_keys=True)
        lines = [f"# {header}", "t,entropy"] + [f"{a!r},{b!r}" for a, b in zip(res.entropy_times, res.entropy)]
        Path(f"{stem}_entropy.csv").write_text("\n".join(lines) + "\n")
        print(f"mu = {res.expectation:.12g}")
        print(f"wrote {stem}.json and {stem}_entropy.csv")
        return EXIT_OK

    state = ProductState.from_pattern(state_spec["pattern"]) if state_spec["kind"] == "product" else None
    keep = state_spec["kind"] == "haar"
    result = lpd_run(None, obs, args.t, args.r, args.order, w_star, state, schedule=sched,
                     dust_tol=dust, keep_operators=keep)
    csv_text = result.to_csv(header=config)
    extra = {}
    if keep:
        if h.n_qubits > 12:
            raise ConfigError("haar states are limited to 12 qubits")
        states = haar_ensemble(h.n_qubits, state_spec["count"], state_spec["seed"])
        mat = np.stack([s.amplitudes for s in states], axis=1)
        from .oracle import operator_matrix, apply_rotation

        lossless = []
        vec = mat.copy()
        om = operator_matrix(obs)
        for _ in range(sched.n_steps):
            for g in sched.step_gates:
                vec = apply_rotation(vec, g)
            lossless.append(np.real(np.einsum("ik,ik->k", vec.conj(), om @ vec)))
        errs = haar_truncation_errors(result.operators, np.array(lossless), mat)
        lines = csv_text.rstrip("\n").split("\n")
        lines[1] += ",haar_mean_trunc_error,haar_max_trunc_error"
        for i in range(len(result.records)):
            lines[2 + i] += f",{float(errs[i].mean())!r},{float(errs[i].max())!r}"
        csv_text = "\n".join(lines) + "\n"
        samples = [f"# {json.dumps(config, sort_keys=True)}", "sample,final_trunc_error,max_trunc_error"]
        samples += [f"{k},{float(errs[-1, k])!r},{float(errs[:, k].max())!r}" for k in range(errs.shape[1])]
        Path(f"{stem}_haar_samples.csv").write_text("\n".join(samples) + "\n")
        extra = {"haar_final_mean_trunc_error": float(errs[-1].mean()),
                 "haar_final_max_trunc_error": float(errs[-1].max())}
        print(f"haar truncation error at t={args.t:g}: mean {errs[-1].mean():.3e}, max {errs[-1].max():.3e}")
    Path(f"{stem}.csv").write_text(csv_text)
    Path(f"{stem}.json").write_text(result.to_json(config=config, timestamp=time.time(), **extra))
    if result.expectation is not None:
        print(f"mu = {result.expectation:.12g}")
    print(f"wrote {stem}.csv and {stem}.json")
    return EXIT_OK


def _resolve_w_star(args, h, obs) -> int:
    if args.w_star is None:
        return h.n_qubits
    if str(args.w_star).lower() != "auto":
        try:
            w = int(args.w_star)
        except ValueError:
            raise ConfigError(f"--w-star must be an integer or 'auto', got {args.w_star!r}") from None
        if w < obs.max_weight:
            raise ConfigError(f"--w-star {w} is below the observable weight {obs.max_weight}")
        return w
    c = ModelConstants.from_problem(h, obs, args.t, args.eps)
    res = truncation_threshold(c)
    t0, _ = time_validity(c)
    print(f"theory: t0={t0:.6g} applicable={res.applicable} w*={res.w_star}")
    if not res.applicable:
        raise ConfigError("w_star=auto: the bound does not apply at this t; pass an explicit --w-star")
    return min(res.w_star, h.n_qubits)


def cmd_reproduce(args) -> int:
    from .experiments import FIGURES, write_tables

    if args.figure not in FIGURES:
        raise ConfigError(f"unknown figure {args.figure!r}; valid ids: {', '.join(sorted(FIGURES))}")
    kwargs = {"n": args.n}
    if args.figure == "fig3":
        kwargs.update(n_haar=args.haar_samples, seed=args.seed)
    tables = FIGURES[args.figure](**kwargs)
    paths = write_tables(tables, _output_dir(args))
    for p in paths:
        print(f"wrote {p}")
    if args.figure == "fig3":
        tr = tables["fig3_truncation_error"]
        ex = tables["fig3_expectations"]
        dev = np.abs(ex.column("mu_lpd") - ex.column("mu_exact")).max()
        prod, haar = tr.column("product_error"), tr.column("haar_mean")
        sel = prod > 0.01
        print(f"max |mu_lpd - mu_exact| = {dev:.4f}")
        print(f"haar mean <= product truncation error where product > 0.01: {bool(np.all(haar[sel] <= prod[sel]))}")
    return EXIT_OK


def cmd_threshold(args) -> int:
    if args.model_constants:
        c = ModelConstants(args.k_o, args.k_h, args.gamma, args.alpha, args.t, args.eps)
    else:
        h = _build_h(args)
        obs = parse_observable(args.obs, h.n_qubits)
        c = ModelConstants.from_problem(h, obs, args.t, args.eps)
    t0, valid = time_validity(c)
    thr = truncation_threshold(c, args.mode, args.delta)
    report = {"constants": dataclasses.asdict(c), "t0": t0, "valid": valid,
              "threshold": thr.as_dict()}
    if thr.m_star is not None:
        report["bound"] = truncation_error_bound(c, thr.m_star).as_dict()
    print(json.dumps(report, indent=2, default=float))
    return EXIT_OK


def cmd_trotter_steps(args) -> int:
    h = _build_h(args)
    obs = parse_observable(args.obs, h.n_qubits)
    est = estimate_trotter_steps(h, obs, args.t, args.eps, args.order, args.mode)
    print(json.dumps(est.as_dict(), indent=2))
    return EXIT_OK


def cmd_check_entanglement(args) -> int:
    from .oracle import haar_sample
    from .states import ProductState

    h_n = args.n
    obs = parse_observable(args.obs, h_n)
    spec = parse_state_spec(args.state, h_n)
    if spec["kind"] == "product":
        state = ProductState.from_pattern(spec["pattern"]).to_dense()
    elif spec["kind"] == "haar":
        state = haar_sample(h_n, spec["seed"])
    else:
        raise ConfigError("check-entanglement takes product:... or haar:SEED states")
    rep = entanglement_condition_report(state, obs)
    d = rep.to_dict()
    if not args.pairs:
        d.pop("pairs")
    print(json.dumps(d, indent=2, default=list))
    return EXIT_OK


def cmd_oracle_diff(args) -> int:
    from .oracle import dense_expectation, dense_trotter_evolve, haar_sample
    from .propagation import lpd_run

    h = _build_h(args)
    if h.n_qubits > 12:
        raise ConfigError("oracle-diff is limited to 12 qubits")
    obs = parse_observable(args.obs, h.n_qubits)
    sched = trotter_schedule(h, args.order, args.t, args.r)
    state = haar_sample(h.n_qubits, args.seed)
    res = lpd_run(None, obs, args.t, args.r, args.order, None, state, schedule=sched, dust_tol=None)
    vals = []
    dense_trotter_evolve(state, sched, callback=lambda d, s: vals.append(dense_expectation(s, obs)))
    diff = float(np.max(np.abs(np.array(vals) - res.expectations)))
    print(f"max |lpd - dense| over {args.r} steps: {diff:.3e}")
    return EXIT_OK if diff <= args.tol else EXIT_RUNTIME


# ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lpd", description="Low-weight Pauli dynamics simulator")
    parser.add_argument("--config", help="JSON file with option defaults (keys as option names)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="propagate an observable and write per-step CSV/JSON")
    _model_args(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--r", type=int, default=10)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--w-star", default=None, help="integer, 'auto', or omit for lossless")
    p.add_argument("--eps", type=float, default=0.01, help="precision for --w-star auto")
    p.add_argument("--obs", default="Z1")
    p.add_argument("--state", default="product:", help="product:PATTERN | haar:SEED:COUNT | mps:CHI")
    p.add_argument("--t-forward", type=float, default=None, help="forward MPS time for mps:CHI states")
    p.add_argument("--dust-tol", type=float, default=1e-14)
    p.add_argument("--no-prune", action="store_true", help="disable dust pruning")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default="run", help="output file stem")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reproduce", help="write the data tables of a benchmark figure")
    p.add_argument("figure", help="fig3 or fig4")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--haar-samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("threshold", help="truncation-weight threshold and error bound")
    _model_args(p)
    p.add_argument("--obs", default="Z1")
    p.add_argument("--model-constants", action="store_true", help="use --k-o/--k-h/--gamma/--alpha")
    p.add_argument("--k-o", type=int, default=1)
    p.add_argument("--k-h", type=int, default=2)
    p.add_argument("--gamma", type=int, default=1)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--t", type=float, default=0.03)
    p.add_argument("--eps", type=float, default=0.02)
    p.add_argument("--mode", choices=["entangled", "random"], default="entangled")
    p.add_argument("--delta", type=float, default=None)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("trotter-steps", help="product-formula steps for a target precision")
    _model_args(p)
    p.add_argument("--obs", default="Z1")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--mode", choices=["worst", "average_or_entangled"], default="worst")
    p.set_defaults(func=cmd_trotter_steps)

    p = sub.add_parser("check-entanglement", help="local-observable bound report for one state")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--obs", default="Z1")
    p.add_argument("--state", default="haar:0")
    p.add_argument("--pairs", action="store_true", help="include per-pair entries")
    p.set_defaults(func=cmd_check_entanglement)

    p = sub.add_parser("oracle-diff", help="lossless propagation against the dense circuit")
    _model_args(p)
    p.add_argument("--obs", default="Z1")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--r", type=int, default=10)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_oracle_diff)
    return parser


def _apply_config(parser, argv):
    """Re-parse with defaults taken from a ``--config`` JSON file."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {known.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    args = parser.parse_args(argv)
    explicit = {a.lstrip("-").split("=")[0].replace("-", "_") for a in argv if a.startswith("--")}
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(f"unknown config field {key!r}")
        if attr not in explicit:
            setattr(args, attr, value)
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        # argparse usage errors are input errors
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except (ConfigError, PauliParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
