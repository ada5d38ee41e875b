"""Data tables behind the QMFI benchmark figures.

Each function returns named :class:`Table` objects; nothing is plotted.
Column names follow the figure axes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import build_qmfi, trotter_schedule
from .oracle import (
    ExactPropagator,
    apply_rotation,
    haar_ensemble,
    operator_matrix,
    pauli_decomposition,
    subsystem_entropy,
)
from .pauli import PauliOperator, PauliString
from .propagation import expectation, lpd_run
from .states import ProductState, mps_entanglement_entropy, mps_expectation, product_expectation, tebd_evolve

__all__ = ["Table", "FIGURES", "fig3_tables", "fig4_tables", "haar_truncation_errors", "write_tables"]


@dataclass
class Table:
    """Rows of numbers with a column header and the parameters that made them."""

    name: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# {json.dumps(self.params, sort_keys=True)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        return buf.getvalue()


def write_tables(tables: dict[str, Table], out_dir) -> list:
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, table in tables.items():
        path = out / f"{name}.csv"
        path.write_text(table.to_csv())
        paths.append(path)
    return paths


def _z_signs(n: int, qubit: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return 1.0 - 2.0 * ((idx >> qubit) & 1)


def _batched_expectations(matrix: np.ndarray, states: np.ndarray) -> np.ndarray:
    """``<psi_k| M |psi_k>`` for every column ``psi_k``."""
    return np.real(np.einsum("ik,ik->k", states.conj(), matrix @ states))


def haar_truncation_errors(operators, lossless_values: np.ndarray, states: np.ndarray) -> np.ndarray:
    """``|<psi|O_d|psi> - <psi|O_d,trunc|psi>|`` per step (rows) and state (columns)."""
    out = np.empty((len(operators), states.shape[1]))
    for d, op in enumerate(operators):
        out[d] = np.abs(lossless_values[d] - _batched_expectations(operator_matrix(op), states))
    return out


def _params(**kw) -> dict:
    return {k: (v if not isinstance(v, float) else float(v)) for k, v in kw.items()}


def fig3_tables(n: int = 10, t: float = 5.0, r: int = 50, p: int = 2, w_star: int = 5,
                pattern: str | None = None, n_haar: int = 100, seed: int = 1234,
                h_x: float = 0.8, h_y: float = 0.9) -> dict[str, Table]:
    """Expectations, Trotter errors, weight norms and truncation errors for ``O = Z_1``.

    The product state defaults to ``|0101...>``; Haar averages use
    ``n_haar`` states drawn from ``seed``.
    """
    pattern = pattern or "".join("01"[k % 2] for k in range(n))
    params = _params(figure="fig3", model="qmfi", n=n, h_x=h_x, h_y=h_y, periodic=True, t=t, r=r,
                     order=p, w_star=w_star, observable="Z1", state=pattern, haar_samples=n_haar, seed=seed)
    h = build_qmfi(n, h_x, h_y, periodic=True)
    obs = PauliOperator.from_pauli(PauliString.single(n, 0, "Z"))
    sched = trotter_schedule(h, p, t, r)
    product = ProductState.from_pattern(pattern)
    lpd = lpd_run(None, obs, t, r, p, w_star, product, schedule=sched, keep_operators=True)

    exact = ExactPropagator(h)
    zs = _z_signs(n, 0)
    psi0 = product.to_dense().amplitudes
    haar = np.stack([s.amplitudes for s in haar_ensemble(n, n_haar, seed)], axis=1)
    both = np.concatenate([psi0[:, None], haar], axis=1)

    # lossless Trotter and exact trajectories for the product state and every Haar state
    trot = both.copy()
    trot_vals, exact_vals = [], []
    coeffs = exact.vectors.conj().T @ both
    for d in range(1, r + 1):
        for gate in sched.step_gates:
            trot = apply_rotation(trot, gate)
        trot_vals.append(np.real(np.einsum("ik,i,ik->k", trot.conj(), zs, trot)))
        ev = exact.vectors @ (np.exp(-1j * exact.energies * d * sched.dt)[:, None] * coeffs)
        exact_vals.append(np.real(np.einsum("ik,i,ik->k", ev.conj(), zs, ev)))
    trot_vals = np.array(trot_vals)
    exact_vals = np.array(exact_vals)

    # Heisenberg picture: Tr(rho O_d) for the lossless O_d equals the Trotter-evolved state value
    haar_trunc = haar_truncation_errors(lpd.operators, trot_vals[:, 1:], haar)
    trotter_err = np.abs(trot_vals - exact_vals)

    mu0 = product_expectation(product, obs)
    expect = Table("fig3_expectations", ["d", "t", "mu_exact", "mu_trotter", "mu_lpd"], params=params)
    expect.rows.append([0, 0.0, mu0, mu0, mu0])
    terr = Table("fig3_trotter_error", ["d", "t", "product_error", "haar_mean", "haar_std"], params=params)
    hist = Table("fig3_weight_norms", ["d", "t"] + [f"w{w}" for w in range(n + 1)] + ["lost"], params=params)
    hist.rows.append([0, 0.0] + [0.0, 1.0] + [0.0] * (n - 1) + [0.0])
    trunc = Table("fig3_truncation_error",
                  ["d", "t", "product_error", "haar_mean", "haar_std", "haar_max", "triangle_bound",
                   "term_count"], params=params)
    cum = 0.0
    for i, rec in enumerate(lpd.records):
        d, td = rec.step, rec.time
        expect.rows.append([d, td, exact_vals[i, 0], trot_vals[i, 0], rec.expectation])
        terr.rows.append([d, td, trotter_err[i, 0], trotter_err[i, 1:].mean(), trotter_err[i, 1:].std(ddof=1)])
        sq = [rec.weight_histogram.get(w, 0.0) for w in range(n + 1)]
        hist.rows.append([d, td] + sq + [max(0.0, 1.0 - sum(sq))])
        cum += rec.discarded_norm
        trunc.rows.append([d, td, abs(trot_vals[i, 0] - rec.expectation), haar_trunc[i].mean(),
                           haar_trunc[i].std(ddof=1), haar_trunc[i].max(), 2.0 * cum, rec.term_count])
    return {tab.name: tab for tab in (expect, terr, hist, trunc)}


def fig4_tables(n: int = 10, t: float = 10.0, t_forward: float = 5.0, chi: int = 32, w_star: int = 5,
                p: int = 2, steps_per_unit: int = 10, h_x: float = 0.8, h_y: float = 0.9,
                pattern: str | None = None, entropy_region=(0, 2), seed: int = 0) -> dict[str, Table]:
    """Forward MPS entropy, backward operator magic and the joined hybrid trajectory."""
    pattern = pattern or "".join("01"[k % 2] for k in range(n))
    params = _params(figure="fig4", model="qmfi", n=n, h_x=h_x, h_y=h_y, periodic=True, t=t,
                     t_forward=t_forward, chi=chi, w_star=w_star, order=p, steps_per_unit=steps_per_unit,
                     observable="Z1", state=pattern, entropy_region=list(entropy_region), seed=seed)
    h = build_qmfi(n, h_x, h_y, periodic=True)
    obs = PauliOperator.from_pauli(PauliString.single(n, 0, "Z"))
    product = ProductState.from_pattern(pattern)
    exact = ExactPropagator(h)
    psi0 = product.to_dense()
    dt = 1.0 / steps_per_unit
    zs = _z_signs(n, 0)
    region = list(range(*entropy_region))

    # (a) forward entropy over the whole window
    r_all = int(round(t * steps_per_unit))
    mps_states = {}
    ent = Table("fig4_entropy", ["t", "S2_mps", "S2_exact", "max_bond"], params=params)
    ent.rows.append([0.0, 0.0, 0.0, 1])

    def on_step(d, mps):
        td = d * dt
        s_ex = subsystem_entropy(exact.evolve(psi0, td), region).entropy
        ent.rows.append([td, mps_entanglement_entropy(mps, entropy_region), s_ex, mps.max_bond])
        mps_states[d] = mps.copy()

    tebd_evolve(product, h, t, r_all, p, chi, callback=on_step)

    # (b) backward operator magic, and (c) the hybrid trajectory after t_forward
    t_back = t - t_forward
    r_f = int(round(t_forward * steps_per_unit))
    r_b = int(round(t_back * steps_per_unit))
    lpd = lpd_run(h, obs, t_back, r_b, p, w_star, record_magic=True, keep_operators=True) if r_b else None
    mag = Table("fig4_magic", ["t", "magic_lpd", "magic_exact"], params=params)
    mag.rows.append([0.0, 0.0, 0.0])
    if lpd is not None:
        for rec in lpd.records:
            u = exact.unitary(rec.time)
            ideal = pauli_decomposition(u.conj().T @ operator_matrix(obs) @ u, tol=1e-12)
            mag.rows.append([rec.time, rec.magic, ideal.magic()])

    hyb = Table("fig4_hybrid", ["t", "mu_exact", "mu_hybrid", "segment"], params=params)
    mu0 = product_expectation(product, obs)
    hyb.rows.append([0.0, mu0, mu0, "mps"])
    for d in range(1, r_f + 1):
        td = d * dt
        ex = exact.evolve(psi0, td).amplitudes
        hyb.rows.append([td, float(np.real(np.vdot(ex, zs * ex))), mps_expectation(mps_states[d], obs), "mps"])
    if lpd is not None:
        start = mps_states[r_f] if r_f else product
        for rec, op in zip(lpd.records, lpd.operators):
            td = t_forward + rec.time
            ex = exact.evolve(psi0, td).amplitudes
            hyb.rows.append([td, float(np.real(np.vdot(ex, zs * ex))), expectation(op, start), "lpd"])
    return {tab.name: tab for tab in (ent, mag, hyb)}


FIGURES = {"fig3": fig3_tables, "fig4": fig4_tables}
