"""Heisenberg-picture propagation of sparse Pauli operators with per-step
weight truncation."""

from __future__ import annotations

import csv
import io
import json
import math
import time as _time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .hamiltonian import GateSchedule, Hamiltonian, trotter_schedule
from .pauli import PauliOperator, RotationGate, truncate_by_weight

__all__ = [
    "DUST_TOL",
    "StepRecord",
    "PropagationResult",
    "apply_gate",
    "lpd_step",
    "lpd_run",
    "expectation",
]

# relative to the current Pauli 2-norm
DUST_TOL = 1e-14

_LOW32 = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)


def _apply_gate(op: PauliOperator, gate: RotationGate, dust_tol: float | None):
    keys, coefs = op.keys, op.coefficients
    if keys.size == 0:
        return op, 0.0
    g = gate.generator
    if g.n_qubits != op.n_qubits:
        raise ValueError(f"dimension mismatch: gate on {g.n_qubits} qubits, operator on {op.n_qubits}")
    gx, gz = np.uint64(g.x_mask), np.uint64(g.z_mask)
    xs, zs = keys >> _SHIFT, keys & _LOW32
    idx = np.flatnonzero(np.bitwise_count((xs & gz) ^ (zs & gx)) & 1)
    if idx.size == 0:
        return op, 0.0

    theta = gate.effective_angle
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    ax, az = xs[idx], zs[idx]
    rx, rz = ax ^ gx, az ^ gz
    k = (bin(g.x_mask & g.z_mask).count("1")
         + np.bitwise_count(ax & az).astype(np.int64)
         - np.bitwise_count(rx & rz)
         + 2 * np.bitwise_count(gz & ax).astype(np.int64)) % 4
    if np.any(k % 2 == 0):
        raise ArithmeticError("anticommuting branch produced a real phase; coefficients would turn complex")
    # i * (G P) = i * i^k R; real and equal to +1 for k == 3, -1 for k == 1
    branch = coefs[idx] * np.where(k == 3, sin_t, -sin_t)
    new_coefs = coefs.copy()
    new_coefs[idx] *= cos_t
    rkeys = (rx << _SHIFT) | rz

    pos = np.searchsorted(keys, rkeys)
    hit = pos < keys.size
    hit[hit] = keys[pos[hit]] == rkeys[hit]
    # G P is injective in P, so hit positions are distinct
    new_coefs[pos[hit]] += branch[hit]
    miss = ~hit
    if miss.any():
        mk, mc, mp = rkeys[miss], branch[miss], pos[miss]
        order = np.argsort(mk, kind="stable")
        keys = np.insert(keys, mp[order], mk[order])
        new_coefs = np.insert(new_coefs, mp[order], mc[order])

    dust = 0.0
    if dust_tol is not None and dust_tol > 0:
        norm = math.sqrt(float(np.dot(new_coefs, new_coefs)))
        small = np.abs(new_coefs) < dust_tol * norm
        if small.any():
            dust = float(np.sqrt(np.sum(new_coefs[small] ** 2)))
            keep = ~small
            keys, new_coefs = keys[keep], new_coefs[keep]
    else:
        keep = new_coefs != 0.0
        if not keep.all():
            keys, new_coefs = keys[keep], new_coefs[keep]
    return PauliOperator._from_sorted(op.n_qubits, keys, new_coefs), dust


def apply_gate(op: PauliOperator, gate: RotationGate, dust_tol: float | None = DUST_TOL) -> PauliOperator:
    """Conjugate ``op`` by one Pauli rotation, ``U^dag op U``.

    Terms below ``dust_tol`` times the current 2-norm are dropped; pass
    ``dust_tol=None`` for an exact map.
    """
    return _apply_gate(op, gate, dust_tol)[0]


@dataclass
class StepRecord:
    """Diagnostics of one truncated product-formula step."""

    step: int
    time: float
    discarded_norm: float
    pruned_norm: float
    term_count: int
    peak_term_count: int
    norm: float
    weight_histogram: dict[int, float]
    pre_truncation_histogram: dict[int, float]
    elapsed: float
    expectation: float | None = None
    magic: float | None = None

    def as_dict(self) -> dict:
        d = asdict(self)
        d["weight_histogram"] = {str(k): v for k, v in self.weight_histogram.items()}
        d["pre_truncation_histogram"] = {str(k): v for k, v in self.pre_truncation_histogram.items()}
        return d


def lpd_step(op: PauliOperator, schedule: GateSchedule, w_star: int, *,
             dust_tol: float | None = DUST_TOL,
             gate_callback: Callable[[int, PauliOperator], None] | None = None):
    """Apply every gate of one step, then truncate once to weight ``<= w_star``.

    Returns ``(operator, info)`` where ``info`` holds the discarded and
    pruned norms, the pre-truncation operator size and its weight
    histogram.
    """
    pruned_sq = 0.0
    peak = len(op)
    for i, gate in enumerate(reversed(schedule.step_gates)):
        op, dust = _apply_gate(op, gate, dust_tol)
        pruned_sq += dust * dust
        peak = max(peak, len(op))
        if gate_callback is not None:
            gate_callback(i, op)
    pre_hist = op.weight_histogram()
    kept, discarded = truncate_by_weight(op, w_star)
    info = {
        "discarded_norm": discarded,
        "pruned_norm": math.sqrt(pruned_sq),
        "peak_term_count": peak,
        "pre_truncation_histogram": pre_hist,
    }
    return kept, info


@dataclass
class PropagationResult:
    """Per-step history of one low-weight Pauli dynamics run."""

    records: list[StepRecord]
    final_operator: PauliOperator
    w_star: int
    schedule: dict
    initial_expectation: float | None = None
    operators: list[PauliOperator] | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def expectation(self) -> float | None:
        if not self.records:
            return self.initial_expectation
        return self.records[-1].expectation

    @property
    def discarded_norms(self) -> np.ndarray:
        return np.array([r.discarded_norm for r in self.records])

    @property
    def expectations(self) -> np.ndarray:
        return np.array([np.nan if r.expectation is None else r.expectation for r in self.records])

    @property
    def times(self) -> np.ndarray:
        return np.array([r.time for r in self.records])

    def truncation_bound(self) -> float:
        """``2 * sum_d`` of discarded norms, the triangle bound on the error."""
        return 2.0 * float(self.discarded_norms.sum())

    def to_json(self, **extra) -> str:
        payload = {
            "schedule": self.schedule,
            "w_star": self.w_star,
            "initial_expectation": self.initial_expectation,
            "final_expectation": self.expectation,
            "final_term_count": len(self.final_operator),
            "records": [r.as_dict() for r in self.records],
            "metadata": self.metadata,
        }
        payload.update(extra)
        return json.dumps(payload, indent=2, sort_keys=True)

    def to_csv(self, header: dict | None = None) -> str:
        buf = io.StringIO()
        if header:
            buf.write(f"# {json.dumps(header, sort_keys=True)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["d", "t", "mu", "discarded_norm", "term_count"])
        for r in self.records:
            mu = "" if r.expectation is None else repr(float(r.expectation))
            w.writerow([r.step, repr(r.time), mu, repr(r.discarded_norm), r.term_count])
        return buf.getvalue()


def lpd_run(h: Hamiltonian | None, observable: PauliOperator, t: float, r: int, p: int = 2,
            w_star: int | None = None, state=None, *,
            schedule: GateSchedule | None = None,
            dust_tol: float | None = DUST_TOL,
            record_expectations: bool = True,
            record_magic: bool = False,
            keep_operators: bool = False,
            gate_callback: Callable[[int, int, PauliOperator], None] | None = None) -> PropagationResult:
    """Backward-evolve ``observable`` through ``r`` truncated product-formula steps.

    Parameters
    ----------
    h : Hamiltonian
        Ignored when ``schedule`` is given.
    w_star : int, optional
        Truncation weight; ``None`` means no truncation (``w_star = n``).
    state : optional
        Product, MPS or dense state.  When attached and
        ``record_expectations`` is set, every step records ``Tr(rho O_d)``.
    gate_callback : callable, optional
        ``f(step, gate_index, operator)`` after every gate.
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    if schedule is None:
        if h is None:
            raise ValueError("either a Hamiltonian or a schedule is required")
        schedule = trotter_schedule(h, p, t, r)
    n = observable.n_qubits
    if schedule.n_qubits != n:
        raise ValueError(f"schedule acts on {schedule.n_qubits} qubits, observable on {n}")
    if w_star is None:
        w_star = n
    k_o = observable.max_weight
    if w_star < k_o:
        raise ValueError(f"w_star={w_star} is below the observable weight {k_o}; it would be truncated away")

    op = observable
    initial = expectation(op, state) if state is not None else None
    records: list[StepRecord] = []
    operators = [] if keep_operators else None
    start = _time.perf_counter()
    for d in range(1, schedule.n_steps + 1):
        cb = None
        if gate_callback is not None:
            cb = (lambda i, o, _d=d: gate_callback(_d, i, o))
        op, info = lpd_step(op, schedule, w_star, dust_tol=dust_tol, gate_callback=cb)
        mu = expectation(op, state) if (state is not None and record_expectations) else None
        records.append(StepRecord(
            step=d,
            time=d * schedule.dt,
            discarded_norm=info["discarded_norm"],
            pruned_norm=info["pruned_norm"],
            term_count=len(op),
            peak_term_count=info["peak_term_count"],
            norm=op.two_norm(),
            weight_histogram=op.weight_histogram(),
            pre_truncation_histogram=info["pre_truncation_histogram"],
            elapsed=_time.perf_counter() - start,
            expectation=mu,
            magic=(op.magic() if record_magic and len(op) else None),
        ))
        if keep_operators:
            operators.append(op)
    if state is not None and not record_expectations and records:
        records[-1].expectation = expectation(op, state)
    return PropagationResult(records, op, int(w_star), schedule.summary(), initial, operators)


def expectation(op: PauliOperator, state) -> float:
    """``Tr(rho op)`` for a product, MPS or dense state."""
    from .oracle import DenseState, dense_expectation
    from .states import MpsState, ProductState, mps_expectation, product_expectation

    if isinstance(state, ProductState):
        return product_expectation(state, op)
    if isinstance(state, MpsState):
        return mps_expectation(state, op)
    if isinstance(state, DenseState):
        return dense_expectation(state, op)
    if isinstance(state, np.ndarray):
        return dense_expectation(DenseState.from_vector(state), op)
    raise TypeError(f"unsupported state type {type(state).__name__}")
