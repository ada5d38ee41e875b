"""Analytic truncation bounds as calculators, and checkers for the
local-observable inequalities.

Every bound that only holds for short times returns a result carrying an
``applicable`` flag instead of raising, so out-of-regime runs can still
print theory next to measurement.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .hamiltonian import Hamiltonian
from .pauli import PauliOperator, PauliString

__all__ = [
    "ModelConstants",
    "BoundResult",
    "ThresholdResult",
    "time_validity",
    "truncation_error_bound",
    "truncation_threshold",
    "norm_flow_bound",
    "high_weight_norms",
    "pauli_count_bound",
    "haar_second_moment",
    "PairEntry",
    "EntanglementReport",
    "entanglement_condition_report",
]

_MAX_M = 100_000


@dataclass(frozen=True)
class ModelConstants:
    """Constants entering the truncation bounds.

    Parameters
    ----------
    k_o : int
        Largest weight in the initial observable.
    k_h : int
        Largest weight of a Hamiltonian term.
    gamma : int
        Number of commuting layers.
    alpha : float
        Twice the largest ``|alpha_l|``.
    t : float
        Evolution time.
    eps : float
        Target precision, relative to the observable's 2-norm.
    """

    k_o: int
    k_h: int
    gamma: int
    alpha: float
    t: float
    eps: float = 0.01

    def __post_init__(self):
        for name in ("k_o", "k_h", "gamma"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.t < 0:
            raise ValueError("t must be non-negative")
        if not 0 < self.eps <= 1:
            raise ValueError("eps must lie in (0, 1]")

    @classmethod
    def from_problem(cls, h: Hamiltonian, observable: PauliOperator, t: float, eps: float = 0.01) -> "ModelConstants":
        return cls(observable.max_weight, h.k_h, h.n_layers, 2.0 * h.max_abs_coefficient, t, eps)

    @property
    def base(self) -> float:
        """``alpha t e k_h^Gamma (k_o + k_h)``; bounds shrink with ``m*`` iff this is below one."""
        return self.alpha * self.t * math.e * self.k_h ** self.gamma * (self.k_o + self.k_h)


@dataclass(frozen=True)
class BoundResult:
    value: float
    applicable: bool
    note: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ThresholdResult:
    w_star: int | None
    m_star: int | None
    bound: float | None
    target: float
    mode: str
    applicable: bool
    note: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def time_validity(c: ModelConstants) -> tuple[float, bool]:
    """``t0 = 1 / (e alpha k_h^Gamma (k_o + k_h))`` and whether ``t < t0``."""
    t0 = 1.0 / (math.e * c.alpha * c.k_h ** c.gamma * (c.k_o + c.k_h))
    return t0, c.t < t0


def _bound_value(c: ModelConstants, m_star: int) -> float:
    prefactor = 2.0 * c.alpha * c.t * c.k_o * (c.k_o + c.k_h) * c.k_h ** (c.gamma + 1)
    if prefactor == 0.0:
        return 0.0
    return prefactor * c.base ** m_star


def truncation_error_bound(c: ModelConstants, m_star: int) -> BoundResult:
    """Accumulated truncation error over all steps, relative to ``||O||``.

    ``2 alpha t k_o (k_o + k_h) k_h^(Gamma+1) (alpha t e k_h^Gamma (k_o + k_h))^m*``.
    Flagged inapplicable when ``t >= t0``.
    """
    if m_star < 0:
        raise ValueError("m_star must be non-negative")
    t0, valid = time_validity(c)
    note = "" if valid else f"t={c.t:g} is outside the short-time regime t < t0={t0:.6g}"
    return BoundResult(_bound_value(c, int(m_star)), valid, note)


def truncation_threshold(c: ModelConstants, mode: str = "entangled", delta: float | None = None) -> ThresholdResult:
    """Smallest ``m*`` whose error bound meets the target, and ``w* = k_o + m*(k_h - 1)``.

    The target is ``eps`` for ``mode="entangled"`` and ``eps**2 * delta``
    for ``mode="random"`` (Markov's inequality over 2-design inputs).
    """
    if mode == "entangled":
        target = c.eps
    elif mode == "random":
        if delta is None or not 0 < delta < 1:
            raise ValueError("mode 'random' needs a failure probability delta in (0, 1)")
        target = c.eps ** 2 * delta
    else:
        raise ValueError(f"unknown mode {mode!r}; expected 'entangled' or 'random'")
    t0, valid = time_validity(c)
    if not valid:
        return ThresholdResult(None, None, None, target, mode, False,
                               f"t={c.t:g} is outside the short-time regime t < t0={t0:.6g}")
    m = 0
    value = _bound_value(c, 0)
    while value > target:
        m += 1
        if m > _MAX_M:
            return ThresholdResult(None, None, None, target, mode, False, "no m* found")
        value = _bound_value(c, m)
    return ThresholdResult(c.k_o + m * (c.k_h - 1), m, value, target, mode, True)


def norm_flow_bound(g: int, m: int, dt_eff: float, k_o: int, norm_o: float) -> float:
    """``k_o * C(g, m) * sin(dt)^m * ||O||``, the cap on ``N_{>=m}`` after ``g`` rotations.

    Returns 0 when ``m > g``: no path with ``m`` weight jumps exists yet.
    The binomial is exact up to ``g = 10**6`` and uses log-gamma beyond.
    """
    if g < 0 or m < 0:
        raise ValueError("g and m must be non-negative")
    if m > g:
        return 0.0
    if m == 0:
        return k_o * norm_o
    s = abs(math.sin(dt_eff))
    if s == 0.0:
        return 0.0
    if g <= 1_000_000:
        return k_o * math.comb(g, m) * s ** m * norm_o
    log = math.lgamma(g + 1) - math.lgamma(m + 1) - math.lgamma(g - m + 1) + m * math.log(s)
    return k_o * math.exp(log) * norm_o


def high_weight_norms(op: PauliOperator, k_o: int, k_h: int, m_max: int) -> np.ndarray:
    """``N_{>=m} = sum_{w > w_m} ||O_{=w}||`` for ``m = 0..m_max``, ``w_m = k_o + (m-1)(k_h-1)``."""
    hist = op.weight_histogram()
    ws = np.array(sorted(hist), dtype=int)
    norms = np.sqrt(np.array([hist[w] for w in ws]))
    out = np.zeros(m_max + 1)
    for m in range(m_max + 1):
        w_m = k_o + (m - 1) * (k_h - 1)
        out[m] = float(norms[ws > w_m].sum()) if ws.size else 0.0
    return out


def pauli_count_bound(n: int, w_star: int) -> int:
    """Number of Pauli strings on ``n`` qubits with weight at most ``w_star``."""
    return sum(3 ** w * math.comb(n, w) for w in range(min(w_star, n) + 1))


def haar_second_moment(op: PauliOperator) -> float:
    """Haar average of ``<psi|O|psi>^2``: ``(Tr(O)^2 + Tr(O^2)) / (d (d + 1))``."""
    d = 2.0 ** op.n_qubits
    tr = d * op.coefficient(PauliString.identity(op.n_qubits))
    tr_sq = d * op.two_norm() ** 2
    return (tr * tr + tr_sq) / (d * (d + 1))


# ----------------------------------------------------------------------------
# entanglement condition

@dataclass(frozen=True)
class PairEntry:
    """One ordered term pair ``(j, j')`` of ``O^dag O``."""

    j: int
    j2: int
    support: tuple[int, ...]
    weight: float  # ||O_j^dag O_j'|| = |beta_j beta_j'|
    entropy: float  # bits
    trace_norm: float  # Tr|rho - I/2^k|
    pinsker_bits: float  # sqrt(2 (k - S_bits)), the form written with entropy in bits
    pinsker_nats: float  # sqrt(2 ln2 (k - S_bits)), Pinsker with relative entropy in nats

    @property
    def trace_distance(self) -> float:
        return 0.5 * self.trace_norm


@dataclass
class EntanglementReport:
    """Inequality chain bounding ``|<psi|O|psi>|^2`` by subsystem entanglement."""

    lhs: float
    norm_sq: float
    rhs_trace_norm: float
    rhs_trace_distance: float
    rhs_pinsker_bits: float
    rhs_pinsker_nats: float
    entropy_threshold_gap: float
    entropy_condition: bool
    conclusion_bound: float
    conclusion_holds: bool
    pairs: list[PairEntry] = field(default_factory=list)

    @property
    def inequality_holds(self) -> bool:
        """``lhs <= norm^2 + sum |b b'| Tr|rho - I/2^k|`` with ``1e-12`` slack."""
        return self.lhs <= self.rhs_trace_norm + 1e-12

    @property
    def chain_holds(self) -> bool:
        """Trace-norm bound and both Pinsker relaxations hold."""
        slack = 1e-12
        return (self.inequality_holds
                and self.rhs_trace_norm <= self.rhs_pinsker_nats + slack
                and self.rhs_pinsker_nats <= self.rhs_pinsker_bits + slack)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["inequality_holds"] = self.inequality_holds
        d["chain_holds"] = self.chain_holds
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def entanglement_condition_report(state, op: PauliOperator, max_support: int = 12) -> EntanglementReport:
    """Evaluate the entanglement-based bound on ``|<psi|O|psi>|^2`` term pair by term pair.

    For every ordered pair of Pauli terms the reduced state on the support
    of their product gives an entropy and a trace norm to the maximally
    mixed state.  The report carries the trace-norm bound, both Pinsker
    relaxations (entropy in bits as written, and with the ``ln 2`` of a
    nat-based relative entropy), the entropy threshold condition and
    whether ``|<O>|^2 <= 2 ||O||^2``.
    """
    from .oracle import DenseState, dense_expectation, subsystem_entropy

    if not isinstance(state, DenseState):
        state = DenseState.from_vector(state)
    if op.n_qubits != state.n_qubits:
        raise ValueError(f"dimension mismatch: state on {state.n_qubits} qubits, operator on {op.n_qubits}")
    terms = list(op.items())
    lhs = dense_expectation(state, op) ** 2
    norm_sq = op.two_norm() ** 2
    one_norm = sum(abs(c) for _, c in terms)
    cache: dict[int, tuple[float, float]] = {}
    pairs = []
    rhs_tn = rhs_pb = rhs_pn = 0.0
    gap = math.inf
    ln2 = math.log(2.0)
    for j, (pj, cj) in enumerate(terms):
        for j2, (pk, ck) in enumerate(terms):
            mask = (pj.x_mask ^ pk.x_mask) | (pj.z_mask ^ pk.z_mask)
            support = tuple(q for q in range(op.n_qubits) if mask >> q & 1)
            k = len(support)
            if k > max_support:
                raise ValueError(f"support of size {k} exceeds the dense limit {max_support}")
            if mask not in cache:
                if k == 0:
                    cache[mask] = (0.0, 0.0)
                else:
                    rep = subsystem_entropy(state, support)
                    cache[mask] = (rep.entropy, rep.trace_norm)
            s, tn = cache[mask]
            deficit = max(0.0, k - s)
            w = abs(cj * ck)
            entry = PairEntry(j, j2, support, w, s, tn, math.sqrt(2 * deficit), math.sqrt(2 * ln2 * deficit))
            pairs.append(entry)
            rhs_tn += w * tn
            rhs_pb += w * entry.pinsker_bits
            rhs_pn += w * entry.pinsker_nats
            if k:
                threshold = k - 0.5 * norm_sq ** 2 / one_norm ** 4
                gap = min(gap, s - threshold)
    gap = gap if math.isfinite(gap) else 0.0
    return EntanglementReport(
        lhs=lhs,
        norm_sq=norm_sq,
        rhs_trace_norm=norm_sq + rhs_tn,
        rhs_trace_distance=norm_sq + 0.5 * rhs_tn,
        rhs_pinsker_bits=norm_sq + rhs_pb,
        rhs_pinsker_nats=norm_sq + rhs_pn,
        entropy_threshold_gap=gap,
        entropy_condition=gap >= 0.0,
        conclusion_bound=2.0 * norm_sq,
        conclusion_holds=lhs <= 2.0 * norm_sq + 1e-12,
        pairs=pairs,
    )
