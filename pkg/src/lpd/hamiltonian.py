"""Hamiltonians as Pauli sums, layering, product-formula schedules and
Trotter-error calculators."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

from .pauli import (
    PauliOperator,
    PauliString,
    RotationGate,
    commutator,
    parse_terms_text,
)

__all__ = [
    "Hamiltonian",
    "GateSchedule",
    "TrotterStepEstimate",
    "build_qmfi",
    "build_model",
    "load_hamiltonian",
    "layerize",
    "suzuki_coefficient",
    "gate_overhead",
    "trotter_schedule",
    "nested_commutator_norm",
    "trotter_steps_required",
    "estimate_trotter_steps",
    "MODELS",
]


@dataclass(frozen=True)
class Hamiltonian:
    """``H = sum_l alpha_l G_l`` with its terms partitioned into layers.

    Every layer holds generators with pairwise disjoint supports, so the
    exponential of a layer is an exact product of its Pauli rotations.
    """

    n_qubits: int
    terms: tuple[tuple[float, PauliString], ...]
    layers: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        terms = tuple((float(a), g) for a, g in self.terms)
        object.__setattr__(self, "terms", terms)
        for a, g in terms:
            if g.n_qubits != self.n_qubits:
                raise ValueError(f"term {g} has {g.n_qubits} qubits, expected {self.n_qubits}")
            if g.weight == 0:
                raise ValueError("Hamiltonian terms must be non-identity Pauli strings")
            if not math.isfinite(a):
                raise ValueError(f"non-finite coefficient on {g}")
        if not self.layers:
            object.__setattr__(self, "layers", _greedy_layers(terms))
        else:
            layers = tuple(tuple(int(i) for i in layer) for layer in self.layers)
            object.__setattr__(self, "layers", layers)
            _check_layers(terms, layers)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def k_h(self) -> int:
        return max((g.weight for _, g in self.terms), default=0)

    @property
    def max_abs_coefficient(self) -> float:
        return max((abs(a) for a, _ in self.terms), default=0.0)

    def layer_terms(self, gamma: int) -> list[tuple[float, PauliString]]:
        return [self.terms[i] for i in self.layers[gamma]]

    def layer_operator(self, gamma: int) -> PauliOperator:
        return PauliOperator(self.n_qubits, self.layer_terms(gamma))

    def to_operator(self) -> PauliOperator:
        return PauliOperator(self.n_qubits, list(self.terms))

    def is_nearest_neighbor(self, periodic_ok: bool = False) -> bool:
        """True when every term acts on one site or two adjacent sites."""
        for _, g in self.terms:
            s = g.support
            if len(s) == 1:
                continue
            if len(s) != 2:
                return False
            if s[1] - s[0] == 1:
                continue
            if periodic_ok and (s[0], s[1]) == (0, self.n_qubits - 1):
                continue
            return False
        return True

    def to_text(self) -> str:
        lines = [f"{a:.17g} {g.to_text()}" for a, g in self.terms]
        return "\n".join(lines) + "\n"


def _supports_overlap(a: PauliString, b: PauliString) -> bool:
    return bool((a.x_mask | a.z_mask) & (b.x_mask | b.z_mask))


def _greedy_layers(terms) -> tuple[tuple[int, ...], ...]:
    colors: list[list[int]] = []
    masks: list[int] = []
    for i, (_, g) in enumerate(terms):
        m = g.x_mask | g.z_mask
        for c, used in enumerate(masks):
            if not used & m:
                colors[c].append(i)
                masks[c] |= m
                break
        else:
            colors.append([i])
            masks.append(m)
    return tuple(tuple(c) for c in colors)


def _check_layers(terms, layers):
    seen = sorted(i for layer in layers for i in layer)
    if seen != list(range(len(terms))):
        raise ValueError("layers must partition the term indices exactly once")
    for layer in layers:
        for i, j in itertools.combinations(layer, 2):
            if _supports_overlap(terms[i][1], terms[j][1]):
                raise ValueError(
                    f"terms {terms[i][1]} and {terms[j][1]} overlap but share a layer"
                )


def layerize(h: Hamiltonian) -> Hamiltonian:
    """Greedy colouring of the support-overlap graph in term order."""
    return Hamiltonian(h.n_qubits, h.terms, _greedy_layers(h.terms))


def build_qmfi(n: int, h_x: float = 0.8, h_y: float = 0.9, periodic: bool = True,
               coupling: float = 1.0) -> Hamiltonian:
    """Mixed-field Ising chain ``sum X_j X_{j+1} + h_x sum X_j + h_y sum Y_j``.

    Terms are ordered bonds, X fields, Y fields; greedy layering then gives
    even bonds / odd bonds / X fields / Y fields for even ``n``.  A
    periodic two-site chain keeps a single bond.
    """
    if n < 2:
        raise ValueError(f"the chain needs at least 2 qubits, got {n}")
    terms = []
    n_bonds = n if periodic and n > 2 else n - 1
    for j in range(n_bonds):
        terms.append((coupling, PauliString.from_sparse(n, {j: "X", (j + 1) % n: "X"})))
    if h_x:
        terms.extend((h_x, PauliString.single(n, j, "X")) for j in range(n))
    if h_y:
        terms.extend((h_y, PauliString.single(n, j, "Y")) for j in range(n))
    return Hamiltonian(n, terms)


MODELS = {"qmfi": build_qmfi}


def build_model(name: str, n: int, **params) -> Hamiltonian:
    try:
        factory = MODELS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; known models: {sorted(MODELS)}") from None
    return factory(n, **params)


def load_hamiltonian(path, n_qubits: int | None = None) -> Hamiltonian:
    """Read a Hamiltonian in the Pauli text format, keeping file order."""
    with open(path) as fh:
        n, terms = parse_terms_text(fh.read(), n_qubits)
    return Hamiltonian(n, terms)


# ---------------------------------------------------------------------------
# product formulas

def suzuki_coefficient(p: int) -> float:
    """``u_p = 1 / (4 - 4**(1/(p-1)))`` of the fractal recursion."""
    return 1.0 / (4.0 - 4.0 ** (1.0 / (p - 1)))


def gate_overhead(p: int) -> int:
    """Number of first-order passes per step: 1, 2, then ``2 * 5**(p/2 - 1)``."""
    _check_order(p)
    if p == 1:
        return 1
    return 2 * 5 ** (p // 2 - 1)


def _check_order(p: int):
    if p < 1 or (p > 1 and p % 2):
        raise ValueError(f"product-formula order must be 1 or even, got {p}")


@dataclass(frozen=True)
class GateSchedule:
    """Gates of one product-formula step in the order they act on a state.

    Replaying ``step_gates`` ``n_steps`` times realises the full evolution.
    The Heisenberg-picture engine walks each step in reverse.
    """

    step_gates: tuple[RotationGate, ...]
    order: int
    n_steps: int
    time: float
    n_qubits: int
    n_layers: int = 0

    @property
    def dt(self) -> float:
        return self.time / self.n_steps

    @property
    def gates_per_step(self) -> int:
        return len(self.step_gates)

    def max_effective_angle(self) -> float:
        return max((abs(g.effective_angle) for g in self.step_gates), default=0.0)

    def summary(self) -> dict:
        return {
            "order": self.order,
            "n_steps": self.n_steps,
            "time": self.time,
            "dt": self.dt,
            "n_layers": self.n_layers,
            "gates_per_step": self.gates_per_step,
        }

    def inverse(self) -> "GateSchedule":
        """The step run backwards with negated angles."""
        gates = tuple(g.inverse() for g in reversed(self.step_gates))
        return GateSchedule(gates, self.order, self.n_steps, -self.time, self.n_qubits, self.n_layers)


def _first_order(h: Hamiltonian, tau: float) -> list[RotationGate]:
    return [RotationGate(g, a * tau) for layer in h.layers for a, g in (h.terms[i] for i in layer)]


def _suzuki(h: Hamiltonian, p: int, tau: float) -> list[RotationGate]:
    if p == 1:
        return _first_order(h, tau)
    if p == 2:
        half = _first_order(h, tau / 2)
        return half + half[::-1]
    u = suzuki_coefficient(p)
    outer = _suzuki(h, p - 2, u * tau)
    return outer + outer + _suzuki(h, p - 2, (1 - 4 * u) * tau) + outer + outer


def trotter_schedule(h: Hamiltonian, p: int, t: float, r: int) -> GateSchedule:
    """Order-``p`` product-formula step for time ``t / r`` repeated ``r`` times."""
    _check_order(p)
    if r < 1:
        raise ValueError(f"number of steps must be >= 1, got {r}")
    gates = tuple(_suzuki(h, p, t / r))
    return GateSchedule(gates, p, int(r), float(t), h.n_qubits, h.n_layers)


# ---------------------------------------------------------------------------
# Trotter error calculators

_NORM_KINDS = ("operator_norm_upper", "pauli_two_norm")


def _nested(h: Hamiltonian, depth: int) -> list[PauliOperator]:
    layers = [h.layer_operator(g) for g in range(h.n_layers)]
    current = layers
    for _ in range(depth):
        current = [commutator(outer, inner) for inner in current for outer in layers]
    return current


def nested_commutator_norm(h: Hamiltonian, p: int, kind: str = "pauli_two_norm") -> float:
    """Sum over layer tuples of the norm of the order-``p`` nested commutator.

    ``kind="pauli_two_norm"`` uses the Pauli 2-norm; ``"operator_norm_upper"``
    uses the coefficient 1-norm, an upper bound on the operator norm.
    Orders above 2 reuse the ``p = 2`` value and emit a warning.
    """
    _check_order(p)
    if kind not in _NORM_KINDS:
        raise ValueError(f"kind must be one of {_NORM_KINDS}, got {kind!r}")
    if p > 2:
        warnings.warn(
            f"nested commutators are evaluated up to order 2; order {p} reuses the "
            "second-order value as a heuristic",
            stacklevel=2,
        )
        p = 2
    ops = _nested(h, p)
    if kind == "pauli_two_norm":
        return float(sum(op.two_norm() for op in ops))
    return float(sum(op.one_norm() for op in ops))


@dataclass(frozen=True)
class TrotterStepEstimate:
    steps: int
    commutator_norm: float
    observable_norm: float
    order: int
    mode: str
    prefactor: float = 1.0
    heuristic: bool = False
    notes: tuple[str, ...] = field(default_factory=tuple)

    def as_dict(self) -> dict:
        return {
            "steps": self.steps,
            "commutator_norm": self.commutator_norm,
            "observable_norm": self.observable_norm,
            "order": self.order,
            "mode": self.mode,
            "prefactor": self.prefactor,
            "heuristic": self.heuristic,
            "notes": list(self.notes),
        }


def _steps_from(lam: float, norm_o: float, t: float, eps: float, p: int) -> int:
    if lam == 0.0 or norm_o == 0.0:
        return 1
    r = (lam * norm_o / eps) ** (1.0 / p) * t ** (1.0 + 1.0 / p)
    # guard against 40.000000000000004 style round-up
    return max(1, math.ceil(r - 1e-9 * r))


def estimate_trotter_steps(h: Hamiltonian, observable: PauliOperator, t: float, eps: float,
                           p: int = 2, mode: str = "average_or_entangled") -> TrotterStepEstimate:
    """Theory-guided step count ``(Lambda ||O|| / eps)^(1/p) t^(1 + 1/p)``.

    The big-O constant is set to 1, so the number is a guide rather than a
    certified bound.  ``mode="worst"`` uses operator-norm quantities,
    ``"average_or_entangled"`` Pauli 2-norms.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    if mode == "worst":
        kind, norm_o = "operator_norm_upper", observable.one_norm()
    elif mode == "average_or_entangled":
        kind, norm_o = "pauli_two_norm", observable.two_norm()
    else:
        raise ValueError(f"mode must be 'worst' or 'average_or_entangled', got {mode!r}")
    notes = ["prefactor set to 1 (theory-guided, not certified)",
             "no system-size-independent refinement for 1D short-time dynamics; may overestimate"]
    heuristic = p > 2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lam = nested_commutator_norm(h, p, kind)
    if heuristic:
        notes.append(f"order {p} uses the second-order nested commutator")
    return TrotterStepEstimate(_steps_from(lam, norm_o, t, eps, p), lam, norm_o, p, mode,
                               1.0, heuristic, tuple(notes))


def trotter_steps_required(h: Hamiltonian, observable: PauliOperator, t: float, eps: float,
                           p: int = 2, mode: str = "average_or_entangled") -> int:
    return estimate_trotter_steps(h, observable, t, eps, p, mode).steps


def steps_from_norms(commutator_norm: float, observable_norm: float, t: float, eps: float,
                     p: int) -> int:
    """Same formula as :func:`trotter_steps_required` with the norms supplied."""
    if eps <= 0 or t <= 0:
        raise ValueError("eps and t must be positive")
    return _steps_from(commutator_norm, observable_norm, t, eps, p)

