"""Input checks shared by the estimators and the command line."""

from __future__ import annotations

import numbers
from collections.abc import Mapping

import numpy as np

from .hamiltonian import Hamiltonian
from .pauli import PauliOperator, PauliString

__all__ = [
    "check_observable",
    "check_hamiltonian",
    "check_state",
    "check_states",
    "check_positive_int",
    "check_time",
    "check_w_star",
]


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_time(value, name: str = "t") -> float:
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    if value < 0:
        raise ValueError(f"{name} must be non-negative, got {value}")
    return float(value)


def check_observable(obs, n_qubits: int | None = None) -> PauliOperator:
    """Coerce a label, Pauli string, mapping or operator into a :class:`PauliOperator`."""
    if isinstance(obs, str):
        op = PauliOperator.from_text(obs, n_qubits) if any(c.isspace() for c in obs.strip()) \
            else PauliOperator.from_label(obs)
    elif isinstance(obs, PauliString):
        op = PauliOperator.from_pauli(obs)
    elif isinstance(obs, PauliOperator):
        op = obs
    elif isinstance(obs, Mapping):
        if n_qubits is None:
            labels = [k for k in obs if isinstance(k, str)]
            if not labels:
                raise ValueError("n_qubits is required for a mapping of Pauli strings")
            n_qubits = len(labels[0])
        op = PauliOperator(n_qubits, obs)
    else:
        raise TypeError(f"cannot interpret {type(obs).__name__} as an observable")
    if n_qubits is not None and op.n_qubits != n_qubits:
        raise ValueError(f"observable acts on {op.n_qubits} qubits, expected {n_qubits}")
    if len(op) == 0:
        raise ValueError("observable is the zero operator")
    return op


def check_hamiltonian(h) -> Hamiltonian:
    if not isinstance(h, Hamiltonian):
        raise TypeError(f"expected a Hamiltonian, got {type(h).__name__}")
    if h.n_terms == 0:
        raise ValueError("Hamiltonian has no terms")
    return h


def check_state(state, n_qubits: int):
    """Accept product/MPS/dense states, a state pattern like ``"0101"`` or an amplitude vector."""
    from .oracle import DenseState
    from .states import MpsState, ProductState

    if isinstance(state, str):
        state = ProductState.from_pattern(state)
    elif isinstance(state, np.ndarray):
        state = DenseState.from_vector(state)
    elif not isinstance(state, (ProductState, MpsState, DenseState)):
        raise TypeError(f"unsupported state type {type(state).__name__}")
    if state.n_qubits != n_qubits:
        raise ValueError(f"state has {state.n_qubits} qubits, expected {n_qubits}")
    return state


def check_states(states, n_qubits: int) -> list:
    """A single state or a sequence of states, returned as a list."""
    if isinstance(states, (str, np.ndarray)) or hasattr(states, "n_qubits"):
        if isinstance(states, np.ndarray) and states.ndim == 2:
            return [check_state(row, n_qubits) for row in states]
        return [check_state(states, n_qubits)]
    return [check_state(s, n_qubits) for s in states]


def check_w_star(w_star, observable: PauliOperator) -> int:
    """``None`` means lossless; otherwise at least the observable weight."""
    n = observable.n_qubits
    if w_star is None:
        return n
    w = check_positive_int(w_star, "w_star", minimum=0)
    if w < observable.max_weight:
        raise ValueError(f"w_star={w} is below the observable weight {observable.max_weight}")
    return min(w, n)
