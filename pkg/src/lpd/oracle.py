"""Exact dense state-vector reference.

Basis index bit ``k`` is qubit ``k`` (little-endian), matching the Pauli
mask convention.  Everything here is exponential in ``n`` and capped at
``MAX_DENSE_QUBITS``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .hamiltonian import GateSchedule, Hamiltonian, trotter_schedule
from .pauli import PauliOperator, PauliString, RotationGate, split_keys

__all__ = [
    "MAX_DENSE_QUBITS",
    "DenseState",
    "basis_state",
    "haar_sample",
    "haar_ensemble",
    "apply_pauli",
    "apply_rotation",
    "pauli_matrix",
    "operator_matrix",
    "hamiltonian_matrix",
    "ExactPropagator",
    "dense_trotter_evolve",
    "dense_evolve",
    "dense_expectation",
    "pauli_expectation_table",
    "pauli_decomposition",
    "reduced_density_matrix",
    "SubsystemReport",
    "subsystem_entropy",
]

MAX_DENSE_QUBITS = 14
# the all-Pauli table needs a 4^n array
_TABLE_QUBITS = 11


def _check_n(n: int):
    if not 1 <= n <= MAX_DENSE_QUBITS:
        raise ValueError(f"dense oracle supports 1..{MAX_DENSE_QUBITS} qubits, got {n}")


@dataclass(frozen=True, eq=False)
class DenseState:
    """Normalized pure state on ``n_qubits`` qubits."""

    amplitudes: np.ndarray
    n_qubits: int

    def __post_init__(self):
        _check_n(self.n_qubits)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError(f"expected {1 << self.n_qubits} amplitudes, got shape {self.amplitudes.shape}")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state is not normalized (norm {norm})")

    @classmethod
    def from_vector(cls, vec, normalize: bool = False) -> "DenseState":
        vec = np.asarray(vec, dtype=complex).ravel()
        n = int(round(math.log2(vec.size))) if vec.size else 0
        if vec.size == 0 or (1 << n) != vec.size:
            raise ValueError(f"vector length {vec.size} is not a power of two")
        if normalize:
            vec = vec / np.linalg.norm(vec)
        return cls(vec, n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def basis_state(bits: str) -> DenseState:
    """Computational basis state; ``bits[k]`` is qubit ``k``."""
    n = len(bits)
    _check_n(n)
    idx = sum(1 << k for k, b in enumerate(bits) if b == "1")
    if set(bits) - {"0", "1"}:
        raise ValueError(f"bit string may only contain 0/1, got {bits!r}")
    vec = np.zeros(1 << n, dtype=complex)
    vec[idx] = 1.0
    return DenseState(vec, n)


def haar_sample(n: int, seed) -> DenseState:
    """Haar-random pure state from a counter-based (Philox) generator.

    ``seed`` is an int or a ``numpy.random.SeedSequence``.
    """
    _check_n(n)
    rng = np.random.Generator(np.random.Philox(seed))
    vec = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return DenseState(vec / np.linalg.norm(vec), n)


def haar_ensemble(n: int, count: int, seed: int) -> list[DenseState]:
    """``count`` independent Haar states, reproducible from one seed."""
    return [haar_sample(n, s) for s in np.random.SeedSequence(seed).spawn(count)]


def _signs(n: int, z: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.uint64)
    return 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(z)) & 1)


def apply_pauli(vec: np.ndarray, p: PauliString) -> np.ndarray:
    """``P |psi>`` for a Pauli string ``P = i^{|x&z|} X^x Z^z``.

    ``vec`` may hold several states as columns.
    """
    n = p.n_qubits
    idx = np.arange(1 << n)
    phase = 1j ** (bin(p.x_mask & p.z_mask).count("1") % 4)
    signs = _signs(n, p.z_mask)
    if vec.ndim == 2:
        signs = signs[:, None]
    return phase * (signs * vec)[idx ^ p.x_mask]


def apply_rotation(vec: np.ndarray, gate: RotationGate) -> np.ndarray:
    """``exp(-i theta G) |psi> = cos(theta) psi - i sin(theta) G psi`` (columns are states)."""
    th = gate.angle
    return math.cos(th) * vec - 1j * math.sin(th) * apply_pauli(vec, gate.generator)


def pauli_matrix(p: PauliString) -> np.ndarray:
    n = p.n_qubits
    _check_n(n)
    dim = 1 << n
    cols = np.arange(dim)
    m = np.zeros((dim, dim), dtype=complex)
    phase = 1j ** (bin(p.x_mask & p.z_mask).count("1") % 4)
    m[cols ^ p.x_mask, cols] = phase * _signs(n, p.z_mask)
    return m


def operator_matrix(op: PauliOperator) -> np.ndarray:
    n = op.n_qubits
    _check_n(n)
    dim = 1 << n
    cols = np.arange(dim)
    if len(op) > 4 * dim and n <= _TABLE_QUBITS:
        # M[b ^ x, b] = sum_z c[x, z] i^y (-1)^{b.z}, one Hadamard transform for all x
        table = np.zeros((dim, dim))
        xs, zs = split_keys(op.keys)
        table[xs.astype(np.intp), zs.astype(np.intp)] = op.coefficients
        y = np.bitwise_count(np.bitwise_and.outer(cols, cols).astype(np.uint64)) % 4
        g = (table * (1j ** y)) @ scipy.linalg.hadamard(dim)
        m = np.empty((dim, dim), dtype=complex)
        m[cols[None, :] ^ cols[:, None], cols[None, :]] = g
        return m
    m = np.zeros((dim, dim), dtype=complex)
    for p, c in op.items():
        phase = 1j ** (bin(p.x_mask & p.z_mask).count("1") % 4)
        m[cols ^ p.x_mask, cols] += c * phase * _signs(n, p.z_mask)
    return m


def hamiltonian_matrix(h: Hamiltonian) -> np.ndarray:
    return operator_matrix(h.to_operator())


class ExactPropagator:
    """Exact ``exp(-iHt)`` via one cached eigendecomposition."""

    def __init__(self, h: Hamiltonian):
        _check_n(h.n_qubits)
        self.n_qubits = h.n_qubits
        self.energies, self.vectors = np.linalg.eigh(hamiltonian_matrix(h))

    def evolve(self, state: DenseState, t: float) -> DenseState:
        coeffs = self.vectors.conj().T @ state.amplitudes
        vec = self.vectors @ (np.exp(-1j * self.energies * t) * coeffs)
        return DenseState(vec / np.linalg.norm(vec), self.n_qubits)

    def unitary(self, t: float) -> np.ndarray:
        return (self.vectors * np.exp(-1j * self.energies * t)) @ self.vectors.conj().T


def dense_trotter_evolve(state: DenseState, schedule: GateSchedule, steps: int | None = None,
                         callback=None) -> DenseState:
    """Apply ``steps`` product-formula steps gate by gate.

    ``callback(d, DenseState)`` is called after every step.
    """
    if schedule.n_qubits != state.n_qubits:
        raise ValueError("schedule and state act on different numbers of qubits")
    steps = schedule.n_steps if steps is None else steps
    vec = state.amplitudes
    for d in range(1, steps + 1):
        for gate in schedule.step_gates:
            vec = apply_rotation(vec, gate)
        if callback is not None:
            callback(d, DenseState(vec, state.n_qubits))
    return DenseState(vec, state.n_qubits)


def dense_evolve(state: DenseState, h: Hamiltonian, t: float, *, p: int | None = None,
                 r: int | None = None) -> DenseState:
    """Exact evolution, or a product formula of order ``p`` with ``r`` steps."""
    if p is None:
        return ExactPropagator(h).evolve(state, t)
    if r is None:
        raise ValueError("a step count r is needed for product-formula evolution")
    return dense_trotter_evolve(state, trotter_schedule(h, p, t, r))


def pauli_expectation_table(state: DenseState | np.ndarray) -> np.ndarray:
    """All ``4^n`` Pauli expectations as a real ``(2^n, 2^n)`` table ``T[x, z]``."""
    vec = state.amplitudes if isinstance(state, DenseState) else np.asarray(state, dtype=complex)
    n = int(round(math.log2(vec.size)))
    if n > _TABLE_QUBITS:
        raise ValueError(f"Pauli table limited to {_TABLE_QUBITS} qubits")
    dim = 1 << n
    b = np.arange(dim)
    # F[x, b] = conj(psi[b ^ x]) psi[b]
    f = vec.conj()[b[None, :] ^ b[:, None]] * vec[None, :]
    t = f @ scipy.linalg.hadamard(dim)
    y = np.bitwise_count(np.bitwise_and.outer(b, b).astype(np.uint64)) % 4
    return np.real(t * (1j ** y))


def pauli_decomposition(matrix: np.ndarray, tol: float = 1e-13) -> PauliOperator:
    """Hermitian matrix as a real Pauli sum, ``c_P = Tr(P M) / 2^n``."""
    m = np.asarray(matrix, dtype=complex)
    dim = m.shape[0]
    n = int(round(math.log2(dim)))
    if m.shape != (dim, dim) or (1 << n) != dim:
        raise ValueError("matrix must be square with power-of-two dimension")
    b = np.arange(dim)
    # Tr(P M) = i^y sum_b (-1)^{b.z} M[b, b ^ x]
    g = m[b[None, :], b[None, :] ^ b[:, None]]
    t = g @ scipy.linalg.hadamard(dim)
    y = np.bitwise_count(np.bitwise_and.outer(b, b).astype(np.uint64)) % 4
    coef = t * (1j ** y) / dim
    if np.max(np.abs(coef.imag), initial=0.0) > 1e-9:
        raise ValueError("matrix is not Hermitian")
    coef = coef.real
    xs, zs = np.nonzero(np.abs(coef) > tol)
    keys = (xs.astype(np.uint64) << np.uint64(32)) | zs.astype(np.uint64)
    return PauliOperator.from_arrays(n, keys, coef[xs, zs])


def dense_expectation(state: DenseState, op: PauliOperator) -> float:
    """``<psi| op |psi>``; raises if the imaginary part exceeds ``1e-10``."""
    if op.n_qubits != state.n_qubits:
        raise ValueError(f"dimension mismatch: state on {state.n_qubits} qubits, operator on {op.n_qubits}")
    if len(op) == 0:
        return 0.0
    vec = state.amplitudes
    n = state.n_qubits
    if len(op) > 4 * n and n <= _TABLE_QUBITS:
        table = pauli_expectation_table(vec)
        xs, zs = split_keys(op.keys)
        return float(np.dot(table[xs.astype(np.intp), zs.astype(np.intp)], op.coefficients))
    total = 0j
    for p, c in op.items():
        total += c * np.vdot(vec, apply_pauli(vec, p))
    if abs(total.imag) > 1e-10:
        raise ArithmeticError(f"expectation has imaginary part {total.imag}")
    return float(total.real)


def reduced_density_matrix(state: DenseState, qubits) -> np.ndarray:
    """Reduced state on ``qubits``; row index bit ``j`` is ``sorted(qubits)[j]``."""
    n = state.n_qubits
    keep = sorted(set(int(q) for q in qubits))
    if not keep or keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"invalid subsystem {qubits} for {n} qubits")
    # C-order reshape puts qubit n-1 on axis 0
    psi = state.amplitudes.reshape((2,) * n)
    axes_keep = [n - 1 - q for q in reversed(keep)]
    axes_rest = [a for a in range(n) if a not in axes_keep]
    mat = psi.transpose(axes_keep + axes_rest).reshape(1 << len(keep), -1)
    return mat @ mat.conj().T


@dataclass(frozen=True)
class SubsystemReport:
    """Entropy and distance from maximally mixed for one subsystem."""

    qubits: tuple[int, ...]
    entropy: float
    trace_distance: float

    @property
    def size(self) -> int:
        return len(self.qubits)

    @property
    def trace_norm(self) -> float:
        """``Tr|rho - I/2^k|``, twice the trace distance."""
        return 2.0 * self.trace_distance


def subsystem_entropy(state: DenseState, qubits) -> SubsystemReport:
    """Von Neumann entropy (bits) and ``(1/2) Tr|rho - I/2^k|`` of a subsystem."""
    rho = reduced_density_matrix(state, qubits)
    lam = np.clip(np.linalg.eigvalsh(rho), 0.0, None)
    nz = lam[lam > 1e-15]
    s = float(-np.sum(nz * np.log2(nz)))
    k = rho.shape[0]
    dist = 0.5 * float(np.sum(np.abs(lam - 1.0 / k)))
    return SubsystemReport(tuple(sorted(set(int(q) for q in qubits))), max(s, 0.0), dist)
