"""Reference computations for the tests, built from explicit Kronecker products.

Qubit ``k`` is bit ``k`` of the basis index, so the matrix of a label is
``kron(sigma_{n-1}, ..., sigma_0)``.
"""

from functools import reduce

import numpy as np
import scipy.linalg

SIGMA = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def label_matrix(label: str) -> np.ndarray:
    return reduce(np.kron, [SIGMA[c] for c in reversed(label)])


def operator_dense(op) -> np.ndarray:
    dim = 1 << op.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for p, c in op.items():
        out += c * label_matrix(p.to_text())
    return out


def gate_unitary(gate) -> np.ndarray:
    return scipy.linalg.expm(-1j * gate.angle * label_matrix(gate.generator.to_text()))


def step_unitary(schedule) -> np.ndarray:
    dim = 1 << schedule.n_qubits
    u = np.eye(dim, dtype=complex)
    for g in schedule.step_gates:
        u = gate_unitary(g) @ u
    return u


def hamiltonian_dense(h) -> np.ndarray:
    return sum(a * label_matrix(g.to_text()) for a, g in h.terms)


def product_vector(pattern: str) -> np.ndarray:
    single = {"0": [1, 0], "1": [0, 1], "+": [1, 1], "-": [1, -1]}
    vecs = [np.array(single[c], dtype=complex) / np.linalg.norm(single[c]) for c in pattern]
    return reduce(np.kron, list(reversed(vecs)))


def expval(m: np.ndarray, psi: np.ndarray) -> float:
    return float(np.real(np.vdot(psi, m @ psi)))
