import math

import numpy as np
import pytest
import scipy.linalg

from helpers import hamiltonian_dense, label_matrix, operator_dense, product_vector, step_unitary, expval
from lpd.hamiltonian import Hamiltonian, build_qmfi, trotter_schedule
from lpd.oracle import (
    MAX_DENSE_QUBITS,
    DenseState,
    ExactPropagator,
    apply_pauli,
    apply_rotation,
    basis_state,
    dense_evolve,
    dense_expectation,
    dense_trotter_evolve,
    haar_ensemble,
    haar_sample,
    hamiltonian_matrix,
    operator_matrix,
    pauli_decomposition,
    pauli_expectation_table,
    pauli_matrix,
    reduced_density_matrix,
    subsystem_entropy,
)
from lpd.pauli import PauliOperator, PauliString, RotationGate

P = PauliString.from_text


def test_haar_sample_is_deterministic_and_normalised():
    a, b = haar_sample(5, 42), haar_sample(5, 42)
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
    assert not np.allclose(a.amplitudes, haar_sample(5, 43).amplitudes)
    assert a.norm() == pytest.approx(1.0)
    ens = haar_ensemble(3, 4, 7)
    assert len(ens) == 4 and len({s.amplitudes.tobytes() for s in ens}) == 4
    np.testing.assert_array_equal(haar_ensemble(3, 4, 7)[2].amplitudes, ens[2].amplitudes)


def test_dense_cap():
    with pytest.raises(ValueError):
        haar_sample(MAX_DENSE_QUBITS + 1, 0)


def test_haar_second_moment_n2():
    z = PauliOperator(2, {"ZI": 1.0})
    vals = np.array([dense_expectation(s, z) ** 2 for s in haar_ensemble(2, 4000, 11)])
    assert abs(vals.mean() - 0.2) <= 3 * vals.std(ddof=1) / math.sqrt(vals.size)


def test_pauli_matrix_matches_kron():
    for lab in ("XYZ", "IZY", "YYI"):
        np.testing.assert_array_equal(pauli_matrix(P(lab)), label_matrix(lab))


def test_apply_pauli_and_rotation():
    psi = haar_sample(3, 1).amplitudes
    np.testing.assert_allclose(apply_pauli(psi, P("XZY")), label_matrix("XZY") @ psi, atol=1e-14)
    gate = RotationGate(P("XXI"), 0.37)
    u = scipy.linalg.expm(-0.37j * label_matrix("XXI"))
    np.testing.assert_allclose(apply_rotation(psi, gate), u @ psi, atol=1e-14)


def test_operator_matrix_fast_and_slow_paths_agree():
    rng = np.random.default_rng(0)
    labels = {"".join(rng.choice(list("IXYZ"), 4)) for _ in range(120)}
    op = PauliOperator(4, {lab: rng.normal() for lab in labels})
    np.testing.assert_allclose(operator_matrix(op), operator_dense(op), atol=1e-12)


def test_hamiltonian_matrix():
    h = build_qmfi(4, 0.3, 0.7)
    np.testing.assert_allclose(hamiltonian_matrix(h), hamiltonian_dense(h), atol=1e-14)


def test_dense_evolve_t_zero():
    s = haar_sample(4, 2)
    out = dense_evolve(s, build_qmfi(4), 0.0)
    np.testing.assert_allclose(out.amplitudes, s.amplitudes, atol=1e-14)


def test_rabi_flip():
    h = Hamiltonian(2, [(1.0, P("XI"))])
    z = PauliOperator(2, {"ZI": 1.0})
    s = basis_state("00")
    # exp(-i X t): <Z>(t) = cos(2t)
    assert dense_expectation(dense_evolve(s, h, math.pi / 2), z) == pytest.approx(-1.0)
    assert dense_expectation(dense_evolve(s, h, math.pi), z) == pytest.approx(1.0)
    assert dense_expectation(dense_evolve(s, h, 0.3, p=2, r=3), z) == pytest.approx(math.cos(0.6))


def test_exact_propagator_matches_expm():
    h = build_qmfi(5)
    u = ExactPropagator(h).unitary(0.7)
    np.testing.assert_allclose(u, scipy.linalg.expm(-0.7j * hamiltonian_dense(h)), atol=1e-10)


def test_dense_trotter_matches_step_unitaries():
    h = build_qmfi(5)
    s = trotter_schedule(h, 2, 1.0, 4)
    seen = []
    out = dense_trotter_evolve(basis_state("01010"), s, callback=lambda d, st: seen.append(d))
    psi = product_vector("01010")
    u = step_unitary(s)
    for _ in range(4):
        psi = u @ psi
    np.testing.assert_allclose(out.amplitudes, psi, atol=1e-12)
    assert seen == [1, 2, 3, 4]


def test_trotter_error_slope_p2():
    h = build_qmfi(4)
    z = PauliOperator(4, {"ZIII": 1.0})
    s = basis_state("0101")
    exact = dense_expectation(dense_evolve(s, h, 1.0), z)
    errs = [abs(dense_expectation(dense_evolve(s, h, 1.0, p=2, r=r), z) - exact) for r in (10, 40)]
    assert -math.log(errs[1] / errs[0]) / math.log(4) == pytest.approx(2.0, abs=0.2)


def test_dense_expectation_examples():
    z = PauliOperator(3, {"ZII": 1.0})
    assert dense_expectation(basis_state("000"), z) == 1.0
    plus = DenseState.from_vector(product_vector("+++"))
    assert dense_expectation(plus, z) == pytest.approx(0.0, abs=1e-15)


def test_dense_expectation_table_path():
    state = haar_sample(4, 5)
    rng = np.random.default_rng(3)
    labels = {"".join(rng.choice(list("IXYZ"), 4)) for _ in range(80)}
    op = PauliOperator(4, {lab: rng.normal() for lab in labels})
    assert dense_expectation(state, op) == pytest.approx(expval(operator_dense(op), state.amplitudes), abs=1e-12)


def test_pauli_expectation_table_entries():
    state = haar_sample(3, 8)
    table = pauli_expectation_table(state)
    for lab in ("XII", "ZYX", "IIY", "III"):
        p = P(lab)
        assert table[p.x_mask, p.z_mask] == pytest.approx(expval(label_matrix(lab), state.amplitudes), abs=1e-12)


def test_decomposition_round_trip():
    rng = np.random.default_rng(1)
    op = PauliOperator(3, {"".join(rng.choice(list("IXYZ"), 3)): rng.normal() for _ in range(20)})
    assert pauli_decomposition(operator_dense(op)).allclose(op, atol=1e-12)


def test_subsystem_entropy_examples():
    s = basis_state("0110")
    for k in (1, 2, 3):
        rep = subsystem_entropy(s, list(range(k)))
        assert rep.entropy == pytest.approx(0.0, abs=1e-12)
        assert rep.trace_distance == pytest.approx(1 - 2.0 ** -k)
    bell = DenseState.from_vector(np.array([1, 0, 0, 1]) / math.sqrt(2))
    rep = subsystem_entropy(bell, [0])
    assert rep.entropy == pytest.approx(1.0) and rep.trace_distance == pytest.approx(0.0, abs=1e-15)
    assert subsystem_entropy(haar_sample(4, 0), [0, 1, 2, 3]).entropy == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(ValueError):
        subsystem_entropy(bell, [2])


def test_haar_two_qubit_marginal_near_maximal():
    ents = [subsystem_entropy(s, [0, 1]).entropy for s in haar_ensemble(10, 20, 3)]
    assert abs(np.mean(ents) - 2.0) < 0.2


def test_reduced_density_matrix_ordering():
    # qubit 0 in |1>, qubit 1 in |+>
    s = DenseState.from_vector(product_vector("1+"))
    np.testing.assert_allclose(reduced_density_matrix(s, [0]), np.diag([0, 1]), atol=1e-15)
    np.testing.assert_allclose(reduced_density_matrix(s, [1]), np.full((2, 2), 0.5), atol=1e-15)


def test_state_validation():
    with pytest.raises(ValueError):
        DenseState.from_vector(np.array([1.0, 1.0]), normalize=False)
    with pytest.raises(ValueError):
        DenseState.from_vector(np.ones(3))
