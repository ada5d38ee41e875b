import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import label_matrix, operator_dense, product_vector, step_unitary, expval
from lpd.hamiltonian import Hamiltonian, build_qmfi, trotter_schedule
from lpd.hybrid import hybrid_run
from lpd.oracle import DenseState, haar_sample
from lpd.pauli import PauliOperator, PauliString
from lpd.propagation import lpd_run
from lpd.states import (
    MpsState,
    ProductState,
    load_mps,
    mps_entanglement_entropy,
    mps_expectation,
    product_expectation,
    save_mps,
    suggest_bond_dimension,
    tebd_evolve,
)

P = PauliString.from_text
BELL = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)


def test_product_expectation_examples():
    assert product_expectation(ProductState.from_pattern("0000"), P("ZIII")) == 1.0
    assert product_expectation(ProductState.from_pattern("0101"), P("ZZII")) == -1.0
    assert product_expectation(ProductState.from_pattern("+-rl"), P("IIII")) == 1.0
    assert product_expectation(ProductState.from_pattern("+-rl"), P("XXYY")) == pytest.approx(1.0)
    assert product_expectation(ProductState.from_pattern("+-rl"), P("XIYI")) == pytest.approx(1.0)
    assert product_expectation(ProductState.from_pattern("+-rl"), P("IXII")) == pytest.approx(-1.0)


@settings(max_examples=60)
@given(st.text("01+-rl", min_size=3, max_size=3),
       st.dictionaries(st.text("IXYZ", min_size=3, max_size=3), st.floats(-1, 1), max_size=8))
def test_product_expectation_matches_dense(pattern, terms):
    state = ProductState.from_pattern(pattern)
    op = PauliOperator(3, terms)
    psi = state.to_dense().amplitudes
    assert product_expectation(state, op) == pytest.approx(expval(operator_dense(op), psi), abs=1e-12)


def test_product_state_validation():
    with pytest.raises(ValueError):
        ProductState.from_pattern("01q")
    assert ProductState.neel(4).qubit_vectors is not None
    np.testing.assert_allclose(ProductState.from_pattern("01+").to_dense().amplitudes, product_vector("01+"), atol=1e-15)


def test_tebd_t_zero_unchanged():
    start = ProductState.from_pattern("0110")
    out = tebd_evolve(start, build_qmfi(4), 0.0, 1)
    np.testing.assert_allclose(out.to_dense().amplitudes, start.to_dense().amplitudes, atol=1e-14)


@pytest.mark.parametrize("periodic", [False, True])
def test_tebd_full_bond_matches_dense_circuit(periodic):
    n, t, r = 8, 1.0, 20
    h = build_qmfi(n, periodic=periodic)
    out = tebd_evolve(ProductState.neel(n), h, t, r, 2, chi=16)
    psi = product_vector("01" * 4)
    u = step_unitary(trotter_schedule(h, 2, t, r))
    for _ in range(r):
        psi = u @ psi
    fidelity = abs(np.vdot(psi, out.to_dense().amplitudes)) ** 2
    assert fidelity >= 1 - 1e-8
    assert out.max_bond <= 16


def test_tebd_truncation_is_logged():
    out = tebd_evolve(ProductState.neel(8), build_qmfi(8), 2.0, 10, 2, chi=2)
    assert out.max_bond <= 2
    assert len(out.truncation_log) == 10 and sum(out.truncation_log) > 0


def test_tebd_rejects_long_range_terms():
    h = Hamiltonian(4, [(1.0, P("XIXI"))])
    with pytest.raises(ValueError):
        tebd_evolve(ProductState.neel(4), h, 1.0, 2)


def test_bell_pair_mps():
    mps = MpsState.from_dense(DenseState.from_vector(BELL))
    assert mps_expectation(mps, PauliOperator(2, {"ZZ": 1.0})) == pytest.approx(1.0)
    assert mps_expectation(mps, PauliOperator(2, {"XX": 1.0})) == pytest.approx(1.0)
    assert mps_expectation(mps, PauliOperator(2, {"ZI": 1.0})) == pytest.approx(0.0, abs=1e-14)
    assert mps_entanglement_entropy(mps, (0, 1)) == pytest.approx(1.0)
    assert mps_entanglement_entropy(mps, [1]) == pytest.approx(1.0)


def test_product_mps_has_zero_entropy_everywhere():
    mps = ProductState.from_pattern("0+1-r").to_mps()
    for a in range(5):
        for b in range(a + 1, 6):
            assert mps_entanglement_entropy(mps, (a, b)) == pytest.approx(0.0, abs=1e-12)


def test_entropy_rejects_gaps():
    mps = ProductState.neel(4).to_mps()
    with pytest.raises(ValueError):
        mps_entanglement_entropy(mps, [0, 2])
    with pytest.raises(ValueError):
        mps_entanglement_entropy(mps, (2, 2))


def test_bond_entropy_equals_schmidt_formula():
    mps = tebd_evolve(ProductState.neel(6), build_qmfi(6), 1.0, 10, 2, chi=4)
    for bond in range(5):
        lam2 = mps.bond_singular_values(bond) ** 2
        lam2 = lam2[lam2 > 1e-15]
        expected = -np.sum(lam2 * np.log2(lam2))
        assert mps_entanglement_entropy(mps, (0, bond + 1)) == pytest.approx(expected, abs=1e-12)
        assert expected <= math.log2(4) + 1e-12


def test_interior_region_entropy_matches_dense():
    from lpd.oracle import subsystem_entropy

    state = haar_sample(7, 3)
    mps = MpsState.from_dense(state)
    assert mps_entanglement_entropy(mps, (2, 5)) == pytest.approx(subsystem_entropy(state, [2, 3, 4]).entropy, abs=1e-10)


def test_mps_expectation_matches_dense_for_random_operator():
    rng = np.random.default_rng(4)
    state = haar_sample(6, 9)
    mps = MpsState.from_dense(state)
    labels = ["".join(rng.choice(list("IXYZ"), 6)) for _ in range(40)]
    op = PauliOperator(6, {lab: rng.normal() for lab in labels})
    assert mps_expectation(mps, op) == pytest.approx(expval(operator_dense(op), state.amplitudes), abs=1e-12)


def test_from_dense_truncation_keeps_norm():
    mps = MpsState.from_dense(haar_sample(8, 1), chi=4)
    assert mps.max_bond <= 4
    assert mps.norm() == pytest.approx(1.0)


def test_save_load_round_trip(tmp_path):
    mps = tebd_evolve(ProductState.neel(6), build_qmfi(6), 0.5, 5, 2, chi=8)
    path = tmp_path / "state.npz"
    save_mps(mps, path)
    back = load_mps(path)
    assert back.bond_dimensions == mps.bond_dimensions
    np.testing.assert_allclose(back.to_dense().amplitudes, mps.to_dense().amplitudes, atol=1e-14)


def test_suggest_bond_dimension():
    assert suggest_bond_dimension(5) == 32
    assert suggest_bond_dimension(20) == 1024


# hybrid protocol

def test_hybrid_forward_zero_is_pure_lpd():
    h, n = build_qmfi(6), 6
    obs = PauliOperator(n, {"ZIIIII": 1.0})
    start = ProductState.neel(n)
    res = hybrid_run(h, obs, 1.5, 0.0, 8, 3, 2, 1, 6, start)
    ref = lpd_run(h, obs, 1.5, 6, 2, 3, start)
    assert res.expectation == ref.expectation


def test_hybrid_forward_full_is_pure_mps():
    h, n = build_qmfi(6), 6
    obs = PauliOperator(n, {"ZIIIII": 1.0})
    start = ProductState.neel(n)
    res = hybrid_run(h, obs, 1.5, 1.5, 8, 3, 2, 6, 1, start)
    mps = tebd_evolve(start, h, 1.5, 6, 2, 8)
    assert res.lpd is None
    assert res.expectation == pytest.approx(mps_expectation(mps, obs), abs=1e-14)


def test_hybrid_lossless_split_matches_dense():
    n, t, tf = 6, 1.2, 0.6
    h = build_qmfi(n)
    obs = PauliOperator(n, {"ZIIIII": 1.0})
    res = hybrid_run(h, obs, t, tf, 64, n, 2, 6, 6, ProductState.neel(n))
    psi = product_vector("01" * 3)
    u = step_unitary(trotter_schedule(h, 2, tf, 6))
    for _ in range(12):
        psi = u @ psi
    assert res.expectation == pytest.approx(expval(label_matrix("ZIIIII"), psi), abs=1e-10)
    assert len(res.entropy) == 7 and res.entropy[0] == 0.0
    assert len(res.magic) == 7 and res.magic[0] == 0.0


def test_hybrid_rejects_bad_split():
    with pytest.raises(ValueError):
        hybrid_run(build_qmfi(4), PauliOperator(4, {"ZIII": 1.0}), 1.0, 2.0, 4, 2)


def test_truncated_mps_expectation_matches_its_dense_vector():
    rng = np.random.default_rng(12)
    mps = MpsState.from_dense(haar_sample(9, 4), chi=4)
    labels = set()
    while len(labels) < 30:
        q = rng.choice(9, size=3, replace=False)
        labels.add("".join(str(rng.choice(list("XYZ"))) if k in q else "I" for k in range(9)))
    op = PauliOperator(9, {lab: rng.normal() for lab in labels})
    psi = mps.to_dense().amplitudes
    assert mps_expectation(mps, op) == pytest.approx(expval(operator_dense(op), psi), abs=1e-10)
