import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from lpd.estimator import HybridSimulator, LowWeightPauliDynamics
from lpd.hamiltonian import build_qmfi
from lpd.oracle import haar_sample
from lpd.pauli import PauliOperator, PauliString
from lpd.propagation import lpd_run
from lpd.states import ProductState
from lpd.validation import check_observable, check_positive_int, check_state, check_states, check_time, check_w_star


def test_params_round_trip():
    est = LowWeightPauliDynamics(build_qmfi(4), t=2.0, n_steps=5, w_star=2)
    params = est.get_params()
    assert params["t"] == 2.0 and params["w_star"] == 2
    est.set_params(order=1)
    assert clone(est).order == 1


def test_fit_predict_matches_lpd_run():
    h = build_qmfi(5)
    est = LowWeightPauliDynamics(h, t=1.0, n_steps=4, w_star=3).fit("ZIIII")
    ref = lpd_run(h, PauliOperator(5, {"ZIIII": 1.0}), 1.0, 4, 2, 3, ProductState.neel(5))
    out = est.predict(["01010", ProductState.from_pattern("00000")])
    assert out.shape == (2,)
    assert out[0] == pytest.approx(ref.expectation, abs=1e-14)
    assert est.truncation_bound() == pytest.approx(ref.truncation_bound())
    assert est.predict(haar_sample(5, 1)).shape == (1,)


def test_predict_before_fit():
    with pytest.raises(NotFittedError):
        LowWeightPauliDynamics(build_qmfi(3)).predict("000")


def test_fit_validation_errors():
    h = build_qmfi(4)
    with pytest.raises(ValueError):
        LowWeightPauliDynamics(h, t=-1.0).fit("ZIII")
    with pytest.raises(TypeError):
        LowWeightPauliDynamics(h, n_steps=2.5).fit("ZIII")
    with pytest.raises(ValueError):
        LowWeightPauliDynamics(h, w_star=1).fit("ZZII")
    with pytest.raises(TypeError):
        LowWeightPauliDynamics("qmfi").fit("ZIII")
    with pytest.raises(ValueError):
        LowWeightPauliDynamics(h).fit("ZII")


def test_hybrid_estimator():
    h = build_qmfi(4)
    sim = HybridSimulator(h, t=1.0, t_forward=0.5, chi=8, w_star=4, r_forward=4, r_backward=4).fit("ZIII")
    vals = sim.predict(["0101", "0000"])
    assert vals.shape == (2,) and len(sim.results_) == 2
    full = LowWeightPauliDynamics(h, t=1.0, n_steps=8).fit("ZIII").predict("0101")
    assert vals[0] == pytest.approx(full[0], abs=1e-10)
    with pytest.raises(ValueError):
        HybridSimulator(h, t=1.0, t_forward=2.0).fit("ZIII")
    with pytest.raises(TypeError):
        sim.predict(haar_sample(4, 0))


def test_validation_helpers():
    assert check_positive_int(np.int64(3), "r") == 3
    with pytest.raises(TypeError):
        check_positive_int(True, "r")
    with pytest.raises(ValueError):
        check_time(float("nan"))
    op = check_observable({"ZI": 1.0, "XX": 0.5})
    assert op.n_qubits == 2 and len(op) == 2
    assert check_observable(PauliString.single(3, 1, "X")).max_weight == 1
    assert len(check_observable("0.5 ZII\n0.5 IZI", 3)) == 2
    with pytest.raises(ValueError):
        check_observable(PauliOperator.zero(2))
    with pytest.raises(TypeError):
        check_observable(3.0)
    assert check_w_star(None, op) == 2
    assert check_w_star(7, op) == 2
    assert isinstance(check_state("01", 2), ProductState)
    with pytest.raises(ValueError):
        check_state("010", 2)
    with pytest.raises(TypeError):
        check_state(1.0, 2)
    rows = np.eye(4, dtype=complex)[:2]
    assert len(check_states(rows, 2)) == 2
