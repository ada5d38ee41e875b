"""scikit-learn style front ends.

``fit`` takes the observable and evolves it; ``predict`` evaluates the
evolved observable on one or more input states.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .hybrid import hybrid_run
from .propagation import DUST_TOL, expectation, lpd_run
from .states import ProductState
from .validation import (
    check_hamiltonian,
    check_observable,
    check_positive_int,
    check_states,
    check_time,
    check_w_star,
)

__all__ = ["LowWeightPauliDynamics", "HybridSimulator"]


class LowWeightPauliDynamics(BaseEstimator):
    """Backward evolution of an observable with per-step weight truncation.

    Parameters
    ----------
    hamiltonian : Hamiltonian
    t : float
        Total evolution time.
    n_steps : int
        Number of product-formula steps ``r``.
    order : int
        Product-formula order, 1 or even.
    w_star : int or None
        Truncation weight; ``None`` keeps every term.
    dust_tol : float or None
        Relative threshold for dropping numerically negligible terms.

    Attributes
    ----------
    evolved_observable_ : PauliOperator
    result_ : PropagationResult
    n_qubits_ : int
    """

    def __init__(self, hamiltonian=None, t=1.0, n_steps=10, order=2, w_star=None, dust_tol=DUST_TOL):
        self.hamiltonian = hamiltonian
        self.t = t
        self.n_steps = n_steps
        self.order = order
        self.w_star = w_star
        self.dust_tol = dust_tol

    def fit(self, X, y=None):
        """Evolve the observable ``X`` (operator, Pauli string or label)."""
        h = check_hamiltonian(self.hamiltonian)
        obs = check_observable(X, h.n_qubits)
        t = check_time(self.t)
        r = check_positive_int(self.n_steps, "n_steps")
        w = check_w_star(self.w_star, obs)
        self.result_ = lpd_run(h, obs, t, r, self.order, w, dust_tol=self.dust_tol)
        self.evolved_observable_ = self.result_.final_operator
        self.n_qubits_ = h.n_qubits
        return self

    def predict(self, X):
        """Expectation of the evolved observable for each state in ``X``."""
        check_is_fitted(self, "evolved_observable_")
        states = check_states(X, self.n_qubits_)
        return np.array([expectation(self.evolved_observable_, s) for s in states])

    def truncation_bound(self) -> float:
        """Triangle-inequality bound ``2 sum_d`` of discarded norms."""
        check_is_fitted(self, "result_")
        return self.result_.truncation_bound()


class HybridSimulator(BaseEstimator):
    """Forward MPS evolution to ``t_forward`` joined with backward truncated evolution.

    ``fit`` stores the observable; ``predict`` runs the hybrid protocol for
    each product input state and keeps the per-state results in
    ``results_``.
    """

    def __init__(self, hamiltonian=None, t=1.0, t_forward=0.5, chi=32, w_star=5, order=2,
                 r_forward=10, r_backward=10, entropy_region=(0, 2)):
        self.hamiltonian = hamiltonian
        self.t = t
        self.t_forward = t_forward
        self.chi = chi
        self.w_star = w_star
        self.order = order
        self.r_forward = r_forward
        self.r_backward = r_backward
        self.entropy_region = entropy_region

    def fit(self, X, y=None):
        h = check_hamiltonian(self.hamiltonian)
        self.observable_ = check_observable(X, h.n_qubits)
        check_w_star(self.w_star, self.observable_)
        t = check_time(self.t)
        tf = check_time(self.t_forward, "t_forward")
        if tf > t:
            raise ValueError(f"t_forward={tf} exceeds t={t}")
        check_positive_int(self.chi, "chi")
        self.n_qubits_ = h.n_qubits
        return self

    def predict(self, X):
        check_is_fitted(self, "observable_")
        states = check_states(X, self.n_qubits_)
        self.results_ = []
        for s in states:
            if not isinstance(s, ProductState):
                raise TypeError("hybrid runs start from product states")
            self.results_.append(hybrid_run(
                self.hamiltonian, self.observable_, self.t, self.t_forward, self.chi, self.w_star,
                self.order, self.r_forward, self.r_backward, s, entropy_region=self.entropy_region))
        return np.array([res.expectation for res in self.results_])
