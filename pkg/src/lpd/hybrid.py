"""Split an evolution between a forward MPS and a backward Pauli-truncated
observable, meeting at ``t_F``."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import Hamiltonian, trotter_schedule
from .pauli import PauliOperator
from .propagation import PropagationResult, lpd_run
from .states import MpsState, ProductState, mps_entanglement_entropy, mps_expectation, tebd_evolve

__all__ = ["HybridResult", "hybrid_run"]


@dataclass
class HybridResult:
    """Outcome of one hybrid run.

    ``entropy`` holds the region entropy after each forward step (first
    entry at ``t = 0``); ``magic`` the operator magic after each backward
    step (first entry for the bare observable).
    """

    expectation: float
    t: float
    t_forward: float
    state: MpsState | ProductState
    lpd: PropagationResult | None
    entropy_times: np.ndarray
    entropy: np.ndarray
    magic_times: np.ndarray
    magic: np.ndarray
    mps_discarded: list[float] = field(default_factory=list)

    @property
    def lpd_discarded(self) -> np.ndarray:
        if self.lpd is None:
            return np.zeros(0)
        return self.lpd.discarded_norms

    def to_json(self) -> str:
        return json.dumps({
            "expectation": self.expectation,
            "t": self.t,
            "t_forward": self.t_forward,
            "entropy_times": self.entropy_times.tolist(),
            "entropy": self.entropy.tolist(),
            "magic_times": self.magic_times.tolist(),
            "magic": self.magic.tolist(),
            "mps_discarded": list(self.mps_discarded),
            "lpd_discarded": self.lpd_discarded.tolist(),
        }, indent=2)


def hybrid_run(h: Hamiltonian, observable: PauliOperator, t: float, t_forward: float, chi: int,
               w_star: int, p: int = 2, r_forward: int = 1, r_backward: int = 1,
               initial: ProductState | None = None, *, entropy_region=(0, 2)) -> HybridResult:
    """Evolve ``initial`` by TEBD to ``t_forward`` and ``observable`` by LPD over the rest.

    With ``t_forward == 0`` the product state is used directly, so the
    result is exactly that of :func:`lpd_run`; with ``t_forward == t`` no
    backward step is taken and the result is the plain MPS expectation.
    """
    if not 0 <= t_forward <= t:
        raise ValueError(f"need 0 <= t_forward <= t, got t_forward={t_forward}, t={t}")
    if initial is None:
        initial = ProductState.neel(h.n_qubits)
    t_back = t - t_forward

    state: MpsState | ProductState = initial
    ent_t, ent = [0.0], [0.0]
    lost: list[float] = []
    if t_forward > 0:
        sched = trotter_schedule(h, p, t_forward, r_forward)

        def track(d, mps):
            ent_t.append(d * sched.dt)
            ent.append(mps_entanglement_entropy(mps, entropy_region))

        state = tebd_evolve(initial, h, t_forward, r_forward, p, chi, callback=track)
        lost = list(state.truncation_log)

    mag_t, mag = [0.0], [observable.magic()]
    lpd = None
    op = observable
    if t_back > 0:
        lpd = lpd_run(h, observable, t_back, r_backward, p, w_star, state,
                      record_expectations=False, record_magic=True)
        op = lpd.final_operator
        mag_t.extend(lpd.times.tolist())
        mag.extend(r.magic if r.magic is not None else np.nan for r in lpd.records)
        mu = lpd.expectation
    elif isinstance(state, MpsState):
        mu = mps_expectation(state, op)
    else:
        from .states import product_expectation
        mu = product_expectation(state, op)
    return HybridResult(float(mu), float(t), float(t_forward), state, lpd,
                        np.array(ent_t), np.array(ent), np.array(mag_t), np.array(mag), lost)
