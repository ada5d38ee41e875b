"""Low-weight Pauli dynamics.

Heisenberg-picture propagation of sparse Pauli observables through
product-formula circuits, with per-step truncation of high-weight terms,
plus the matching error bounds, product/MPS input states and a dense
state-vector oracle for small systems.
"""

from .bounds import ModelConstants, entanglement_condition_report, truncation_error_bound, truncation_threshold
from .estimator import HybridSimulator, LowWeightPauliDynamics
from .hamiltonian import Hamiltonian, build_qmfi, trotter_schedule
from .hybrid import hybrid_run
from .pauli import PauliOperator, PauliParseError, PauliString, RotationGate
from .propagation import apply_gate, expectation, lpd_run
from .states import MpsState, ProductState, tebd_evolve

__version__ = "0.1.0"

__all__ = [
    "Hamiltonian",
    "HybridSimulator",
    "LowWeightPauliDynamics",
    "ModelConstants",
    "MpsState",
    "PauliOperator",
    "PauliParseError",
    "PauliString",
    "ProductState",
    "RotationGate",
    "apply_gate",
    "build_qmfi",
    "entanglement_condition_report",
    "expectation",
    "hybrid_run",
    "lpd_run",
    "tebd_evolve",
    "trotter_schedule",
    "truncation_error_bound",
    "truncation_threshold",
]
