"""Energy-based excitability thresholds from the required supply of circuit models."""

__version__ = "0.1.0"

from .ansatz import BiexponentialAnsatz, ExponentialAnsatz, RiseHoldAnsatz, TimeGrid, truncation_grid
from .clamp import Tolerances, clamp_simulate, convergence_check, supplied_energy
from .models import CubicRC, FitzHughNagumo, GatingState, HodgkinHuxley, LinearRC
from .threshold import find_local_maximum, inhibitory_sweep, locate_threshold, sweep_landscape, verify_event

__all__ = [
    "BiexponentialAnsatz",
    "CubicRC",
    "ExponentialAnsatz",
    "FitzHughNagumo",
    "GatingState",
    "HodgkinHuxley",
    "LinearRC",
    "RiseHoldAnsatz",
    "TimeGrid",
    "Tolerances",
    "clamp_simulate",
    "convergence_check",
    "find_local_maximum",
    "inhibitory_sweep",
    "locate_threshold",
    "supplied_energy",
    "sweep_landscape",
    "truncation_grid",
    "verify_event",
]
