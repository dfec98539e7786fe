"""Steady-state photon statistics of a photonic molecule with a quantum dot."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .hilbert import HilbertSpace, Operator, make_space  # noqa: E402
from .model import Superoperator, SystemParams, hamiltonian, liouvillian  # noqa: E402
from .solver import DensityMatrix, ObservableReport, converged_g2, g2_zero, observables, steady_state  # noqa: E402

__all__ = [
    "HilbertSpace",
    "Operator",
    "make_space",
    "Superoperator",
    "SystemParams",
    "hamiltonian",
    "liouvillian",
    "DensityMatrix",
    "ObservableReport",
    "converged_g2",
    "g2_zero",
    "observables",
    "steady_state",
]
