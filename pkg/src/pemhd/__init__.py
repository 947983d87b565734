"""Pseudo-spectral solvers for thin-domain anisotropic MHD, its fixed-domain
rescaling (SMHD), and the hydrostatic magnetic limit system (PEM), plus a
harness that measures the limit's convergence rate in the aspect ratio."""

from pemhd.grid import GridSpec, make_grid
from pemhd.fields import ScalarField, State, random_admissible_state
from pemhd.smhd import SolverConfig, BlowUpError, run

__version__ = "0.1.0"

__all__ = [
    "GridSpec",
    "make_grid",
    "ScalarField",
    "State",
    "random_admissible_state",
    "SolverConfig",
    "BlowUpError",
    "run",
    "__version__",
]
