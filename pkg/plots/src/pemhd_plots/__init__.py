"""Publication-style figures from pemhd CSV artifacts.

This package only reads the solver's CSV file formats (sweep.csv, fit.csv,
per-run diagnostics) and writes image files; it never imports the solver.
"""

from pemhd_plots.convergence import plot_convergence
from pemhd_plots.energy import plot_energy

__version__ = "0.1.0"

__all__ = ["plot_convergence", "plot_energy", "__version__"]
