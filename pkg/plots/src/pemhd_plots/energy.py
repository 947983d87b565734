"""Energy and dissipation time series with the running budget residual
E(t) + 2 int_0^t D ds - E(0)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from pemhd_plots.csvio import read_diagnostics


def plot_energy(diagnostics_csv, out_image) -> dict:
    """Render E, D and the budget residual over time; returns the series."""
    cols = read_diagnostics(diagnostics_csv)
    t = np.array(cols["t"])
    e = np.array(cols["E"])
    d = np.array(cols["D"])
    if len(t) > 1:
        integral = np.concatenate(
            [[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(t))])
    else:
        integral = np.zeros(1)
    residual = e + 2.0 * integral - e[0]

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(5.0, 5.0), sharex=True)
    ax1.plot(t, e, color="tab:blue", label="energy")
    ax1.plot(t, d, color="tab:orange", label="dissipation")
    ax1.set_ylabel("energy / dissipation")
    ax1.grid(True, alpha=0.3)
    ax1.legend(loc="best", fontsize=8)
    ax2.plot(t, residual, color="tab:green", label="budget residual")
    ax2.set_xlabel("t")
    ax2.set_ylabel("E(t) + 2 int D - E(0)")
    ax2.grid(True, alpha=0.3)
    ax2.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_image, dpi=150)
    plt.close(fig)
    return {"t": t, "E": e, "D": d, "residual": residual,
            "out": str(out_image)}
