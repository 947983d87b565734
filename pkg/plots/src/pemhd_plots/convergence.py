"""Log-log convergence figure: sup-in-time difference norms against the
aspect ratio, with the least-squares fits and a slope-1 guide line."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from pemhd_plots.csvio import read_fit, read_sweep

STYLES = {
    "l2": {"color": "tab:blue", "marker": "o", "label": "L2 sup-diff"},
    "h1": {"color": "tab:red", "marker": "s", "label": "H1 sup-diff"},
}
VALUE_COLUMNS = {"l2": "sup_l2_diff", "h1": "sup_h1_diff"}


def plot_convergence(sweep_csv, fit_csv, out_image) -> dict:
    """Render the convergence figure and return the plotted data.

    The returned dict carries the scatter points, the fitted and guide
    lines, and the exact annotation strings (slope labels rounded to three
    decimals), so callers can verify the figure against fit.csv.
    """
    rows = [r for r in read_sweep(sweep_csv) if r["status"] == "ok"]
    if not rows:
        raise ValueError(f"{sweep_csv}: no ok rows to plot")
    fits = read_fit(fit_csv)
    eps = np.array([r["eps"] for r in rows])

    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    meta = {"n_points": 0, "annotations": [], "lines": {}, "eps": eps}
    span = np.array([eps.min() * 0.8, eps.max() * 1.25])

    for norm in ("l2", "h1"):
        values = np.array([r[VALUE_COLUMNS[norm]] for r in rows])
        style = STYLES[norm]
        ax.loglog(eps, values, linestyle="none", **style)
        meta["n_points"] += len(values)
        if norm in fits:
            slope = fits[norm]["slope"]
            line = np.exp(fits[norm]["intercept"]) * span ** slope
            ax.loglog(span, line, color=style["color"], linewidth=1.0)
            label = f"{norm.upper()} slope = {slope:.3f}"
            meta["annotations"].append(label)
            meta["lines"][norm] = (span, line)
            ax.annotate(label, xy=(eps[len(eps) // 2],
                                   np.exp(fits[norm]["intercept"])
                                   * eps[len(eps) // 2] ** slope),
                        xytext=(4, -12 if norm == "l2" else 6),
                        textcoords="offset points",
                        color=style["color"], fontsize=9)

    # slope-1 guide anchored at the largest-ratio L2 point
    anchor_y = rows[0]["sup_l2_diff"]
    guide = anchor_y * span / rows[0]["eps"]
    ax.loglog(span, guide, color="gray", linestyle="--", linewidth=1.0,
              label="slope-1 guide")
    meta["lines"]["guide"] = (span, guide)

    ax.set_xlabel("aspect ratio")
    ax.set_ylabel("sup-in-time difference norm")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_image, dpi=150)
    plt.close(fig)
    meta["out"] = str(out_image)
    return meta
