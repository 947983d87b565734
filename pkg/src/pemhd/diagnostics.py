"""Norms, energy functionals, difference metrics between co-evolved
trajectories, and numerical evaluators for the anisotropic interpolation
inequalities.

All norms are L2 over the box, evaluated by Parseval on coefficient
arrays; H1 norms include the L2 part and use the full three-direction
gradient.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from pemhd import grid as sg
from pemhd.fields import ScalarField, State, parity_violation
from pemhd.grid import GridSpec

CSV_COLUMNS = ("t", "E", "D", "div_u", "div_b", "parity",
               "l2_uH", "l2_bH", "l2_eps_u3", "l2_eps_b3",
               "l2_diff", "h1_diff")


# -- Parseval norms ---------------------------------------------------------

def l2_sq(grid: GridSpec, coeffs: np.ndarray) -> float:
    """Squared L2 norm, integral convention: ||f||^2 = V * sum |c_k|^2."""
    return float(grid.volume * np.sum(np.abs(coeffs) ** 2))


def grad_sq(grid: GridSpec, coeffs: np.ndarray) -> float:
    t = sg._tables(grid)
    return float(grid.volume * np.sum(t["k2"] * np.abs(coeffs) ** 2))


def grad_h_sq(grid: GridSpec, coeffs: np.ndarray) -> float:
    t = sg._tables(grid)
    return float(grid.volume * np.sum(t["kH2"] * np.abs(coeffs) ** 2))


def lap_sq(grid: GridSpec, coeffs: np.ndarray) -> float:
    t = sg._tables(grid)
    return float(grid.volume * np.sum(t["k2"] ** 2 * np.abs(coeffs) ** 2))


def h1_sq(grid: GridSpec, coeffs: np.ndarray) -> float:
    return l2_sq(grid, coeffs) + grad_sq(grid, coeffs)


def phys_l2_sq(field: ScalarField) -> float:
    """Physical-space quadrature norm (dual route to :func:`l2_sq`)."""
    g = field.grid
    dv = g.volume / g.npoints
    return float(np.sum(field.phys() ** 2) * dv)


# -- state-level monitors ---------------------------------------------------

def energy(state: State, eps: float) -> tuple[float, float]:
    """Weighted energy and gradient dissipation,
    E = ||uH||^2 + ||bH||^2 + eps^2(||u3||^2 + ||b3||^2) and the same
    combination of squared gradients."""
    g = state.grid
    e = d = 0.0
    for f, w in ((state.u1, 1.0), (state.u2, 1.0), (state.u3, eps**2),
                 (state.b1, 1.0), (state.b2, 1.0), (state.b3, eps**2)):
        c = f.spec()
        e += w * l2_sq(g, c)
        d += w * grad_sq(g, c)
    return e, d


def _div_ratio(grid: GridSpec, c1, c2, c3) -> float:
    """Max-norm of the spectral divergence relative to the RMS gradient."""
    t = sg._tables(grid)
    div = c1 * t["ik"]["x"] + c2 * t["ik"]["y"] + c3 * t["ik"]["z"]
    div_max = np.abs(sg.inverse(grid, div)).max()
    gsq = sum(grad_sq(grid, c) for c in (c1, c2, c3))
    rms = np.sqrt(gsq / grid.volume)
    if rms == 0.0:
        return 0.0 if div_max == 0.0 else np.inf
    return float(div_max / rms)


def divergence_u(state: State) -> float:
    return _div_ratio(state.grid, state.u1.spec(), state.u2.spec(),
                      state.u3.spec())


def divergence_b(state: State) -> float:
    return _div_ratio(state.grid, state.b1.spec(), state.b2.spec(),
                      state.b3.spec())


def parity_drift(state: State) -> float:
    """Largest relative opposite-parity content over the tagged fields."""
    worst = 0.0
    for f in state.fields().values():
        if f.parity is not None:
            worst = max(worst, parity_violation(state.grid, f.spec(), f.parity))
    return worst


def state_row(state: State, eps: float) -> dict:
    g = state.grid
    e, d = energy(state, eps)
    return {
        "t": state.t,
        "E": e,
        "D": d,
        "div_u": divergence_u(state),
        "div_b": divergence_b(state),
        "parity": parity_drift(state),
        "l2_uH": np.sqrt(l2_sq(g, state.u1.spec()) + l2_sq(g, state.u2.spec())),
        "l2_bH": np.sqrt(l2_sq(g, state.b1.spec()) + l2_sq(g, state.b2.spec())),
        "l2_eps_u3": eps * np.sqrt(l2_sq(g, state.u3.spec())),
        "l2_eps_b3": eps * np.sqrt(l2_sq(g, state.b3.spec())),
    }


class DiagnosticsRecord:
    """Time series of monitor rows; validates monotone time and finiteness."""

    def __init__(self):
        self.rows: list[dict] = []

    def append(self, row: dict) -> None:
        if self.rows and not (row["t"] > self.rows[-1]["t"]):
            raise ValueError("diagnostics times must be strictly increasing")
        for key, val in row.items():
            if key != "t" and not np.isfinite(val):
                raise ValueError(f"non-finite diagnostics entry {key}={val}")
        self.rows.append(dict(row))

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows if name in r])

    def columns_present(self) -> list[str]:
        """Schema columns carried by this record (missing ones may only be
        dropped from the tail of the schema)."""
        present = set().union(*(r.keys() for r in self.rows)) if self.rows else set()
        return [c for c in CSV_COLUMNS if c in present]

    def write_csv(self, path) -> None:
        cols = self.columns_present() or list(CSV_COLUMNS[:10])
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for row in self.rows:
                writer.writerow([repr(float(row[c])) for c in cols])

    @classmethod
    def read_csv(cls, path) -> "DiagnosticsRecord":
        rec = cls()
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            unknown = [c for c in header if c not in CSV_COLUMNS]
            if unknown or header != list(CSV_COLUMNS[: len(header)]):
                raise ValueError(f"malformed diagnostics header: {header}")
            for line in reader:
                rec.append({c: float(v) for c, v in zip(header, line)})
        return rec


# -- difference metrics -----------------------------------------------------

@dataclass(frozen=True)
class DifferenceMetrics:
    """Weighted norms of the gap between a finite-aspect-ratio state and a
    limit-system state at one common time."""

    t: float
    l2_diff: float
    h1_diff: float
    grad_diss: float


def difference_metrics(s_eps: State, s_lim: State) -> DifferenceMetrics:
    """Componentwise subtraction, then
    l2 = (||Uh||^2 + eps^2 ||U3||^2 + ||Bh||^2 + eps^2 ||B3||^2)^(1/2),
    the H1 analogue, and the gradient-dissipation combination.  The limit
    state carries eps = 0, so the weight comes from the finite-ratio state
    and the metric is symmetric in its arguments."""
    from pemhd.fields import difference_state
    diff = difference_state(s_eps, s_lim)
    g = diff.grid
    w2 = diff.eps**2
    l2 = h1 = diss = 0.0
    for name, f in diff.fields().items():
        w = w2 if name in ("U3", "B3") else 1.0
        a = l2_sq(g, f.spec())
        b = grad_sq(g, f.spec())
        l2 += w * a
        h1 += w * (a + b)
        diss += w * b
    return DifferenceMetrics(t=diff.t, l2_diff=float(np.sqrt(l2)),
                             h1_diff=float(np.sqrt(h1)), grad_diss=diss)


# -- anisotropic interpolation inequality evaluators ------------------------

def _z_integral(field: ScalarField) -> np.ndarray:
    g = field.grid
    return field.phys().sum(axis=2) * (g.Lz / g.Nz)


def _ratio(lhs: float, rhs: float) -> float:
    if rhs == 0.0:
        if abs(lhs) <= 1e-12:
            return 0.0
        raise ArithmeticError(
            f"inequality falsified numerically: rhs = 0 but lhs = {lhs:.3e}"
        )
    return lhs / rhs


def lemma21_ratio(alpha: ScalarField, beta: ScalarField,
                  gamma: ScalarField):
    """Evaluate both sides of the anisotropic estimate

        int_M (int a dz)(int b c dz) dxdy
          <= C ||a||^(1/2) (||a||^(1/2) + ||grad_H a||^(1/2)) ||b||
               ||c||^(1/2) (||c||^(1/2) + ||grad_H c||^(1/2))

    and return (lhs, rhs-without-C, ratio).  The empirical constant over an
    ensemble is the max ratio; no specific C is asserted."""
    g = alpha.grid
    if beta.grid != g or gamma.grid != g:
        raise ValueError("lemma21_ratio: fields live on different grids")
    da = (g.L1 / g.Nx) * (g.L2 / g.Ny)
    lhs = float(np.sum(_z_integral(alpha)
                       * (beta.phys() * gamma.phys()).sum(axis=2)
                       * (g.Lz / g.Nz)) * da)

    def l2(f):
        return np.sqrt(l2_sq(g, f.spec()))

    def gh(f):
        return np.sqrt(grad_h_sq(g, f.spec()))

    rhs = (np.sqrt(l2(alpha)) * (np.sqrt(l2(alpha)) + np.sqrt(gh(alpha)))
           * l2(beta)
           * np.sqrt(l2(gamma)) * (np.sqrt(l2(gamma)) + np.sqrt(gh(gamma))))
    return lhs, float(rhs), _ratio(lhs, float(rhs))


def lemma22_ratio(phi: tuple[ScalarField, ScalarField, ScalarField],
                  phi_scalar: ScalarField, psi: ScalarField,
                  hypothesis_tol: float = 1e-8):
    """Evaluate |int (phi . grad q) psi| against
    ||grad phi_H||^(1/2) ||Lap phi_H||^(1/2) ||grad q||^(1/2)
    ||Lap q||^(1/2) ||psi|| for a divergence-free, mean-zero vector field
    phi whose vertical component vanishes at z = 0."""
    p1, p2, p3 = phi
    g = p1.grid
    t = sg._tables(g)
    c1, c2, c3 = p1.spec(), p2.spec(), p3.spec()

    scale = max(np.sqrt(sum(grad_sq(g, c) for c in (c1, c2, c3))), 1e-300)
    div = c1 * t["ik"]["x"] + c2 * t["ik"]["y"] + c3 * t["ik"]["z"]
    if np.sqrt(l2_sq(g, div)) > hypothesis_tol * scale:
        raise ValueError("lemma22_ratio: phi is not divergence-free")
    mean = np.sqrt(sum(abs(c[0, 0, 0]) ** 2 for c in (c1, c2, c3)))
    if mean > hypothesis_tol * max(np.sqrt(sum(l2_sq(g, c) for c in (c1, c2, c3))), 1e-300):
        raise ValueError("lemma22_ratio: phi is not mean-zero")
    z0 = np.abs(p3.z0_plane()).max()
    if z0 > hypothesis_tol * max(np.abs(p3.phys()).max(), 1e-300):
        raise ValueError("lemma22_ratio: phi_3 does not vanish at z = 0")

    cq = phi_scalar.spec()
    gq = [sg.inverse(g, cq * t["ik"][a]) for a in ("x", "y", "z")]
    dv = g.volume / g.npoints
    lhs = abs(float(np.sum((p1.phys() * gq[0] + p2.phys() * gq[1]
                            + p3.phys() * gq[2]) * psi.phys()) * dv))

    grad_h = np.sqrt(grad_sq(g, c1) + grad_sq(g, c2))
    lap_h = np.sqrt(lap_sq(g, c1) + lap_sq(g, c2))
    rhs = (np.sqrt(grad_h) * np.sqrt(lap_h)
           * np.sqrt(np.sqrt(grad_sq(g, cq))) * np.sqrt(np.sqrt(lap_sq(g, cq)))
           * np.sqrt(l2_sq(g, psi.spec())))
    return lhs, float(rhs), _ratio(lhs, float(rhs))
