"""Time integration of the hydrostatic limit system (PEM): prognostic
horizontal velocity and magnetic field, z-independent surface pressure,
vertical components rebuilt each step from incompressibility.

The magnetic pair has no pressure and no projection; the barotropic
magnetic constraint is preserved by the dynamics and is monitored, not
enforced (an optional re-projection rides on re_symmetrize_every).
"""

from __future__ import annotations

import numpy as np

from pemhd import fields as fd
from pemhd import grid as sg
from pemhd.fields import EVEN, ScalarField, State, state_from_spec
from pemhd.grid import GridSpec
from pemhd.smhd import ImexStepper, SolverConfig, _nonlinear_rhs, _resolved


def pem_tendency(state: State):
    """Explicit advective/Lorentz tendencies for the prognostic horizontal
    pairs, with the diagnostic vertical components entering the advecting
    fields.  Diffusion and pressure are handled elsewhere."""
    F = _nonlinear_rhs(state.grid, state.spec_stack())
    g = state.grid
    mk = lambda c: ScalarField.from_spec(g, c, parity=EVEN)
    return (mk(F[0]), mk(F[1])), (mk(F[3]), mk(F[4]))


def _project_barotropic_spec(grid: GridSpec, c1, c2):
    """Subtract the z-independent horizontal gradient that makes the
    vertical average divergence-free; returns the surface multiplier."""
    t = sg._tables(grid)
    ikx = t["ik"]["x"][:, :, 0]
    iky = t["ik"]["y"][:, :, 0]
    rbar = c1[:, :, 0] * ikx + c2[:, :, 0] * iky
    denom = (-(ikx**2) - iky**2).real
    safe = np.where(denom == 0.0, 1.0, denom)
    p2d = -rbar / safe
    p2d[denom == 0.0] = 0.0
    c1 = c1.copy()
    c2 = c2.copy()
    c1[:, :, 0] -= ikx * p2d
    c2[:, :, 0] -= iky * p2d
    return c1, c2, p2d


def project_pem(uH_star):
    """Barotropic projection: p solves Lap_H p = div_H (z-average of uH*);
    the same 2D gradient is subtracted at every z.  The surface pressure is
    returned as a z-independent field with zero mean."""
    f1, f2 = uH_star
    g = f1.grid
    c1, c2, p2d = _project_barotropic_spec(g, f1.spec(), f2.spec())
    p = np.zeros(g.shape, dtype=np.complex128)
    p[:, :, 0] = p2d
    return (
        (ScalarField.from_spec(g, c1, parity=f1.parity),
         ScalarField.from_spec(g, c2, parity=f2.parity)),
        ScalarField.from_spec(g, p, parity=EVEN),
    )


class PemStepper(ImexStepper):
    """IMEX stepper for the limit system: same integrator family and
    per-mode implicit full Laplacian as the SMHD stepper, barotropic
    projection for the velocity pair, diagnostic verticals rebuilt from
    scratch every step."""

    PROG = (0, 1, 3, 4)

    def _diffusion_eigenvalues(self):
        return sg._tables(self.grid)["k2"]

    def _project(self, spec6):
        c1, c2, p2d = _project_barotropic_spec(self.grid, spec6[0], spec6[1])
        spec6[0], spec6[1] = c1, c2
        p = np.zeros(self.grid.shape, dtype=np.complex128)
        p[:, :, 0] = p2d / self.dt
        return spec6, p

    def _finalize(self, spec6, p, t):
        u3 = fd._reconstruct_vertical_spec(self.grid, spec6[0], spec6[1])
        b3 = fd._reconstruct_vertical_spec(self.grid, spec6[3], spec6[4])
        return state_from_spec(self.grid, spec6[0], spec6[1], u3,
                               spec6[3], spec6[4], b3, p,
                               t=t, eps=0.0, system="PEM")


def step_pem(state: State, config: SolverConfig) -> State:
    """Advance one PEM step (see step_smhd for multi-step semantics)."""
    return PemStepper(state.grid, _resolved(config, state), 0.0).step(state)
