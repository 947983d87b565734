"""Time integration of the rescaled fixed-domain system (SMHD) and of the
unscaled anisotropic system on the thin domain (MHD_THIN).

IMEX splitting: advective/Lorentz terms explicit (Euler or second-order
Adams-Bashforth), diffusion implicit (backward Euler or Crank-Nicolson,
exact per mode), incompressibility enforced by a spectral projection after
the implicit solve.  On the fixed domain the effective pressure gradient is
(grad_H p, eps^-2 d_z p), so the projection solves the anisotropically
weighted Poisson problem; on the thin domain it is the standard Leray
projection with thin-domain vertical wavenumbers.  The two discrete systems
are conjugate under the z -> eps*z relabeling.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from pemhd import fields as fd
from pemhd import grid as sg
from pemhd.fields import EVEN, ODD, ScalarField, State, state_from_spec
from pemhd.grid import GridSpec

INTEGRATORS = ("IMEX_EULER", "IMEX_CNAB2")


class BlowUpError(RuntimeError):
    """Raised when a run produces non-finite or runaway fields."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (t = {t:.6g})")
        self.t = t


@dataclass
class SolverConfig:
    """Time-integration parameters shared by all three systems.

    ``dt = None`` selects the advective CFL estimate
    ``cfl * min_i(dx_i / max|u_i|)`` from the initial state.  For SMHD the
    coefficient regime is fixed by the equations; ``viscosities`` applies
    to MHD_THIN only and defaults to (1, eps^2, 1, eps^2).
    """

    dt: float | None = None
    T: float = 1.0
    integrator: str = "IMEX_CNAB2"
    output_every: int = 1
    re_symmetrize_every: int = 0
    viscosities: tuple[float, float, float, float] | None = None
    cfl: float = 0.3
    nonlinear: bool = True
    blowup_threshold: float = 1e8

    def __post_init__(self):
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.dt is not None and not (self.dt > 0.0):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if self.T < 0.0:
            raise ValueError(f"T must be >= 0, got {self.T!r}")
        if self.output_every < 1:
            raise ValueError("output_every must be >= 1")


def default_dt(state: State, cfl: float = 0.3) -> float:
    """Advective CFL estimate from a state's velocity field."""
    dx = state.grid.spacings
    dt = np.inf
    for comp, h in zip((state.u1, state.u2, state.u3), dx):
        vmax = np.abs(comp.phys()).max()
        if vmax > 1e-12:
            dt = min(dt, h / vmax)
    if not np.isfinite(dt):
        dt = min(dx)  # zero flow: fall back to a unit-velocity scale
    return cfl * dt


def _nonlinear_rhs(grid: GridSpec, spec6: np.ndarray) -> np.ndarray:
    """Dealiased advective/Lorentz tendencies for the stacked fields
    (u1, u2, u3, b1, b2, b3): F_u = -(u.grad)u + (b.grad)b and
    F_b = -(u.grad)b + (b.grad)u, componentwise."""
    t = sg._tables(grid)
    phys = sg.inverse_many(grid, spec6)
    grads = np.empty((3,) + phys.shape)
    for a, axis in enumerate(("x", "y", "z")):
        grads[a] = sg.inverse_many(grid, spec6 * t["ik"][axis][None])
    u, b = phys[:3], phys[3:]
    adv_by_u = u[0] * grads[0] + u[1] * grads[1] + u[2] * grads[2]
    adv_by_b = b[0] * grads[0] + b[1] * grads[1] + b[2] * grads[2]
    out = np.empty_like(phys)
    out[:3] = -adv_by_u[:3] + adv_by_b[3:]
    out[3:] = -adv_by_u[3:] + adv_by_b[:3]
    return sg.forward_many(grid, out) * t["dealias"][None]


def smhd_tendency(state: State, eps: float):
    """Explicit SMHD tendencies, pre-projection and pre-diffusion.

    The vertical equations carry eps^2 on every term, so they are used in
    divided form; the advective expressions below are then eps-free.
    """
    F = _nonlinear_rhs(state.grid, state.spec_stack())
    g = state.grid
    mk = lambda c, par: ScalarField.from_spec(g, c, parity=par)
    return (
        (mk(F[0], EVEN), mk(F[1], EVEN)),
        mk(F[2], ODD),
        (mk(F[3], EVEN), mk(F[4], EVEN)),
        mk(F[5], ODD),
    )


def _consistent_denoms(grid: GridSpec, eps: float | None) -> np.ndarray:
    """Divergence-of-gradient multiplier matching the Nyquist-zeroed
    derivative convention; eps = None gives the isotropic (Leray) weight."""
    t = sg._tables(grid)
    parts = []
    for axis in ("x", "y", "z"):
        k2 = (-t["ik"][axis] ** 2).real
        if axis == "z" and eps is not None:
            k2 = k2 / eps**2
        parts.append(k2)
    return parts[0] + parts[1] + parts[2]


def _project_aniso_spec(grid, c1, c2, c3, eps):
    """Remove the anisotropic-gradient part so that the spectral divergence
    vanishes identically; returns the multiplier field as well."""
    t = sg._tables(grid)
    r = c1 * t["ik"]["x"] + c2 * t["ik"]["y"] + c3 * t["ik"]["z"]
    denom = _consistent_denoms(grid, eps)
    safe = np.where(denom == 0.0, 1.0, denom)
    p = -r / safe
    p[denom == 0.0] = 0.0
    return (
        c1 - t["ik"]["x"] * p,
        c2 - t["ik"]["y"] * p,
        c3 - t["ik"]["z"] * p / eps**2,
        p,
    )


def _project_leray_spec(grid, c1, c2, c3):
    t = sg._tables(grid)
    r = c1 * t["ik"]["x"] + c2 * t["ik"]["y"] + c3 * t["ik"]["z"]
    denom = _consistent_denoms(grid, None)
    safe = np.where(denom == 0.0, 1.0, denom)
    p = -r / safe
    p[denom == 0.0] = 0.0
    return (
        c1 - t["ik"]["x"] * p,
        c2 - t["ik"]["y"] * p,
        c3 - t["ik"]["z"] * p,
        p,
    )


def project_smhd(uH_star, u3_star: ScalarField, eps: float):
    """Anisotropic pressure projection: solve
    (Lap_H + eps^-2 d_zz) p = div_H uH* + d_z u3*, then subtract
    (grad_H p, eps^-2 d_z p).  Idempotent; output is divergence-free in
    spectral space."""
    f1, f2 = uH_star
    g = f1.grid
    c1, c2, c3, p = _project_aniso_spec(g, f1.spec(), f2.spec(),
                                        u3_star.spec(), eps)
    return (
        (ScalarField.from_spec(g, c1, parity=f1.parity),
         ScalarField.from_spec(g, c2, parity=f2.parity)),
        ScalarField.from_spec(g, c3, parity=u3_star.parity),
        ScalarField.from_spec(g, p, parity=EVEN),
    )


class ImexStepper:
    """IMEX integrator with per-mode implicit diffusion and post-solve
    projection.  Instances carry the Adams-Bashforth history; the first
    step of IMEX_CNAB2 is an IMEX_EULER startup step."""

    #: indices of prognostic fields within the (u1,u2,u3,b1,b2,b3) stack
    PROG = (0, 1, 2, 3, 4, 5)

    def __init__(self, grid: GridSpec, config: SolverConfig, eps: float):
        if config.dt is None:
            raise ValueError("config.dt must be resolved before stepping")
        self.grid = grid
        self.config = config
        self.eps = eps
        self.dt = float(config.dt)
        self._prev_rhs: np.ndarray | None = None
        self._lam = self._diffusion_eigenvalues()

    # -- system specific hooks -------------------------------------------
    def _diffusion_eigenvalues(self) -> np.ndarray:
        raise NotImplementedError

    def _project(self, spec6: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _finalize(self, spec6, p, t) -> State:
        raise NotImplementedError

    # ---------------------------------------------------------------------
    def _explicit_rhs(self, state: State) -> np.ndarray:
        if not self.config.nonlinear:
            return np.zeros((6,) + self.grid.shape, dtype=np.complex128)
        return _nonlinear_rhs(self.grid, state.spec_stack())

    def step(self, state: State) -> State:
        cfg = self.config
        rhs = self._explicit_rhs(state)
        if cfg.integrator == "IMEX_CNAB2" and self._prev_rhs is not None:
            expl = 1.5 * rhs - 0.5 * self._prev_rhs
            theta = 0.5
        else:
            expl = rhs
            theta = 1.0
        spec6 = state.spec_stack()
        lam = self._lam
        new = spec6.copy()
        new[list(self.PROG)] = (
            spec6[list(self.PROG)] * (1.0 - self.dt * (1.0 - theta) * lam)
            + self.dt * expl[list(self.PROG)]
        ) / (1.0 + self.dt * theta * lam)
        new, p = self._project(new)
        t_new = state.t + self.dt
        self._check_finite(new, t_new)
        self._prev_rhs = rhs
        return self._finalize(new, p, t_new)

    def _check_finite(self, spec6: np.ndarray, t: float) -> None:
        if not np.all(np.isfinite(spec6)):
            raise BlowUpError("non-finite field values", t)
        l2 = np.sqrt(self.grid.volume * np.sum(np.abs(spec6) ** 2))
        if l2 > self.config.blowup_threshold:
            raise BlowUpError(f"L2 norm {l2:.3e} exceeds blow-up threshold", t)


class SmhdStepper(ImexStepper):
    """Fixed-domain rescaled system: full Laplacian diffusion on every
    prognostic field, anisotropic pressure projection."""

    def _diffusion_eigenvalues(self):
        return sg._tables(self.grid)["k2"]

    def _project(self, spec6):
        c1, c2, c3, p = _project_aniso_spec(
            self.grid, spec6[0], spec6[1], spec6[2], self.eps
        )
        spec6[0], spec6[1], spec6[2] = c1, c2, c3
        return spec6, p / self.dt

    def _finalize(self, spec6, p, t):
        return state_from_spec(self.grid, *spec6, p, t=t, eps=self.eps,
                               system="SMHD")


class ThinStepper(ImexStepper):
    """Thin-domain anisotropic system: diffusion mu*Lap_H + nu*d_zz and
    standard Leray projection with thin-domain vertical wavenumbers."""

    def __init__(self, grid, config, eps):
        mu, nu, kappa, sigma = config.viscosities or (1.0, eps**2, 1.0, eps**2)
        self.visc = (mu, nu, kappa, sigma)
        super().__init__(grid, config, eps)

    def _diffusion_eigenvalues(self):
        t = sg._tables(self.grid)
        mu, nu, kappa, sigma = self.visc
        lam_u = mu * t["kH2"] + nu * t["kz"] ** 2
        lam_b = kappa * t["kH2"] + sigma * t["kz"] ** 2
        return np.stack([lam_u, lam_u, lam_u, lam_b, lam_b, lam_b])

    def _project(self, spec6):
        c1, c2, c3, p = _project_leray_spec(self.grid, spec6[0], spec6[1],
                                            spec6[2])
        spec6[0], spec6[1], spec6[2] = c1, c2, c3
        return spec6, p / self.dt

    def _finalize(self, spec6, p, t):
        return state_from_spec(self.grid, *spec6, p, t=t, eps=self.eps,
                               system="MHD_THIN")


def step_smhd(state: State, eps: float, config: SolverConfig) -> State:
    """Advance one SMHD step (multi-step schemes start from an IMEX_EULER
    startup step; use run() or a stepper for trajectories)."""
    return SmhdStepper(state.grid, _resolved(config, state), eps).step(state)


def step_mhd_thin(state: State, config: SolverConfig) -> State:
    """Advance one thin-domain anisotropic MHD step."""
    return ThinStepper(state.grid, _resolved(config, state), state.eps).step(state)


def _resolved(config: SolverConfig, state: State) -> SolverConfig:
    """Fill in a CFL-derived dt when none was given."""
    if config.dt is not None:
        return config
    return replace(config, dt=default_dt(state, config.cfl))


def make_stepper(system: str, grid: GridSpec, config: SolverConfig,
                 eps: float) -> ImexStepper:
    if system == "SMHD":
        return SmhdStepper(grid, config, eps)
    if system == "MHD_THIN":
        return ThinStepper(grid, config, eps)
    if system == "PEM":
        from pemhd.pem import PemStepper
        return PemStepper(grid, config, 0.0)
    raise ValueError(f"unknown system tag {system!r}")


def _resymmetrize(state: State) -> State:
    out = state.copy()
    out.u1 = fd.enforce_parity(out.u1, EVEN)
    out.u2 = fd.enforce_parity(out.u2, EVEN)
    out.u3 = fd.enforce_parity(out.u3, ODD)
    out.b1 = fd.enforce_parity(out.b1, EVEN)
    out.b2 = fd.enforce_parity(out.b2, EVEN)
    out.b3 = fd.enforce_parity(out.b3, ODD)
    out.p = fd.enforce_parity(out.p, EVEN)
    return out


def n_steps(config: SolverConfig, dt: float) -> int:
    return int(np.floor(config.T / dt + 1e-9))


def run(system: str, init: State, eps: float, config: SolverConfig,
        sink=None):
    """Advance a system to T with periodic diagnostics emission.

    Returns (final state, DiagnosticsRecord).  On blow-up the partial
    diagnostics are attached to the raised BlowUpError as ``record``.
    """
    from pemhd.diagnostics import DiagnosticsRecord, state_row

    config = _resolved(config, init)
    dt = config.dt
    stepper = make_stepper(system, init.grid, config, eps)
    record = DiagnosticsRecord()
    record.append(state_row(init, eps))
    if sink is not None:
        sink(init)
    state = init
    total = n_steps(config, dt)
    try:
        for n in range(1, total + 1):
            state = stepper.step(state)
            if (config.re_symmetrize_every
                    and n % config.re_symmetrize_every == 0):
                state = _resymmetrize(state)
            if n % config.output_every == 0 or n == total:
                record.append(state_row(state, eps))
                if sink is not None:
                    sink(state)
    except BlowUpError as err:
        err.record = record
        raise
    return state, record
