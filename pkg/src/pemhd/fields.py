"""Field and state containers, z-parity classes, admissible initial data,
and the diagnostic reconstruction of vertical components.

Horizontal velocity/magnetic components are even in z, vertical components
odd; pressure is kept even with zero mean (an odd z-independent pressure
would vanish identically in the hydrostatic limit, and every other term of
the horizontal momentum balance is even).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from pemhd import grid as sg
from pemhd.grid import GridSpec

EVEN = "even"
ODD = "odd"

SYSTEMS = ("MHD_THIN", "SMHD", "PEM")


class BarotropicConstraintError(ValueError):
    """The z-mean of the horizontal divergence does not vanish, so the
    vertical antiderivative would not be periodic."""


def parity_flip_phys(values: np.ndarray) -> np.ndarray:
    """Reflect z -> -z on physical samples (pure index reversal on the
    cell-centered grid)."""
    return np.flip(values, 2)


def parity_flip_spec(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    """Reflect z -> -z on coefficients: mode flip kz -> -kz with the
    cell-centering phase twist."""
    flipped = np.roll(np.flip(coeffs, 2), 1, 2)
    return flipped * sg._tables(grid)["zflip_phase"]


def parity_project(grid: GridSpec, coeffs: np.ndarray,
                   parity: str) -> np.ndarray:
    flipped = parity_flip_spec(grid, coeffs)
    if parity == EVEN:
        return 0.5 * (coeffs + flipped)
    if parity == ODD:
        return 0.5 * (coeffs - flipped)
    raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")


def parity_violation(grid: GridSpec, coeffs: np.ndarray,
                     parity: str) -> float:
    """Relative L2 magnitude of the opposite-parity content."""
    wrong = parity_project(grid, coeffs, ODD if parity == EVEN else EVEN)
    norm = np.linalg.norm(coeffs)
    if norm == 0.0:
        return 0.0
    return float(np.linalg.norm(wrong) / norm)


class ScalarField:
    """One periodic scalar with lazily synchronized physical and spectral
    representations plus an optional declared z-parity."""

    __slots__ = ("grid", "parity", "_spec", "_phys")

    def __init__(self, grid: GridSpec, *, spec=None, phys=None, parity=None):
        if spec is None and phys is None:
            raise ValueError("need spectral or physical data")
        if parity not in (None, EVEN, ODD):
            raise ValueError(f"bad parity tag {parity!r}")
        self.grid = grid
        self.parity = parity
        self._spec = None if spec is None else np.asarray(spec, dtype=np.complex128)
        self._phys = None if phys is None else np.asarray(phys, dtype=np.float64)
        for a in (self._spec, self._phys):
            if a is not None and a.shape != grid.shape:
                raise ValueError(f"data shape {a.shape} != grid shape {grid.shape}")

    @classmethod
    def from_spec(cls, grid, coeffs, parity=None) -> "ScalarField":
        return cls(grid, spec=coeffs, parity=parity)

    @classmethod
    def from_phys(cls, grid, values, parity=None) -> "ScalarField":
        return cls(grid, phys=values, parity=parity)

    @classmethod
    def zeros(cls, grid, parity=None) -> "ScalarField":
        return cls(grid, spec=np.zeros(grid.shape, dtype=np.complex128),
                   parity=parity)

    def spec(self) -> np.ndarray:
        if self._spec is None:
            self._spec = sg.forward(self.grid, self._phys)
        return self._spec

    def phys(self) -> np.ndarray:
        if self._phys is None:
            self._phys = sg.inverse(self.grid, self._spec)
        return self._phys

    def copy(self) -> "ScalarField":
        return ScalarField(
            self.grid,
            spec=None if self._spec is None else self._spec.copy(),
            phys=None if self._phys is None else self._phys.copy(),
            parity=self.parity,
        )

    def parity_violation(self) -> float:
        if self.parity is None:
            return 0.0
        return parity_violation(self.grid, self.spec(), self.parity)

    def z0_plane(self) -> np.ndarray:
        """Values of the trigonometric interpolant on the z = 0 plane
        (z = 0 is not a collocation point on the cell-centered grid)."""
        g = self.grid
        c2d = np.sum(self.spec() * sg._tables(g)["z0_phase"], axis=2)
        return np.real(np.fft.ifft2(c2d)) * (g.Nx * g.Ny)


def enforce_parity(field: ScalarField, parity: str) -> ScalarField:
    """Project a field onto its even or odd part: (f(z) +/- f(-z)) / 2."""
    return ScalarField.from_spec(
        field.grid, parity_project(field.grid, field.spec(), parity),
        parity=parity,
    )


@dataclass
class State:
    """Full solution record at one time.

    Horizontal pairs (u1, u2) and (b1, b2) are even in z, vertical
    components odd, all divergence-free and mean-zero over the box.
    """

    grid: GridSpec
    u1: ScalarField
    u2: ScalarField
    u3: ScalarField
    b1: ScalarField
    b2: ScalarField
    b3: ScalarField
    p: ScalarField
    t: float
    eps: float
    system: str

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ValueError(f"unknown system tag {self.system!r}")

    @property
    def uH(self) -> tuple[ScalarField, ScalarField]:
        return (self.u1, self.u2)

    @property
    def bH(self) -> tuple[ScalarField, ScalarField]:
        return (self.b1, self.b2)

    def fields(self) -> dict[str, ScalarField]:
        return {
            "u1": self.u1, "u2": self.u2, "u3": self.u3,
            "b1": self.b1, "b2": self.b2, "b3": self.b3, "p": self.p,
        }

    def copy(self) -> "State":
        return State(self.grid,
                     *(self.fields()[k].copy()
                       for k in ("u1", "u2", "u3", "b1", "b2", "b3", "p")),
                     t=self.t, eps=self.eps, system=self.system)

    def retag(self, system: str, eps: float) -> "State":
        out = self.copy()
        out.system = system
        out.eps = eps
        return out

    def spec_stack(self) -> np.ndarray:
        """(6, Nx, Ny, Nz) coefficient stack (u1, u2, u3, b1, b2, b3)."""
        return np.stack([f.spec() for f in
                         (self.u1, self.u2, self.u3, self.b1, self.b2, self.b3)])


def state_from_spec(grid, cu1, cu2, cu3, cb1, cb2, cb3, cp=None, *,
                    t=0.0, eps=0.0, system="SMHD") -> State:
    if cp is None:
        cp = np.zeros(grid.shape, dtype=np.complex128)
    return State(
        grid,
        ScalarField.from_spec(grid, cu1, parity=EVEN),
        ScalarField.from_spec(grid, cu2, parity=EVEN),
        ScalarField.from_spec(grid, cu3, parity=ODD),
        ScalarField.from_spec(grid, cb1, parity=EVEN),
        ScalarField.from_spec(grid, cb2, parity=EVEN),
        ScalarField.from_spec(grid, cb3, parity=ODD),
        ScalarField.from_spec(grid, cp, parity=EVEN),
        t=t, eps=eps, system=system,
    )


def zero_state(grid, *, eps=0.0, system="SMHD") -> State:
    z = np.zeros(grid.shape, dtype=np.complex128)
    return state_from_spec(grid, z, z, z, z, z, z, z.copy(),
                           eps=eps, system=system)


@dataclass
class DifferenceState:
    """Gap between a finite-aspect-ratio state and a limit state at one
    time, built by componentwise subtraction (the difference system is
    never time-stepped directly).  Parities and the divergence-free
    structure carry over from the constituents."""

    grid: GridSpec
    U1: ScalarField
    U2: ScalarField
    U3: ScalarField
    B1: ScalarField
    B2: ScalarField
    B3: ScalarField
    t: float
    eps: float

    def fields(self) -> dict[str, ScalarField]:
        return {"U1": self.U1, "U2": self.U2, "U3": self.U3,
                "B1": self.B1, "B2": self.B2, "B3": self.B3}


def difference_state(s_eps: State, s_lim: State) -> DifferenceState:
    if s_eps.grid != s_lim.grid:
        raise ValueError("difference_state: grids differ")
    if abs(s_eps.t - s_lim.t) > 1e-12 * max(1.0, abs(s_eps.t)):
        raise ValueError(
            f"difference_state: times differ ({s_eps.t} vs {s_lim.t})"
        )
    g = s_eps.grid

    def sub(a: ScalarField, b: ScalarField) -> ScalarField:
        return ScalarField.from_spec(g, a.spec() - b.spec(), parity=a.parity)

    return DifferenceState(
        g,
        sub(s_eps.u1, s_lim.u1), sub(s_eps.u2, s_lim.u2),
        sub(s_eps.u3, s_lim.u3),
        sub(s_eps.b1, s_lim.b1), sub(s_eps.b2, s_lim.b2),
        sub(s_eps.b3, s_lim.b3),
        t=s_eps.t, eps=max(s_eps.eps, s_lim.eps),
    )


def _reconstruct_vertical_spec(grid: GridSpec, c1: np.ndarray,
                               c2: np.ndarray) -> np.ndarray:
    """Odd antiderivative of -(d_x f1 + d_y f2), vanishing at z = 0."""
    div_h = sg.derivative(grid, c1, "x") + sg.derivative(grid, c2, "y")
    zmean = div_h[:, :, 0]
    # relative to the horizontal-derivative scale of the inputs, so a field
    # whose divergence vanishes identically (to roundoff) is accepted
    kmax = max(np.abs(grid.wavenumbers("x")).max(),
               np.abs(grid.wavenumbers("y")).max())
    scale = max(np.abs(div_h).max(),
                kmax * max(np.abs(c1).max(), np.abs(c2).max()), 1e-300)
    if np.abs(zmean).max() > 1e-10 * scale:
        raise BarotropicConstraintError(
            "z-mean of the horizontal divergence is nonzero "
            f"(max {np.abs(zmean).max():.3e}); the vertical integral "
            "would not be periodic"
        )
    return -div_h * sg._tables(grid)["inv_ikz"]


def reconstruct_vertical(fH: tuple[ScalarField, ScalarField],
                         grid: GridSpec | None = None) -> ScalarField:
    """Vertical component determined by incompressibility:
    f3(x, y, z) = -int_0^z div_H fH(x, y, s) ds, odd in z."""
    f1, f2 = fH
    grid = grid or f1.grid
    c3 = _reconstruct_vertical_spec(grid, f1.spec(), f2.spec())
    return ScalarField.from_spec(grid, c3, parity=ODD)


def _random_even_pair(grid: GridSpec, rng, decay: float):
    """Two even, mean-zero, dealiased scalar coefficient arrays with
    |k|^(-decay) spectral damping."""
    t = sg._tables(grid)
    kmag = np.sqrt(t["k2"])
    damp = np.zeros(grid.shape)
    nz = kmag > 0
    damp[nz] = kmag[nz] ** (-decay)
    out = []
    for _ in range(2):
        white = rng.standard_normal(grid.shape)
        c = sg.forward(grid, white) * damp
        c = parity_project(grid, c, EVEN)
        c *= t["dealias"]
        c[0, 0, 0] = 0.0
        out.append(c)
    return out


def _project_barotropic(grid: GridSpec, c1: np.ndarray, c2: np.ndarray):
    """Make the z-mean of (f1, f2) divergence-free in the horizontal."""
    t = sg._tables(grid)
    kx = t["kx"][:, :, 0]
    ky = t["ky"][:, :, 0]
    kH2 = t["kH2"][:, :, 0].copy()
    kH2[0, 0] = 1.0
    div = kx * c1[:, :, 0] + ky * c2[:, :, 0]
    c1 = c1.copy()
    c2 = c2.copy()
    c1[:, :, 0] -= kx * div / kH2
    c2[:, :, 0] -= ky * div / kH2
    return c1, c2


def random_admissible_state(grid: GridSpec, seed: int, decay: float,
                            amplitude: float, *, eps: float = 0.0,
                            system: str = "PEM") -> State:
    """Seeded initial data satisfying every admissibility constraint.

    Horizontal pairs are even in z, mean-zero, spectrally damped as
    |k|^(-decay), and barotropically divergence-free; vertical components
    are built by :func:`reconstruct_vertical`, which makes the full 3D
    divergence vanish by construction.  The pointwise magnitude of each
    horizontal pair is normalized to ``amplitude``.
    """
    if decay < 2:
        raise ValueError(f"decay must be >= 2 for smooth data, got {decay}")
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in ("u", "b"):
        c1, c2 = _random_even_pair(grid, rng, decay)
        c1, c2 = _project_barotropic(grid, c1, c2)
        f1 = sg.inverse(grid, c1)
        f2 = sg.inverse(grid, c2)
        mag = np.sqrt(f1**2 + f2**2).max()
        scale = 0.0 if mag == 0.0 else amplitude / mag
        pairs.append((c1 * scale, c2 * scale))
    (cu1, cu2), (cb1, cb2) = pairs
    cu3 = _reconstruct_vertical_spec(grid, cu1, cu2)
    cb3 = _reconstruct_vertical_spec(grid, cb1, cb2)
    return state_from_spec(grid, cu1, cu2, cu3, cb1, cb2, cb3,
                           eps=eps, system=system)


def _compatible_for_scaling(thin: GridSpec, fixed: GridSpec) -> bool:
    return (thin.Nx, thin.Ny, thin.Nz) == (fixed.Nx, fixed.Ny, fixed.Nz) and \
        thin.L1 == fixed.L1 and thin.L2 == fixed.L2 and \
        thin.dealias_fraction == fixed.dealias_fraction


def scale_up(state: State, eps: float) -> State:
    """Fixed-domain state -> thin-domain state under z -> eps*z.

    Horizontal components and pressure are relabeled onto the thin grid
    (exact on matching collocation indices); vertical components pick up a
    factor eps.
    """
    if not (eps > 0.0):
        raise ValueError(f"eps must be positive, got {eps!r}")
    g = state.grid
    if abs(g.Lz - 2.0) > 1e-12:
        raise ValueError(f"expected the fixed domain (Lz = 2), got Lz = {g.Lz}")
    thin = replace(g, Lz=2.0 * eps)
    return state_from_spec(
        thin,
        state.u1.spec().copy(), state.u2.spec().copy(),
        eps * state.u3.spec(),
        state.b1.spec().copy(), state.b2.spec().copy(),
        eps * state.b3.spec(),
        state.p.spec().copy(),
        t=state.t, eps=eps, system="MHD_THIN",
    )


def scale_down(state: State) -> State:
    """Thin-domain state -> fixed-domain state (inverse of scale_up)."""
    g = state.grid
    eps = state.eps
    if not (eps > 0.0):
        raise ValueError("thin state must carry eps > 0")
    if abs(g.Lz - 2.0 * eps) > 1e-12 * max(1.0, 2.0 * eps):
        raise ValueError(
            f"grid Lz = {g.Lz} does not match the thin domain 2*eps = {2 * eps}"
        )
    fixed = replace(g, Lz=2.0)
    return state_from_spec(
        fixed,
        state.u1.spec().copy(), state.u2.spec().copy(),
        state.u3.spec() / eps,
        state.b1.spec().copy(), state.b2.spec().copy(),
        state.b3.spec() / eps,
        state.p.spec().copy(),
        t=state.t, eps=eps, system="SMHD",
    )
