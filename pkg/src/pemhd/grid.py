"""Periodic-box geometry and the spectral kernel.

All fields live on a triply periodic collocation grid with x in [0, L1),
y in [0, L2) and z in [-Lz/2, Lz/2).  Coefficients are stored as full
complex FFT arrays indexed (kx, ky, kz); the forward transform divides by
the point count so the zero mode equals the domain mean.  Wavenumbers for
mode index m on an axis of period L are 2*pi*m/L with m in
{-N/2+1, ..., N/2}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class GridSpec:
    """Validated periodic-grid geometry (use :func:`make_grid`)."""

    L1: float
    L2: float
    Lz: float
    Nx: int
    Ny: int
    Nz: int
    dealias_fraction: float = 2.0 / 3.0

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.Nx, self.Ny, self.Nz)

    @property
    def lengths(self) -> tuple[float, float, float]:
        return (self.L1, self.L2, self.Lz)

    @property
    def npoints(self) -> int:
        return self.Nx * self.Ny * self.Nz

    @property
    def volume(self) -> float:
        return self.L1 * self.L2 * self.Lz

    @property
    def spacings(self) -> tuple[float, float, float]:
        return (self.L1 / self.Nx, self.L2 / self.Ny, self.Lz / self.Nz)

    def modes(self, axis: str) -> np.ndarray:
        """Integer mode numbers along an axis, Nyquist counted positive."""
        n = self.shape[AXES[axis]]
        m = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
        m[n // 2] = n // 2
        return m

    def wavenumbers(self, axis: str) -> np.ndarray:
        length = self.lengths[AXES[axis]]
        return 2.0 * np.pi * self.modes(axis) / length

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Physical collocation coordinates, broadcast to grid shape.

        The z samples are cell-centered, so the grid is symmetric under
        z -> -z without containing z = 0 or the domain edge; reflection is
        a pure index reversal along the z axis.
        """
        x = np.arange(self.Nx) * (self.L1 / self.Nx)
        y = np.arange(self.Ny) * (self.L2 / self.Ny)
        z = -0.5 * self.Lz + (np.arange(self.Nz) + 0.5) * (self.Lz / self.Nz)
        return np.meshgrid(x, y, z, indexing="ij")

    @property
    def z_origin(self) -> float:
        """Coordinate of the first z sample."""
        return -0.5 * self.Lz + 0.5 * self.Lz / self.Nz


def make_grid(L1, L2, Lz, Nx, Ny, Nz, dealias_fraction=2.0 / 3.0) -> GridSpec:
    """Validate and build a :class:`GridSpec`."""
    for name, n in (("Nx", Nx), ("Ny", Ny), ("Nz", Nz)):
        if int(n) != n or n < 4:
            raise ValueError(f"{name} must be an integer >= 4, got {n!r}")
        if n % 2 != 0:
            raise ValueError(f"{name} must be even, got {n}")
    for name, length in (("L1", L1), ("L2", L2), ("Lz", Lz)):
        if not (length > 0.0):
            raise ValueError(f"{name} must be positive, got {length!r}")
    if not (0.0 < dealias_fraction <= 1.0):
        raise ValueError(
            f"dealias_fraction must lie in (0, 1], got {dealias_fraction!r}"
        )
    return GridSpec(float(L1), float(L2), float(Lz), int(Nx), int(Ny), int(Nz),
                    float(dealias_fraction))


@lru_cache(maxsize=32)
def _tables(grid: GridSpec) -> dict:
    """Broadcast wavenumber/mask tables for a grid, built once."""
    kx = grid.wavenumbers("x")[:, None, None]
    ky = grid.wavenumbers("y")[None, :, None]
    kz = grid.wavenumbers("z")[None, None, :]

    # Odd-order z antiderivative: divide by i*kz away from kz = 0; the
    # kz = 0 and Nyquist slots stay zero (same convention as derivative).
    mz = grid.modes("z")
    inv_ikz = np.zeros(grid.Nz, dtype=np.complex128)
    interior = (mz != 0) & (np.abs(mz) != grid.Nz // 2)
    inv_ikz[interior] = 1.0 / (1j * 2.0 * np.pi * mz[interior] / grid.Lz)

    ik = {}
    for axis in ("x", "y", "z"):
        k1 = 1j * grid.wavenumbers(axis)
        n = grid.shape[AXES[axis]]
        k1[n // 2] = 0.0  # Nyquist has no well-defined sign
        shape = [1, 1, 1]
        shape[AXES[axis]] = n
        ik[axis] = k1.reshape(shape)

    keep = np.ones(grid.shape, dtype=bool)
    for axis in ("x", "y", "z"):
        n = grid.shape[AXES[axis]]
        cutoff = grid.dealias_fraction * (n // 2) + 1e-9
        mask1 = np.abs(grid.modes(axis)) <= cutoff
        shape = [1, 1, 1]
        shape[AXES[axis]] = n
        keep &= mask1.reshape(shape)

    # z -> -z on the cell-centered grid is index reversal j -> Nz-1-j; in
    # coefficient space that is the mode flip m -> -m times this phase.
    zflip_phase = np.exp(2j * np.pi * np.arange(grid.Nz) / grid.Nz)
    # interpolant evaluation at z = 0 (not a collocation point)
    z0_phase = np.exp(-1j * grid.wavenumbers("z") * grid.z_origin)

    return {
        "kx": kx,
        "ky": ky,
        "kz": kz,
        "k2": kx**2 + ky**2 + kz**2,
        "kH2": kx**2 + ky**2,
        "ik": ik,
        "inv_ikz": inv_ikz[None, None, :],
        "dealias": keep,
        "zflip_phase": zflip_phase[None, None, :],
        "z0_phase": z0_phase[None, None, :],
    }


def _check_shape(grid: GridSpec, values: np.ndarray) -> None:
    if values.shape != grid.shape:
        raise ValueError(f"field shape {values.shape} != grid shape {grid.shape}")


def forward(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """Physical values -> spectral coefficients (zero mode = mean)."""
    _check_shape(grid, values)
    return np.fft.fftn(values) / grid.npoints


def inverse(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    """Spectral coefficients -> physical values (real part is returned)."""
    _check_shape(grid, coeffs)
    return np.real(np.fft.ifftn(coeffs)) * grid.npoints


def forward_many(grid: GridSpec, stack: np.ndarray) -> np.ndarray:
    """Batched :func:`forward` over the leading axis."""
    return np.fft.fftn(stack, axes=(-3, -2, -1)) / grid.npoints


def inverse_many(grid: GridSpec, stack: np.ndarray) -> np.ndarray:
    """Batched :func:`inverse` over the leading axis."""
    return np.real(np.fft.ifftn(stack, axes=(-3, -2, -1))) * grid.npoints


def derivative(grid: GridSpec, coeffs: np.ndarray, axis: str) -> np.ndarray:
    """Spectral partial derivative; the axis Nyquist mode is zeroed."""
    _check_shape(grid, coeffs)
    return coeffs * _tables(grid)["ik"][axis]


def dealias(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    """Zero modes with |m| > dealias_fraction * (N/2) on any axis."""
    _check_shape(grid, coeffs)
    return coeffs * _tables(grid)["dealias"]


def dealias_mask(grid: GridSpec) -> np.ndarray:
    return _tables(grid)["dealias"]


def _require_zero_mean(rhs: np.ndarray, what: str) -> None:
    scale = np.abs(rhs).max()
    if np.abs(rhs[0, 0, 0]) > 1e-12 * max(scale, 1e-300):
        raise ValueError(
            f"{what}: rhs has nonzero mean ({rhs[0, 0, 0]:.3e}); "
            "the Poisson problem is incompatible"
        )


def solve_aniso_poisson(grid: GridSpec, rhs: np.ndarray, eps: float) -> np.ndarray:
    """Solve (Lap_H + eps^-2 d_zz) p = rhs for mean-zero spectral rhs.

    Mode k gets p(k) = -rhs(k) / (|k_H|^2 + eps^-2 kz^2); the zero mode is
    pinned to 0.
    """
    _check_shape(grid, rhs)
    if not (eps > 0.0):
        raise ValueError(f"eps must be positive, got {eps!r}")
    _require_zero_mean(rhs, "solve_aniso_poisson")
    t = _tables(grid)
    denom = t["kH2"] + t["kz"] ** 2 / eps**2
    denom[0, 0, 0] = 1.0  # avoid 0/0; the slot is pinned below
    p = -rhs / denom
    p[0, 0, 0] = 0.0
    return p


def solve_horizontal_poisson(grid: GridSpec, rhs2d: np.ndarray) -> np.ndarray:
    """Solve Lap_H p = rhs on the horizontal (kx, ky) coefficient plane."""
    if rhs2d.shape != (grid.Nx, grid.Ny):
        raise ValueError(
            f"rhs shape {rhs2d.shape} != horizontal shape {(grid.Nx, grid.Ny)}"
        )
    scale = np.abs(rhs2d).max()
    if np.abs(rhs2d[0, 0]) > 1e-12 * max(scale, 1e-300):
        raise ValueError(
            f"solve_horizontal_poisson: rhs has nonzero mean ({rhs2d[0, 0]:.3e})"
        )
    t = _tables(grid)
    denom = t["kH2"][:, :, 0].copy()
    denom[0, 0] = 1.0
    p = -rhs2d / denom
    p[0, 0] = 0.0
    return p


def hermitian_violation(grid: GridSpec, coeffs: np.ndarray) -> float:
    """Relative departure of coefficients from conjugate symmetry."""
    _check_shape(grid, coeffs)
    mirrored = coeffs
    for axis in range(3):
        mirrored = np.roll(np.flip(mirrored, axis), 1, axis)
    norm = np.linalg.norm(coeffs)
    if norm == 0.0:
        return 0.0
    return float(np.linalg.norm(coeffs - np.conj(mirrored)) / norm)
