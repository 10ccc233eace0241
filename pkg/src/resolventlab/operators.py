"""Tridiagonal mode operators for the radial problem.

Separating variables on a warped end reduces -h^2 Lap + V - E +- i eps to a
family of one-dimensional operators indexed by the angular eigenvalue
lambda_j:

    -h^2 u'' + (h^2 lambda_j f(r)^-2 + h^2 q0(r) + V(r) - E +- i eps) u

with Dirichlet conditions at both grid ends.  The module assembles these with
second-order centered differences, picks grids by a points-per-wavelength
rule, and builds the spatial cutoff weight chi_s used for resolvent norms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import ManifoldProfile, warp_log_f, _q0
from .phaseweight import CarlemanParams, derive_scales

__all__ = [
    "ModeOperator",
    "apply_mode_operator",
    "build_mode_operator",
    "chi_s_weight",
    "make_radial_grid",
]

COARSE_GRID_PPW = 8.0


@dataclass(frozen=True)
class ModeOperator:
    """Discrete tridiagonal model of one angular mode.

    ``grid`` includes both Dirichlet endpoints; ``diag`` and ``offdiag`` act
    on the interior nodes ``grid[1:-1]``.  A single off-diagonal array is
    stored because the stencil is symmetric before the i*eps shift, whose
    sign is recorded in ``sign``.
    """

    grid: np.ndarray
    diag: np.ndarray
    offdiag: np.ndarray
    h: float
    E: float
    epsilon_shift: float
    sign: int
    mode_eigenvalue: float
    weight: np.ndarray
    dr: float
    coarse_grid: bool

    def __post_init__(self) -> None:
        n = len(self.grid) - 2
        if n < 2:
            raise ValueError("grid must have at least 4 points")
        if len(self.diag) != n or len(self.offdiag) != n - 1:
            raise ValueError("diag/offdiag sizes do not match the interior grid")
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")
        im = np.unique(self.diag.imag)
        if len(im) != 1 or im[0] != self.sign * self.epsilon_shift:
            raise ValueError("imaginary part of diag must be exactly sign * eps")

    @property
    def n_interior(self) -> int:
        return len(self.diag)

    @property
    def interior(self) -> np.ndarray:
        return self.grid[1:-1]


def chi_s_weight(r, r0: float, s: float) -> np.ndarray:
    """Cutoff weight: 1 up to r0 + 1, then ((r0+1)/r)^s beyond it."""
    r = np.asarray(r, dtype=float)
    return np.minimum(1.0, ((r0 + 1.0) / r) ** s)


def make_radial_grid(
    r1: float,
    r_max: float,
    h: float,
    E: float,
    v_max: float = 0.0,
    points_per_wavelength: float = 16.0,
    n_min: int = 64,
) -> np.ndarray:
    """Uniform grid resolving the shortest local wavelength 2 pi h / sqrt(E + v_max)."""
    if not r_max > r1:
        raise ValueError("need r_max > r1")
    wavelength = 2.0 * math.pi * h / math.sqrt(E + v_max)
    n = int(math.ceil((r_max - r1) / wavelength * points_per_wavelength)) + 1
    return np.linspace(r1, r_max, max(n, n_min))


def build_mode_operator(
    profile: ManifoldProfile,
    potential,
    params: CarlemanParams,
    mode_index: int,
    grid: np.ndarray,
    sign: int = 1,
) -> ModeOperator:
    """Assemble the centered-difference operator for one angular mode.

    Emits a warning (and sets ``coarse_grid``) when the grid carries fewer
    than ``COARSE_GRID_PPW`` points per local wavelength, measured against
    the worst case sqrt(E + max|V|).
    """
    grid = np.asarray(grid, dtype=float)
    steps = np.diff(grid)
    dr = float(steps[0])
    if np.ptp(steps) > 1e-9 * dr:
        raise ValueError("grid must be uniform")
    warp, n_dim = profile.warp, profile.n
    h, E, eps = params.h, params.E, params.epsilon_shift
    lam_j = profile.mode_eigenvalue(mode_index)

    r_int = grid[1:-1]
    inv_f2 = np.exp(-2.0 * warp_log_f(warp, r_int))
    v_int = np.asarray(potential(r_int), dtype=float)
    h2 = h * h
    c = h2 * lam_j * inv_f2 + h2 * _q0(warp, n_dim, r_int) + v_int - E

    diag = (2.0 * h2 / dr**2 + c) + 1j * (sign * eps)
    offdiag = np.full(len(r_int) - 1, -h2 / dr**2, dtype=complex)

    v_max = float(np.max(np.abs(np.asarray(potential(grid), dtype=float))))
    wavelength = 2.0 * math.pi * h / math.sqrt(E + v_max)
    coarse = wavelength / dr < COARSE_GRID_PPW
    if coarse:
        warnings.warn(
            f"grid has {wavelength / dr:.1f} points per wavelength "
            f"(< {COARSE_GRID_PPW:g}); refine before trusting norms",
            stacklevel=2,
        )

    scales = derive_scales(params, warp, potential)
    weight = chi_s_weight(r_int, profile.r0, scales.s)

    return ModeOperator(
        grid=grid,
        diag=diag,
        offdiag=offdiag,
        h=h,
        E=E,
        epsilon_shift=eps,
        sign=int(sign),
        mode_eigenvalue=float(lam_j),
        weight=weight,
        dr=dr,
        coarse_grid=coarse,
    )


def apply_mode_operator(op: ModeOperator, u: np.ndarray) -> np.ndarray:
    """Tridiagonal matrix-vector product on an interior-node vector."""
    u = np.asarray(u)
    out = op.diag * u
    out[:-1] += op.offdiag * u[1:]
    out[1:] += op.offdiag * u[:-1]
    return out
