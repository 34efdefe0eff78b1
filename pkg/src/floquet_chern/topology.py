"""Phase classification: lattice Chern numbers, gap scans, analytic regions.

Chern numbers are computed with the gauge-invariant lattice field strength
(overlap link variables, plaquette phases); the plaquette sum is an exact
integer multiple of 2*pi on any grid where the target band(s) stay separated
from the rest. Orientation matches the model's Berry-curvature convention:
the occupied pair at (m1, m2, g) = (-1, -1, 0.5) has total Chern number -2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .constants import (
    BAND_DEGENERACY_TOL,
    CHERN_INTEGER_TOL,
    DEFAULT_BOUNDARY_TOL,
    DEFAULT_GRID_N,
)
from .model import BZPoint, ModelParams, bloch_stack


class DegenerateBandError(RuntimeError):
    """A per-band Chern number was requested for a band touching its neighbor."""


class GaplessError(RuntimeError):
    """The occupied pair is not separated from the conduction bands."""


@dataclass(frozen=True)
class BZGrid:
    """Uniform periodic n x n momentum grid, k_i = 2*pi*i/n - pi."""

    n: int = DEFAULT_GRID_N

    def __post_init__(self):
        if self.n < 8:
            raise ValueError("grid must have at least 8 points per axis")

    @property
    def axis(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n) / self.n - np.pi

    def meshes(self) -> tuple[np.ndarray, np.ndarray]:
        kx, ky = np.meshgrid(self.axis, self.axis, indexing="ij")
        return kx, ky


@dataclass(frozen=True)
class CurvatureField:
    """Berry flux per plaquette (rad) for one band, on the grid that produced it."""

    band: int
    values: np.ndarray

    def total_flux(self) -> float:
        return float(self.values.sum())


@dataclass(frozen=True)
class GapReport:
    """Minimum direct gap E3 - E2 over the grid and all near-touchings found."""

    direct_gap: float
    argmin_k: BZPoint
    band_touchings: list

    # band_touchings: list of ((band, band+1), BZPoint) with local gap < tolerance


class Region(enum.Enum):
    R0 = "R0\\(R1+R2)"
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"
    L_P = "R_L,p"
    L_RP = "R_L,rp"
    L_RG = "R_L,rg"
    R_RP = "R_R,rp"
    R_RG = "R_R,rg"
    R_G = "R_R,g"
    BOUNDARY = "Boundary"


REGION_CHERN = {
    Region.R0: 0,
    Region.R1: -2,
    Region.R2: +2,
    Region.R3: 0,
    Region.L_P: 0,
    Region.L_RP: -1,
    Region.L_RG: +1,
    Region.R_RP: -1,
    Region.R_RG: +1,
    Region.R_G: 0,
    Region.BOUNDARY: None,
}


@dataclass(frozen=True)
class PhaseLabel:
    region: Region
    chern: int | None

    @property
    def is_boundary(self) -> bool:
        return self.region is Region.BOUNDARY


def _eig_grid(p: ModelParams, grid: BZGrid):
    kx, ky = grid.meshes()
    return np.linalg.eigh(bloch_stack(p, kx, ky))


def _plaquette_flux(u: np.ndarray) -> np.ndarray:
    """Berry flux per plaquette from (n, n, 4, nb) eigenvector array.

    For nb == 1 the links are plain overlaps; for nb > 1 the non-Abelian links
    are determinants of the nb x nb overlap matrices (gauge- and
    basis-rotation-invariant within the subspace).
    """
    u1 = np.roll(u, -1, axis=0)
    u2 = np.roll(u, -1, axis=1)
    if u.shape[-1] == 1:
        l1 = np.einsum("ijab,ijab->ij", u.conj(), u1)
        l2 = np.einsum("ijab,ijab->ij", u.conj(), u2)
    else:
        l1 = np.linalg.det(np.einsum("ijab,ijac->ijbc", u.conj(), u1))
        l2 = np.linalg.det(np.einsum("ijab,ijac->ijbc", u.conj(), u2))
    # loop orientation fixed by the curvature convention (see module docstring)
    loop = l1 * np.roll(l2, -1, axis=0) * np.roll(l1, -1, axis=1).conj() * l2.conj()
    return -np.angle(loop)


def _as_exact_chern(flux_sum: float) -> int:
    c = flux_sum / (2 * np.pi)
    rounded = int(np.rint(c))
    if abs(c - rounded) > CHERN_INTEGER_TOL:
        raise RuntimeError(f"plaquette sum {c} is not integer; grid too coarse or gap closed")
    return rounded


def curvature_field(p: ModelParams, grid: BZGrid, band: int) -> CurvatureField:
    """Berry flux per plaquette for one band (1-based, ascending energies)."""
    if band not in (1, 2, 3, 4):
        raise ValueError("band index must be in 1..4")
    w, v = _eig_grid(p, grid)
    b = band - 1
    for nb in (b - 1, b + 1):
        if 0 <= nb <= 3:
            gap = np.abs(w[..., b] - w[..., nb])
            i, j = np.unravel_index(np.argmin(gap), gap.shape)
            if gap[i, j] < BAND_DEGENERACY_TOL:
                raise DegenerateBandError(
                    f"bands {min(b, nb) + 1} and {max(b, nb) + 1} touch near "
                    f"k = ({grid.axis[i]:.4f}, {grid.axis[j]:.4f})")
    return CurvatureField(band=band, values=_plaquette_flux(v[..., b:b + 1]))


def chern_band(p: ModelParams, grid: BZGrid, band: int) -> int:
    """Chern number of one isolated band (exact integer)."""
    return _as_exact_chern(curvature_field(p, grid, band).total_flux())


def chern_occupied(p: ModelParams, grid: BZGrid) -> int:
    """Total Chern number C1 + C2 of the occupied pair (exact integer).

    Internal 1<->2 touchings are allowed; only the direct gap to band 3 must
    stay open over the whole grid.
    """
    w, v = _eig_grid(p, grid)
    direct = w[..., 2] - w[..., 1]
    if direct.min() < BAND_DEGENERACY_TOL:
        i, j = np.unravel_index(np.argmin(direct), direct.shape)
        raise GaplessError(
            f"occupied pair touches band 3 near k = ({grid.axis[i]:.4f}, {grid.axis[j]:.4f})")
    return _as_exact_chern(_plaquette_flux(v[..., :2]).sum())


def gap_scan(p: ModelParams, grid: BZGrid | None = None,
             touch_tol: float = 1e-2) -> GapReport:
    """Minimum direct gap E3 - E2 over the grid, plus all near-touchings."""
    grid = grid or BZGrid()
    w, _ = _eig_grid(p, grid)
    direct = w[..., 2] - w[..., 1]
    i, j = np.unravel_index(np.argmin(direct), direct.shape)
    touchings = []
    for b in range(3):
        local = w[..., b + 1] - w[..., b]
        mask = local < touch_tol
        for ii, jj in zip(*np.nonzero(mask)):
            touchings.append(((b + 1, b + 2), BZPoint(grid.axis[ii], grid.axis[jj])))
    return GapReport(direct_gap=float(direct[i, j]),
                     argmin_k=BZPoint(grid.axis[i], grid.axis[j]),
                     band_touchings=touchings)


def phase_boundary_distance(p: ModelParams) -> tuple[float, float, float]:
    """Signed cone functions (f_red, f_green, f_purple); zero on a boundary."""
    f_red = p.m1 * p.m2 - p.g ** 2
    f_green = (p.m1 - 2) * (p.m2 - 2) - p.g ** 2
    f_purple = (p.m1 + 2) * (p.m2 + 2) - p.g ** 2
    return (f_red, f_green, f_purple)


def classify_phase(p: ModelParams, boundary_tol: float = DEFAULT_BOUNDARY_TOL,
                   grid: BZGrid | None = None) -> PhaseLabel:
    """Analytic region classifier for the (m1, m2, g) phase diagram.

    The equal-mass plane is labeled Boundary only where a gap scan confirms
    the bands actually touch (the semimetallic segment of that plane).
    """
    m1, m2 = p.m1, p.m2
    f_red, f_green, f_purple = phase_boundary_distance(p)

    on_cone = (abs(f_red) < boundary_tol or abs(f_green) < boundary_tol
               or abs(f_purple) < boundary_tol)
    if on_cone:
        return PhaseLabel(Region.BOUNDARY, None)
    if abs(m1 - m2) < boundary_tol:
        if gap_scan(p, grid).direct_gap < boundary_tol:
            return PhaseLabel(Region.BOUNDARY, None)

    red_neg = m1 < 0 and m2 < 0 and f_red > 0
    red_pos = m1 > 0 and m2 > 0 and f_red > 0
    green_left = m1 < 2 and m2 < 2 and f_green > 0
    green_right = m1 > 2 and m2 > 2 and f_green > 0
    purple_right = m1 > -2 and m2 > -2 and f_purple > 0
    purple_left = m1 < -2 and m2 < -2 and f_purple > 0
    r0 = purple_right and green_left

    if green_right:
        region = Region.R_G
    elif purple_left:
        region = Region.L_P
    elif r0 and red_neg:
        region = Region.R1
    elif r0 and red_pos:
        region = Region.R2
    elif r0:
        region = Region.R0
    elif red_neg:
        region = Region.L_RP
    elif red_pos and not green_right:
        region = Region.R_RG
    elif green_left and not purple_right:
        region = Region.L_RG
    elif purple_right and not red_pos and not green_left:
        region = Region.R_RP
    else:
        region = Region.R3
    return PhaseLabel(region, REGION_CHERN[region])
