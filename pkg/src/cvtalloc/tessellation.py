"""1-D Voronoi tessellations, energy functionals, and Lloyd's fixed point.

Generators on an interval [a, b] induce cell boundaries at midpoints of
adjacent generators; Lloyd's algorithm alternates that construction with
per-cell mass centroids until the generators stop moving.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import density as dens
from .density import DensitySpec, Interval
from .errors import (
    CellsDoNotTile,
    DuplicateGenerators,
    EmptyCell,
    GeneratorOutOfDomain,
    UnsortedGenerators,
)

__all__ = [
    "Domain1D",
    "Tessellation",
    "voronoi_regions",
    "energy_F",
    "energy_K",
    "lloyd_step",
    "lloyd",
    "is_cvt",
    "default_init",
]

# Generators closer than this fraction of the domain width collapse the
# midpoint parameterization and are rejected.
DUPLICATE_GAP_FRACTION = 1e-12

# Default Lloyd stopping displacement, as a fraction of the domain width.
LLOYD_TOL_FRACTION = 1e-10
LLOYD_MAX_ITER = 10_000


@dataclass(frozen=True)
class Domain1D:
    """The bounded resource interval Omega = [a, b]."""

    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ValueError("domain endpoints must be finite")
        if not self.a < self.b:
            raise ValueError(f"domain requires a < b, got [{self.a}, {self.b}]")

    @property
    def width(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class Tessellation:
    """Sorted generators, their midpoint cell boundaries, and the energy K."""

    generators: np.ndarray
    boundaries: np.ndarray
    energy: float
    domain: Domain1D
    converged: bool = True
    iterations: int = 0

    def cells(self) -> list[Interval]:
        return [Interval(self.boundaries[i], self.boundaries[i + 1])
                for i in range(len(self.generators))]


def _validate_generators(generators, dom: Domain1D) -> np.ndarray:
    z = np.asarray(generators, dtype=float).ravel()
    if z.size == 0:
        raise ValueError("need at least one generator")
    gaps = np.diff(z)
    if np.any(gaps < 0):
        raise UnsortedGenerators("generators must be strictly increasing")
    if np.any(gaps < DUPLICATE_GAP_FRACTION * dom.width):
        raise DuplicateGenerators(
            f"adjacent generators closer than {DUPLICATE_GAP_FRACTION:g} * width")
    if z[0] <= dom.a or z[-1] >= dom.b:
        raise GeneratorOutOfDomain(
            f"generators must lie inside ({dom.a}, {dom.b})")
    return z


def _midpoint_boundaries(z: np.ndarray, dom: Domain1D) -> np.ndarray:
    return np.concatenate(([dom.a], 0.5 * (z[:-1] + z[1:]), [dom.b]))


def voronoi_regions(generators, dom: Domain1D, d: DensitySpec | None = None,
                    **flags) -> Tessellation:
    """Tessellation of dom induced by the generators.

    If a density is given the energy field is populated via energy_K;
    otherwise it is left at 0 (pure geometry).
    """
    z = _validate_generators(generators, dom)
    m = _midpoint_boundaries(z, dom)
    energy = _energy_of_cells(z, m, d) if d is not None else 0.0
    return Tessellation(generators=z, boundaries=m, energy=energy,
                        domain=dom, **flags)


def _energy_of_cells(points: np.ndarray, boundaries: np.ndarray,
                     d: DensitySpec) -> float:
    """Sum over cells of the second moment of (x - point) under d."""
    lo, hi = boundaries[:-1], boundaries[1:]
    m0, m1, m2 = dens.interval_moments(d, lo, hi)
    per_cell = m2 - 2.0 * points * m1 + points * points * m0
    return float(np.sum(np.maximum(per_cell, 0.0)))


def energy_F(points, cells: Sequence[Interval], d: DensitySpec) -> float:
    """Distortion of an arbitrary point/cell assignment (not necessarily
    Voronoi): sum_i of the density-weighted squared distance to points[i]."""
    points = np.asarray(points, dtype=float).ravel()
    if len(points) != len(cells):
        raise ValueError("points and cells must have equal length")
    cells = [c if isinstance(c, Interval) else Interval(*c) for c in cells]
    order = sorted(range(len(cells)), key=lambda i: cells[i].lo)
    tol = 1e-9 * max(abs(cells[order[-1]].hi - cells[order[0]].lo), 1.0)
    for i, j in zip(order[:-1], order[1:]):
        if abs(cells[i].hi - cells[j].lo) > tol:
            raise CellsDoNotTile(
                f"cells [{cells[i].lo},{cells[i].hi}] and "
                f"[{cells[j].lo},{cells[j].hi}] leave a gap or overlap")
    lo = np.array([c.lo for c in cells])
    hi = np.array([c.hi for c in cells])
    m0, m1, m2 = dens.interval_moments(d, lo, hi)
    per_cell = m2 - 2.0 * points * m1 + points * points * m0
    return float(np.sum(np.maximum(per_cell, 0.0)))


def energy_K(points, d: DensitySpec, dom: Domain1D) -> float:
    """Quantization energy: energy_F at the Voronoi cells of the points."""
    z = _validate_generators(points, dom)
    m = _midpoint_boundaries(z, dom)
    return _energy_of_cells(z, m, d)


def _cell_centroids(boundaries: np.ndarray, d: DensitySpec) -> np.ndarray:
    lo, hi = boundaries[:-1], boundaries[1:]
    m0, m1, _ = dens.interval_moments(d, lo, hi)
    floors = np.array([dens.mass_floor(Interval(a, b)) for a, b in zip(lo, hi)])
    bad = np.nonzero(m0 <= floors)[0]
    if bad.size:
        i = int(bad[0])
        raise EmptyCell(f"cell {i} = [{lo[i]}, {hi[i]}] has mass {m0[i]:g}")
    c = m1 / m0
    return np.clip(c, lo, hi)


def lloyd_step(t: Tessellation, d: DensitySpec) -> Tessellation:
    """One Lloyd update: move every generator to its cell centroid."""
    z_new = _cell_centroids(t.boundaries, d)
    return voronoi_regions(z_new, t.domain, d)


def default_init(n: int, dom: Domain1D) -> np.ndarray:
    """N equally spaced points at a + (i - 1/2) * width / N."""
    return dom.a + (np.arange(1, n + 1) - 0.5) * dom.width / n


def lloyd(init, d: DensitySpec, dom: Domain1D, tol: float | None = None,
          max_iter: int = LLOYD_MAX_ITER, record_history: bool = False):
    """Lloyd's algorithm from the given generators.

    Stops at the first iterate whose max generator displacement is below tol
    (default 1e-10 * domain width).  On budget exhaustion the best iterate is
    returned with converged=False rather than raising.

    Returns the Tessellation, or (Tessellation, history) when
    record_history is true; history holds the generator array per iterate,
    including the initial one.
    """
    if tol is None:
        tol = LLOYD_TOL_FRACTION * dom.width
    if tol <= 0:
        raise ValueError("tol must be positive")
    z = _validate_generators(init, dom)
    m = _midpoint_boundaries(z, dom)
    history = [z.copy()] if record_history else None
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        z_new = _cell_centroids(m, d)
        if record_history:
            history.append(z_new.copy())
        moved = float(np.max(np.abs(z_new - z)))
        z = z_new
        m = _midpoint_boundaries(z, dom)
        if moved < tol:
            converged = True
            break
    t = Tessellation(generators=z, boundaries=m,
                     energy=_energy_of_cells(z, m, d), domain=dom,
                     converged=converged, iterations=iterations)
    return (t, history) if record_history else t


def is_cvt(points, d: DensitySpec, dom: Domain1D, tol: float) -> bool:
    """True iff every generator is within tol of its own cell centroid."""
    z = _validate_generators(points, dom)
    m = _midpoint_boundaries(z, dom)
    c = _cell_centroids(m, d)
    return bool(np.max(np.abs(z - c)) < tol)
