"""Exact static allocation: the N+1 nonlinear system for a constrained CVT.

The N centroid fixed-point equations (with midpoint cell boundaries) are
augmented with one constraint row, by default sum(z) = r, and solved jointly
for the centroids and the density family's single free parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import density as dens
from . import tessellation as tess
from .density import DensitySpec, bind_free_parameter
from .errors import (
    CvtAllocError,
    InfeasibleProblem,
    InvalidCandidate,
    InvalidParameterValue,
    SolverDiverged,
)
from .tessellation import Domain1D, Tessellation

__all__ = ["StaticProblem", "StaticSolution", "CrossValidationReport",
           "residual", "solve", "cross_validate"]

RESIDUAL_TOL = 1e-9
MAX_NEWTON_ITER = 200
FD_STEP = 1e-7
ARMIJO_C = 1e-4
MIN_ALPHA = 1e-12


@dataclass(frozen=True)
class StaticProblem:
    """Allocate r among n_agents on domain under a density with one free
    parameter.  The constraint row defaults to sum(z) - r and may be replaced
    by any function R^N -> R."""

    domain: Domain1D
    n_agents: int
    density: DensitySpec
    r: float
    constraint: Callable[[np.ndarray], float] | None = field(
        default=None, compare=False)

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("n_agents must be >= 1")
        if self.density.free_param is None:
            raise ValueError("density must declare exactly one free parameter")
        mean = self.r / self.n_agents
        if not (self.domain.a < mean < self.domain.b):
            raise InfeasibleProblem(
                f"mean allocation r/N = {mean} outside ({self.domain.a}, {self.domain.b})")

    def constraint_value(self, z: np.ndarray) -> float:
        if self.constraint is not None:
            return float(self.constraint(z))
        return float(np.sum(z) - self.r)


@dataclass(frozen=True)
class StaticSolution:
    centroids: np.ndarray
    v_k: float
    residual_norm: float
    tessellation: Tessellation


@dataclass(frozen=True)
class CrossValidationReport:
    """Solver-vs-Lloyd agreement at the solved free parameter."""

    max_discrepancy: float
    sum_solver: float
    sum_lloyd: float
    lloyd_converged: bool
    passed: bool


def _split(unknowns: np.ndarray, n: int):
    u = np.asarray(unknowns, dtype=float).ravel()
    if u.size != n + 1:
        raise ValueError(f"expected {n + 1} unknowns, got {u.size}")
    return u[:n], float(u[n])


def _bind_candidate(p: StaticProblem, z: np.ndarray, v: float) -> DensitySpec:
    dom = p.domain
    if np.any(np.diff(z) <= 0):
        raise InvalidCandidate("candidate centroids not strictly increasing")
    if z[0] <= dom.a or z[-1] >= dom.b:
        raise InvalidCandidate("candidate centroids outside the domain")
    try:
        return bind_free_parameter(p.density, v)
    except InvalidParameterValue as exc:
        raise InvalidCandidate(str(exc)) from exc


def residual(unknowns, p: StaticProblem) -> np.ndarray:
    """Rows 1..N: z_i minus the centroid of its midpoint cell; row N+1: the
    constraint value (sum(z) - r by default)."""
    z, v = _split(unknowns, p.n_agents)
    d = _bind_candidate(p, z, v)
    m = np.concatenate(([p.domain.a], 0.5 * (z[:-1] + z[1:]), [p.domain.b]))
    m0, m1, _ = dens.interval_moments(d, m[:-1], m[1:])
    if np.any(m0 <= 0):
        raise InvalidCandidate("candidate produces an empty cell")
    c = m1 / m0
    return np.concatenate((z - c, [p.constraint_value(z)]))


def default_initial_guess(p: StaticProblem) -> np.ndarray:
    """Equally spaced centroids plus a family-specific moment guess for v_k."""
    z0 = tess.default_init(p.n_agents, p.domain)
    mean = p.r / p.n_agents
    free = p.density.free_param
    fam = p.density.family
    if fam == "gaussian" and free == "mu":
        v0 = mean
    elif fam == "exponential":
        v0 = p.n_agents / p.r if p.r > 0 else 1.0
    elif fam == "gamma" and free == "k":
        v0 = mean / p.density.params["theta"]
    elif fam == "gamma" and free == "theta":
        v0 = mean / p.density.params["k"]
    elif fam == "uniform" and free == "b":
        v0 = 2.0 * mean - p.density.params.get("a", p.domain.a)
    elif fam == "uniform" and free == "a":
        v0 = 2.0 * mean - p.density.params.get("b", p.domain.b)
    else:  # gaussian free sigma2 or anything else without a moment identity
        v0 = 1.0
    return np.concatenate((z0, [v0]))


def _quantile_guess(p: StaticProblem) -> np.ndarray | None:
    """Centroid guess at the density quantiles (i - 1/2)/N of the moment-based
    v_k.  Used when the equally spaced default leaves empty tail cells, e.g. a
    Gaussian far narrower than the domain."""
    from scipy import special, stats

    u0 = default_initial_guess(p)
    v0 = u0[-1]
    try:
        d = bind_free_parameter(p.density, v0)
    except InvalidParameterValue:
        return None
    q = (np.arange(1, p.n_agents + 1) - 0.5) / p.n_agents
    fam, par = d.family, d.params
    if fam == "gaussian":
        z = par["mu"] + math.sqrt(par["sigma2"]) * special.ndtri(q)
    elif fam == "exponential":
        z = -np.log1p(-q) / par["lam"]
    elif fam == "gamma":
        z = stats.gamma.ppf(q, par["k"], scale=par["theta"])
    else:
        z = par["a"] + (par["b"] - par["a"]) * q
    pad = 1e-9 * p.domain.width
    z = np.clip(z, p.domain.a + pad, p.domain.b - pad)
    if np.any(np.diff(z) <= 0):
        return None
    return np.concatenate((z, [v0]))


def _safe_norm(u: np.ndarray, p: StaticProblem) -> float:
    try:
        return float(np.linalg.norm(residual(u, p)))
    except InvalidCandidate:
        return np.inf


def solve(p: StaticProblem, init=None) -> StaticSolution:
    """Damped Newton with a forward-difference Jacobian and Armijo
    backtracking on the residual 2-norm.  Candidates that break ordering or
    parameter invariants are treated as line-search rejections."""
    u = (np.asarray(init, dtype=float).ravel() if init is not None
         else default_initial_guess(p))
    n = p.n_agents

    best_u, best_norm = u.copy(), _safe_norm(u, p)
    if not np.isfinite(best_norm) and init is None:
        fallback = _quantile_guess(p)
        if fallback is not None:
            u = fallback
            best_u, best_norm = u.copy(), _safe_norm(u, p)
    if not np.isfinite(best_norm):
        raise SolverDiverged("initial guess is infeasible", best=u,
                             residual_norm=best_norm)

    for _ in range(MAX_NEWTON_ITER):
        f = residual(u, p)
        norm = float(np.linalg.norm(f))
        if norm < best_norm:
            best_u, best_norm = u.copy(), norm
        if norm < RESIDUAL_TOL:
            return _package(u, norm, p)

        jac = np.empty((n + 1, n + 1))
        for j in range(n + 1):
            h = FD_STEP * max(1.0, abs(u[j]))
            up = u.copy()
            up[j] += h
            try:
                fj = residual(up, p)
            except InvalidCandidate:
                up[j] = u[j] - h
                fj = residual(up, p)
                h = -h
            jac[:, j] = (fj - f) / h

        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -f, rcond=None)[0]

        alpha = 1.0
        accepted = False
        while alpha >= MIN_ALPHA:
            cand = u + alpha * step
            cand_norm = _safe_norm(cand, p)
            if cand_norm <= (1.0 - ARMIJO_C * alpha) * norm:
                u = cand
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            raise SolverDiverged(
                f"line search stalled at residual norm {norm:g}",
                best=best_u, residual_norm=best_norm)

    raise SolverDiverged(
        f"no convergence in {MAX_NEWTON_ITER} iterations "
        f"(best residual norm {best_norm:g})",
        best=best_u, residual_norm=best_norm)


def _package(u: np.ndarray, norm: float, p: StaticProblem) -> StaticSolution:
    z, v = _split(u, p.n_agents)
    d = bind_free_parameter(p.density, v)
    t = tess.voronoi_regions(z, p.domain, d)
    return StaticSolution(centroids=z, v_k=v, residual_norm=norm,
                          tessellation=t)


def cross_validate(sol: StaticSolution, p: StaticProblem,
                   lloyd_tol: float = 1e-12,
                   max_iter: int = 200_000) -> CrossValidationReport:
    """Re-derive the tessellation with Lloyd's algorithm at the solved free
    parameter (default equally spaced start) and compare generators and sums.

    Lloyd converges linearly with a rate that can approach 1 for densities
    concentrated well inside the domain, so the displacement tolerance here
    is far below the comparison tolerance: the sum check needs the
    accumulated N-generator error under 1e-6.
    """
    d = bind_free_parameter(p.density, sol.v_k)
    t = tess.lloyd(tess.default_init(p.n_agents, p.domain), d, p.domain,
                   tol=lloyd_tol, max_iter=max_iter)
    disc = float(np.max(np.abs(t.generators - sol.centroids)))
    sum_solver = float(np.sum(sol.centroids))
    sum_lloyd = float(np.sum(t.generators))
    passed = (disc < 1e-6 * p.domain.width
              and abs(sum_solver - p.r) < 1e-6
              and abs(sum_lloyd - p.r) < 1e-6)
    return CrossValidationReport(max_discrepancy=disc, sum_solver=sum_solver,
                                 sum_lloyd=sum_lloyd,
                                 lloyd_converged=t.converged, passed=passed)
