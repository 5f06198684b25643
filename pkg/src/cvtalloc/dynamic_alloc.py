"""Decentralized dynamic allocation: one-step Gaussian update, mean-shift
utilities, line-graph maintenance, and the civility-model swap protocol.

Resources live on a line: sorting agents by resource value induces the
resource graph, which doubles as the communication graph.  A round of
negotiation lets each agent propose a swap to the neighbor whose resource is
closest to its locally desired amount; a proposed-to agent always accepts
unless it has already taken part in a swap this round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import tessellation as tess
from .density import DensitySpec, bind_free_parameter
from .errors import DomainTooNarrow, MissingDesiredInput
from .tessellation import Domain1D

__all__ = [
    "LineGraph",
    "AllocationState",
    "SwapEvent",
    "ShiftReport",
    "one_step_update",
    "shifted_mean",
    "verify_shift_property",
    "rebuild_line_graph",
    "neighbor_of_interest",
    "negotiate_round",
]


@dataclass(frozen=True)
class LineGraph:
    """Agents ordered by resource value; edges join adjacent pairs."""

    order: tuple
    edges: tuple

    def neighbors(self, agent) -> list:
        out = []
        for i, j in self.edges:
            if i == agent:
                out.append(j)
            elif j == agent:
                out.append(i)
        return out


@dataclass(frozen=True)
class SwapEvent:
    step: int
    proposer: object
    target: object
    z_before: tuple


@dataclass(frozen=True)
class AllocationState:
    """Per-step snapshot of agent resources and the induced line graph."""

    resources: dict
    r_current: float
    mu_current: float
    sigma2: float
    comm_graph: LineGraph = field(default=None)
    step: int = 0

    def __post_init__(self):
        if self.comm_graph is None:
            object.__setattr__(self, "comm_graph",
                               rebuild_line_graph(self.resources))


def rebuild_line_graph(resources: dict) -> LineGraph:
    """Sort agents by resource value (ties by agent id) and join neighbors."""
    order = tuple(sorted(resources, key=lambda i: (resources[i], i)))
    edges = tuple((order[k], order[k + 1]) for k in range(len(order) - 1))
    return LineGraph(order=order, edges=edges)


def one_step_update(z, r_k: float, r_k1: float) -> np.ndarray:
    """Shift every resource by (r(k+1) - r(k)) / N; the sum then tracks the
    new total exactly up to floating rounding."""
    z = np.asarray(z, dtype=float)
    return z + (r_k1 - r_k) / z.size


def shifted_mean(mu_k: float, r_k: float, r_k1: float, n: int) -> float:
    """Updated Gaussian mean after a total-resource change."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return mu_k + (r_k1 - r_k) / n


@dataclass(frozen=True)
class ShiftReport:
    """CVT translation check for a Gaussian mean shift."""

    n: int
    delta: float
    max_deviation: float
    passed: bool


def _gaussian_tail_mass_outside(mu: float, sigma: float, dom: Domain1D) -> float:
    from scipy.special import ndtr
    return float(ndtr((dom.a - mu) / sigma) + ndtr((mu - dom.b) / sigma))


def verify_shift_property(d_gaussian: DensitySpec, dom: Domain1D, n: int,
                          delta: float, tol: float) -> ShiftReport:
    """Check that shifting the Gaussian mean by -delta shifts every CVT
    generator by -delta.

    Exact only when the domain truncates a negligible amount of density at
    both means; otherwise DomainTooNarrow is raised rather than reporting a
    truncation artifact as a failure.
    """
    if d_gaussian.family != "gaussian":
        raise ValueError("shift property applies to the gaussian family only")
    if not d_gaussian.is_bound:
        raise ValueError("density must be fully bound")
    mu = d_gaussian.params["mu"]
    sigma = math.sqrt(d_gaussian.params["sigma2"])
    for m in (mu, mu - delta):
        if _gaussian_tail_mass_outside(m, sigma, dom) >= 1e-9:
            raise DomainTooNarrow(
                f"mass outside the domain at mean {m} is not negligible")

    lloyd_tol = min(tol * 1e-3, 1e-11 * dom.width)
    init = tess.default_init(n, dom)
    t_base = tess.lloyd(init, d_gaussian, dom, tol=lloyd_tol, max_iter=200_000)
    d_shift = replace(d_gaussian,
                      params={**d_gaussian.params, "mu": mu - delta})
    t_shift = tess.lloyd(init, d_shift, dom, tol=lloyd_tol, max_iter=200_000)
    dev = float(np.max(np.abs(t_shift.generators
                              - (t_base.generators - delta))))
    return ShiftReport(n=n, delta=delta, max_deviation=dev, passed=dev < tol)


def neighbor_of_interest(i, u_i: float, st: AllocationState):
    """The agent (self included) whose resource is closest to the desired
    amount u_i; ties break toward self, then toward the lower agent id."""
    if i not in st.resources:
        raise KeyError(f"unknown agent {i!r}")
    candidates = st.comm_graph.neighbors(i) + [i]

    def rank(j):
        return (abs(u_i - st.resources[j]), 0 if j == i else 1, j)

    return min(candidates, key=rank)


def negotiate_round(st: AllocationState, desired: dict):
    """One civility round.

    Agents act in ascending resource order (pre-round graph order).  An agent
    whose neighbor of interest differs from itself swaps resource values with
    it unless either party already took part in a swap this round; a
    proposed-to agent never refuses.  Returns the post-round state and the
    swap events in execution order.
    """
    missing = [i for i in st.resources if i not in desired]
    if missing:
        raise MissingDesiredInput(f"no desired amount for agents {missing}")

    z = dict(st.resources)
    taken = set()
    events = []
    for i in st.comm_graph.order:
        if i in taken:
            continue
        j = neighbor_of_interest(i, desired[i], st)
        if j == i or j in taken:
            continue
        events.append(SwapEvent(step=st.step, proposer=i, target=j,
                                z_before=(z[i], z[j])))
        z[i], z[j] = z[j], z[i]
        taken.add(i)
        taken.add(j)

    new_state = AllocationState(resources=z, r_current=st.r_current,
                                mu_current=st.mu_current, sigma2=st.sigma2,
                                comm_graph=rebuild_line_graph(z), step=st.step)
    return new_state, events
