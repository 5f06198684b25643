"""Demand-response orchestration: static-allocation initialization, per-step
one-step updates, local control, civility negotiation, and plant stepping.

Each time step runs four phases in order: shift all resources to the new
total, compute each agent's desired power from its plant state, negotiate
swaps
on the line graph using desired magnitudes, then apply the allocated power
(with the local controller's sign) to every plant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import dynamic_alloc as dyn
from . import static_alloc as sa
from . import thermal as th
from .density import DensitySpec
from .dynamic_alloc import AllocationState, SwapEvent
from .tessellation import Domain1D

__all__ = ["Scenario", "SimState", "TraceLog", "MetricsReport",
           "initialize", "step", "run", "metrics"]

_FMT = "%.15g"  # numeric CSV formatting, 15 significant digits


@dataclass(frozen=True)
class Scenario:
    """Configuration of one demand-response run."""

    n_agents: int
    horizon: int
    domain: Domain1D
    density: DensitySpec          # gaussian with free mu
    power_schedule: tuple         # r(k), one entry per step
    seed: int = 0
    disturbance: str = "synthetic"   # or a CSV path
    setpoints: tuple = ()            # per-agent degF; empty -> all 72
    setpoint_changes: tuple = ()     # (step, agent, new_setpoint) triples
    rounds_per_step: int = 1
    ts_minutes: float = th.DEFAULT_TS_MINUTES
    poles: tuple = th.DEFAULT_POLES

    def __post_init__(self):
        if self.horizon != len(self.power_schedule):
            raise ValueError("horizon must equal len(power_schedule)")
        if self.density.family != "gaussian" or self.density.free_param != "mu":
            raise ValueError("scenario density must be gaussian with free mu")
        for r in self.power_schedule:
            mean = r / self.n_agents
            if not (self.domain.a < mean < self.domain.b):
                raise ValueError(
                    f"r(k)/N = {mean} outside domain ({self.domain.a}, {self.domain.b})")
        if self.setpoints and len(self.setpoints) != self.n_agents:
            raise ValueError("setpoints must have one entry per agent")
        object.__setattr__(self, "power_schedule",
                           tuple(float(r) for r in self.power_schedule))

    @classmethod
    def from_config(cls, obj: dict) -> "Scenario":
        obj = dict(obj)
        dom = Domain1D(*obj.pop("domain"))
        density = DensitySpec.from_config(obj.pop("density"))
        changes = tuple((int(s), int(a), float(v))
                        for s, a, v in obj.pop("setpoint_changes", ()))
        return cls(
            n_agents=int(obj.pop("n_agents")),
            horizon=int(obj.pop("horizon")),
            domain=dom,
            density=density,
            power_schedule=tuple(obj.pop("power_schedule")),
            seed=int(obj.pop("seed", 0)),
            disturbance=obj.pop("disturbance", "synthetic"),
            setpoints=tuple(obj.pop("setpoints", ())),
            setpoint_changes=changes,
            rounds_per_step=int(obj.pop("rounds_per_step", 1)),
            ts_minutes=float(obj.pop("ts_minutes", th.DEFAULT_TS_MINUTES)),
            poles=tuple(obj.pop("poles", th.DEFAULT_POLES)),
        )

    @classmethod
    def from_json(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_config(json.load(fh))

    def effective_setpoints(self) -> list:
        return list(self.setpoints) if self.setpoints else [72.0] * self.n_agents


@dataclass
class AgentPlant:
    model: th.DiscreteModel
    gains: th.ControllerGains
    x: np.ndarray


@dataclass
class SimState:
    scenario: Scenario
    alloc: AllocationState
    plants: list
    disturbances: np.ndarray   # (horizon, 2)
    k: int = 0

    def serialize(self) -> str:
        """Deterministic snapshot used by reproducibility checks."""
        payload = {
            "k": self.k,
            "resources": {str(i): _FMT % v
                          for i, v in sorted(self.alloc.resources.items())},
            "mu": _FMT % self.alloc.mu_current,
            "r": _FMT % self.alloc.r_current,
            "states": [[_FMT % v for v in p.x] for p in self.plants],
        }
        return json.dumps(payload, sort_keys=True)


@dataclass
class TraceLog:
    """Per-step, per-agent trace plus swap events and per-step constraint error."""

    n_agents: int
    agent_rows: list = field(default_factory=list)
    step_rows: list = field(default_factory=list)
    swap_events: list = field(default_factory=list)
    setpoints: list = field(default_factory=list)

    def write_trace_csv(self, path) -> None:
        header = ("step,agent,z,desired_abs,applied_power,temp_F,"
                  "sum_z,r,constraint_error\n")
        with open(path, "w", newline="") as fh:
            fh.write(header)
            for row in self.agent_rows:
                step_info = self.step_rows[row["step"]]
                fh.write(",".join([
                    str(row["step"]), str(row["agent"]),
                    _FMT % row["z"], _FMT % row["desired_abs"],
                    _FMT % row["applied_power"], _FMT % row["temp_F"],
                    _FMT % step_info["sum_z"], _FMT % step_info["r"],
                    _FMT % step_info["constraint_error"],
                ]) + "\n")

    def write_swaps_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("step,proposer,target,z_proposer_before,z_target_before\n")
            for ev in self.swap_events:
                fh.write(",".join([
                    str(ev.step), str(ev.proposer), str(ev.target),
                    _FMT % ev.z_before[0], _FMT % ev.z_before[1],
                ]) + "\n")


@dataclass(frozen=True)
class MetricsReport:
    l2_power_error: float
    mean_swaps_per_agent: float
    neighbor_coverage: dict     # agent -> number of distinct neighbors ever
    temperature_rms_error: float
    total_swaps: int

    def to_dict(self) -> dict:
        return {
            "l2_power_error": self.l2_power_error,
            "mean_swaps_per_agent": self.mean_swaps_per_agent,
            "neighbor_coverage": {str(k): v
                                  for k, v in sorted(self.neighbor_coverage.items())},
            "temperature_rms_error": self.temperature_rms_error,
            "total_swaps": self.total_swaps,
        }


def _build_disturbances(sc: Scenario) -> np.ndarray:
    if sc.disturbance == "synthetic":
        return th.synthetic_disturbance(sc.horizon, sc.ts_minutes)
    return th.load_disturbance_csv(sc.disturbance, sc.horizon, sc.ts_minutes)


def initialize(sc: Scenario) -> SimState:
    """Solve the static allocation for r(0), build seeded plants, and assign
    the sorted centroids to agents in id order."""
    problem = sa.StaticProblem(domain=sc.domain, n_agents=sc.n_agents,
                               density=sc.density, r=sc.power_schedule[0])
    sol = sa.solve(problem)

    resources = {i: float(sol.centroids[i]) for i in range(sc.n_agents)}
    alloc = AllocationState(
        resources=resources, r_current=sc.power_schedule[0],
        mu_current=sol.v_k, sigma2=sc.density.params["sigma2"], step=0)

    disturbances = _build_disturbances(sc)
    plants = _build_plants(sc, disturbances)
    return SimState(scenario=sc, alloc=alloc, plants=plants,
                    disturbances=disturbances, k=0)


def _build_plants(sc: Scenario, disturbances: np.ndarray) -> list:
    """Seeded per-agent plants, started at the steady state consistent with
    the initial disturbance and each agent's setpoint."""
    setpoints = sc.effective_setpoints()
    plants = []
    for i in range(sc.n_agents):
        params = th.sample_parameters(sc.seed * 100_003 + i)
        dm = th.discretize_zoh(th.build_continuous_model(params), sc.ts_minutes)
        gains = th.design_controller(dm, sc.poles, setpoints[i])
        x0, _ = th.equilibrium_state(dm, disturbances[0], setpoints[i])
        plants.append(AgentPlant(model=dm, gains=gains, x=x0))
    return plants


def baseline_power_schedule(sc: Scenario, floor_per_agent: float = 50.0):
    """Total power the fleet would draw if every agent applied its own
    desired power (no allocation constraint): a demand forecast suitable as
    the scenario's r(k) schedule.

    sc.power_schedule is ignored here apart from its length; the returned
    tuple can be fed back into a new Scenario.
    """
    disturbances = _build_disturbances(sc)
    plants = _build_plants(sc, disturbances)
    totals = []
    for k in range(sc.horizon):
        w = disturbances[k]
        total = 0.0
        for plant in plants:
            u = th.desired_power(plant.gains, plant.x, w)
            plant.x, _ = th.step_plant(plant.x, u, w, plant.model)
            total += abs(u)
        totals.append(max(total, sc.n_agents * floor_per_agent))
    return tuple(totals)


def step(st: SimState, k: int, trace: TraceLog | None = None) -> SimState:
    """Advance one time step; mutates plant states in place and returns st."""
    sc = st.scenario
    if k >= sc.horizon:
        raise ValueError(f"step {k} beyond horizon {sc.horizon}")

    for (when, agent, new_sp) in sc.setpoint_changes:
        if when == k:
            plant = st.plants[agent]
            plant.gains = replace(plant.gains, setpoint=float(new_sp))

    # Phase 1: shift resources to the new total.
    r_new = sc.power_schedule[k]
    ids = sorted(st.alloc.resources)
    z = np.array([st.alloc.resources[i] for i in ids])
    z = dyn.one_step_update(z, st.alloc.r_current, r_new)
    mu = dyn.shifted_mean(st.alloc.mu_current, st.alloc.r_current, r_new,
                          sc.n_agents)
    alloc = AllocationState(resources=dict(zip(ids, z)), r_current=r_new,
                            mu_current=mu, sigma2=st.alloc.sigma2, step=k)

    # Phase 2: local control from current plant states, disturbance
    # feedforward included so the magnitude reflects the actual requirement.
    w = st.disturbances[k]
    desired = {i: th.desired_power(st.plants[i].gains, st.plants[i].x, w)
               for i in ids}
    desired_abs = {i: abs(u) for i, u in desired.items()}

    # Phase 3: civility negotiation rounds on desired magnitudes.
    events = []
    for _ in range(sc.rounds_per_step):
        alloc, round_events = dyn.negotiate_round(alloc, desired_abs)
        events.extend(round_events)

    # Phase 4: apply the allocated magnitude with the controller's sign.
    applied = {}
    temps = {}
    for i in ids:
        sign = 1.0 if desired[i] >= 0 else -1.0
        power = sign * alloc.resources[i]
        st.plants[i].x, y = th.step_plant(st.plants[i].x, power, w,
                                          st.plants[i].model)
        applied[i] = power
        temps[i] = y

    if trace is not None:
        sum_z = float(sum(alloc.resources.values()))
        trace.step_rows.append({
            "sum_z": sum_z, "r": r_new,
            "constraint_error": abs(sum_z - r_new),
        })
        for i in ids:
            trace.agent_rows.append({
                "step": k, "agent": i, "z": alloc.resources[i],
                "desired_abs": desired_abs[i],
                "applied_power": applied[i], "temp_F": temps[i],
            })
        trace.swap_events.extend(events)
        trace.setpoints.append([st.plants[i].gains.setpoint for i in ids])

    st.alloc = alloc
    st.k = k + 1
    return st


def run(sc: Scenario) -> TraceLog:
    """Initialize and execute the full horizon; deterministic per seed."""
    st = initialize(sc)
    trace = TraceLog(n_agents=sc.n_agents)
    for k in range(sc.horizon):
        step(st, k, trace)
    return trace


def metrics(t: TraceLog) -> MetricsReport:
    """Aggregate power tracking, swap activity, neighbor coverage, and
    temperature regulation quality."""
    if not t.step_rows:
        raise ValueError("empty trace")
    l2 = math.sqrt(sum(row["constraint_error"] ** 2 for row in t.step_rows))

    participation = {}
    for ev in t.swap_events:
        for agent in (ev.proposer, ev.target):
            participation[agent] = participation.get(agent, 0) + 1
    mean_swaps = sum(participation.values()) / t.n_agents

    # Distinct line-graph neighbors ever seen, reconstructed from per-step
    # resource orderings.
    seen = {i: set() for i in range(t.n_agents)}
    by_step = {}
    for row in t.agent_rows:
        by_step.setdefault(row["step"], {})[row["agent"]] = row["z"]
    for step_resources in by_step.values():
        graph = dyn.rebuild_line_graph(step_resources)
        for i, j in graph.edges:
            seen[i].add(j)
            seen[j].add(i)
    coverage = {i: len(s) for i, s in seen.items()}

    sq_err = 0.0
    for row in t.agent_rows:
        setpoint = t.setpoints[row["step"]][row["agent"]]
        sq_err += (row["temp_F"] - setpoint) ** 2
    rms = math.sqrt(sq_err / len(t.agent_rows))

    return MetricsReport(l2_power_error=l2, mean_swaps_per_agent=mean_swaps,
                         neighbor_coverage=coverage,
                         temperature_rms_error=rms,
                         total_swaps=len(t.swap_events))
