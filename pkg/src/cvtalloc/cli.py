"""Command-line front end.

Subcommands::

    cvt          Run Lloyd's algorithm; write generators.csv (per-iteration
                 generator positions plus final cell boundaries).
    static-alloc Solve the constrained allocation; print/write JSON and an
                 optional tessellation CSV.
    shift-check  Verify the Gaussian mean-shift translation property of the
                 tessellation.
    dynamic-sim  Run a demand-response scenario; write trace.csv, swaps.csv,
                 metrics.json, and plot data files.

Exit codes: 0 success, 1 usage/configuration error, 2 solver failure (or a
failed shift/validation check).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import density as dens
from . import dynamic_alloc as dyn
from . import sim
from . import static_alloc as sa
from . import tessellation as tess
from . import thermal as th
from .density import DensitySpec
from .errors import CvtAllocError, SolverDiverged
from .tessellation import Domain1D

_FMT = "%.15g"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2


def _parse_domain(text: str) -> Domain1D:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"--domain expects 'a,b', got {text!r}")
    return Domain1D(float(parts[0]), float(parts[1]))


def _parse_density(text: str, dom: Domain1D | None) -> DensitySpec:
    """JSON density spec, or the shorthand 'uniform' bound to the domain."""
    if text.strip().lower() == "uniform":
        if dom is None:
            raise ValueError("'uniform' shorthand requires --domain")
        return DensitySpec("uniform", {"a": dom.a, "b": dom.b})
    return DensitySpec.from_config(json.loads(text))


def _parse_init(text: str, n: int, dom: Domain1D) -> np.ndarray:
    if text.strip().lower() == "uniform":
        return tess.default_init(n, dom)
    values = np.array([float(v) for v in text.split(",")])
    if values.size != n:
        raise ValueError(f"--init needs {n} values, got {values.size}")
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cvtalloc",
        description="1-D resource allocation via centroidal Voronoi tessellations")
    p.add_argument("--seed", type=int, default=None,
                   help="global random seed (overrides any config value)")
    sub = p.add_subparsers(dest="subcommand", required=True)

    c = sub.add_parser("cvt", help="run Lloyd's algorithm")
    c.add_argument("--domain", required=True, help="interval as 'a,b'")
    c.add_argument("--n", type=int, required=True, help="number of generators")
    c.add_argument("--density", required=True,
                   help="JSON density spec or 'uniform'")
    c.add_argument("--init", default="uniform",
                   help="comma-separated generators or 'uniform' (default)")
    c.add_argument("--tol", type=float, default=None,
                   help="stopping displacement (default 1e-10 * width)")
    c.add_argument("--max-iter", type=int, default=tess.LLOYD_MAX_ITER)
    c.add_argument("--out", default=".", help="output directory")

    s = sub.add_parser("static-alloc", help="solve the constrained allocation")
    s.add_argument("--domain", required=True, help="interval as 'a,b'")
    s.add_argument("--n", type=int, required=True, help="number of agents")
    s.add_argument("--density", required=True,
                   help="JSON density spec with one parameter set to 'free'")
    s.add_argument("--r", type=float, required=True, help="total resource")
    s.add_argument("--out", default=".", help="output directory")
    s.add_argument("--csv", action="store_true",
                   help="also write the tessellation as allocation.csv")

    k = sub.add_parser("shift-check",
                       help="verify the Gaussian mean-shift property")
    k.add_argument("--domain", required=True, help="interval as 'a,b'")
    k.add_argument("--n", type=int, required=True, help="number of generators")
    k.add_argument("--mu", type=float, required=True, help="initial mean")
    k.add_argument("--sigma2", type=float, required=True, help="variance")
    k.add_argument("--delta", type=float, required=True,
                   help="mean shift (new mean = mu - delta)")
    k.add_argument("--tol", type=float, default=1e-7,
                   help="max allowed generator deviation (default 1e-7)")

    d = sub.add_parser("dynamic-sim", help="run a demand-response scenario")
    d.add_argument("--config", required=True, help="scenario JSON file")
    d.add_argument("--out", default=".", help="output directory")
    d.add_argument("--horizon", type=int, default=None,
                   help="override the config horizon (truncates the schedule)")
    d.add_argument("--rounds-per-step", type=int, default=None)
    return p


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_cvt(args) -> int:
    dom = _parse_domain(args.domain)
    d = _parse_density(args.density, dom)
    init = _parse_init(args.init, args.n, dom)
    t, history = tess.lloyd(init, d, dom, tol=args.tol,
                            max_iter=args.max_iter, record_history=True)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "generators.csv"
    with open(path, "w", newline="") as fh:
        fh.write("iter,i,z_i\n")
        for it, z in enumerate(history):
            for i, zi in enumerate(z):
                fh.write(f"{it},{i},{_FMT % zi}\n")
        for i, b in enumerate(t.boundaries):
            fh.write(f"boundary,{i},{_FMT % b}\n")
    print(json.dumps({
        "generators": [float(z) for z in t.generators],
        "energy": t.energy,
        "iterations": t.iterations,
        "converged": t.converged,
        "output": str(path),
    }))
    return EXIT_OK


def _cmd_static_alloc(args) -> int:
    dom = _parse_domain(args.domain)
    d = _parse_density(args.density, dom)
    problem = sa.StaticProblem(domain=dom, n_agents=args.n, density=d, r=args.r)
    try:
        sol = sa.solve(problem)
    except SolverDiverged as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    payload = {
        "v_k": sol.v_k,
        "centroids": [float(z) for z in sol.centroids],
        "residual_norm": sol.residual_norm,
        "sum": float(np.sum(sol.centroids)),
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "allocation.json", "w") as fh:
        json.dump(payload, fh, indent=2)
    if args.csv:
        with open(out / "allocation.csv", "w", newline="") as fh:
            fh.write("i,z_i,cell_lo,cell_hi\n")
            t = sol.tessellation
            for i, z in enumerate(t.generators):
                fh.write(f"{i},{_FMT % z},{_FMT % t.boundaries[i]},"
                         f"{_FMT % t.boundaries[i + 1]}\n")
    print(json.dumps(payload))
    return EXIT_OK


def _cmd_shift_check(args) -> int:
    dom = _parse_domain(args.domain)
    d = DensitySpec("gaussian", {"mu": args.mu, "sigma2": args.sigma2})
    report = dyn.verify_shift_property(d, dom, args.n, args.delta, args.tol)
    print(json.dumps({
        "n": report.n,
        "delta": report.delta,
        "max_deviation": report.max_deviation,
        "passed": report.passed,
    }))
    return EXIT_OK if report.passed else EXIT_SOLVER


def _write_plot_data(trace: sim.TraceLog, out: Path) -> None:
    """Plot data: applied powers, total vs available, temperatures."""
    n = trace.n_agents
    agent_cols = ",".join(f"agent_{i}" for i in range(n))
    by_step = {}
    for row in trace.agent_rows:
        by_step.setdefault(row["step"], {})[row["agent"]] = row

    with open(out / "powers.csv", "w", newline="") as fh:
        fh.write(f"step,{agent_cols}\n")
        for k in sorted(by_step):
            vals = ",".join(_FMT % by_step[k][i]["applied_power"]
                            for i in range(n))
            fh.write(f"{k},{vals}\n")

    with open(out / "total_power.csv", "w", newline="") as fh:
        fh.write("step,total_consumed,available\n")
        for k in sorted(by_step):
            total = sum(abs(by_step[k][i]["applied_power"]) for i in range(n))
            fh.write(f"{k},{_FMT % total},{_FMT % trace.step_rows[k]['r']}\n")

    with open(out / "temperatures.csv", "w", newline="") as fh:
        fh.write(f"step,{agent_cols}\n")
        for k in sorted(by_step):
            vals = ",".join(_FMT % by_step[k][i]["temp_F"] for i in range(n))
            fh.write(f"{k},{vals}\n")


def _cmd_dynamic_sim(args) -> int:
    with open(args.config) as fh:
        config = json.load(fh)
    if args.seed is not None:
        config["seed"] = args.seed
    if args.horizon is not None:
        config["horizon"] = args.horizon
        config["power_schedule"] = config["power_schedule"][:args.horizon]
    if args.rounds_per_step is not None:
        config["rounds_per_step"] = args.rounds_per_step
    sc = sim.Scenario.from_config(config)

    trace = sim.run(sc)
    report = sim.metrics(trace)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace.write_trace_csv(out / "trace.csv")
    trace.write_swaps_csv(out / "swaps.csv")
    with open(out / "metrics.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    _write_plot_data(trace, out)
    print(json.dumps(report.to_dict()))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; remap to the documented code 1.
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.subcommand == "cvt":
            return _cmd_cvt(args)
        if args.subcommand == "static-alloc":
            return _cmd_static_alloc(args)
        if args.subcommand == "shift-check":
            return _cmd_shift_check(args)
        return _cmd_dynamic_sim(args)
    except SolverDiverged as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (CvtAllocError, ValueError, OSError, KeyError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
