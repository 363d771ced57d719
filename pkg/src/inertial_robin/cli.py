"""Command line driver for single runs, convergence sweeps and diagnostics.

Exit codes: 0 when every run converged, 2 when any run diverged (or the
identity check failed), 1 on usage or internal errors.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import csv
import json
import logging
import math
import sys

from .analysis import convergence_rates, error_report
from .errors import InvalidArgument, SolverFailure
from .manufactured import ManufacturedProblem
from .mesh import PATTERNS, Side
from .schemes import DIVERGED, FLUXES, KINDS, SchemeConfig, run_simulation, verify_inertial_identity

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DIVERGED = 2

CSV_HEADER = ["scheme", "n", "h", "dt", "l2_error", "h1_error", "rate_l2", "status"]
HISTORY_FLAGS = {"zero-rate": "zero_rate", "exact": "exact_history"}

DEFAULTS = {
    "scheme": "coupled",
    "n": 8,
    "levels": "8,16,32",
    "dt_rule": "h2",
    "T": 1.0,
    "rho1": 1.0,
    "rho2": 1.0,
    "alpha1": 1.0,
    "alpha2": 1.0,
    "history_init": "zero-rate",
    "swap_roles": False,
    "lumped_coupled": False,
    "out": None,
    "jobs": 1,
    "source": "manufactured",
    "flux": "residual",
    "mesh": "crisscross",
    "figure": None,
    "trace": None,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def fmt(x):
    """Six significant digits, ``inf`` for the divergence sentinel."""
    if x is None:
        return ""
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return f"{x:.5e}"


def parse_dt_rule(rule):
    """Map ``h2``, ``h`` or ``fixed:<v>`` to a function of h."""
    if rule == "h2":
        return lambda h: h * h
    if rule == "h":
        return lambda h: h
    if isinstance(rule, str) and rule.startswith("fixed:"):
        try:
            value = float(rule.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad fixed time step in {rule!r}") from None
        if not value > 0:
            raise UsageError("fixed time step must be positive")
        return lambda h: value
    raise UsageError(f"dt rule must be h2, h or fixed:<v>, got {rule!r}")


def _parse_list(value, cast):
    if isinstance(value, (list, tuple)):
        return [cast(v) for v in value]
    return [cast(v) for v in str(value).split(",") if v.strip()]


@dataclass
class ExperimentSpec:
    """What to run: schemes x levels with shared physical and numerical settings."""

    schemes: list
    levels: list
    dt_rule: str = "h2"
    T: float = 1.0
    rho1: float = 1.0
    rho2: float = 1.0
    alpha1: float = 1.0
    alpha2: float = 1.0
    history_init: str = "zero_rate"
    swap_roles: bool = False
    lumped_coupled: bool = False
    zero_source: bool = False
    flux: str = "residual"
    mesh: str = "crisscross"
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.schemes:
            raise UsageError("need at least one scheme")
        for s in self.schemes:
            if s not in KINDS:
                raise UsageError(f"unknown scheme {s!r}; choose from {', '.join(KINDS)}")
        if not self.levels:
            raise UsageError("need at least one level")
        if any(n < 2 for n in self.levels):
            raise UsageError("levels must be at least 2")
        self.levels = sorted(set(self.levels))
        parse_dt_rule(self.dt_rule)

    def dt(self, n):
        return parse_dt_rule(self.dt_rule)(1.0 / n)

    def problem(self):
        return ManufacturedProblem(rho1=self.rho1, rho2=self.rho2, T=self.T,
                                   zero_source=self.zero_source)

    def config(self, scheme, n):
        return SchemeConfig(
            kind=scheme, n=n, dt=self.dt(n), T=self.T, alpha1=self.alpha1, alpha2=self.alpha2,
            history_init=self.history_init, swap_roles=self.swap_roles,
            lumped_coupled=self.lumped_coupled, flux=self.flux, mesh_pattern=self.mesh)

    def jobs(self):
        return [(s, n) for s in self.schemes for n in self.levels]


def load_options(args):
    """Defaults, then the JSON config file, then explicit flags."""
    opts = dict(DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in data.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"unknown config field {key!r}")
            opts[key] = value
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def build_spec(opts, single=False):
    schemes = _parse_list(opts["scheme"], str)
    levels = [opts["n"]] if single else _parse_list(opts["levels"], int)
    if single and len(schemes) != 1:
        raise UsageError("run takes exactly one scheme")
    history = opts["history_init"]
    if history not in HISTORY_FLAGS:
        raise UsageError(f"history init must be one of {', '.join(HISTORY_FLAGS)}")
    if opts["source"] not in ("manufactured", "zero"):
        raise UsageError("source must be manufactured or zero")
    return ExperimentSpec(
        schemes=schemes, levels=[int(n) for n in levels], dt_rule=opts["dt_rule"],
        T=float(opts["T"]), rho1=float(opts["rho1"]), rho2=float(opts["rho2"]),
        alpha1=float(opts["alpha1"]), alpha2=float(opts["alpha2"]),
        history_init=HISTORY_FLAGS[history], swap_roles=bool(opts["swap_roles"]),
        lumped_coupled=bool(opts["lumped_coupled"]), zero_source=opts["source"] == "zero",
        flux=opts["flux"], mesh=opts["mesh"],
        outputs={k: opts[k] for k in ("out", "figure", "trace") if opts[k]})


def _run_row(spec, scheme, n):
    """Run one sweep entry; returns a row dict (status ``error`` on failure)."""
    row = {"scheme": scheme, "n": n, "h": 1.0 / n, "dt": spec.dt(n)}
    try:
        run = run_simulation(spec.config(scheme, n), spec.problem())
    except (SolverFailure, InvalidArgument) as exc:
        log.error("%s n=%d failed: %s", scheme, n, exc)
        row.update(l2_error=math.nan, h1_error=math.nan, status="error")
        return row
    rep = error_report(run)
    row.update(l2_error=rep.l2_error, h1_error=rep.h1_error, status=rep.status)
    return row


def sweep(spec, jobs=1):
    """All scheme x level rows in scheme-major, level-minor order, with L2 rates."""
    todo = spec.jobs()
    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_row, spec, s, n) for s, n in todo]
            rows = [f.result() for f in futures]
    else:
        rows = [_run_row(spec, s, n) for s, n in todo]
    for scheme in spec.schemes:
        mine = [r for r in rows if r["scheme"] == scheme]
        errors = [r["l2_error"] if r["status"] != "error" else math.inf for r in mine]
        rates = convergence_rates(errors) if len(errors) > 1 else []
        mine[0]["rate_l2"] = None
        for r, rate in zip(mine[1:], rates):
            r["rate_l2"] = rate
    return rows


def write_rows(rows, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([r["scheme"], r["n"], fmt(r["h"]), fmt(r["dt"]), fmt(r["l2_error"]),
                         fmt(r["h1_error"]), fmt(r.get("rate_l2")), r["status"]])


def write_solution(run, fh):
    """Nodal values as ``x,y,u`` rows, omega1 nodes first."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["x", "y", "u"])
    for side in Side:
        mesh = run.mesh(side)
        for (x, y), u in zip(mesh.nodes, run.state.u[side]):
            writer.writerow([repr(float(x)), repr(float(y)), f"{u:.10e}"])


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def cmd_run(opts):
    spec = build_spec(opts, single=True)
    cfg = spec.config(spec.schemes[0], spec.levels[0])
    run = run_simulation(cfg, spec.problem(), trace_log=opts["trace"])
    rep = error_report(run)
    print(f"scheme    {cfg.kind}")
    print(f"n         {cfg.n}")
    print(f"h         {fmt(1.0 / cfg.n)}")
    print(f"dt        {fmt(cfg.dt)}")
    print(f"steps     {run.steps_taken}/{cfg.steps}")
    print(f"t_final   {fmt(run.t_final)}")
    print(f"status    {run.status}")
    for side in Side:
        print(f"l2_{side.value}  {fmt(rep.l2[side.value])}")
    print(f"l2_error  {fmt(rep.l2_error)}")
    print(f"h1_error  {fmt(rep.h1_error)}")
    if opts["out"]:
        fh, close = _open_out(opts["out"])
        try:
            write_solution(run, fh)
        finally:
            if close:
                fh.close()
    if opts["figure"]:
        from .plotting import plot_solution
        plot_solution(run, opts["figure"])
    return EXIT_DIVERGED if run.status == DIVERGED else EXIT_OK


def cmd_convergence(opts):
    spec = build_spec(opts)
    if len(spec.levels) < 2:
        raise UsageError("convergence needs at least two levels")
    rows = sweep(spec, jobs=max(1, int(opts["jobs"])))
    fh, close = _open_out(opts["out"])
    try:
        write_rows(rows, fh)
    finally:
        if close:
            fh.close()
    if opts["figure"]:
        from .plotting import plot_convergence
        plot_convergence(rows, opts["figure"])
    if any(r["status"] == "error" for r in rows):
        return EXIT_ERROR
    if any(r["status"] == DIVERGED for r in rows):
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_dump_solution(opts):
    spec = build_spec(opts, single=True)
    run = run_simulation(spec.config(spec.schemes[0], spec.levels[0]), spec.problem())
    fh, close = _open_out(opts["out"])
    try:
        write_solution(run, fh)
    finally:
        if close:
            fh.close()
    if opts["figure"]:
        from .plotting import plot_solution
        plot_solution(run, opts["figure"])
    return EXIT_DIVERGED if run.status == DIVERGED else EXIT_OK


def cmd_verify_identity(opts):
    opts = dict(opts, scheme="coupled", lumped_coupled=True)
    spec = build_spec(opts, single=True)
    cfg = spec.config("coupled", spec.levels[0])
    run = run_simulation(cfg, spec.problem(), record_trajectory=True)
    residual = verify_inertial_identity(run.trajectory, run.disc)
    bound = 100 * cfg.solver_tol
    ok = residual <= bound
    print(f"n         {cfg.n}")
    print(f"steps     {run.steps_taken}")
    print(f"residual  {fmt(residual)}")
    print(f"bound     {fmt(bound)}")
    print(f"identity  {'holds' if ok else 'violated'}")
    return EXIT_OK if ok else EXIT_DIVERGED


COMMANDS = {
    "run": cmd_run,
    "convergence": cmd_convergence,
    "dump-solution": cmd_dump_solution,
    "verify-identity": cmd_verify_identity,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("experiment")
    g.add_argument("--config", help="JSON file with the same field names as the flags")
    g.add_argument("--scheme", help=f"scheme name, comma separated for sweeps ({', '.join(KINDS)})")
    g.add_argument("--n", type=int, help="mesh subdivisions per unit length")
    g.add_argument("--levels", help="comma separated n values for sweeps")
    g.add_argument("--dt-rule", dest="dt_rule", help="h2, h or fixed:<value>")
    g.add_argument("--T", type=float, help="final time")
    g.add_argument("--rho1", type=float)
    g.add_argument("--rho2", type=float)
    g.add_argument("--alpha1", type=float, help="Robin parameter on omega1 (rr only)")
    g.add_argument("--alpha2", type=float, help="Robin parameter on omega2 (rr only)")
    g.add_argument("--history-init", dest="history_init", choices=sorted(HISTORY_FLAGS))
    g.add_argument("--swap-roles", dest="swap_roles", action="store_true", default=None)
    g.add_argument("--lumped-coupled", dest="lumped_coupled", action="store_true", default=None)
    g.add_argument("--source", choices=["manufactured", "zero"])
    g.add_argument("--flux", choices=FLUXES, help="interface flux recovery")
    g.add_argument("--mesh", choices=PATTERNS, help="triangulation pattern")
    o = common.add_argument_group("output")
    o.add_argument("--out", help="CSV output path (default stdout)")
    o.add_argument("--figure", help="write a PNG figure to this path")
    o.add_argument("--trace", help="per-step trace CSV (run only)")
    o.add_argument("--jobs", type=int, help="parallel runs in sweeps")
    o.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="inertial-robin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("run", parents=[common], help="one scheme at one level")
    sub.add_parser("convergence", parents=[common], help="scheme x level sweep as CSV")
    sub.add_parser("dump-solution", parents=[common], help="final nodal values as x,y,u CSV")
    sub.add_parser("verify-identity", parents=[common],
                   help="check the discrete interface identity on a lumped coupled run")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = load_options(args)
        return COMMANDS[args.command](opts)
    except (UsageError, InvalidArgument, json.JSONDecodeError, OSError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SolverFailure as exc:
        print(f"{parser.prog}: solver failure: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
