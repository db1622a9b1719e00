# sdk/cli.py

import argparse
import csv
import io
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, Field

from backend.core.normbound import __version__
from backend.core.normbound.extremal import (ConstructionError, OddCaseSweep, auto_schedule,
                                             deviation_at_zero, extremal_even, odd_case_sweep,
                                             verify_half_bound)
from backend.core.normbound.hermite import RootFindingError
from backend.core.normbound.moments import lindsay_bound
from backend.core.normbound.optimization.lp_oracle import (GridLP, GridSpacing, LPStatus, build_grid,
                                                          solve_lp, symmetry_report)
from backend.core.normbound.settings import (DEFAULT_TOLERANCES, MAX_EVEN_K, VERIFY_KMAX_RANGE,
                                             Tolerances, configure_logging)
from backend.core.normbound.utils import (format_decimal, format_rational, format_scientific,
                                          parse_float_list, rounded, significant)
from backend.core.normbound.verification import run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FAILED = 3


class CommandMeta(BaseModel):
    name: str
    parameters: Dict[str, Any]
    version: str = __version__


class BoundPayload(BaseModel):
    rational: str
    decimal: float


class DistributionPayload(BaseModel):
    p0: float
    r_star: float
    deviation: float
    nodes: List[float]
    masses: List[float]


class CheckPayload(BaseModel):
    name: str
    passed: bool = Field(serialization_alias="pass")
    residual: float


class SweepRecordPayload(BaseModel):
    largest_node_square: float
    feasible: bool
    p0: Optional[float] = None
    r_star: Optional[float] = None
    tail_mass: Optional[float] = None
    tail_bound: Optional[float] = None
    moment_residual: Optional[float] = None
    partial_largest: Optional[float] = None
    constrained_slope: Optional[float] = None
    free_squares: List[float] = []
    masses: List[float] = []
    diagnostics: str = ""


class OutputRecord(BaseModel):
    """Machine-readable result of one command."""
    meta: CommandMeta
    distribution: Optional[DistributionPayload] = None
    bound: Optional[BoundPayload] = None
    deviation_bound: Optional[BoundPayload] = None
    checks: List[CheckPayload] = []
    records: Optional[List[SweepRecordPayload]] = None

    def render(self) -> str:
        return self.model_dump_json(indent=2, by_alias=True, exclude_none=True) + "\n"


def bound_payload(value) -> BoundPayload:
    return BoundPayload(rational=format_rational(value), decimal=significant(value))


def _finite(value: float, digits: Optional[int] = None) -> Optional[float]:
    if math.isnan(value):
        return None
    return value if digits is None else significant(value, digits)


def emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
        print(f"Output saved to: {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def tolerances_from(args: argparse.Namespace) -> Tolerances:
    return DEFAULT_TOLERANCES.with_overrides(
        root_tolerance=getattr(args, "tol", None),
        condition_cap=args.cond_cap,
    )


def cmd_bound(args: argparse.Namespace) -> int:
    bound = lindsay_bound(args.k)
    if args.format == "json":
        record = OutputRecord(
            meta=CommandMeta(name="bound", parameters={"k": args.k}),
            bound=bound_payload(bound),
            deviation_bound=bound_payload(bound / 2),
        )
        emit(record.render(), args.out)
    else:
        lines = [
            f"k {args.k}",
            f"bound {format_rational(bound)} {format_decimal(bound)}",
            f"deviation {format_rational(bound / 2)} {format_decimal(bound / 2)}",
        ]
        emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_extremal(args: argparse.Namespace) -> int:
    tolerances = tolerances_from(args)
    d = extremal_even(args.k, tolerances=tolerances)
    report = verify_half_bound(args.k, tolerances, distribution=d)

    if args.format == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["node", "mass"])
        for location, mass in d.atoms():
            writer.writerow([format_decimal(location), format_decimal(mass)])
        emit(buffer.getvalue(), args.out)
    else:
        atoms = d.atoms()
        record = OutputRecord(
            meta=CommandMeta(name="extremal", parameters={"k": args.k, "tol": tolerances.root_tolerance}),
            distribution=DistributionPayload(
                p0=significant(d.p0),
                r_star=significant(d.r_star),
                deviation=significant(deviation_at_zero(d)),
                nodes=rounded([location for location, _ in atoms]),
                masses=rounded([mass for _, mass in atoms]),
            ),
            bound=bound_payload(report.bound),
            checks=[CheckPayload(name=c.name, passed=c.passed, residual=c.residual) for c in report.checks],
        )
        emit(record.render(), args.out)
    return EXIT_OK if report.passed else EXIT_FAILED


SWEEP_COLUMNS = ["largest_node_square", "largest_node", "feasible", "p0", "r_star", "tail_mass",
                 "tail_bound", "moment_residual", "partial_largest", "constrained_slope",
                 "free_squares", "masses", "diagnostics"]


def sweep_csv(sweep: OddCaseSweep) -> str:
    buffer = io.StringIO()
    buffer.write(f"# k={sweep.k} target_bound={format_rational(sweep.target_bound)} "
                 f"target_decimal={format_decimal(sweep.target_bound)}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in sweep.records:
        writer.writerow([
            format_scientific(r.largest_square), format_decimal(r.largest_node), int(r.feasible),
            format_decimal(r.p0), format_decimal(r.r_star), format_scientific(r.tail_mass),
            format_scientific(r.tail_bound), format_scientific(r.moment_residual),
            format_scientific(r.partial_largest), format_scientific(r.constrained_slope),
            ";".join(format_scientific(u) for u in r.free_squares),
            ";".join(format_scientific(q) for q in r.masses),
            r.diagnostics,
        ])
    return buffer.getvalue()


def sweep_record(sweep: OddCaseSweep, parameters: Dict[str, Any]) -> OutputRecord:
    records = [
        SweepRecordPayload(
            largest_node_square=r.largest_square,
            feasible=r.feasible,
            p0=_finite(r.p0, 15),
            r_star=_finite(r.r_star, 15),
            tail_mass=_finite(r.tail_mass),
            tail_bound=_finite(r.tail_bound),
            moment_residual=_finite(r.moment_residual),
            partial_largest=_finite(r.partial_largest),
            constrained_slope=_finite(r.constrained_slope),
            free_squares=list(r.free_squares),
            masses=list(r.masses),
            diagnostics=r.diagnostics,
        )
        for r in sweep.records
    ]
    return OutputRecord(meta=CommandMeta(name="odd-limit", parameters=parameters),
                        bound=bound_payload(sweep.target_bound), records=records)


def cmd_odd_limit(args: argparse.Namespace) -> int:
    tolerances = tolerances_from(args)
    schedule = args.schedule if args.schedule is not None else auto_schedule(args.k, args.auto)
    sweep = odd_case_sweep(args.k, schedule, tolerances, max_workers=args.workers)
    if args.format == "json":
        emit(sweep_record(sweep, {"k": args.k, "schedule": list(sweep.schedule)}).render(), args.out)
    else:
        emit(sweep_csv(sweep), args.out)
    return EXIT_OK if sweep.feasible_records() else EXIT_FAILED


def cmd_lp(args: argparse.Namespace) -> int:
    tolerances = tolerances_from(args)
    include: Sequence[float] = ()
    if args.include_extremal_nodes:
        include = extremal_even(args.k, tolerances=tolerances).positive_nodes
    problem = GridLP.for_moments(build_grid(args.extent, args.count, include, GridSpacing(args.spacing)), args.k)
    solution = solve_lp(problem, tolerances)
    bound = lindsay_bound(args.k if args.k % 2 == 0 else args.k - 1)

    lines = [f"status {solution.status.value}", f"grid_points {len(problem.grid)}",
             f"bound {format_rational(bound)} {format_decimal(bound)}"]
    if solution.status is not LPStatus.OPTIMAL:
        emit("\n".join(lines) + "\n", args.out)
        return EXIT_FAILED

    report = symmetry_report(solution, tolerances)
    lines += [
        f"objective {format_decimal(solution.objective)}",
        f"residual {format_scientific(solution.residual)}",
        "active_support " + " ".join(format_decimal(x) for x in solution.active_support),
        f"symmetry raw={format_scientific(report.raw_asymmetry)} "
        f"final={format_scientific(report.asymmetry)} "
        f"averaged={'yes' if report.symmetrized else 'no'} "
        f"{'PASS' if report.passed else 'FAIL'}",
    ]
    emit("\n".join(lines) + "\n", args.out)
    if solution.objective > float(bound) + 1e-9:
        logger.error("LP objective %.15f exceeds the bound %s", solution.objective, format_rational(bound))
        return EXIT_FAILED
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    rows = run_suite(args.kmax, tolerances_from(args))
    passed = sum(row.passed for row in rows)
    if args.format == "json":
        record = OutputRecord(
            meta=CommandMeta(name="verify", parameters={"kmax": args.kmax}),
            checks=[CheckPayload(name=r.name, passed=r.passed, residual=r.residual) for r in rows],
        )
        emit(record.render(), args.out)
    else:
        lines = [f"{'check':<28} {'status':<6} residual"]
        lines += [f"{r.name:<28} {'PASS' if r.passed else 'FAIL':<6} {r.residual:.3e}" for r in rows]
        lines.append(f"{passed}/{len(rows)} passed")
        emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if passed == len(rows) else EXIT_FAILED


def _schedule(text: str) -> List[float]:
    try:
        return parse_float_list(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="Write output to PATH instead of stdout")
    common.add_argument("-v", "--verbose", action="count", default=0, help="More logging (repeatable)")
    common.add_argument("--cond-cap", type=float, default=None,
                        help="Condition estimate above which solves attach a warning")

    parser = argparse.ArgumentParser(prog="normbound",
                                     description="Worst-case normal c.d.f. deviation at zero under moment matching")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command")

    bound_parser = subparsers.add_parser("bound", parents=[common], help="Exact bound for even k")
    bound_parser.add_argument("k", type=int, help="Number of matched even moments (even)")
    bound_parser.add_argument("--format", choices=["text", "json"], default="text")

    extremal_parser = subparsers.add_parser("extremal", parents=[common], help="Least-favorable distribution")
    extremal_parser.add_argument("k", type=int, help="Number of matched even moments (even)")
    extremal_parser.add_argument("--format", choices=["json", "csv"], default="json")
    extremal_parser.add_argument("--tol", type=float, default=None, help="Root tolerance")

    odd_parser = subparsers.add_parser("odd-limit", parents=[common], help="Odd-k escape-to-infinity sweep")
    odd_parser.add_argument("k", type=int, help="Number of matched even moments (odd, >= 3)")
    schedule_group = odd_parser.add_mutually_exclusive_group()
    schedule_group.add_argument("--schedule", type=_schedule, default=None,
                                help="Comma-separated increasing largest node squares")
    schedule_group.add_argument("--auto", type=int, default=12, help="Length of the automatic schedule")
    odd_parser.add_argument("--format", choices=["csv", "json"], default="csv")
    odd_parser.add_argument("--workers", type=int, default=1)
    odd_parser.add_argument("--tol", type=float, default=None, help="Root tolerance")

    lp_parser = subparsers.add_parser("lp", parents=[common], help="Grid linear program oracle")
    lp_parser.add_argument("k", type=int, help="Match moments M_1..M_2k")
    lp_parser.add_argument("--extent", type=float, default=5.0)
    lp_parser.add_argument("--count", type=int, default=40)
    lp_parser.add_argument("--include-extremal-nodes", action="store_true")
    lp_parser.add_argument("--spacing", choices=[s.value for s in GridSpacing], default=GridSpacing.UNIFORM.value)

    verify_parser = subparsers.add_parser("verify", parents=[common], help="Run the invariant suite")
    verify_parser.add_argument("--kmax", type=int, default=8)
    verify_parser.add_argument("--format", choices=["table", "json"], default="table")
    return parser


def validate(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    """Usage errors exit with status 2 through parser.error."""
    command = args.command
    if command in ("bound", "extremal"):
        if args.k < 2 or args.k % 2:
            hint = "; use `odd-limit` for the limiting sweep" if args.k >= 3 else ""
            parser.error(f"{command} needs an even k >= 2, got {args.k} (for odd k no distribution "
                         f"attains the supremum){hint}")
        if args.k > MAX_EVEN_K:
            parser.error(f"k must be at most {MAX_EVEN_K}, got {args.k}")
    elif command == "odd-limit":
        if args.k % 2 == 0:
            parser.error(f"odd-limit needs an odd k, got {args.k}; even k has an exact answer, see `extremal`")
        if args.k < 3:
            parser.error(f"odd-limit needs k >= 3, got {args.k}")
        if args.schedule is None and args.auto < 2:
            parser.error("--auto needs at least 2 entries")
        if args.workers < 1:
            parser.error("--workers must be at least 1")
    elif command == "lp":
        if args.k < 2:
            parser.error(f"lp needs k >= 2, got {args.k}")
        if args.extent <= 0 or args.count < 3:
            parser.error("--extent must be positive and --count at least 3")
        if args.include_extremal_nodes and (args.k % 2 or args.k > MAX_EVEN_K):
            parser.error("--include-extremal-nodes needs an even k")
    elif command == "verify":
        low, high = VERIFY_KMAX_RANGE
        if not low <= args.kmax <= high:
            parser.error(f"--kmax must lie in [{low}, {high}], got {args.kmax}")
    for name in ("tol", "cond_cap"):
        value = getattr(args, name, None)
        if value is not None and value <= 0:
            parser.error(f"--{name.replace('_', '-')} must be positive")


COMMANDS = {
    "bound": cmd_bound,
    "extremal": cmd_extremal,
    "odd-limit": cmd_odd_limit,
    "lp": cmd_lp,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE
    validate(parser, args)
    configure_logging(args.verbose)

    try:
        return COMMANDS[args.command](args)
    except ValueError as exc:
        # bad schedules and similar surface from the core as ValueError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RootFindingError, ConstructionError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
