"""Command-line interface for liftwatch."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

from .audit import ALL_CHECKS, run_audit
from .config import load_settings
from .errors import EXIT_INTERNAL, ParseError, UnknownSymbol, WatchdogError
from .lift import (
    critical_epsilons,
    critical_sweep,
    epsilon_eff,
    lift_rows,
    lift_table,
    watchdog_partition,
)
from .loader import (
    LIFT_HEADER,
    load_channel,
    load_experiment_config,
    load_joint,
    parse_float,
    parse_scenarios,
    save_channel,
    write_rows,
)
from .mechanism import build_mechanism, epsilon_c, output_stats
from .models import (
    DistributionSpec,
    ExperimentConfig,
    JointDistribution,
    MechanismMode,
    Partition,
    RelaxationParams,
    ReportMethod,
    format_number,
)
from .relaxation import brute_force_partition, greedy_partition, privacy_report
from .sanitize import sanitize_stream
from .simulation import run_experiment, write_cdf_files, write_summary

logger = logging.getLogger(__name__)


def _number(text: str) -> float:
    try:
        return parse_float(text)
    except ParseError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _emit(args: argparse.Namespace, payload: Any) -> None:
    """Write a JSON payload to --output or stdout."""
    text = json.dumps(payload, indent=2)
    if getattr(args, "output", None):
        path = Path(args.output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _indices(joint: JointDistribution, labels: str) -> list[int]:
    lookup = {label: i for i, label in enumerate(joint.x_labels)}
    indices = []
    for label in (part.strip() for part in labels.split(",")):
        if not label:
            continue
        if label not in lookup:
            raise UnknownSymbol(f"{label!r} is not an X label (have {list(joint.x_labels)})")
        indices.append(lookup[label])
    return indices


def _params(args: argparse.Namespace) -> RelaxationParams:
    return RelaxationParams(eps=args.epsilon, delta=args.delta, eps_bar=args.epsilon_bar)


def cmd_validate(args: argparse.Namespace) -> int:
    """Load a joint and print its marginals."""
    joint = load_joint(Path(args.joint))
    _emit(
        args,
        {
            "n_s": joint.n_s,
            "n_x": joint.n_x,
            "p_s": {label: format_number(p) for label, p in zip(joint.s_labels, joint.p_s)},
            "p_x": {label: format_number(p) for label, p in zip(joint.x_labels, joint.p_x)},
        },
    )
    return 0


def cmd_lift(args: argparse.Namespace) -> int:
    """Emit the lift table, per-symbol maxima and the critical ladder."""
    joint = load_joint(Path(args.joint))
    table = lift_table(joint)
    rows = lift_rows(joint, table)
    payload: dict[str, Any] = {
        "lifts": [{"s": s, "x": x, "lift": format_number(value)} for s, x, value in rows],
        "eps_x": {label: format_number(v) for label, v in zip(joint.x_labels, table.eps_x)},
        "ladder": critical_epsilons(joint, table).to_dict(joint.x_labels),
    }
    if args.sweep:
        payload["sweep"] = [point.to_dict(joint.x_labels) for point in critical_sweep(joint)]
    if args.rows:
        write_rows(Path(args.rows), LIFT_HEADER, rows)
        logger.info("lift rows saved to %s", args.rows)
    _emit(args, payload)
    return 0


def cmd_partition(args: argparse.Namespace) -> int:
    """Emit the watchdog partition for --epsilon."""
    joint = load_joint(Path(args.joint))
    partition = watchdog_partition(joint, args.epsilon)
    payload = partition.to_dict(joint.x_labels)
    payload["eps"] = format_number(args.epsilon)
    payload["eps_c"] = format_number(epsilon_c(joint, args.epsilon))
    payload["eps_eff"] = format_number(epsilon_eff(joint, partition))
    _emit(args, payload)
    return 0


def cmd_mechanism(args: argparse.Namespace) -> int:
    """Emit the X-invariant channel for --epsilon and --mode."""
    joint = load_joint(Path(args.joint))
    partition = watchdog_partition(joint, args.epsilon)
    r = [parse_float(v) for v in args.r.split(",")] if args.r else None
    mech = build_mechanism(joint, partition, MechanismMode(args.mode), r)
    stats = output_stats(joint, mech)

    payload = mech.to_dict()
    payload["p_y"] = {joint.x_labels[y]: format_number(stats.p_y[y]) for y in stats.reachable}
    payload["max_abs_lift_randomized"] = format_number(stats.max_abs_lift_randomized)
    payload["max_abs_lift"] = format_number(stats.max_abs_lift)
    if args.save:
        save_channel(mech, Path(args.save))
        logger.info("channel saved to %s", args.save)
    _emit(args, payload)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    """Emit a PrivacyReport for a given partition or the watchdog's."""
    joint = load_joint(Path(args.joint))
    if args.randomized is not None:
        partition = Partition.from_randomized(joint.n_x, _indices(joint, args.randomized))
        method = ReportMethod.GIVEN
    else:
        partition = watchdog_partition(joint, args.epsilon)
        method = ReportMethod.WATCHDOG
    report = privacy_report(
        joint, partition, args.epsilon, args.delta, args.epsilon_bar, method=method
    )
    _emit(args, report.to_dict())
    return 0


def cmd_greedy(args: argparse.Namespace) -> int:
    """Run the greedy (eps, delta) partitioner."""
    joint = load_joint(Path(args.joint))
    _emit(args, greedy_partition(joint, _params(args)).to_dict())
    return 0


def cmd_bruteforce(args: argparse.Namespace) -> int:
    """Run the exhaustive oracle."""
    joint = load_joint(Path(args.joint))
    report = brute_force_partition(
        joint,
        _params(args),
        cap_eps_bar=not args.no_eps_bar_cap,
        jobs=args.jobs or load_settings().jobs,
    )
    _emit(args, report.to_dict())
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run a Monte Carlo experiment and write CDF and summary files."""
    if args.config:
        config = load_experiment_config(Path(args.config))
    else:
        config = ExperimentConfig(
            n_trials=args.trials,
            dist_spec=DistributionSpec(args.ns, args.nx, args.seed),
            scenarios=parse_scenarios(args.scenarios),
            overflow_cap=args.overflow_cap,
            name=args.scenarios if ":" not in args.scenarios else "experiment",
        )

    result = run_experiment(
        config,
        jobs=args.jobs or load_settings().jobs,
        progress=not args.no_progress and sys.stderr.isatty(),
    )
    out_dir = Path(args.out_dir)
    paths = write_cdf_files(result, out_dir)
    summary_path = write_summary(result, out_dir / "summary.json")
    logger.info("wrote %s and %s", [str(p) for p in paths], summary_path)
    _emit(args, json.loads(summary_path.read_text(encoding="utf-8")))
    return 0


def cmd_sanitize(args: argparse.Namespace) -> int:
    """Apply a stored channel to a stream of X labels, one per line."""
    labels, channel = load_channel(Path(args.channel))
    if args.input:
        if not Path(args.input).exists():
            raise ParseError(f"file not found: {args.input}")
        text = Path(args.input).read_text(encoding="utf-8")
    else:
        text = sys.stdin.read()
    symbols = [line.strip() for line in text.splitlines() if line.strip()]
    outputs = sanitize_stream(channel, labels, symbols, args.seed)

    lines = "".join(f"{y}\n" for y in outputs)
    if args.output:
        Path(args.output).write_text(lines, encoding="utf-8")
    else:
        sys.stdout.write(lines)
    return 0


def cmd_audit(args: argparse.Namespace) -> int:
    """Run the property audit; exit 5 when any check is violated."""
    checks = [c.strip() for c in args.checks.split(",")] if args.checks else None
    report = run_audit(
        checks=checks,
        n_instances=args.instances,
        n_s=args.ns,
        n_x=args.nx,
        seed=args.seed,
        n_channels=args.channels,
        progress=not args.no_progress and sys.stderr.isatty(),
    )
    _emit(args, report.to_dict())
    return 0 if report.passed else EXIT_INTERNAL


def _configure_logging(verbosity: int) -> None:
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = getattr(logging, load_settings().log_level, logging.WARNING)
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )


def _add_joint(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("joint", help="Joint distribution file (.csv, .tsv, .json, .yaml)")


def _add_output(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--output", "-o", help="Write the result to this file (default: stdout)"
    )


def _add_relaxation(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epsilon", "-e", type=_number, required=True, help="Privacy threshold eps")
    parser.add_argument("--delta", "-d", type=_number, required=True, help="Breach probability budget")
    parser.add_argument(
        "--epsilon-bar",
        type=_number,
        default=float("inf"),
        help='Hard cap on every abs-log-lift, a number or "inf" (default: inf)',
    )


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser."""
    parser = argparse.ArgumentParser(
        prog="liftwatch",
        description="liftwatch: log-lift privacy watchdog mechanisms and experiments",
    )
    parser.add_argument(
        "--verbose", "-v", action="count", default=0, help="-v for INFO, -vv for DEBUG"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # validate command
    validate_parser = subparsers.add_parser("validate", help="Validate a joint distribution")
    _add_joint(validate_parser)
    _add_output(validate_parser)
    validate_parser.set_defaults(func=cmd_validate)

    # lift command
    lift_parser = subparsers.add_parser("lift", help="Lift table and critical values")
    _add_joint(lift_parser)
    _add_output(lift_parser)
    lift_parser.add_argument(
        "--sweep", action="store_true", help="Include the critical-value tradeoff sweep"
    )
    lift_parser.add_argument(
        "--rows", help="Also write (s, x, lift) rows as delimited text (.csv, or tab-separated)"
    )
    lift_parser.set_defaults(func=cmd_lift)

    # partition command
    partition_parser = subparsers.add_parser("partition", help="Watchdog partition")
    _add_joint(partition_parser)
    _add_output(partition_parser)
    partition_parser.add_argument("--epsilon", "-e", type=_number, required=True)
    partition_parser.set_defaults(func=cmd_partition)

    # mechanism command
    mechanism_parser = subparsers.add_parser("mechanism", help="X-invariant release channel")
    _add_joint(mechanism_parser)
    _add_output(mechanism_parser)
    mechanism_parser.add_argument("--epsilon", "-e", type=_number, required=True)
    mechanism_parser.add_argument(
        "--mode",
        "-m",
        choices=[m.value for m in MechanismMode],
        default=MechanismMode.UNIFORM.value,
        help="R(y) choice (default: uniform)",
    )
    mechanism_parser.add_argument(
        "--r", help="Comma-separated R(y) over the randomized set (custom mode)"
    )
    mechanism_parser.add_argument(
        "--save",
        help="Also write the channel for sanitize: (x, y, probability) rows, or the full object for .json/.yaml",
    )
    mechanism_parser.set_defaults(func=cmd_mechanism)

    # report command
    report_parser = subparsers.add_parser("report", help="Privacy and utility of a partition")
    _add_joint(report_parser)
    _add_output(report_parser)
    report_parser.add_argument("--epsilon", "-e", type=_number, required=True)
    report_parser.add_argument("--delta", "-d", type=_number, default=0.0)
    report_parser.add_argument("--epsilon-bar", type=_number, default=float("inf"))
    report_parser.add_argument(
        "--randomized",
        "-r",
        help="Comma-separated X labels to randomize (default: the watchdog's set)",
    )
    report_parser.set_defaults(func=cmd_report)

    # greedy command
    greedy_parser = subparsers.add_parser("greedy", help="Greedy (eps, delta) partition")
    _add_joint(greedy_parser)
    _add_output(greedy_parser)
    _add_relaxation(greedy_parser)
    greedy_parser.set_defaults(func=cmd_greedy)

    # bruteforce command
    bruteforce_parser = subparsers.add_parser("bruteforce", help="Exhaustive optimal partition")
    _add_joint(bruteforce_parser)
    _add_output(bruteforce_parser)
    _add_relaxation(bruteforce_parser)
    bruteforce_parser.add_argument(
        "--no-eps-bar-cap",
        action="store_true",
        help="Search the delta-feasible family without the eps_bar cap",
    )
    bruteforce_parser.add_argument("--jobs", "-j", type=int, default=None)
    bruteforce_parser.set_defaults(func=cmd_bruteforce)

    # simulate command
    simulate_parser = subparsers.add_parser("simulate", help="Monte Carlo CDF experiment")
    _add_output(simulate_parser)
    simulate_parser.add_argument("--config", "-c", help="Experiment YAML file")
    simulate_parser.add_argument("--trials", "-n", type=int, default=5000)
    simulate_parser.add_argument("--ns", type=int, default=15, help="|S| (default: 15)")
    simulate_parser.add_argument("--nx", type=int, default=20, help="|X| (default: 20)")
    simulate_parser.add_argument("--seed", type=int, default=1)
    simulate_parser.add_argument(
        "--scenarios",
        "-s",
        default="max-lift",
        help="Preset name or eps:delta[:eps_bar],... (default: max-lift)",
    )
    simulate_parser.add_argument(
        "--overflow-cap",
        type=_number,
        default=None,
        help="Record infinite lifts at this value instead of counting them",
    )
    simulate_parser.add_argument(
        "--out-dir", default="./results", help="CDF and summary directory (default: ./results)"
    )
    simulate_parser.add_argument("--jobs", "-j", type=int, default=None)
    simulate_parser.add_argument("--no-progress", action="store_true")
    simulate_parser.set_defaults(func=cmd_simulate)

    # sanitize command
    sanitize_parser = subparsers.add_parser("sanitize", help="Apply a channel to X symbols")
    sanitize_parser.add_argument("--channel", required=True, help="Channel file from mechanism --save")
    sanitize_parser.add_argument("--input", "-i", help="One X label per line (default: stdin)")
    sanitize_parser.add_argument("--output", "-o", help="Output file (default: stdout)")
    sanitize_parser.add_argument("--seed", type=int, default=0)
    sanitize_parser.set_defaults(func=cmd_sanitize)

    # audit command
    audit_parser = subparsers.add_parser("audit", help="Property checks on random instances")
    _add_output(audit_parser)
    audit_parser.add_argument(
        "--checks", help=f"Comma-separated subset of: {', '.join(ALL_CHECKS)}"
    )
    audit_parser.add_argument("--instances", type=int, default=200)
    audit_parser.add_argument("--ns", type=int, default=6)
    audit_parser.add_argument("--nx", type=int, default=10)
    audit_parser.add_argument("--seed", type=int, default=1)
    audit_parser.add_argument("--channels", type=int, default=200)
    audit_parser.add_argument("--no-progress", action="store_true")
    audit_parser.set_defaults(func=cmd_audit)

    return parser


def main(argv: list[str] | None = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except WatchdogError as e:
        print(json.dumps({"error": e.category, "message": str(e)}), file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.debug("unhandled error", exc_info=True)
        print(json.dumps({"error": "internal", "message": str(e)}), file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
