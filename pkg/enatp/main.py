"""
Command-line entry point: experiments, sweeps, verification suites and worked examples.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical invariant violation.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from enatp.config import get_settings
from enatp.errors import EnatpError, InvariantViolationError
from enatp.experiment import load_config, run_experiment, run_sweep, summarize, write_records
from enatp.verification import SUITES, run_example, run_suite

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors with exit code 1."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    """Construct the argument parser with its four subcommands."""
    parser = _Parser(prog="enatp", description="Two-qubit weak-measurement simulations.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run an experiment described by a TOML file.")
    run.add_argument("--config", type=Path, required=True, help="Experiment TOML file.")
    run.add_argument("--out", type=Path, required=True, help="CSV output path.")

    sweep = sub.add_parser("sweep", help="Unknown-outcome decay grid over epsilon and rounds.")
    sweep.add_argument("--eps-min", type=float, default=0.0)
    sweep.add_argument("--eps-max", type=float, default=1.0)
    sweep.add_argument("--eps-steps", type=int, default=11)
    sweep.add_argument("--rounds-max", type=int, default=10)
    sweep.add_argument("--state", default="bell-phi-plus", help="State preset.")
    sweep.add_argument("--axis", type=float, nargs=3, default=[0.0, 0.0, 1.0], metavar=("NX", "NY", "NZ"))
    sweep.add_argument("--target", choices=["system", "environment", "both"], default="system")
    sweep.add_argument("--out", type=Path, required=True, help="CSV output path.")

    verify = sub.add_parser("verify", help="Run randomized verification suites.")
    verify.add_argument("--suite", choices=["all", *SUITES], default="all")
    verify.add_argument("--seed", type=int, default=7)
    verify.add_argument("--trials", type=int, default=50)

    examples = sub.add_parser("examples", help="Reproduce a worked example as JSON.")
    examples.add_argument("--which", choices=["1", "2", "3", "appendix"], required=True)
    examples.add_argument(
        "--param", action="append", default=[], metavar="KEY=VALUE", help="Override an example parameter."
    )
    return parser


def cmd_run(args: argparse.Namespace) -> int:
    """Run one configured experiment and write its CSV."""
    config = load_config(args.config)
    print(f"[RUN] {config.experiment_id}: {len(config.schedule)} schedule entries, mode={config.mode}")
    records = run_experiment(config, get_settings())
    write_records(records, args.out)
    stats = summarize(records)
    print(f"[RUN] ✓ Wrote {len(records)} rows to {args.out} (max abs error {stats['max_abs_error']:.3e})")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Write the ε × rounds grid."""
    settings = get_settings()
    print(
        f"[SWEEP] eps in [{args.eps_min}, {args.eps_max}] x {args.eps_steps}, "
        f"rounds 0..{args.rounds_max}, state={args.state}, target={args.target}"
    )
    records = run_sweep(
        args.eps_min,
        args.eps_max,
        args.eps_steps,
        args.rounds_max,
        state=args.state,
        axis=args.axis,
        target=args.target,
        workers=settings.workers,
        zero_tol=settings.concurrence_zero_tol,
    )
    write_records(records, args.out)
    stats = summarize(records)
    if stats["max_abs_error"] > settings.concurrence_zero_tol:
        print(f"[SWEEP] ✗ Closed-form deviation {stats['max_abs_error']:.3e}")
        return EXIT_INVARIANT
    print(f"[SWEEP] ✓ Wrote {len(records)} rows to {args.out} (max abs error {stats['max_abs_error']:.3e})")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    """Run suites and print one line per check."""
    settings = get_settings()
    reports = run_suite(args.suite, args.seed, args.trials, zero_tol=settings.concurrence_zero_tol)
    for report in reports:
        for check in report.checks:
            mark = "✓" if check.passed else "✗"
            detail = f" [{check.detail}]" if check.detail else ""
            print(f"[VERIFY] {mark} {report.suite}: {check.name} (margin {check.margin:.3e}){detail}")
    failed = [r.suite for r in reports if not r.passed]
    if failed:
        print(f"[VERIFY] ✗ Failed suites: {', '.join(failed)}")
        return EXIT_INVARIANT
    print(f"[VERIFY] ✓ All {len(reports)} suite(s) passed")
    return EXIT_OK


def cmd_examples(args: argparse.Namespace) -> int:
    """Print an example report as JSON."""
    params = {}
    for item in args.param:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"--param expects KEY=VALUE, got {item!r}")
        params[key.strip()] = float(value)
    settings = get_settings()
    report = run_example(
        args.which,
        params,
        zero_tol=settings.concurrence_zero_tol,
        ppt_tol=settings.ppt_tol,
        weakness_threshold=settings.weakness_threshold,
    )
    print(report.model_dump_json(indent=2))
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify, "examples": cmd_examples}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse ``argv`` and dispatch.

    Returns:
        Process exit code.
    """
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InvariantViolationError as exc:
        print(f"[ERROR] Invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (EnatpError, ValidationError, ValueError) as exc:
        print(f"[ERROR] {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"[ERROR] I/O failure: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
