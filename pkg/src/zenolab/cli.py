"""Command line front end.

Exit codes: 0 success, 1 at least one embedded check failed,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import sys

from ._version import __version__
from .scenario import ScenarioError, load_scenario, run, verify

USAGE_ERROR = 2
CHECK_FAILURE = 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zenolab",
        description="Run monitored-evolution scenarios from YAML files.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--out", default=None, metavar="DIR", help="output directory")
        p.add_argument(
            "--threads",
            type=int,
            default=1,
            metavar="K",
            help="worker threads for Monte Carlo sampling (results do not depend on K)",
        )

    run_p = sub.add_parser("run", help="run one scenario file")
    run_p.add_argument("scenario", help="scenario YAML file")
    common(run_p)

    verify_p = sub.add_parser("verify", help="run every scenario in a directory")
    verify_p.add_argument("directory", help="directory of scenario YAML files")
    common(verify_p)

    sweep_p = sub.add_parser("sweep", help="run a rate_sweep scenario file")
    sweep_p.add_argument("scenario", help="scenario YAML file of kind rate_sweep")
    common(sweep_p)
    return parser


def _print_report(report) -> None:
    print(f"scenario {report.scenario_name} ({report.kind}) in {report.wall_time_s:.2f} s")
    for key in sorted(report.quantities):
        print(f"  {key} = {report.quantities[key]!r}")
    for check in report.checks:
        status = "PASS" if check["passed"] else "FAIL"
        detail = check.get("detail", "")
        print(f"  [{status}] {check['name']}: {detail}")
    for artifact in report.artifacts:
        print(f"  wrote {artifact}")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return USAGE_ERROR

    try:
        if args.command in ("run", "sweep"):
            scenario = load_scenario(args.scenario)
            if args.command == "sweep" and scenario.kind != "rate_sweep":
                print(
                    f"error: {args.scenario}: sweep needs kind rate_sweep, got {scenario.kind}",
                    file=sys.stderr,
                )
                return USAGE_ERROR
            report = run(scenario, out_dir=args.out, seed_override=args.seed, threads=args.threads)
            _print_report(report)
            if not report.all_checks_passed:
                return CHECK_FAILURE
            return 0
        reports, all_passed = verify(
            args.directory, out_dir=args.out, seed_override=args.seed, threads=args.threads
        )
        failed = 0
        for path, report in reports:
            for check in report.checks:
                status = "PASS" if check["passed"] else "FAIL"
                if not check["passed"]:
                    failed += 1
                print(f"[{status}] {path}: {check['name']}: {check.get('detail', '')}")
        print(f"{len(reports)} scenario(s), {failed} failed check(s)")
        return 0 if all_passed else CHECK_FAILURE
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
