"""Command-line entry point.

    conelab <check|spectral|cumulants|edgeworth|berry-esseen|ldp|llt>
            --config <path> [--seed N] [--out DIR]

Exit codes: 0 all enabled checks pass their stated tolerances, 1 a comparison
check failed, 2 configuration or condition failure. Worker count comes from
the CONELAB_WORKERS environment variable (default 1).
"""
from __future__ import annotations

import argparse
import os
import sys

from . import harness
from .errors import ConditionViolationError, ConfigError, ConelabError
from .ratefn import export_cumulants_csv, export_legendre_csv
from .spectral import dump_spectral_csv


def _write_reports(named_reports, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    for name, report in named_reports:
        path = os.path.join(out_dir, f"{name}.csv")
        harness.emit_report(report, path)
        print(f"wrote {path}")


def _print_report(report):
    print(",".join(report.columns))
    for row in report.rows:
        print(",".join(harness._fmt(x) for x in row))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="conelab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("check", "spectral", "cumulants", "edgeworth", "berry-esseen", "ldp", "llt"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="output directory for CSV reports")
    args = parser.parse_args(argv)

    try:
        config = harness.parse_config(args.config)
        if args.seed is not None:
            config.seed = args.seed
        if args.out is not None:
            config.out_dir = args.out

        if args.command == "check":
            reports, code = harness.cmd_check(config)
        elif args.command == "spectral":
            reports, code, sols = harness.cmd_spectral(config)
        elif args.command == "cumulants":
            reports, code, table = harness.cmd_cumulants(config)
        elif args.command == "edgeworth":
            reports, code = harness.cmd_edgeworth(config)
        elif args.command == "berry-esseen":
            reports, code = harness.cmd_berry_esseen(config)
        elif args.command == "ldp":
            reports, code = harness.cmd_ldp(config)
        else:
            reports, code = harness.cmd_llt(config)

        if config.out_dir:
            _write_reports(reports, config.out_dir)
            if args.command == "spectral":
                for sol in sols:
                    dump_spectral_csv(
                        sol, os.path.join(config.out_dir, f"spectral_s{sol.s:+.4f}.csv")
                    )
            if args.command == "cumulants":
                export_cumulants_csv(table, os.path.join(config.out_dir, "lambda_curve.csv"))
                interior = table.s_samples[2:-2]
                qs = [table.dLam(float(s), 1) for s in interior]
                export_legendre_csv(table, qs, os.path.join(config.out_dir, "legendre.csv"))
        else:
            for _, report in reports:
                _print_report(report)
        return code
    except (ConfigError, ConditionViolationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConelabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
