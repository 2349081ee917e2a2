"""Run the acceptance suite and print one line per criterion.

Usage: python3 scripts/run_acceptance.py [--seed 1] [--criteria 1,2,3]
"""

import argparse
import sys

from lorentz_holes.acceptance import AcceptanceSettings, run_all


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--criteria", help="comma-separated subset")
    args = parser.parse_args()
    numbers = None if args.criteria is None else [int(k) for k in args.criteria.split(",")]
    results = run_all(AcceptanceSettings(seed=args.seed), numbers)
    for result in results:
        print(result.summary_line())
        for report in result.reports:
            print(f"  {report.name}: statistic={report.statistic:.6g} threshold={report.threshold} pass={report.passed}")
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
