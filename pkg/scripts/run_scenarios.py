"""Run built-in scenarios and write runs.csv / report.json per scenario.

    python3 scripts/run_scenarios.py case-iii case-iv --runs 500 --out results/
"""
import argparse
import sys
from pathlib import Path

from lrcomp.experiments import BUILTIN_SCENARIOS, DEFAULT_SEED, builtin_scenario, run_scenario
from lrcomp.output import write_results


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("names", nargs="*", default=list(BUILTIN_SCENARIOS))
    ap.add_argument("--runs", type=int)
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap.add_argument("--out", default="results")
    ap.add_argument("--threads", type=int)
    args = ap.parse_args()
    failed = 0
    for name in args.names:
        spec = builtin_scenario(name, runs=args.runs, seed=args.seed)
        report = run_scenario(spec, threads=args.threads)
        out = Path(args.out) / name
        if report.results:
            write_results(report, out / "runs.csv", "csv")
        write_results(report, out / "report.json", "json")
        print(report.summary_line(), flush=True)
        failed += not report.passed
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
