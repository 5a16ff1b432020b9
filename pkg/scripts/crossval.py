"""Oracle vs coupled engine on small tori, and the alpha = 0 urn check.

    python3 scripts/crossval.py --runs 10000
"""
import argparse

from lrcomp.experiments import DEFAULT_SEED, builtin_scenario, compare_engines, crossval_settings, run_scenario
from lrcomp.seeding import derive_stream

ap = argparse.ArgumentParser()
ap.add_argument("--runs", type=int, default=10_000)
ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
args = ap.parse_args()

block = 0
for d, m in ((1, 7), (2, 5)):
    for label, params in crossval_settings(d):
        out = compare_engines(params.with_m(m), args.runs, derive_stream(args.seed, block))
        print(f"d={d} m={m} {label:<28s} chi2={out['chi2']:8.3f}  p={out['p_value']:.4f}")
        block += 1
rep = run_scenario(builtin_scenario("urn-crossval", runs=args.runs, seed=args.seed))
print(f"urn vs coupled n=25             chi2={rep.statistics['chi2']:8.3f}  p={rep.statistics['p_value']:.4f}")
