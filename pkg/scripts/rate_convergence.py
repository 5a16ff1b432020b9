"""Relative error of R_n / n^(1 - alpha/d) against the limit constant.

    python3 scripts/rate_convergence.py --d 2 --alpha 1 --p inf
"""
import argparse
import math

from lrcomp.experiments import check_rate_convergence
from lrcomp.rates import limit_constant

ap = argparse.ArgumentParser()
ap.add_argument("--d", type=int, default=2)
ap.add_argument("--alpha", type=float, default=1.0)
ap.add_argument("--p", type=float, default=math.inf)
ap.add_argument("--n", type=int, nargs="+", default=[10**3, 10**4, 10**5, 10**6])
args = ap.parse_args()

print(f"limit R({args.alpha}, {args.d}, {args.p}) = {limit_constant(args.alpha, args.d, args.p):.10f}")
for n, err in zip(args.n, check_rate_convergence(args.alpha, args.d, args.p, args.n)):
    print(f"n={n:>9d}  rel_error={err:.3e}")
