#!/usr/bin/env python3
"""Compare the Bloch-sphere grid oracle with the Nelder-Mead optimizer.

Prints, for each two-qubit family, the grid and optimized values of the
product and both adaptive classes and their difference.

Usage: python3 scripts/oracle_crosscheck.py [--random N] [--n-polar P] [--n-azimuth A]
"""
import argparse
import sys

import numpy as np

from mifisher.hierarchy import hierarchy_report
from mifisher.matcore import BipartiteDims
from mifisher.oracle import grid_adaptive_fi, grid_product_fi
from mifisher.states import make_builtin, random_generator_family

BUILTINS = (("bell_phase", np.pi / 3), ("cossin", 0.7), ("cc_bernoulli", 0.3), ("plus_phase_times_zero", 0.4))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--random", type=int, default=2, help="number of random families to add")
    ap.add_argument("--n-polar", type=int, default=64)
    ap.add_argument("--n-azimuth", type=int, default=128)
    ap.add_argument("--tol", type=float, default=1e-3)
    args = ap.parse_args(argv)
    cases = [(name, make_builtin(name), theta) for name, theta in BUILTINS]
    for seed in range(args.random):
        cases.append((f"random(seed={seed})", random_generator_family(BipartiteDims(2, 2), np.random.default_rng(seed)), 0.5))
    grid = dict(n_polar=args.n_polar, n_azimuth=args.n_azimuth)
    worst = 0.0
    print(f"{'family':24s} {'class':14s} {'grid':>14s} {'optimized':>14s} {'diff':>10s}")
    for label, f, theta in cases:
        r = hierarchy_report(f, theta)
        rows = (
            ("product", grid_product_fi(f, theta, **grid).value, r.values["fi_product"]),
            ("adaptive a->b", grid_adaptive_fi(f, theta, "a->b", **grid).value, r.values["fi_adaptive_ab"]),
            ("adaptive b->a", grid_adaptive_fi(f, theta, "b->a", **grid).value, r.values["fi_adaptive_ba"]),
        )
        for cls, g, o in rows:
            worst = max(worst, abs(g - o))
            print(f"{label:24s} {cls:14s} {g:14.9f} {o:14.9f} {o - g:10.2e}")
    print(f"largest |grid - optimized| = {worst:.3e} (tolerance {args.tol:g})")
    return 0 if worst <= args.tol else 1


if __name__ == "__main__":
    sys.exit(main())
