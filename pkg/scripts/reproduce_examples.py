#!/usr/bin/env python3
"""Run every named example and print a one-line verdict for each.

Usage: python3 scripts/reproduce_examples.py [--starts N] [--seed S]
"""
import argparse
import sys
import time

from mifisher.hierarchy import OptimizerConfig
from mifisher.presets import PRESET_NAMES, run_example


def fmt(r):
    return f"a={r.fi_local_a:.6g} b={r.fi_local_b:.6g} global={r.fi_global:.6g}"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--starts", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    cfg = OptimizerConfig(starts=args.starts, seed=args.seed)
    failed = 0
    for name in PRESET_NAMES:
        t0 = time.perf_counter()
        res = run_example(name, cfg)
        dt = time.perf_counter() - t0
        path = " -> ".join(fmt(r) for r in res.trace.reports)
        print(f"{'PASS' if res.passed else 'FAIL'} {name:18s} {dt:5.2f}s  {res.classification}  [{path}]")
        failed += not res.passed
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
