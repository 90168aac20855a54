"""Compare the compiled enumeration kernel with the numpy fallback.

Usage: python3 benchmarks/bench_enumerate.py [--formulas N] [--bound B] [--seed S]

Both backends run on the same random formulas; the script checks that they
agree on every verdict and prints the time each one took.
"""
from __future__ import annotations

import argparse
import os
import random
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))

from generators import random_formula  # noqa: E402
from rmpst.refine import enumerate as enum  # noqa: E402


def run(backend: str, formulas, bound: int) -> tuple[float, list[bool]]:
    t0 = time.perf_counter()
    verdicts = [enum.find_counterexample(f, bound=bound, backend=backend) is None for f in formulas]
    return time.perf_counter() - t0, verdicts


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--formulas", type=int, default=300)
    ap.add_argument("--bound", type=int, default=32)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)

    rng = random.Random(args.seed)
    formulas = [random_formula(rng) for _ in range(args.formulas)]
    print(f"{args.formulas} formulas, integers in [-{args.bound}, {args.bound}], default backend {enum.BACKEND}")
    backends = ["numpy"] + (["compiled"] if enum.BACKEND == "compiled" else [])
    results = {}
    for b in backends:
        took, verdicts = run(b, formulas, args.bound)
        results[b] = verdicts
        print(f"  {b:9s} {took:8.3f}s  {sum(verdicts)} valid")
    if len(results) == 2 and results["numpy"] != results["compiled"]:
        print("backends disagree", file=sys.stderr)
        return 1
    if len(results) == 1:
        print("  compiled kernel not built; rebuild with `pip install -e . --no-build-isolation`")
    return 0


if __name__ == "__main__":
    sys.exit(main())
