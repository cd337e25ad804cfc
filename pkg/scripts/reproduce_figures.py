#!/usr/bin/env python3
"""Run all four canned experiments and write their CSVs to one directory.

The defaults match the figures: the convergence trace uses its single
canned seed, the sweeps use seeds 1..100. Pass --seeds to shrink the
batches for a quick look.
"""
import argparse
import pathlib
import sys
import time

from mcbd import experiments


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="figures", help="output directory")
    parser.add_argument("--seeds", type=int, default=None,
                        help="seed count for the sweep experiments (default 100)")
    parser.add_argument("--bits", action="store_true", help="rates in bits")
    args = parser.parse_args()

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    seeds = None if args.seeds is None else experiments.default_seeds(args.seeds)

    runs = [
        (experiments.run_fig1, {}),
        (experiments.run_fig2, {"seeds": seeds}),
        (experiments.run_fig3, {"seeds": seeds}),
        (experiments.run_fig4, {"seeds": seeds}),
    ]
    ok = True
    for driver, kwargs in runs:
        t0 = time.time()
        result = driver(**kwargs)
        path = outdir / f"{result.name}.csv"
        experiments.save_result(result, path, bits=args.bits)
        status = "" if result.converged else "  [not converged]"
        print(f"{path}  {len(result.rows)} rows  {time.time() - t0:.1f}s{status}")
        ok = ok and result.converged
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
