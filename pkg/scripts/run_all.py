#!/usr/bin/env python3
"""Run every theorem check and both sweeps, writing CSV/SVG into one folder.

Usage:
    python3 scripts/run_all.py --out results --seed 0

Takes roughly 15 minutes on one core. Exit status is 1 if any check fails.
"""
import argparse
import sys
from pathlib import Path

from advrisk.cli import main as cli


def run(argv):
    print("$ advrisk " + " ".join(argv), flush=True)
    code = cli(argv)
    print(f"  -> exit {code}", flush=True)
    return code


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results")
    parser.add_argument("--seed", default="0")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = ["--seed", args.seed]
    codes = [run(["check-thm", which, "--out", str(out / f"check_{which}.csv")] + seed)
             for which in ("5", "6", "7", "nomargin", "reg")]
    codes.append(run(["lambda-sweep", "--out", str(out / "lambda_sweep.csv")] + seed))
    codes.append(run(["fig-toy", "--out", str(out / "fig_toy.csv")] + seed))
    return 0 if all(c == 0 for c in codes) else 1


if __name__ == "__main__":
    sys.exit(main())
