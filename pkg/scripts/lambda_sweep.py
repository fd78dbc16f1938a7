#!/usr/bin/env python3
"""Standard01 / GAdv01 trade-off across lambda on the Gaussian mixture.

Usage:
    python3 scripts/lambda_sweep.py [--lambda 0,0.5,1,2,4] [--eps 0.2] [--out lambda_sweep.csv]
"""
import sys

from advrisk.cli import main

if __name__ == "__main__":
    argv = sys.argv[1:]
    if "--out" not in argv:
        argv += ["--out", "lambda_sweep.csv"]
    sys.exit(main(["lambda-sweep"] + argv))
