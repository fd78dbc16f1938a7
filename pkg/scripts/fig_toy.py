#!/usr/bin/env python3
"""Standard 0/1 risk of the joint-objective minimiser on the squares data.

Usage:
    python3 scripts/fig_toy.py [--eps 0:1.5:0.25] [--lambda 0.1,1,10] [--out fig_toy.csv]

Any flag of ``advrisk fig-toy`` is passed through.
"""
import sys

from advrisk.cli import main

if __name__ == "__main__":
    argv = sys.argv[1:]
    if "--out" not in argv:
        argv += ["--out", "fig_toy.csv"]
    sys.exit(main(["fig-toy"] + argv))
