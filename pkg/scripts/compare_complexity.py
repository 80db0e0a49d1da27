#!/usr/bin/env python3
"""Complexity comparison: CNN detector (all six block lengths) against the
sliding conventional correlator, as per-layer breakdowns and MFLOPS.

Usage: python3 scripts/compare_complexity.py [--out results/flops.csv]
"""
import argparse
import sys

from pktdetect.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/flops.csv")
    args = ap.parse_args()
    return cli_main(["flops", "--all", "--out", args.out])


if __name__ == "__main__":
    sys.exit(main())
