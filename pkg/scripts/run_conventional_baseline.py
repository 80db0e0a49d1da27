#!/usr/bin/env python3
"""Conventional-detector baseline: miss/false-alarm/MAE at a fixed SNR.

Runs mixed packet / noise-only stream trials through the full transmit,
channel and receiver chain, then prints the summary and writes the per-SNR
CSV via the CLI's eval command.

Usage: python3 scripts/run_conventional_baseline.py [--snr-db 20] [--packets 500]
"""
import argparse
import sys
from pathlib import Path

from pktdetect.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--snr-db", type=float, default=20.0)
    ap.add_argument("--packets", type=int, default=500)
    ap.add_argument("--awgn-only", action="store_true")
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    out = Path(args.out_dir) / "conventional_eval.csv"
    argv = ["eval", "--conventional", "--snr-db", str(args.snr_db),
            "--packets", str(args.packets), "--out", str(out)]
    if args.awgn_only:
        argv.append("--awgn-only")
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
