#!/usr/bin/env python3
"""MAE-vs-SNR sweep for a trained CNN checkpoint and/or the conventional
detector, with fresh simulations at each SNR point.

Usage: python3 scripts/sweep_mae_vs_snr.py --model results/cnn_b160.ckpt
"""
import argparse
import sys

from pktdetect.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", help="CNN checkpoint path")
    ap.add_argument("--conventional", action="store_true")
    ap.add_argument("--snrs", default="0,5,10,15,20,25")
    ap.add_argument("--packets", type=int, default=500)
    ap.add_argument("--out", default="results/sweep.csv")
    args = ap.parse_args()

    argv = ["sweep", "--snrs", args.snrs, "--packets", str(args.packets),
            "--out", args.out]
    if args.model:
        argv += ["--model", args.model]
    if args.conventional:
        argv.append("--conventional")
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
