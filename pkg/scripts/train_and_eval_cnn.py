#!/usr/bin/env python3
"""End-to-end CNN experiment: generate a dataset, train, evaluate.

Desk-scale defaults (10 000 blocks, 60 epochs) finish in a few minutes on a
laptop CPU; pass --epochs 400 --n-blocks 50000 for a full-scale run.

Usage: python3 scripts/train_and_eval_cnn.py [--block-len 160] [--epochs 60]
"""
import argparse
import sys
from pathlib import Path

from pktdetect.cli import main as cli_main
from pktdetect.dataset import DatasetSpec


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--block-len", type=int, default=160)
    ap.add_argument("--n-blocks", type=int, default=10_000)
    ap.add_argument("--epochs", type=int, default=60)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = DatasetSpec(block_len=args.block_len, n_blocks=args.n_blocks,
                       seed=args.seed, split=(0.8, 0.05, 0.15))
    spec_path = out_dir / f"spec_b{args.block_len}.json"
    spec_path.write_text(spec.to_json())

    data_dir = out_dir / "data"
    model_path = out_dir / f"cnn_b{args.block_len}.ckpt"
    steps = [
        ["gen", "--spec", str(spec_path), "--out", str(data_dir)],
        ["train", "--data", str(data_dir), "--block-len", str(args.block_len),
         "--epochs", str(args.epochs), "--seed", "9",
         "--out", str(model_path)],
        ["eval", "--model", str(model_path), "--data", str(data_dir),
         "--block-len", str(args.block_len),
         "--out", str(out_dir / f"cnn_b{args.block_len}_eval.csv")],
    ]
    for argv in steps:
        code = cli_main(argv)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
