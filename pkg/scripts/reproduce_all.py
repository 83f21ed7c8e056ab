"""Run every experiment into one directory per recipe.

    python3 scripts/reproduce_all.py [--out results] [--seed 0]
"""
import argparse
import sys
import time
from pathlib import Path

from tdcim.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

RECIPES = [
    ("cell", ["cell-table"], None),
    ("chain", ["chain-sweep"], None),
    ("variation_nominal", ["montecarlo"], None),
    ("variation_200ps", ["montecarlo"], CONFIGS / "variation.json"),
    ("dse", ["dse"], None),
    ("hdc", ["hdc", "train"], None),
    ("hdc", ["hdc", "infer"], None),
    ("hdc", ["hdc", "benchmark"], None),
]


def run(out: Path, seed: int) -> int:
    worst = 0
    for name, cmd, cfg in RECIPES:
        argv = cmd + ["--out", str(out / name), "--seed", str(seed)]
        if cfg is not None:
            argv += ["--config", str(cfg)]
        t0 = time.perf_counter()
        code = main(argv)
        print(f"{name:18s} {' '.join(cmd):15s} exit {code}  {time.perf_counter() - t0:6.2f} s")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    sys.exit(run(args.out, args.seed))
