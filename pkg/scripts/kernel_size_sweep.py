#!/usr/bin/env python3
"""Sweep chain sizes and kernel sizes; write one CSV row per point.

Shows how mapping efficiency and effective peak scale with the chain
length, including the 84-100% utilization band for mainstream kernels.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from chainsim.cli import main as cli_main

OUT = pathlib.Path(__file__).resolve().parent / "out" / "kernel_size_sweep.csv"


def main():
    OUT.parent.mkdir(exist_ok=True)
    rc = cli_main([
        "sweep", "--preset", "alexnet",
        "--k-list", "1", "2", "3", "5", "7", "9", "11",
        "--pes-list", "144", "288", "576", "1152",
        "--batch-list", "1", "4", "128",
        "--csv-out", str(OUT),
    ])
    print("wrote %s (exit %d)" % (OUT, rc))
    return rc


if __name__ == "__main__":
    sys.exit(main())
