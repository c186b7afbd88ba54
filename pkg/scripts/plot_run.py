#!/usr/bin/env python3
"""Plot disturbance, parameter and weight errors from a run directory.

Needs matplotlib, which is not a package dependency.

    python scripts/plot_run.py runs/default
"""
import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def load(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return {name: np.array([float(r[i]) for r in rows[1:]]) for i, name in enumerate(rows[0])}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("run_dir")
    args = ap.parse_args()
    run_dir = Path(args.run_dir)
    d = load(run_dir / "run.csv")
    fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
    panels = [("dist_err", r"$\|\tilde d\|$"), ("theta_err", r"$\|\tilde\theta\|$"), ("W_err", r"$\|\tilde W\|$")]
    for ax, (col, label) in zip(axes, panels):
        ax.semilogy(d["t"], np.maximum(d[col], 1e-16))
        ax.set_ylabel(label)
        ax.grid(True, which="both", alpha=0.3)
    axes[-1].set_xlabel("t [s]")
    fig.tight_layout()
    out = run_dir / "errors.png"
    fig.savefig(out, dpi=120)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
