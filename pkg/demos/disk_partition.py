"""Colour the hidden-variable disk by simulated joint outcome.

Each initial pair position maps to a point (r, theta) of the unit disk.  The
black curves are the analytic boundaries; the simulated colours should sit on
the right side of them.

    python demos/disk_partition.py -n 3000 --out figures
"""
import argparse
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from bohmbell import PALETTE, default_config, separatrix, simulate_setting


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-n", type=int, default=3000)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", type=Path, default=Path("figures"))
    args = ap.parse_args()

    gammas = [0.0, math.pi / 4, 3 * math.pi / 8, math.pi / 2]
    cfg = default_config()
    fig, axes = plt.subplots(1, len(gammas), figsize=(4 * len(gammas), 4))
    for ax, g in zip(axes, gammas):
        res = simulate_setting(g, args.n, config=cfg, workers=args.workers)
        colours = [PALETTE[(int(a), int(b))] for a, b in zip(res.sA, res.sB)]
        ax.scatter(res.r * np.cos(res.theta), res.r * np.sin(res.theta), c=colours, s=2)
        curve = separatrix(g)
        for arc in np.unique(curve.arc):
            m = curve.arc == arc
            ax.plot(curve.U[m] * np.cos(curve.theta[m]), curve.U[m] * np.sin(curve.theta[m]), "k.", ms=0.8)
        ax.set_title(f"gamma = {g:.3f}")
        ax.set_aspect("equal")
        ax.set_axis_off()
    args.out.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(args.out / "disk_partition.png", dpi=150)


if __name__ == "__main__":
    main()
