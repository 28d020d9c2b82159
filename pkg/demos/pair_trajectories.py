"""Plot a handful of pair trajectories at one relative angle.

Alice's particle splits first, inside her magnet window; Bob's follows in the
second window, and which way it goes depends on where Alice's went.

    python demos/pair_trajectories.py --gamma 3pi/8 -n 12 --out figures
"""
import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from bohmbell import PairJob, default_config, simulate_jobs
from bohmbell.cli import parse_number
from bohmbell.sampling import setting_key


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=parse_number, default=parse_number("3pi/8"))
    ap.add_argument("-n", type=int, default=12)
    ap.add_argument("--out", type=Path, default=Path("figures"))
    args = ap.parse_args()

    cfg = default_config()
    job = PairJob(args.gamma, args.n, setting_key("trajectories"))
    res = simulate_jobs(cfg, [job], stride=20)[0]

    s = cfg.schedule
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharex=True)
    for ax, path, name in ((axes[0], res.path_A, "Alice"), (axes[1], res.path_B, "Bob")):
        ax.plot(res.t, path, lw=0.8)
        for lo, hi in ((s.t1, s.t2), (s.t3, s.t4)):
            ax.axvspan(lo, hi, color="0.9")
        ax.set_title(f"{name}, gamma = {args.gamma:.3f}")
        ax.set_xlabel("t")
    axes[0].set_ylabel("z")
    args.out.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(args.out / "pair_trajectories.png", dpi=150)

    for i, a, b in zip(res.pair_index, res.sA, res.sB):
        print(f"pair {i}: sA={a:+d} sB={b:+d}")


if __name__ == "__main__":
    main()
