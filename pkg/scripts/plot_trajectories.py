"""Plot gap against oracle calls for every run directory under a results tree.

    python scripts/plot_trajectories.py results --out figures
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from superpolyak.harness import read_trajectory


def plot_family(family_dir: Path, dest: Path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for seed_dir in sorted(p for p in family_dir.iterdir() if p.is_dir()):
        for run, style in (("superpolyak", "-"), ("baseline", "--")):
            rows = read_trajectory(seed_dir / f"{run}.csv")
            calls = [int(r["oracle_calls"]) for r in rows]
            gaps = [max(float(r["f_gap"]), 1e-17) for r in rows]
            ax.semilogy(calls, gaps, style, lw=1, label=run if seed_dir.name == "seed0" else None)
    ax.set_xlabel("oracle calls")
    ax.set_ylabel("f(x) - f*")
    ax.set_title(family_dir.name)
    ax.legend()
    fig.tight_layout()
    fig.savefig(dest / f"{family_dir.name}.png", dpi=150)
    plt.close(fig)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("results")
    ap.add_argument("--out", default="figures")
    args = ap.parse_args(argv)
    dest = Path(args.out)
    dest.mkdir(parents=True, exist_ok=True)
    for family_dir in sorted(p for p in Path(args.results).iterdir() if p.is_dir()):
        plot_family(family_dir, dest)


if __name__ == "__main__":
    main()
