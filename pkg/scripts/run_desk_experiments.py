"""Run SuperPolyak against each family's baseline at desk scale and write CSVs.

Each (family, seed) pair gets its own directory under --out holding
superpolyak.csv, baseline.csv, summary.csv and config.json.  A combined
summary over all runs is written to <out>/all_summaries.csv.

    python scripts/run_desk_experiments.py --out results --seeds 5
"""

import argparse
import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from superpolyak.harness import SUMMARY_HEADER, ExperimentConfig, run_experiment

FAMILIES = {
    "matrix_sensing": dict(d=50, r=2, m=300),
    "matrix_sensing_ill": dict(problem="matrix_sensing", d=50, r=2, m=300, kappa_tilde=10.0),
    "max_linear": dict(d=50, r=2),
    "phase_retrieval": dict(d=50, m=200, baseline_eps=1e-10),
    "compressed_sensing": dict(d=500, m=50, s=5, baseline_eps=1e-6),
}


def _one(job):
    name, params, seed, out = job
    params = dict(params)
    problem = params.pop("problem", name)
    cfg = ExperimentConfig(problem, seed=seed, output_dir=str(out / name / f"seed{seed}"), **params)
    return name, seed, run_experiment(cfg)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--families", nargs="*", default=list(FAMILIES), choices=list(FAMILIES))
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING)

    out = Path(args.out)
    jobs = [(f, FAMILIES[f], s, out) for f in args.families for s in range(args.seeds)]
    with ProcessPoolExecutor(args.workers) as pool:
        codes = list(pool.map(_one, jobs))

    with open(out / "all_summaries.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["family", "seed", "exit_code"] + SUMMARY_HEADER)
        for name, seed, code in codes:
            with open(out / name / f"seed{seed}" / "summary.csv") as src:
                for row in csv.DictReader(src):
                    w.writerow([name, seed, code] + [row[k] for k in SUMMARY_HEADER])
    bad = [(n, s) for n, s, c in codes if c != 0]
    print(f"{len(codes) - len(bad)}/{len(codes)} runs reached their targets; see {out}/all_summaries.csv")
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
