"""Experiment runner: seeded instance, SuperPolyak vs. a fallback-only baseline, CSV traces.

Usage::

    superpolyak solve --problem compressed_sensing --d 500 --m 50 --s 5 --seed 1 --out runs/cs
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import problems
from .core import (
    ConfigError,
    OracleCounter,
    RunHistory,
    SolveResult,
    Status,
    StepKind,
    gap,
    record,
)
from .fallbacks import fallback_run, polyak_map
from .polyak_sgm import SgmConfig, run_sgm
from .solver import SuperConfig, run_superpolyak

log = logging.getLogger(__name__)

CSV_HEADER = ["idx", "oracle_calls", "f_gap", "elapsed_sec", "step_type"]
SUMMARY_HEADER = [
    "run",
    "status",
    "final_gap",
    "oracle_calls",
    "f_calls",
    "g_calls",
    "mapping_calls",
    "wall_time_sec",
    "outer_iterations",
    "bundle_acceptance_rate",
]

PROBLEMS = ("matrix_sensing", "max_linear", "phase_retrieval", "compressed_sensing")
BASELINES = ("polyak_sgm", "alternating_projections", "fixed_point", "prox_gradient")
DEFAULT_BASELINE = {
    "matrix_sensing": "polyak_sgm",
    "max_linear": "polyak_sgm",
    "phase_retrieval": "alternating_projections",
    "compressed_sensing": "prox_gradient",
}
REQUIRED = {
    "matrix_sensing": ("d", "r"),
    "max_linear": ("d", "r"),
    "phase_retrieval": ("d",),
    "compressed_sensing": ("d", "m", "s"),
}


@dataclass
class ExperimentConfig:
    problem: str
    d: Optional[int] = None
    r: Optional[int] = None
    m: Optional[int] = None
    s: Optional[int] = None
    kappa_tilde: float = 1.0
    lam: float = 0.1
    ensemble: str = "gaussian"
    seed: int = 0
    eps: float = 1e-12
    baseline_eps: Optional[float] = None
    omega: float = 1.5
    gamma: float = 0.5
    max_oracle: int = 200_000
    fallback_budget: int = 100_000
    baseline: Optional[str] = None
    output_dir: Optional[str] = None
    rel_dist: float = 1.0
    dump_instance: bool = False

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {PROBLEMS}")
        missing = [k for k in REQUIRED[self.problem] if getattr(self, k) is None]
        if missing:
            raise ConfigError(
                f"{self.problem} requires " + ", ".join("--" + k for k in missing)
            )
        if self.baseline is None:
            self.baseline = DEFAULT_BASELINE[self.problem]
        if self.baseline not in BASELINES:
            raise ConfigError(f"unknown baseline {self.baseline!r}")
        allowed = {"polyak_sgm", DEFAULT_BASELINE[self.problem]}
        if self.problem == "compressed_sensing":
            allowed.add("fixed_point")
        if self.baseline not in allowed:
            raise ConfigError(f"baseline {self.baseline!r} does not apply to {self.problem}")
        if self.baseline_eps is None:
            self.baseline_eps = self.eps
        self.solver_config()

    def solver_config(self) -> SuperConfig:
        return SuperConfig(
            eps=self.eps,
            omega=self.omega,
            gamma=self.gamma,
            fallback_budget=self.fallback_budget,
            max_oracle_calls=self.max_oracle,
        )


def build_problem(cfg: ExperimentConfig):
    """Generate (oracle, instance, fallback mapping, start point) from the root seed."""
    s_inst, s_init = problems.split_seed(cfg.seed)
    p = cfg.problem
    if p == "matrix_sensing":
        m = cfg.m if cfg.m is not None else 3 * cfg.r * cfg.d
        oracle, inst = problems.gen_matrix_sensing(
            cfg.d, cfg.r, m, cfg.kappa_tilde, cfg.ensemble, s_inst
        )
        mapping = polyak_map(oracle)
        x0 = problems.initial_point(inst.x_bar, s_init, cfg.rel_dist)
    elif p == "max_linear":
        oracle, inst = problems.gen_max_linear(cfg.d, cfg.r, cfg.m, s_inst)
        mapping = polyak_map(oracle)
        x0 = problems.initial_point(inst.x_bar, s_init, cfg.rel_dist)
    elif p == "phase_retrieval":
        oracle, inst, mapping = problems.gen_phase_retrieval(cfg.d, cfg.m, s_inst)
        x0 = problems.phase_retrieval_start(inst, s_init, cfg.rel_dist)
    else:
        oracle, inst, mapping = problems.gen_compressed_sensing(
            cfg.d, cfg.m, cfg.s, cfg.lam, s_inst
        )
        x0 = np.zeros(cfg.d)
    if cfg.baseline == "polyak_sgm":
        mapping = polyak_map(oracle)
    return oracle, inst, mapping, x0


def run_baseline(cfg: ExperimentConfig, oracle, mapping, x0) -> SolveResult:
    budget = max(1, cfg.max_oracle // 2)
    if cfg.baseline == "polyak_sgm":
        return run_sgm(oracle, x0, SgmConfig(cfg.baseline_eps, budget))
    counter, history = OracleCounter(), RunHistory()
    g0 = gap(oracle, x0, counter)
    record(history, counter, g0, StepKind.INIT)
    if g0 <= cfg.baseline_eps:
        return SolveResult(x0, g0, Status.CONVERGED, history, counter)
    return fallback_run(mapping, oracle, x0, cfg.baseline_eps, budget, counter, history)


def run_pair(cfg: ExperimentConfig, threads: Optional[int] = None):
    oracle, inst, mapping, x0 = build_problem(cfg)
    threads = threads if threads is not None else int(os.environ.get("SUPERPOLYAK_THREADS", "1"))
    jobs = {
        "superpolyak": lambda: run_superpolyak(oracle, mapping, x0, cfg.solver_config()),
        "baseline": lambda: run_baseline(cfg, oracle, mapping, x0),
    }
    if threads > 1:
        with ThreadPoolExecutor(max_workers=min(threads, 2)) as ex:
            futs = {k: ex.submit(fn) for k, fn in jobs.items()}
            results = {k: f.result() for k, f in futs.items()}
    else:
        results = {k: fn() for k, fn in jobs.items()}
    return results, inst


# --- output -------------------------------------------------------------------


def write_trajectory(history: RunHistory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for idx, rec in enumerate(history.records):
            w.writerow(
                [idx, rec.oracle_calls, f"{rec.gap:.17g}", f"{rec.elapsed:.6f}", rec.kind.value]
            )


def read_trajectory(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summarize_run(name: str, result: SolveResult) -> dict:
    recs = result.history.records
    kinds = [r.kind for r in recs]
    acc = kinds.count(StepKind.BUNDLE_ACCEPTED)
    rej = kinds.count(StepKind.BUNDLE_REJECTED)
    c = result.counter
    return {
        "run": name,
        "status": result.status.value,
        "final_gap": result.gap,
        "oracle_calls": c.total,
        "f_calls": c.f_calls,
        "g_calls": c.g_calls,
        "mapping_calls": c.mapping_calls,
        "wall_time_sec": recs[-1].elapsed if recs else 0.0,
        "outer_iterations": result.outer_iterations,
        "bundle_acceptance_rate": acc / (acc + rej) if acc + rej else 0.0,
    }


def summarize(results: dict) -> list[dict]:
    return [summarize_run(name, res) for name, res in results.items()]


def write_summary(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_HEADER, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({**row, "final_gap": f"{row['final_gap']:.17g}"})


def run_experiment(cfg: ExperimentConfig) -> int:
    """Run both solvers and write superpolyak.csv, baseline.csv and summary.csv.

    Returns 0 when both runs reach their target gap and 2 otherwise.
    """
    out = Path(cfg.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    results, inst = run_pair(cfg)
    write_trajectory(results["superpolyak"].history, out / "superpolyak.csv")
    write_trajectory(results["baseline"].history, out / "baseline.csv")
    write_summary(summarize(results), out / "summary.csv")
    (out / "config.json").write_text(json.dumps(asdict(cfg), indent=2) + "\n")
    if cfg.dump_instance:
        problems.save_instance(inst, out / "instance.npz")
    for name, res in results.items():
        log.info("%s: %s gap=%.3e calls=%d", name, res.status.value, res.gap, res.counter.total)
    ok = all(r.status is Status.CONVERGED for r in results.values())
    return 0 if ok else 2


def bundle_transitions(history: RunHistory) -> list[tuple[float, float]]:
    """(gap before, gap after) for every accepted bundle step, in order."""
    out = []
    prev = None
    for rec in history.records:
        if rec.kind is StepKind.BUNDLE_ACCEPTED and prev is not None:
            out.append((prev, rec.gap))
        if rec.kind is not StepKind.BUNDLE_REJECTED:
            prev = rec.gap
    return out


def roundoff_floor(x_bar: np.ndarray) -> float:
    """Gap level below which differences are dominated by rounding at x_bar."""
    return 10 * np.finfo(float).eps * max(1.0, float(np.linalg.norm(x_bar))) * np.sqrt(x_bar.size)


def superlinear_tail(history: RunHistory, exponent=1.4, n=3, floor=0.0) -> bool:
    """Whether the last ``n`` accepted bundle steps satisfy after <= before**exponent.

    Steps landing at or below ``floor`` (roundoff level of the instance) pass.
    """
    steps = bundle_transitions(history)[-n:]
    return bool(steps) and all(
        after <= max(before**exponent, floor) for before, after in steps
    )


# --- command line -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


_FLAG_DEST = {"kappa": "kappa_tilde", "lambda": "lam", "out": "output_dir"}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="superpolyak", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("solve", help="run SuperPolyak and a baseline on one instance")
    p.add_argument("--config", help="key = value file; command-line flags take precedence")
    p.add_argument("--problem", choices=PROBLEMS)
    for flag in ("d", "r", "m", "s"):
        p.add_argument(f"--{flag}", type=int)
    p.add_argument("--kappa", dest="kappa_tilde", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--ensemble", choices=("gaussian", "hadamard"))
    p.add_argument("--seed", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--baseline-eps", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--max-oracle", type=int)
    p.add_argument("--fallback-budget", type=int)
    p.add_argument("--baseline", choices=BASELINES)
    p.add_argument("--rel-dist", type=float)
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--dump-instance", action="store_true", default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def read_config_file(path) -> dict:
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_string("[solve]\n" + fh.read())
    out = {}
    for key, val in cp["solve"].items():
        key = key.strip().lstrip("-").replace("-", "_")
        out[_FLAG_DEST.get(key, key)] = val
    return out


def _coerce(values: dict) -> dict:
    types = {f: t for f, t in ExperimentConfig.__annotations__.items()}
    out = {}
    for key, val in values.items():
        if key not in types:
            raise ConfigError(f"unknown configuration key {key!r}")
        if isinstance(val, str):
            t = types[key]
            if "bool" in t:
                val = val.strip().lower() in ("1", "true", "yes", "on")
            elif "int" in t:
                val = int(val)
            elif "float" in t:
                val = float(val)
        out[key] = val
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s"
    )
    values = {}
    try:
        if args.config:
            values.update(read_config_file(args.config))
        flags = {
            k: v
            for k, v in vars(args).items()
            if v is not None and k not in ("command", "config", "verbose")
        }
        values.update(flags)
        if "problem" not in values:
            raise ConfigError("--problem is required")
        cfg = ExperimentConfig(**_coerce(values))
    except (ConfigError, OSError, configparser.Error, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"superpolyak: error: {exc}", file=sys.stderr)
        return 1
    try:
        return run_experiment(cfg)
    except ConfigError as exc:
        print(f"superpolyak: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
