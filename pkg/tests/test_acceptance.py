"""Exit criteria, one test per criterion; results are echoed in the terminal summary."""

import time

import numpy as np
import pytest

from superpolyak import (
    BundleConfig,
    Status,
    StepKind,
    Termination,
    apply_pinv,
    pinv_dense_oracle,
    polyak_step,
    qr_append,
    qr_init,
    run_bundle,
)
from superpolyak.core import gap
from superpolyak.harness import (
    CSV_HEADER,
    ExperimentConfig,
    main,
    roundoff_floor,
    run_pair,
    superlinear_tail,
)

from conftest import l1_oracle, max_affine, report, start_near


def test_criterion_1_pinv_oracle_equivalence():
    rng = np.random.default_rng(2024)
    t = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        d = int(rng.integers(1, 201))
        i = int(rng.integers(1, d + 1))
        A = rng.standard_normal((i, d))
        state = qr_init(A[0])
        for row in A[1:]:
            assert qr_append(state, row).value == "updated"
        w = rng.standard_normal(i)
        ref = pinv_dense_oracle(A, w)
        err = np.linalg.norm(apply_pinv(state, w) - ref) / max(1.0, np.linalg.norm(ref))
        worst = max(worst, err)
    elapsed = time.perf_counter() - t
    ok = worst <= 1e-8 and elapsed <= 30
    report(1, ok, f"max rel err {worst:.2e} (<= 1e-8), {elapsed:.1f}s (<= 30s)")
    assert ok


def test_criterion_2_bundle_cost():
    d = 400
    oracle, x_bar = max_affine(d, 0, n_inactive=0)
    x = start_near(x_bar, 0.1, 0)
    t0 = time.perf_counter()
    fast = run_bundle(oracle, x, BundleConfig(tau=1e6, eta_est=None))
    t_qr = time.perf_counter() - t0
    t0 = time.perf_counter()
    slow = run_bundle(oracle, x, BundleConfig(tau=1e6, eta_est=None, pinv="dense"))
    t_dense = time.perf_counter() - t0
    assert fast.steps == slow.steps >= d - 1
    ratio = t_dense / t_qr
    ok = ratio >= 5 and t_qr + t_dense <= 60
    report(2, ok, f"d={d}, {fast.steps} steps: qr {t_qr:.2f}s, dense {t_dense:.2f}s, speedup {ratio:.1f}x (>= 5x)")
    assert ok


def test_criterion_3_one_step_contraction():
    t = time.perf_counter()
    worst = 0.0
    for d in (10, 100):
        oracle = l1_oracle(d)
        rho = np.sqrt(1 - 1 / (4 * d))
        rng = np.random.default_rng(d)
        for _ in range(100):
            x = rng.standard_normal(d) * rng.uniform(1e-3, 1e3)
            worst = max(worst, np.linalg.norm(polyak_step(oracle, x)) / (rho * np.linalg.norm(x)))
    elapsed = time.perf_counter() - t
    ok = worst <= 1.0 and elapsed <= 5
    report(3, ok, f"max |step|/(rho |x|) = {worst:.4f} (<= 1), {elapsed:.2f}s")
    assert ok


def test_criterion_4_bundle_exact_on_polyhedral():
    d = 30
    t = time.perf_counter()
    hits = 0
    for seed in range(100):
        oracle, x_bar = max_affine(d, seed)
        out = run_bundle(oracle, start_near(x_bar, 0.1, seed), BundleConfig(tau=1e6, eta_est=None))
        hits += out.best_gap <= 1e-12 and out.steps <= d
    elapsed = time.perf_counter() - t
    ok = hits >= 95 and elapsed <= 30
    report(4, ok, f"d={d}: {hits}/100 seeds reach gap <= 1e-12 within d steps (>= 95), {elapsed:.1f}s")
    assert ok


def _pairs(cfgs):
    out = []
    for cfg in cfgs:
        results, inst = run_pair(cfg, threads=1)
        out.append((cfg, results, inst))
    return out


def test_criterion_5_compressed_sensing():
    t = time.perf_counter()
    cfgs = [
        ExperimentConfig("compressed_sensing", d=500, m=50, s=5, seed=seed, baseline_eps=1e-6)
        for seed in range(10)
    ]
    wins, tails, both, details = 0, 0, 0, []
    for cfg, res, inst in _pairs(cfgs):
        sp, base = res["superpolyak"], res["baseline"]
        win = (
            sp.gap <= 1e-12
            and base.status is Status.CONVERGED
            and sp.counter.total < base.counter.total
        )
        tail = superlinear_tail(sp.history, 1.4, 3, roundoff_floor(inst.x_bar))
        wins += win
        tails += tail
        both += win and tail
        details.append(f"{sp.counter.total}/{base.counter.total}")
    elapsed = time.perf_counter() - t
    # A seed counts when it wins on calls and its last (up to) 3 accepted bundle
    # steps are superlinear; runs with few accepted steps can include one taken
    # before the local regime, so the tail is reported separately as well.
    ok = both >= 8 and elapsed <= 120
    report(
        5,
        ok,
        f"{both}/10 seeds win and show a superlinear tail (>= 8); cheaper on {wins}/10 "
        f"(calls SP/prox-grad {', '.join(details)}); tail alone on {tails}/10; {elapsed:.1f}s",
    )
    assert ok


def test_criterion_6_phase_retrieval():
    t = time.perf_counter()
    cfgs = [ExperimentConfig("phase_retrieval", d=50, m=200, seed=seed, baseline_eps=1e-10) for seed in range(10)]
    wins, details = 0, []
    for cfg, res, inst in _pairs(cfgs):
        sp, base = res["superpolyak"], res["baseline"]
        sp_calls = sp.counter.g_calls + sp.counter.mapping_calls
        base_calls = base.counter.g_calls + base.counter.mapping_calls
        wins += sp.gap <= 1e-12 and base.status is Status.CONVERGED and sp_calls < base_calls
        details.append(f"{sp_calls}/{base_calls}")
    elapsed = time.perf_counter() - t
    ok = wins >= 8 and elapsed <= 120
    report(6, ok, f"{wins}/10 seeds: SuperPolyak mapping+g calls below alternating projections ({', '.join(details)}); {elapsed:.1f}s")
    assert ok


def _outer_gaps(history):
    """Gap at x_0, x_1, ...: accepted bundle records and the last record of each fallback run."""
    recs = history.records
    gaps = [recs[0].gap]
    for i, rec in enumerate(recs[1:], 1):
        nxt = recs[i + 1].kind if i + 1 < len(recs) else None
        if rec.kind is StepKind.BUNDLE_ACCEPTED or (
            rec.kind is StepKind.FALLBACK and nxt is not StepKind.FALLBACK
        ):
            gaps.append(rec.gap)
    return np.array(gaps)


def test_criterion_7_matrix_sensing():
    t = time.perf_counter()
    cfgs = [ExperimentConfig("matrix_sensing", d=50, r=2, m=300, seed=seed) for seed in range(5)]
    solved, envelope, details = 0, 0, []
    for cfg, res, inst in _pairs(cfgs):
        sp = res["superpolyak"]
        solved += sp.gap <= 1e-12
        g = _outer_gaps(sp.history)
        k = np.arange(g.size)
        if sp.status is Status.CONVERGED:
            envelope += bool(np.all(g <= cfg.gamma**k * g[0]))
        details.append(f"gap {sp.gap:.1e} in {sp.outer_iterations} outer")
    elapsed = time.perf_counter() - t
    ok = solved == 5 and envelope == 5 and elapsed <= 180
    report(7, ok, f"{solved}/5 reach 1e-12, envelope holds on {envelope}/5 ({'; '.join(details)}); {elapsed:.1f}s")
    assert ok


def test_criterion_8_determinism_and_schema(tmp_path):
    args = ["solve", "--problem", "max_linear", "--d", "10", "--r", "2", "--seed", "3"]
    cols = []
    for run in ("a", "b"):
        assert main(args + ["--out", str(tmp_path / run)]) == 0
        for name in ("superpolyak.csv", "baseline.csv"):
            lines = (tmp_path / run / name).read_text().splitlines()
            assert lines[0] == ",".join(CSV_HEADER)
            cols.append([ln.split(",")[2] for ln in lines[1:]])
    same = cols[0] == cols[2] and cols[1] == cols[3]
    header_ok = CSV_HEADER == ["idx", "oracle_calls", "f_gap", "elapsed_sec", "step_type"]
    ok = same and header_ok
    report(8, ok, f"gap columns byte-identical across runs: {same}; header exact: {header_ok}")
    assert ok
