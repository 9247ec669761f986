import numpy as np
import pytest

from superpolyak import (
    Oracle,
    OracleCounter,
    Status,
    alternating_projection_map,
    fallback_run,
    fixed_point_map,
    polyak_map,
)
from superpolyak.core import gap
from superpolyak.problems import gen_compressed_sensing, gen_phase_retrieval, phase_retrieval_start

from conftest import abs_oracle


def test_halving_map():
    res = fallback_run(fixed_point_map(lambda x: x / 2), abs_oracle(), np.array([8.0]), 1.0, 100)
    assert res.status is Status.CONVERGED
    assert res.x[0] == 1.0
    assert res.counter.mapping_calls == 3
    assert res.counter.f_calls == 3


def test_polyak_map_one_application():
    o = abs_oracle()
    res = fallback_run(polyak_map(o), o, np.array([5.0]), 1e-12, 100)
    assert res.x[0] == 0.0 and res.counter.mapping_calls == 1


def test_identity_map_exhausts_budget():
    res = fallback_run(fixed_point_map(lambda x: x), abs_oracle(), np.array([1.0]), 1e-3, 7)
    assert res.status is Status.BUDGET_EXHAUSTED
    assert res.counter.mapping_calls == 7
    assert res.gap == 1.0


def line_projector(a):
    a = a / np.linalg.norm(a)
    return lambda x: (a @ x) * a


def line_dist(a):
    a = a / np.linalg.norm(a)
    return lambda x: np.linalg.norm(x - (a @ x) * a)


def test_axes_projection():
    mp = alternating_projection_map(lambda x: x * [1, 0], lambda x: x * [0, 1])
    np.testing.assert_allclose(mp(np.array([1.0, 1.0])), [0.0, 0.0])
    assert mp.calls_per_apply == 1


def test_sphere_projection():
    sphere = lambda x: x / np.linalg.norm(x)  # noqa: E731
    np.testing.assert_allclose(alternating_projection_map(sphere, sphere)(np.array([2.0, 0.0])), [1.0, 0.0])


@pytest.mark.parametrize("seed", range(5))
def test_alternating_projections_on_lines(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal(3), rng.standard_normal(3)
    cos2 = (a @ b) ** 2 / (a @ a) / (b @ b)
    da, db = line_dist(a), line_dist(b)
    oracle = Oracle(3, lambda x: float(da(x) + db(x)), lambda x: np.zeros(3))
    mp = alternating_projection_map(line_projector(a), line_projector(b))
    res = fallback_run(mp, oracle, rng.standard_normal(3), 1e-10, 10_000)
    assert res.status is Status.CONVERGED
    g = res.history.gaps
    ratios = g[1:] / g[:-1]
    assert np.all(np.abs(ratios[1:] / ratios[1] - 1) <= 0.1)
    # dist(z_i, {0}) decays exactly like cos^2(theta) per step after the first
    zs = [rng.standard_normal(3)]
    for _ in range(20):
        zs.append(mp(zs[-1]))
    dist = np.array([np.linalg.norm(z) for z in zs[1:]])
    assert np.all(dist <= cos2 ** np.arange(dist.size) * dist[0] * (1 + 1e-6))


def test_never_returns_above_target_unless_flagged():
    o = abs_oracle()
    for budget in (1, 2, 5):
        res = fallback_run(fixed_point_map(lambda x: 0.9 * x), o, np.array([1.0]), 0.5, budget)
        assert res.gap <= 0.5 or res.status is Status.BUDGET_EXHAUSTED


def test_phase_retrieval_alternating_projections():
    oracle, inst, mp = gen_phase_retrieval(10, 40, seed=2)
    res = fallback_run(mp, oracle, phase_retrieval_start(inst, 5), 1e-10, 20_000)
    assert res.status is Status.CONVERGED and res.gap <= 1e-10


def test_prox_gradient_fixed_point():
    oracle, inst, mp = gen_compressed_sensing(60, 20, 3, seed=1)
    np.testing.assert_allclose(mp(inst.x_star), inst.x_star, atol=1e-12)


def test_history_matches_counter():
    oracle, inst, mp = gen_compressed_sensing(60, 20, 3, seed=1)
    c = OracleCounter()
    res = fallback_run(mp, oracle, np.zeros(60), 1e-6, 10_000, c)
    assert res.history.records[-1].oracle_calls == c.total
