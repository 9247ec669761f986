import numpy as np
import pytest

from superpolyak import Oracle, RegularityMetadata


def abs_oracle():
    return Oracle(1, lambda x: float(abs(x[0])), lambda x: np.sign(x))


def l1_oracle(d):
    return Oracle(
        d,
        lambda x: float(np.abs(x).sum()),
        lambda x: np.sign(x),
        meta=RegularityMetadata(mu=1.0, lipschitz_L=np.sqrt(d)),
    )


def max_abs_oracle():
    """max(|x1|, |x2|) with the lowest-index coordinate on ties."""

    def g(x):
        j = int(np.argmax(np.abs(x)))
        v = np.zeros(2)
        v[j] = np.sign(x[j])
        return v

    return Oracle(2, lambda x: float(np.abs(x).max()), g)


def max_affine(d, seed, n_inactive=None):
    """Sharp max-affine function with minimizer x_bar and optimal value 0.

    d + 1 pieces pass through x_bar with 0 strictly inside the hull of their
    slopes; n_inactive further pieces sit strictly below zero near x_bar.
    """
    rng = np.random.default_rng(seed)
    n_inactive = d if n_inactive is None else n_inactive
    A = rng.standard_normal((d, d))
    w = rng.uniform(0.5, 1.5, d)
    active = np.vstack([A, -(w @ A) / w.sum()])
    inactive = rng.standard_normal((n_inactive, d))
    slopes = np.vstack([active, inactive])
    # inactive offsets exceed the largest inactive value on the unit ball around x_bar
    offsets = np.concatenate(
        [np.zeros(d + 1), np.linalg.norm(inactive, axis=1) * 2.0 + 1.0]
    )
    x_bar = rng.standard_normal(d)
    x_bar /= np.linalg.norm(x_bar)

    def vals(x):
        return slopes @ (x - x_bar) - offsets

    def f(x):
        return float(vals(x).max())

    def g(x):
        return slopes[int(np.argmax(vals(x)))].copy()

    return Oracle(d, f, g, name="max_affine"), x_bar


def start_near(x_bar, rel, seed):
    rng = np.random.default_rng(seed + 10_000)
    u = rng.standard_normal(x_bar.shape)
    return x_bar + rel * np.linalg.norm(x_bar) * u / np.linalg.norm(u)


def central_diff(f, x, h=1e-6):
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (f(x + e) - f(x - e)) / (2 * h)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def report(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
