import math

import numpy as np
import pytest
from scipy import stats

from subheat.errors import DomainError
from subheat.octrw import (
    WalkSpec,
    convergence_sweep,
    coupled_jumps,
    distance_to_limit,
    empirical_density,
    l1_to_masses,
    limit_edges,
    pareto_waits,
    simulate_position,
    simulate_positions,
)
from subheat.rng import stream


def test_pareto_tail():
    w = pareto_waits(0.6, 200_000, stream(1))
    assert w.min() >= 1.0
    for q in (2.0, 10.0, 100.0):
        p = (w > q).mean()
        se = math.sqrt(p * (1 - p) / w.size)
        assert abs(p - q ** -0.6) < 4 * se


def test_jump_variance_matches_wait():
    w, x = coupled_jumps(0.7, 200_000, stream(2))
    z = x / np.sqrt(2.0 * w)
    assert abs(z.mean()) < 4 / math.sqrt(w.size)
    assert abs(z.var() - 1.0) < 4 * math.sqrt(2.0 / w.size)


def _laplace_gap(alpha, n, m=4000):
    rng = stream(3)
    s = np.concatenate([pareto_waits(alpha, (200, n), rng).sum(axis=1) for _ in range(m // 200)])
    s /= WalkSpec(alpha, n).scale
    return max(abs(np.exp(-k * s).mean() - math.exp(-k ** alpha)) for k in (0.5, 1.0, 2.0))


def test_rescaled_renewal_sum_laplace():
    assert _laplace_gap(0.5, 1000) < 0.01


def test_rescaled_renewal_sum_converges():
    # finite-n bias is slow for alpha near 1 but must shrink with n
    assert _laplace_gap(0.8, 10_000) < _laplace_gap(0.8, 100) < 0.2


def test_positions_symmetric_and_deterministic():
    spec = WalkSpec(0.6, 50)
    a = simulate_positions(spec, 1.0, 30_000, seed=7)
    b = simulate_positions(spec, 1.0, 30_000, seed=7)
    assert a.tobytes() == b.tobytes()
    assert abs(np.median(a)) < 0.05
    assert abs((a > 0).mean() - 0.5) < 4 * 0.5 / math.sqrt(a.size)
    assert not np.array_equal(a, simulate_positions(spec, 1.0, 30_000, seed=8))


def test_single_position_is_finite():
    assert math.isfinite(simulate_position(WalkSpec(0.5, 10), 0.5, stream(4)))


def test_distance_small_near_one():
    assert distance_to_limit(WalkSpec(0.9, 1000), 1.0, 50_000, seed=9) < 0.1


def test_conventions_differ_at_small_scale():
    edges = limit_edges(1.0, 12, 80)
    over = empirical_density(simulate_positions(WalkSpec(0.5, 100, "overshoot"), 1.0, 100_000, 11), edges)
    under = empirical_density(simulate_positions(WalkSpec(0.5, 100, "undershoot"), 1.0, 100_000, 11), edges)
    se = np.sqrt((over.mass * (1 - over.mass) + under.mass * (1 - under.mass)) / 100_000) + 1e-12
    assert np.max(np.abs(over.mass - under.mass) / se) > 3


def test_distance_small_for_large_scale():
    d = distance_to_limit(WalkSpec(0.5, 1000), 1.0, 50_000, seed=12)
    assert d < 0.1


def test_empirical_density_constant_samples():
    tab = empirical_density(np.full(10, 3.0))
    assert tab.mass.tolist() == [1.0] and tab.outside == 0.0
    assert tab.edges[0] < 3.0 < tab.edges[1]


def test_empirical_density_normal():
    x = stream(13).standard_normal(200_000)
    edges = np.linspace(-5, 5, 51)
    tab = empirical_density(x, edges)
    masses = np.diff(stats.norm.cdf(edges))
    assert l1_to_masses(tab, masses) < 0.05
    assert np.isclose(tab.mass.sum() + tab.outside, 1.0)
    assert np.allclose(tab.density * np.diff(edges), tab.mass)


@pytest.mark.parametrize("kwargs", [
    dict(alpha=0.0), dict(alpha=1.0), dict(alpha=0.5, n=0), dict(alpha=0.5, n=2.5),
    dict(alpha=0.5, convention="middle"),
])
def test_walkspec_rejects(kwargs):
    with pytest.raises(DomainError):
        WalkSpec(**kwargs)


def test_bad_inputs():
    with pytest.raises(DomainError):
        simulate_positions(WalkSpec(0.5), 0.0, 10, 1)
    with pytest.raises(DomainError):
        empirical_density([1.0])
    with pytest.raises(DomainError):
        empirical_density([1.0, 2.0], bins=[0.0, 0.0, 1.0])
    with pytest.raises(DomainError):
        empirical_density([1.0, 2.0], bins=0)
    with pytest.raises(DomainError):
        convergence_sweep(0.5, 1.0, [1000, 100], 10, 1)
