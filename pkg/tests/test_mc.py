import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subheat.errors import DomainError, RunawayPathError
from subheat.mc import estimate_caputo, estimate_field, estimate_history
from subheat.problem import ProblemSpec, make_function
from subheat.quadrature import solve
from subheat.spatial import FreeBM, KilledBMInterval, ReflectedBMHalfLine
from subheat.subordinator import Stable, inverse_mean


def _free(phi="constant", f="zero", alpha=0.5):
    return ProblemSpec(FreeBM(), Stable(alpha), 1.0, f=f, phi=phi)


def test_constant_is_exact():
    e = estimate_history(_free(alpha=0.6), 1.0, 0.0, 2000, 1e-3, 1)
    assert e.mean == 1.0 and e.stderr == 0.0


def test_constant_reflected_is_exact():
    p = ProblemSpec(ReflectedBMHalfLine(), Stable(0.75), 1.0, phi="constant", f="zero")
    e = estimate_history(p, 0.5, 0.3, 2000, 1e-3, 2)
    assert e.mean == 1.0 and e.stderr == 0.0


def test_free_gaussian_matches_quadrature():
    p = _free(phi={"name": "gaussian-bump", "width": 1.0})
    e = estimate_history(p, 1.0, 0.0, 20_000, 1e-3, 3)
    q = solve(p, 1.0, 0.0)
    assert abs(e.mean - q.value) < 3 * e.stderr + 0.01


def test_killed_constant_has_defect():
    p = ProblemSpec(KilledBMInterval(), Stable(0.5), 1.0, phi="constant", f="zero")
    e = estimate_history(p, 1.0, math.pi / 2, 20_000, 1e-3, 4)
    q = solve(p, 1.0, math.pi / 2)
    assert e.mean < 1.0
    assert abs(e.mean - q.value) < 3 * e.stderr + 0.01


def test_caputo_constant_forcing_gives_inverse_mean():
    p = ProblemSpec(FreeBM(), Stable(0.5), 1.0, phi0="zero", g="constant")
    e = estimate_caputo(p, 1.0, 0.0, 20_000, 1e-3, 5)
    assert abs(e.mean - 1 / math.gamma(1.5)) < 3 * e.stderr + 2e-3


def test_caputo_equals_history_for_static_data():
    phi = {"name": "gaussian-bump", "width": 0.7}
    p = ProblemSpec(FreeBM(), Stable(0.5), 1.0, f="first-eigenfunction", phi=phi, phi0=phi, g="first-eigenfunction")
    a = estimate_history(p, 0.7, 0.2, 3000, 1e-3, 6)
    b = estimate_caputo(p, 0.7, 0.2, 3000, 1e-3, 6)
    assert a.mean == b.mean and a.stderr == b.stderr


def test_bias_decreases_with_h():
    p = ProblemSpec(FreeBM(), Stable(0.5), 1.0, phi0="zero", g="constant")
    exact = inverse_mean(Stable(0.5), 1.0)[0]
    errs = [abs(estimate_caputo(p, 1.0, 0.0, 20_000, h, 7).mean - exact) for h in (1e-1, 1e-2, 1e-3)]
    assert errs[0] > errs[1] and errs[0] > errs[2]


def test_maximum_principle():
    p = ProblemSpec(KilledBMInterval(), Stable(0.5), 1.0, f="first-eigenfunction",
                    phi={"name": "gaussian-bump", "center": 1.5, "width": 0.5})
    e = estimate_history(p, 1.0, 1.0, 5000, 1e-3, 8)
    assert abs(e.mean) <= 1.0 + inverse_mean(Stable(0.5), 1.0)[0]


def test_short_time_limit():
    p = _free(phi={"name": "gaussian-bump", "width": 1.0})
    e = estimate_history(p, 1e-3, 0.5, 5000, 1e-5, 9)
    assert abs(e.mean - math.exp(-0.25)) < 3 * e.stderr + 0.03


def test_single_point_field_is_bit_exact():
    p = _free(phi={"name": "gaussian-bump", "width": 1.0}, f="first-eigenfunction")
    grid = estimate_field(p, [0.6], [0.4], 3000, 1e-3, 10)
    point = estimate_history(p, 0.6, 0.4, 3000, 1e-3, 10)
    assert grid[0, 0] == point


def test_field_of_ones():
    grid = estimate_field(_free(), [0.3, 1.0], [-1.0, 0.0, 2.0], 500, 1e-2, 11)
    assert all(e.mean == 1.0 for e in grid.ravel())


def test_field_symmetric_on_interval():
    p = ProblemSpec(KilledBMInterval(), Stable(0.5), 1.0, f="first-eigenfunction",
                    phi={"name": "gaussian-bump", "center": math.pi / 2, "width": 0.5})
    xs = [math.pi / 2 - 1.0, math.pi / 2 + 1.0]
    g = estimate_field(p, [0.5], xs, 5000, 1e-3, 12)
    a, b = g[0, 0], g[0, 1]
    assert abs(a.mean - b.mean) < 3 * math.hypot(a.stderr, b.stderr)


def test_workers_do_not_change_results():
    p = _free(phi={"name": "gaussian-bump", "width": 1.0})
    one = estimate_field(p, [0.5, 1.0], [0.0, 1.0], 1000, 1e-2, 13, workers=1)
    two = estimate_field(p, [0.5, 1.0], [0.0, 1.0], 1000, 1e-2, 13, workers=2)
    assert all(a == b for a, b in zip(one.ravel(), two.ravel()))


@settings(max_examples=10)
@given(st.integers(0, 2**31 - 1))
def test_seed_determinism(seed):
    p = _free(phi={"name": "gaussian-bump", "width": 1.0})
    assert estimate_history(p, 0.5, 0.0, 300, 1e-2, seed) == estimate_history(p, 0.5, 0.0, 300, 1e-2, seed)


def test_errors():
    p = _free()
    with pytest.raises(DomainError):
        estimate_history(p, 2.0, 0.0, 100, 1e-3, 0)
    with pytest.raises(DomainError):
        estimate_history(p, 1.0, 0.0, 1, 1e-3, 0)
    with pytest.raises(DomainError):
        estimate_caputo(p, 1.0, 0.0, 100, 1e-3, 0)
    with pytest.raises(RunawayPathError):
        estimate_history(p, 1.0, 0.0, 100, 1e-9, 0, max_steps=50)


def test_multidimensional_free():
    p = ProblemSpec(FreeBM(2), Stable(0.5), 1.0, phi={"name": "gaussian-bump", "center": [0.0, 0.0], "width": 1.0})
    e = estimate_history(p, 1.0, np.zeros(2), 5000, 1e-3, 14)
    q = solve(p, 1.0, np.zeros(2))
    assert abs(e.mean - q.value) < 3 * e.stderr + 0.01
