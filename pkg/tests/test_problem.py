import math

import numpy as np
import pytest

from subheat.errors import ConfigError, DomainError
from subheat.problem import REGISTRY, DataFunction, ProblemSpec, make_function
from subheat.spatial import FreeBM, KilledBMInterval, ReflectedBMHalfLine
from subheat.subordinator import Stable


def test_registry_names():
    assert set(REGISTRY) == {"constant", "zero", "gaussian-bump", "first-eigenfunction", "exp-time-modulated"}


def test_gaussian_bump_values():
    f = make_function({"name": "gaussian-bump", "center": 1.0, "width": 0.5, "amplitude": 2.0}, FreeBM())
    assert f(0.0, 1.5) == pytest.approx(2.0 * math.exp(-1.0))


def test_first_eigenfunction_on_interval():
    f = make_function("first-eigenfunction", KilledBMInterval(0.0, 2.0))
    assert f(0.3, 0.5) == pytest.approx(math.sin(math.pi * 0.25))


def test_exp_time_modulated():
    f = make_function({"name": "exp-time-modulated", "rate": 2.0, "base": "first-eigenfunction"}, KilledBMInterval())
    assert f(-0.5, 1.0) == pytest.approx(math.exp(-1.0) * math.sin(1.0))
    assert not f.time_independent
    assert f.sup(-np.inf, 0.0) == pytest.approx(1.0)


def test_zero_is_zero():
    f = make_function("zero", FreeBM())
    assert f.is_zero and f(1.0, 3.0) == 0.0


@pytest.mark.parametrize("spec", ["nope", {"name": "constant", "bogus": 1}, {"width": 1.0},
                                  {"name": "gaussian-bump", "width": -1.0}])
def test_bad_specs(spec):
    with pytest.raises(ConfigError):
        make_function(spec, FreeBM())


def test_unbounded_history_rejected():
    with pytest.raises(ConfigError):
        ProblemSpec(FreeBM(), Stable(0.5), 1.0, phi={"name": "exp-time-modulated", "rate": -1.0})


def test_problem_needs_data():
    with pytest.raises(ConfigError):
        ProblemSpec(FreeBM(), Stable(0.5), 1.0)
    with pytest.raises(DomainError):
        ProblemSpec(FreeBM(), Stable(0.5), 0.0, phi="constant")


def test_describe_round_trips_spec():
    p = ProblemSpec(ReflectedBMHalfLine(), Stable(0.75), 2.0, phi="constant", f="zero")
    d = p.describe()
    assert d["kernel"] == "stable:0.75" and d["phi"] == {"name": "constant"}


def test_datafunction_broadcasts():
    f = make_function("first-eigenfunction", KilledBMInterval())
    assert isinstance(f, DataFunction)
    out = f(np.array([[0.1], [0.2]]), np.array([[1.0, 2.0]]))
    assert out.shape == (2, 2)
