import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from subheat.errors import AccuracyError, CoverageError, DomainError
from subheat.problem import ProblemSpec
from subheat.quadrature import (
    QuadratureConfig,
    SolutionField,
    fundamental_bin_masses,
    fundamental_density,
    solve,
    solve_forcing,
    solve_homogeneous,
)
from subheat.spatial import FreeBM, KilledBMInterval, ReflectedBMHalfLine, SpectralFractionalInterval
from subheat.subordinator import Stable, TemperedStable, inverse_mean, overshoot_density, tabulate


def over(a, t, r):
    return float(overshoot_density(Stable(a), t, r))


@pytest.mark.parametrize("a", [0.3, 0.5, 0.8])
def test_constant_history(a):
    p = ProblemSpec(FreeBM(), Stable(a), 1.0, phi="constant", f="zero")
    assert solve(p, 1.0, 0.3).value == pytest.approx(1.0, abs=1e-3)


def test_free_gaussian_direct_composition():
    p = ProblemSpec(FreeBM(), Stable(0.5), 1.0, phi={"name": "gaussian-bump", "width": 1.0})

    def inner(r):
        s = 1.0 + r
        return integrate.quad(lambda y: math.exp(-y * y) * math.exp(-y * y / (4 * s)) / math.sqrt(4 * math.pi * s), -np.inf, np.inf)[0]

    oracle = integrate.quad(lambda r: inner(r) * over(0.5, 1.0, r), 0, np.inf, limit=200)[0]
    assert solve_homogeneous(p, 1.0, 0.0).value == pytest.approx(oracle, abs=1e-7)


def test_free_gaussian_combined_constant():
    """Cross-check with the pre-multiplied stable/heat kernel constant."""
    a, d = 0.5, 1
    c = math.sin(math.pi * a) / (2**d * math.pi ** (d / 2 + 1))

    def kernel(s):  # combined kernel in the history time s > t
        t = 1.0
        r = s - t
        return c * t**a * r ** (-a) / (t + r) * s ** (-d / 2)

    p = ProblemSpec(FreeBM(), Stable(a), 1.0, phi={"name": "gaussian-bump", "width": 1.0})
    oracle = integrate.quad(
        lambda s: kernel(s) * integrate.quad(lambda y: math.exp(-y * y) * math.exp(-y * y / (4 * s)), -np.inf, np.inf)[0],
        1.0, np.inf, limit=200,
    )[0]
    assert solve_homogeneous(p, 1.0, 0.0).value == pytest.approx(oracle, rel=1e-6)


def test_killed_sine_reduction():
    p = ProblemSpec(KilledBMInterval(), Stable(0.5), 1.0, phi="first-eigenfunction")
    oracle = integrate.quad(lambda r: math.exp(-(1 + r)) * over(0.5, 1.0, r), 0, np.inf, limit=200)[0]
    assert solve_homogeneous(p, 1.0, math.pi / 2).value == pytest.approx(oracle, abs=1e-8)


def test_forcing_constant_is_inverse_mean():
    p = ProblemSpec(FreeBM(), Stable(0.5), 1.0, phi="zero", f="constant")
    assert solve_forcing(p, 1.0, 0.0).value == pytest.approx(1 / math.gamma(1.5), abs=1e-3)


def test_forcing_zero():
    p = ProblemSpec(FreeBM(), Stable(0.5), 1.0, phi="constant", f="zero")
    assert solve_forcing(p, 1.0, 0.0).value == 0.0


def test_killed_forcing_sine():
    p = ProblemSpec(KilledBMInterval(), Stable(0.5), 1.0, phi="zero", f="first-eigenfunction")
    oracle = integrate.quad(lambda s: math.exp(-s) * s**-0.5 / math.gamma(0.5), 0, 1)[0]
    assert oracle == pytest.approx(special.erf(1.0), rel=1e-10)
    assert solve_forcing(p, 1.0, math.pi / 2).value == pytest.approx(oracle, abs=1e-8)


def test_small_time_limit():
    p = ProblemSpec(FreeBM(), Stable(0.5), 1.0, phi={"name": "gaussian-bump", "width": 1.0})
    assert solve(p, 1e-8, 0.5).value == pytest.approx(math.exp(-0.25), abs=1e-3)


@settings(max_examples=15)
@given(st.floats(0.05, 1.0), st.floats(0.1, 3.0))
def test_symmetry_free(t, x):
    p = ProblemSpec(FreeBM(), Stable(0.5), 1.0, phi={"name": "gaussian-bump", "width": 1.0}, f="first-eigenfunction")
    assert solve(p, t, x).value == pytest.approx(solve(p, t, -x).value, abs=1e-10)


def test_refinement_within_error_estimate():
    p = ProblemSpec(ReflectedBMHalfLine(), Stable(0.75), 1.0, phi={"name": "gaussian-bump", "center": 0.5, "width": 0.7},
                    f="first-eigenfunction")
    a = solve(p, 0.8, 0.4, QuadratureConfig(tol=1e-6))
    b = solve(p, 0.8, 0.4, QuadratureConfig(tol=1e-6).level(1))
    assert abs(a.value - b.value) <= a.error + b.error


def test_tempered_forcing_is_inverse_mean():
    k = TemperedStable(0.5, 1.0)
    p = ProblemSpec(FreeBM(), k, 1.0, phi="zero", f="constant")
    r = solve(p, 1.0, 0.0)
    assert r.mc_error == 0.0
    assert r.value == pytest.approx(inverse_mean(k, 1.0)[0], rel=1e-9)


def test_tabulated_reports_mc_error():
    k = tabulate(TemperedStable(0.5, 1.0), np.geomspace(1e-4, 1e2, 80))
    p = ProblemSpec(FreeBM(), k, 1.0, phi="zero", f="constant")
    r = solve(p, 1.0, 0.0)
    assert r.mc_error > 0
    assert abs(r.value - inverse_mean(TemperedStable(0.5, 1.0), 1.0)[0]) < 4 * r.mc_error + 0.02


def test_spectral_eigenfunction():
    p = ProblemSpec(SpectralFractionalInterval(0.5), Stable(0.5), 1.0, phi="first-eigenfunction")
    oracle = integrate.quad(lambda r: math.exp(-(1 + r)) * over(0.5, 1.0, r), 0, np.inf, limit=200)[0]
    assert solve(p, 1.0, 1.0).value == pytest.approx(oracle * math.sin(1.0), abs=1e-7)


def test_unreachable_tolerance():
    p = ProblemSpec(FreeBM(), Stable(0.5), 1.0, phi={"name": "gaussian-bump", "width": 0.05})
    with pytest.raises(AccuracyError) as err:
        solve(p, 1.0, 0.0, QuadratureConfig(tol=1e-16, max_refine=1))
    assert err.value.estimate is not None


def test_domain_errors():
    p = ProblemSpec(KilledBMInterval(), Stable(0.5), 1.0, phi="constant")
    with pytest.raises(DomainError):
        solve(p, 2.0, 1.0)
    with pytest.raises(DomainError):
        solve(p, 0.5, 4.0)


def test_fundamental_density_normalised():
    y = np.linspace(-60, 60, 24001)
    dens = fundamental_density(Stable(0.5), 1.0, y)
    inside = fundamental_bin_masses(Stable(0.5), 1.0, np.array([-60.0, 60.0]))[0]
    assert np.trapezoid(dens, y) == pytest.approx(inside, abs=1e-6)
    wide = fundamental_bin_masses(Stable(0.5), 1.0, np.array([-1e9, 1e9]))[0]
    assert wide == pytest.approx(1.0, abs=1e-3)
    edges = np.linspace(-5, 5, 11)
    masses = fundamental_bin_masses(Stable(0.5), 1.0, edges)
    assert masses.sum() < 1 and np.allclose(masses, masses[::-1], atol=1e-14)


def test_solution_field():
    p = ProblemSpec(KilledBMInterval(), Stable(0.5), 1.0, f="first-eigenfunction",
                    phi={"name": "gaussian-bump", "center": math.pi / 2, "width": 0.5})
    u = SolutionField.build(p, nt=12, nx=21)
    assert u(0.55, 1.3) == pytest.approx(solve(p, 0.55, 1.3).value, abs=1e-3)
    assert u(-0.5, 1.3) == pytest.approx(p.phi(-0.5, 1.3))
    with pytest.raises(CoverageError):
        u(1.5, 1.0)
    with pytest.raises(DomainError):
        SolutionField.build(ProblemSpec(FreeBM(), Stable(0.5), 1.0, phi="constant"))
