"""Numerical application of the subordinated heat operator and its adjoint.

    H u(t, x)  = int_0^inf (e^{rL}[u(t - r, .)](x) - u(t, x)) nu(r) dr
    H* v(t, x) = int_0^inf (e^{rL}[v(t + r, .)](x) - v(t, x)) nu(r) dr

The r-integral is split at eps. Below eps the integrand is replaced by a
quadratic in r fitted to finite differences at eps, 2 eps and 4 eps; above
eps a log-spaced Gauss-Legendre rule is used, with the remaining tail given
by the tail mass of nu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import RectBivariateSpline

from ._quad import log_breaks, merge_breaks, panel_rule
from .errors import AccuracyError, CoverageError, DomainError
from .problem import DataFunction
from .quadrature import SolutionField, evolve
from .spatial import (
    FreeBM,
    KilledBMInterval,
    SpatialModel,
    SpectralFractionalInterval,
    TrigSeries,
)
from .subordinator import LevyKernel, inverse_mean


@dataclass(frozen=True)
class OperatorConfig:
    eps: float = 1e-4
    per_decade: float = 6.0
    order: int = 8
    r_max: float = 1e12
    slope_rtol: float = 0.05
    slope_atol: float = 1e-6
    spatial_refine: int = 1
    t_panels: int = 12
    x_panels: int = 16
    hist_max: float = 1e12

    def __post_init__(self):
        if not (0 < self.eps < self.r_max):
            raise DomainError("need 0 < eps < r_max")


@dataclass(frozen=True)
class OperatorResult:
    value: float
    error: float

    def __float__(self):
        return float(self.value)


def _integrate(E, base, kernel: LevyKernel, marks, cfg: OperatorConfig, sup: float, what: str, graded=(),
               smooth_to: float = math.inf):
    """int_0^inf (E(r) - base) nu(r) dr for E smooth at r = 0.

    ``E`` maps an array of r to values of shape (len(r),) or (len(r), k);
    ``base`` is E(0) with the trailing shape. ``smooth_to`` is the first
    r where E may have a kink; the split point is kept well below it.
    """
    eps = min(cfg.eps, smooth_to / 8.0)
    base = np.asarray(base, dtype=float)
    d = np.asarray(E(np.array([eps, 2.0 * eps, 4.0 * eps])), dtype=float) - base
    c1 = d[0] / eps
    c2 = (d[1] - d[0]) / eps
    c3 = (d[2] - d[1]) / (2.0 * eps)
    # for D(r) = c r + k r^2 the slope increments are 2k eps and 3k eps
    scale = np.maximum(np.abs(c1), np.abs(c2))
    linear = np.abs(c1 - c2) <= cfg.slope_rtol * scale + cfg.slope_atol
    quadratic = np.abs((c3 - c2) - 1.5 * (c2 - c1)) <= 0.25 * np.abs(c2 - c1)
    bad = ~(linear | quadratic)
    if np.any(bad):
        i = np.flatnonzero(np.ravel(bad))[0]
        raise AccuracyError(
            f"{what}: small-r slope estimates disagree ({np.ravel(c1)[i]:.4g} vs {np.ravel(c2)[i]:.4g}); "
            "the argument is not smooth enough"
        )
    # fit D(r) = slope r + k r^2 on [0, eps]; the cubic remainder j r^3 shows
    # up as 12 j eps^2 in the slope increments and is bounded by |j| eps^2 m
    slope = 1.5 * c1 - 0.5 * c2
    k = (c2 - c1) / (2.0 * eps)
    m = float(kernel.small_moment(eps))
    a = kernel.small_index
    m2 = m * eps * (1.0 - a) / (2.0 - a)  # int_0^eps r^2 nu, leading order
    small = slope * m + k * m2
    small_err = np.abs((c3 - c2) - 1.5 * (c2 - c1)) / 12.0 * m + 0.05 * np.abs(k) * m2
    R = cfg.r_max
    br = [log_breaks(eps, R, cfg.per_decade)]
    marks = np.asarray(marks, dtype=float)
    br.append(marks[(marks > eps) & (marks < R)])
    for g in graded:
        # geometric refinement toward a point from the left
        if eps < g < R:
            br.append(g - (g - eps) * np.geomspace(1e-10, 1.0, 41))
    r, w = panel_rule(merge_breaks(*br), cfg.order)
    vals = np.asarray(E(r), dtype=float) - base
    body = np.tensordot(w * kernel.levy_density(r), vals, axes=(0, 0))
    tail_mass = float(kernel.tail_mass(R))
    end = np.asarray(E(np.array([R])), dtype=float)[0] - base
    value = small + body + end * tail_mass
    error = small_err + 2.0 * sup * tail_mass
    if value.ndim == 0:
        return OperatorResult(float(value), float(error))
    return OperatorResult(value, error)


def _sup(u) -> float:
    if isinstance(u, DataFunction):
        v = u.sup(-math.inf, 0.0) if u.rate <= 0 else u.profile.sup() if hasattr(u.profile, "sup") else math.inf
        return v if math.isfinite(v) else 1.0
    return 1.0


def apply_Hnu(u, model: SpatialModel, kernel: LevyKernel, t: float, x, cfg: OperatorConfig | None = None) -> OperatorResult:
    """H u at (t, x); ``u(s, y)`` must be defined for all s <= t."""
    cfg = cfg or OperatorConfig()
    base = float(np.asarray(u(t, np.asarray(x, dtype=float))))

    def E(r):
        return evolve(model, r, x, u, lambda s: t - s, cfg.spatial_refine)

    graded = [t] if isinstance(u, (SolutionField, Extended)) else []
    return _integrate(E, base, kernel, [t], cfg, _sup(u), "H u", graded, smooth_to=t)


@dataclass(frozen=True)
class Extended:
    """u on [0, T] continued to negative times by its value at 0."""

    u: object

    def __call__(self, s, y):
        s = np.asarray(s, dtype=float)
        return self.u(np.maximum(s, 0.0), y)

    def breakpoints(self):
        hint = getattr(self.u, "breakpoints", None)
        return hint() if callable(hint) else np.empty(0)


def apply_Hnu0(u, model: SpatialModel, kernel: LevyKernel, t: float, x, cfg: OperatorConfig | None = None) -> OperatorResult:
    """The Caputo-type operator

        int_0^t (e^{rL}u(t - r) - u(t)) nu dr + int_t^inf (e^{rL}u(0) - u(t)) nu dr,

    which is H applied to u frozen at u(0) for negative times."""
    return apply_Hnu(Extended(u), model, kernel, t, x, cfg)


def forcing_from_history(phi, model: SpatialModel, kernel: LevyKernel, t: float, x,
                         cfg: OperatorConfig | None = None) -> OperatorResult:
    """f_phi(t, x) = int_t^inf (e^{rL}[phi(t - r)] - e^{rL}[phi(0)])(x) nu(r) dr."""
    cfg = cfg or OperatorConfig()
    if not t > 0:
        raise DomainError("f_phi needs t > 0")
    if isinstance(phi, DataFunction) and phi.time_independent:
        return OperatorResult(0.0, 0.0)
    R = cfg.r_max
    r, w = panel_rule(log_breaks(t, R, cfg.per_decade), cfg.order)
    now = evolve(model, r, x, phi, lambda s: t - s, cfg.spatial_refine)
    frozen = evolve(model, r, x, phi, lambda s: 0.0 * s, cfg.spatial_refine)
    body = float((w * kernel.levy_density(r)) @ (now - frozen))
    bound = 2.0 * _sup(phi) * float(kernel.tail_mass(R))
    return OperatorResult(body, bound)


@dataclass(frozen=True)
class CaputoForcing:
    """g = f + f_phi tabulated on a (t^a, x) grid and spline-interpolated.

    ``error`` bounds the interpolation error, measured against direct
    evaluation at the cell midpoints.
    """

    a: float
    tau: np.ndarray
    x: np.ndarray
    spline: RectBivariateSpline
    model: SpatialModel
    error: float

    @classmethod
    def build(cls, problem, nt: int = 32, nx: int = 41, x_range=None, cfg: OperatorConfig | None = None):
        cfg = cfg or OperatorConfig()
        model, kernel = problem.spatial, problem.kernel
        lo, hi = x_range if x_range is not None else (_lo(model), _hi(model))
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise CoverageError("x_range is required on unbounded domains")
        a = kernel.small_index
        top = problem.T**a
        tau = np.linspace(0.0, top, nt + 1)
        xs = np.linspace(lo, hi, nx)

        def g(t, x):
            t = max(t, 1e-12 * problem.T)
            if not model.contains(np.asarray(x)):
                return 0.0
            f = 0.0 if problem.f is None else float(np.asarray(problem.f(t, x)))
            return f + forcing_from_history(problem.phi, model, kernel, t, x, cfg).value

        vals = np.array([[g(ti ** (1.0 / a), xj) for xj in xs] for ti in tau])
        spline = RectBivariateSpline(tau, xs, vals, kx=3, ky=3)
        tm = 0.5 * (tau[1:] + tau[:-1])
        xm = 0.5 * (xs[1:] + xs[:-1])
        ti = tm[:: max(1, nt // 6)]
        xj = xm[:: max(1, nx // 6)]
        direct = np.array([[g(t ** (1.0 / a), x) for x in xj] for t in ti])
        err = float(np.max(np.abs(spline(ti, xj) - direct)))
        return cls(a, tau, xs, spline, model, err)

    def __call__(self, s, y):
        s, y = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(y, dtype=float))
        tau = np.clip(s, 0.0, None) ** self.a
        if np.any(tau > self.tau[-1] * (1 + 1e-12)):
            raise CoverageError("Caputo forcing queried beyond its time horizon")
        out = self.spline.ev(tau.ravel(), y.ravel()).reshape(s.shape)
        return np.where(self.model.contains(y), out, 0.0)

    def sup(self, lo: float = 0.0, hi: float = 0.0) -> float:
        return float(np.max(np.abs(self.spline(self.tau, self.x)))) + self.error

    def solution_error(self, kernel: LevyKernel, t: float) -> float:
        """Bound on the induced error in the solution at time t."""
        mean, err = inverse_mean(kernel, t)
        return self.error * (mean + err)


def caputo_problem(problem, nt: int = 32, nx: int = 41, x_range=None, cfg: OperatorConfig | None = None):
    """The equivalent Caputo-type problem: phi0 = phi(0) and g = f + f_phi."""
    if problem.phi is None:
        raise DomainError("history data phi is not set")
    g = CaputoForcing.build(problem, nt, nx, x_range, cfg)
    phi = problem.phi
    phi0 = DataFunction(phi.profile, 0.0, spec={"name": "history-at-0", "phi": phi.spec}) if isinstance(phi, DataFunction) else (lambda y: phi(0.0, y))
    return problem.with_caputo(phi0, g), g


# --------------------------------------------------------------------------
# test functions and the adjoint


@dataclass(frozen=True)
class TestFunction:
    """p(t) q(x) with p(t) = scale * ((t - a)(b - t))^2 / ((b - a)/2)^4 on
    (a, b) and q a bounded spatial profile."""

    a: float
    b: float
    q: object
    scale: float = 1.0
    name: str = ""

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not (self.b > self.a):
            raise DomainError("test function support needs a < b")

    @property
    def _norm(self) -> float:
        return ((self.b - self.a) / 2.0) ** 4

    def p(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t > self.a) & (t < self.b)
        return np.where(inside, self.scale * ((t - self.a) * (self.b - t)) ** 2 / self._norm, 0.0)

    def __call__(self, t, x):
        return self.p(t) * self.q(x)

    def scaled(self, k: float) -> "TestFunction":
        return replace(self, scale=self.scale * k)

    def p_l1(self) -> float:
        # int_a^b ((t-a)(b-t))^2 dt = (b-a)^5 / 30
        return abs(self.scale) * (self.b - self.a) ** 5 / 30.0 / self._norm

    def l1_norm(self, model: SpatialModel, x_range=None) -> float:
        xs, wx = _x_rule(model, x_range, 64)
        return self.p_l1() * float(wx @ np.abs(self.q(xs)))


def registered_test_functions(model: SpatialModel, T: float = 1.0) -> dict:
    """Three registered test functions for interval models."""
    if not isinstance(model, (KilledBMInterval, SpectralFractionalInterval)):
        raise DomainError("registered test functions are defined for interval models")
    a, L = model.a, model.b - model.a
    k = math.pi / L

    def sines(*terms):
        return TrigSeries(tuple(("sin", n * k, c) for n, c in terms), shift=a)

    return {
        "bump-sin1": TestFunction(0.2 * T, 0.8 * T, sines((1, 1.0)), name="bump-sin1"),
        "bump-sin2": TestFunction(0.3 * T, 0.9 * T, sines((2, 1.0)), name="bump-sin2"),
        "bump-mix": TestFunction(0.1 * T, 0.7 * T, sines((1, 1.0), (3, 0.5)), name="bump-mix"),
    }


def _semigroup_of_profile(model, q, cfg):
    """r, x -> e^{rL}q(x), exact for eigen-sums, else a log-r spline per x."""
    ev = getattr(q, "evolve", None)
    if ev is not None and ev(model, np.array([1.0]), np.array([_probe(model)])) is not None:
        return lambda r, x: ev(model, r, x)
    from scipy.interpolate import CubicSpline

    grid = np.geomspace(cfg.eps / 4.0, cfg.r_max, 400)
    cache = {}

    def sem(r, x):
        r = np.asarray(r, dtype=float)
        x = np.asarray(x, dtype=float)
        out = np.empty(np.broadcast(r, x).shape)
        rb, xb = np.broadcast_arrays(r, x)
        for xv in np.unique(xb):
            if xv not in cache:
                vals = evolve(model, grid, float(xv), lambda s, y: q(y), lambda s: s, cfg.spatial_refine)
                cache[xv] = CubicSpline(np.log(grid), vals)
            sel = xb == xv
            out[sel] = cache[xv](np.log(rb[sel]))
        return out

    return sem


def _lo(model):
    if isinstance(model, FreeBM):
        return -math.inf
    return getattr(model, "a", 0.0)


def _hi(model):
    return getattr(model, "b", math.inf)


def _probe(model) -> float:
    lo, hi = _lo(model), _hi(model)
    return 0.5 * (lo + hi) if math.isfinite(lo + hi) else (lo + 0.5 if math.isfinite(lo) else 0.5)


def _adjoint_row(test: TestFunction, kernel: LevyKernel, t: float, xs, sem, cfg: OperatorConfig) -> OperatorResult:
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if t >= test.b:
        return OperatorResult(np.zeros(xs.size), np.zeros(xs.size))
    if t <= test.a:
        r, w = panel_rule(np.linspace(test.a - t, test.b - t, 9), cfg.order)
        S = sem(r[:, None], xs[None, :])
        val = (w * kernel.levy_density(r) * test.p(t + r)) @ S
        return OperatorResult(val, np.zeros(xs.size))
    base = test(t, xs)

    def E(r):
        return test.p(t + r)[:, None] * sem(r[:, None], xs[None, :])

    return _integrate(E, base, kernel, [test.b - t], cfg, float(np.max(np.abs(base))) + 1.0, "H* phi",
                      smooth_to=test.b - t)


def apply_adjoint(test: TestFunction, model: SpatialModel, kernel: LevyKernel, t: float, x,
                  cfg: OperatorConfig | None = None) -> OperatorResult:
    """H* of a product test function at (t, x)."""
    cfg = cfg or OperatorConfig()
    sem = _semigroup_of_profile(model, test.q, cfg)
    res = _adjoint_row(test, kernel, float(t), [float(x)], sem, cfg)
    return OperatorResult(float(res.value[0]), float(res.error[0]))


# --------------------------------------------------------------------------
# pairings


_NEAR = 20.0
_FAR = 1e8


def _x_rule(model: SpatialModel, x_range, panels: int, order: int = 8):
    """Spatial rule over ``x_range``, or over the whole domain when it is None.

    On unbounded domains the whole-domain rule is uniform on [-_NEAR, _NEAR]
    and log-spaced out to _FAR, wide enough for e^{rL} spreading up to the
    largest r of the operator grids.
    """
    if x_range is None:
        if isinstance(model, (KilledBMInterval, SpectralFractionalInterval)):
            x_range = (model.a, model.b)
        else:
            far = np.geomspace(_NEAR, _FAR, int(8 * math.log10(_FAR / _NEAR)) + 1)
            lo = 0.0 if math.isfinite(_lo(model)) else -_NEAR
            near = np.linspace(lo, _NEAR, max(panels, int(_NEAR - lo)) + 1)
            parts = [near, far] if lo == 0.0 else [-far[::-1], near, far]
            return panel_rule(merge_breaks(*parts), order)
    return panel_rule(np.linspace(x_range[0], x_range[1], panels + 1), order)


def _check_coverage(u, T, x_range, model):
    if isinstance(u, SolutionField):
        t_top = u.tau[-1] ** (1.0 / u.a)
        if t_top < T * (1 - 1e-12):
            raise CoverageError(f"solution field covers t <= {t_top:.4g}, pairing needs T = {T}")
        lo, hi = (x_range if x_range is not None else (_lo(model), _hi(model)))
        if u.x[0] > lo + 1e-12 or u.x[-1] < hi - 1e-12:
            raise CoverageError("solution field does not cover the spatial range of the pairing")


def pair(F, test: TestFunction, model: SpatialModel, cfg: OperatorConfig | None = None, x_range=None) -> float:
    """<F, phi_test> over the support of the test function."""
    cfg = cfg or OperatorConfig()
    t, wt = panel_rule(np.linspace(test.a, test.b, cfg.t_panels + 1), cfg.order)
    xs, wx = _x_rule(model, x_range, cfg.x_panels)
    vals = np.asarray(F(t[:, None], xs[None, :]), dtype=float)
    return float((wt * test.p(t)) @ (vals @ (wx * test.q(xs))))


def adjoint_pairing(u, test: TestFunction, model: SpatialModel, kernel: LevyKernel, T: float,
                    cfg: OperatorConfig | None = None, x_range=None) -> OperatorResult:
    """<u, H* phi_test> over (-inf, T] x domain; u includes its history."""
    cfg = cfg or OperatorConfig()
    _check_coverage(u, T, x_range, model)
    sem = _semigroup_of_profile(model, test.q, cfg)
    xs, wx = _x_rule(model, x_range, cfg.x_panels)
    # t-panels: history on a log scale in the distance to a, then [0, a], then (a, b)
    R = cfg.hist_max
    hist = -np.geomspace(1e-3, R, int(np.log10(R / 1e-3) * 3) + 1)[::-1]
    left = np.linspace(0.0, test.a, 5)
    span = test.b - test.a
    mid = merge_breaks(
        np.linspace(test.a, test.b, cfg.t_panels + 1),
        test.a + span * np.geomspace(1e-6, 1.0, 19),
        test.b - span * np.geomspace(1e-6, 1.0, 19),
    )
    tb = merge_breaks(hist, [-1e-3, 0.0], left, mid)
    t, wt = panel_rule(tb, cfg.order)
    t = t[t < min(T, test.b)]
    wt = wt[: t.size]
    uvals = np.asarray(u(t[:, None], xs[None, :]), dtype=float)
    total = 0.0
    err = 0.0
    for i, ti in enumerate(t):
        res = _adjoint_row(test, kernel, float(ti), xs, sem, cfg)
        total += wt[i] * float((wx * uvals[i]) @ res.value)
        err += abs(wt[i]) * float((wx * np.abs(uvals[i])) @ res.error)
    # history beyond -R: |H* phi| <= ||p||_1 sup|q| nu(R) per unit time
    usup = float(np.max(np.abs(uvals))) if uvals.size else 0.0
    qsup = float(np.max(np.abs(test.q(xs))))
    err += usup * test.p_l1() * qsup * float(kernel.tail_mass(R)) * float(np.sum(wx))
    return OperatorResult(total, err)


def weak_residual(u, f, test: TestFunction, model: SpatialModel, kernel: LevyKernel, T: float,
                  cfg: OperatorConfig | None = None, x_range=None) -> float:
    """<u, H* phi_test> + <f, phi_test>; zero for a weak solution."""
    cfg = cfg or OperatorConfig()
    lhs = adjoint_pairing(u, test, model, kernel, T, cfg, x_range).value
    rhs = 0.0 if f is None else pair(f, test, model, cfg, x_range)
    return lhs + rhs
