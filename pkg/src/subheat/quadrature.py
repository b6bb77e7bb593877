"""Deterministic reference solver.

The solution is the sum of a homogeneous term, the history data carried by
the heat kernel over the overshoot law,

    int_0^inf p_ov(t; r) [e^{(t+r)L} phi(-r, .)](x) dr,

and a forcing term weighted by the potential density,

    int_0^t u(s) [e^{sL} f(t - s, .)](x) ds.

Both are evaluated by composite Gauss-Legendre rules; the reported error is
the change between two grid levels plus the analytic truncation bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import special
from scipy.interpolate import RectBivariateSpline

from ._quad import graded_breaks, log_breaks, merge_breaks, panel_rule
from .errors import AccuracyError, CoverageError, DomainError
from .problem import DataFunction, ProblemSpec
from .spatial import (
    KilledBMInterval,
    SpatialModel,
    SpectralFractionalInterval,
    _apply,
    profile_evolution,
)
from .subordinator import (
    LevyKernel,
    Stable,
    overshoot_density,
    overshoot_density_stderr,
    overshoot_head_bound,
    overshoot_range,
    overshoot_tail_bound,
    potential_table,
)


@dataclass(frozen=True)
class QuadratureConfig:
    """Grid controls; every level of refinement doubles all of them."""

    tol: float = 1e-6
    r_per_decade: float = 4.0
    order: int = 8
    tail_tol: float = 1e-9
    s_panels: int = 12
    spatial_refine: int = 1
    max_refine: int = 3

    def __post_init__(self):
        if not (self.tol > 0 and self.r_per_decade > 0 and self.order > 0 and self.tail_tol > 0):
            raise DomainError("quadrature controls must be positive")
        if self.s_panels < 1 or self.spatial_refine < 1 or self.max_refine < 0:
            raise DomainError("grid sizes must be positive")

    def level(self, k: int) -> "QuadratureConfig":
        f = 2**k
        return replace(self, r_per_decade=self.r_per_decade * f, s_panels=self.s_panels * f,
                       spatial_refine=self.spatial_refine * f)


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    mc_error: float = 0.0

    def __add__(self, other: "QuadResult") -> "QuadResult":
        return QuadResult(self.value + other.value, self.error + other.error, self.mc_error + other.mc_error)

    def __float__(self):
        return float(self.value)


def evolve(model: SpatialModel, s, x, F, time_of, refine: int = 1) -> np.ndarray:
    """e^{sL}[F(time_of(s), .)](x) for each s.

    Separable data with an eigenfunction profile is propagated exactly.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if isinstance(F, DataFunction):
        if F.is_zero:
            return np.zeros(s.size)
        exact = getattr(F.profile, "evolve", None)
        if exact is not None:
            ev = exact(model, s, x)
            if ev is not None:
                return ev * (np.exp(F.rate * time_of(s)) if F.rate else 1.0)
    hints = getattr(F, "breakpoints", None)
    extra = np.ravel(hints()) if callable(hints) else np.empty(0)
    if isinstance(F, DataFunction):
        ev = profile_evolution(model, F.profile, s, x, extra)
        if ev is not None:
            return ev * (np.exp(F.rate * time_of(s)) if F.rate else 1.0)

    def Q(scol, y):
        return F(time_of(scol), y)

    return _apply(model, s, x, Q, extra, refine)


def _check(problem: ProblemSpec, t: float, x):
    if not (0.0 < t <= problem.T):
        raise DomainError(f"t={t} outside (0, T={problem.T}]")
    if not np.all(problem.spatial.contains(x)):
        raise DomainError(f"x={x} outside the domain of {problem.spatial.describe()}")


def _refined(compute, cfg: QuadratureConfig, what: str) -> QuadResult:
    """Run ``compute(level_cfg) -> (value, bound, mc)`` at successive levels
    until two consecutive values agree to ``cfg.tol``."""
    prev, _, _ = compute(cfg.level(0))
    best = None
    for k in range(1, cfg.max_refine + 1):
        val, bound, mc = compute(cfg.level(k))
        err = abs(val - prev) + bound + 1e-14 * abs(val)
        best = QuadResult(val, err, mc)
        if err <= cfg.tol:
            return best
        prev = val
    raise AccuracyError(f"{what}: error {best.error:.3g} above tolerance {cfg.tol:.3g}", best.value, best.error)


# --------------------------------------------------------------------------
# homogeneous term


def _homogeneous(problem: ProblemSpec, t: float, x, payoff, c: QuadratureConfig):
    kernel = problem.kernel
    lo, hi = overshoot_range(kernel, t, c.tail_tol)
    breaks = merge_breaks(log_breaks(lo, hi, c.r_per_decade), [t] if lo < t < hi else [])
    r, w = panel_rule(breaks, c.order)
    dens = overshoot_density(kernel, t, r)

    def time_of(s):
        return -(s - t)

    A = evolve(problem.spatial, t + r, x, payoff, time_of, c.spatial_refine)
    value = float((w * dens) @ A)
    # mass below lo, with A frozen at its value at lo
    A0 = evolve(problem.spatial, np.array([t + lo]), x, payoff, time_of, c.spatial_refine)[0]
    value += A0 * overshoot_head_bound(kernel, t, lo)
    sup = payoff.sup() if isinstance(payoff, DataFunction) else 1.0
    bound = sup * overshoot_tail_bound(kernel, t, hi)
    mc = 0.0
    if not isinstance(kernel, Stable):
        mc = float((w * overshoot_density_stderr(kernel, t, r)) @ np.abs(A))
    return value, bound, mc


def solve_homogeneous(problem: ProblemSpec, t: float, x, cfg: QuadratureConfig | None = None,
                      form: str = "history") -> QuadResult:
    """Homogeneous part of the solution at (t, x)."""
    cfg = cfg or QuadratureConfig()
    _check(problem, t, x)
    payoff = _payoff(problem, form)
    if isinstance(payoff, DataFunction) and payoff.is_zero:
        return QuadResult(0.0, 0.0)
    return _refined(lambda c: _homogeneous(problem, t, x, payoff, c), cfg, "homogeneous term")


def _payoff(problem: ProblemSpec, form: str):
    if form == "history":
        if problem.phi is None:
            raise DomainError("history data phi is not set")
        return problem.phi
    if form == "caputo":
        if problem.phi0 is None:
            raise DomainError("Caputo data phi0 is not set")
        phi0 = problem.phi0
        if isinstance(phi0, DataFunction):
            return DataFunction(phi0.profile, 0.0, spec=phi0.spec)
        return _Frozen(phi0)
    raise DomainError(f"unknown form {form!r}")


@dataclass(frozen=True)
class _Frozen:
    """A callable of y presented as a time-independent F(s, y)."""

    fn: object

    def __call__(self, s, y):
        return self.fn(y) * np.ones_like(np.asarray(s, dtype=float))


# --------------------------------------------------------------------------
# forcing term


def _forcing(problem: ProblemSpec, t: float, x, F, c: QuadratureConfig):
    kernel = problem.kernel
    a = kernel.small_index

    def time_of(s):
        return t - s

    factor = kernel.potential_factor
    if factor(np.array([t])) is not None:
        head_top, body = t, None
    else:
        table = potential_table(kernel, t)
        head_top, body = min(t, table.edges[1]), table

        def factor(s, coef=table.small_coef):
            return np.full_like(s, coef)
    # head: int_0^top g(s) s^(a-1) G(s) ds with s = w^(1/a), g = u s^(1-a)
    wmax = head_top**a
    wb = graded_breaks(0.0, wmax, wmax * 1e-8, c.s_panels / 2.0)
    wb = merge_breaks(wb, np.linspace(0.0, wmax, c.s_panels + 1))
    wn, ww = panel_rule(wb, c.order)
    sn = wn ** (1.0 / a)
    G = evolve(problem.spatial, sn, x, F, time_of, c.spatial_refine)
    value = float((ww * factor(sn)) @ G) / a
    mc = 0.0
    if body is not None and t > head_top:
        e = body.edges
        inner = e[(e > head_top) & (e < t)]
        sb = merge_breaks([head_top, t], inner)
        sn, sw = panel_rule(sb, c.order)
        Gs = evolve(problem.spatial, sn, x, F, time_of, c.spatial_refine)
        value += float((sw * body(sn)) @ Gs)
        j = np.clip(np.searchsorted(e, sn, side="right") - 1, 0, body.values.size - 1)
        per_bin = np.bincount(j, weights=sw * Gs, minlength=body.values.size)
        mc = float(np.sqrt(np.sum((per_bin * body.stderr) ** 2)))
    return value, 0.0, mc


def solve_forcing(problem: ProblemSpec, t: float, x, cfg: QuadratureConfig | None = None,
                  form: str = "history") -> QuadResult:
    """Forcing part of the solution at (t, x)."""
    cfg = cfg or QuadratureConfig()
    _check(problem, t, x)
    F = problem.f if form == "history" else problem.g
    if F is None or (isinstance(F, DataFunction) and F.is_zero):
        return QuadResult(0.0, 0.0)
    return _refined(lambda c: _forcing(problem, t, x, F, c), cfg, "forcing term")


def solve(problem: ProblemSpec, t: float, x, cfg: QuadratureConfig | None = None, form: str = "history") -> QuadResult:
    """Solution at (t, x): homogeneous plus forcing term, errors added."""
    return solve_homogeneous(problem, t, x, cfg, form) + solve_forcing(problem, t, x, cfg, form)


# --------------------------------------------------------------------------
# limit law of the coupled walk


def _fundamental_rule(kernel: LevyKernel, t: float, per_decade: float = 8.0, tol: float = 1e-10):
    lo, hi = overshoot_range(kernel, t, tol)
    r, w = panel_rule(merge_breaks(log_breaks(lo, hi, per_decade), [t]), 8)
    return r, w * overshoot_density(kernel, t, r)


def fundamental_density(kernel: LevyKernel, t: float, y) -> np.ndarray:
    """Density of B at S_{tau_0(t)} for one-dimensional Brownian motion from 0:
    int p_ov(t; r) (4 pi (t + r))^(-1/2) exp(-y^2 / (4 (t + r))) dr."""
    y = np.asarray(y, dtype=float)
    r, w = _fundamental_rule(kernel, t)
    var = 2.0 * (t + r)
    g = np.exp(-np.multiply.outer(y * y, 1.0 / (2.0 * var))) / np.sqrt(2.0 * math.pi * var)
    return g @ w


def fundamental_bin_masses(kernel: LevyKernel, t: float, edges) -> np.ndarray:
    """Exact mass of the limit law in each bin [edges[i], edges[i+1])."""
    edges = np.asarray(edges, dtype=float)
    r, w = _fundamental_rule(kernel, t)
    sd = np.sqrt(2.0 * (t + r))
    cdf = special.ndtr(np.divide.outer(edges, sd)) @ w
    return np.diff(cdf)


# --------------------------------------------------------------------------
# interpolated solution field


@dataclass(frozen=True)
class SolutionField:
    """Quadrature solution on a (t^a, x) tensor grid with spline
    interpolation; for s <= 0 the history data is returned.

    ``a`` is the small-jump index of the kernel, which makes the solution
    close to linear in t^a near t = 0.
    """

    problem: ProblemSpec
    a: float
    tau: np.ndarray
    x: np.ndarray
    values: np.ndarray
    error: float
    spline: RectBivariateSpline
    history: object

    @classmethod
    def build(cls, problem: ProblemSpec, nt: int = 40, nx: int = 41, x_range=None,
              cfg: QuadratureConfig | None = None, form: str = "history") -> "SolutionField":
        cfg = cfg or QuadratureConfig(tol=1e-5)
        model = problem.spatial
        if x_range is None:
            if not isinstance(model, (KilledBMInterval, SpectralFractionalInterval)):
                raise DomainError("x_range is required on unbounded domains")
            x_range = (model.a, model.b)
        a = problem.kernel.small_index
        tau = np.linspace(0.0, problem.T**a, nt + 1)
        xs = np.linspace(x_range[0], x_range[1], nx)
        history = _payoff(problem, form)
        vals = np.zeros((tau.size, xs.size))
        err = 0.0
        inside = model.contains(xs)
        vals[0, inside] = np.asarray(history(0.0, xs[inside]), dtype=float)
        for i, ti in enumerate(tau[1:], start=1):
            t = ti ** (1.0 / a)
            for j in np.flatnonzero(inside):
                res = solve(problem, t, float(xs[j]), cfg, form)
                vals[i, j] = res.value
                err = max(err, res.error)
        spline = RectBivariateSpline(tau, xs, vals, kx=3, ky=3)
        return cls(problem, a, tau, xs, vals, err, spline, history)

    def __call__(self, s, y):
        s, y = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(y, dtype=float))
        out = np.zeros(s.shape)
        past = s <= 0
        if np.any(past):
            out[past] = self.history(s[past], y[past])
        now = ~past
        if np.any(now):
            tau = np.clip(s[now], 0.0, None) ** self.a
            if np.any(tau > self.tau[-1] * (1 + 1e-12)):
                raise CoverageError("solution field queried beyond its time horizon")
            out[now] = self.spline.ev(tau, y[now])
        inside = self.problem.spatial.contains(y)
        return np.where(inside, out, 0.0)

    def breakpoints(self):
        hint = getattr(self.history, "breakpoints", None)
        return np.ravel(hint()) if callable(hint) else np.empty(0)
