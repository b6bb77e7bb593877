"""Spatial Markov processes with explicit heat kernels.

All models use the generator Delta, so a Brownian increment over time ds has
variance 2 ds per coordinate and the free kernel is
(4 pi s)^(-d/2) exp(-|x - y|^2 / (4 s)).

Points are floats (or arrays of floats) in one dimension and arrays with a
trailing axis of length d for ``FreeBM(d)`` with d > 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from ._quad import log_breaks, merge_breaks, panel_rule
from .errors import ConfigError, DomainError, UsageError
from .rng import as_generator
from .subordinator import positive_stable, stable_density

SERIES_TAIL = 1e-12
_WINDOW = 12.0  # half-width of Gaussian windows, in standard deviations
_WINDOW_PANELS = 24


@dataclass(frozen=True)
class SpatialModel:
    conservative = True

    @property
    def dim(self) -> int:
        return 1

    def contains(self, x) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class FreeBM(SpatialModel):
    d: int = 1

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.d}")

    @property
    def dim(self):
        return self.d

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        if self.d == 1:
            return np.isfinite(x)
        return np.all(np.isfinite(x), axis=-1)

    def describe(self):
        return f"free:{self.d}"


@dataclass(frozen=True)
class KilledBMInterval(SpatialModel):
    a: float = 0.0
    b: float = math.pi
    conservative = False

    def __post_init__(self):
        if not self.b > self.a:
            raise DomainError(f"interval needs a < b, got ({self.a}, {self.b})")

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def series_floor(self) -> float:
        # below this time the image sum is cheaper and exact to roundoff
        return 0.5 * (self.length / math.pi) ** 2

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return (x > self.a) & (x < self.b)

    def eigenvalue(self, n):
        return (np.asarray(n) * math.pi / self.length) ** 2

    def describe(self):
        return f"killed:{self.a:g}:{self.b:g}"


@dataclass(frozen=True)
class ReflectedBMHalfLine(SpatialModel):
    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return (x >= 0) & np.isfinite(x)

    def describe(self):
        return "reflected"


@dataclass(frozen=True)
class SpectralFractionalInterval(SpatialModel):
    """Killed Brownian motion on (0, pi) subordinated by a beta-stable clock,
    so the generator is -(-Delta_D)^beta."""

    beta: float = 0.5
    conservative = False

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise DomainError(f"beta must lie in (0, 1), got {self.beta}")

    a = 0.0
    b = math.pi

    @property
    def killed(self) -> KilledBMInterval:
        return KilledBMInterval(0.0, math.pi)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return (x > 0) & (x < math.pi)

    def eigenvalue(self, n):
        return np.asarray(n, dtype=float) ** (2.0 * self.beta)

    def describe(self):
        return f"spectral:{self.beta:g}"


def parse_spatial(spec: str) -> SpatialModel:
    """``free[:d]``, ``killed[:a:b]``, ``reflected`` or ``spectral:beta``."""
    parts = spec.strip().lower().split(":")
    name, args = parts[0], [p for p in parts[1:] if p]
    try:
        if name == "free":
            return FreeBM(int(args[0]) if args else 1)
        if name == "killed":
            if args and len(args) != 2:
                raise ValueError
            return KilledBMInterval(*(_number(a) for a in args)) if args else KilledBMInterval()
        if name == "reflected" and not args:
            return ReflectedBMHalfLine()
        if name == "spectral":
            return SpectralFractionalInterval(float(args[0]) if args else 0.5)
    except (ValueError, IndexError):
        pass
    raise ConfigError(f"cannot parse spatial model {spec!r}")


def _number(text: str) -> float:
    """Parse a float, allowing multiples and fractions of pi (``pi/2``, ``2pi``)."""
    t = text.strip().replace("π", "pi")
    if "pi" not in t:
        return float(t)
    num, _, den = t.partition("/")
    coef = num.replace("pi", "").rstrip("*") or "1"
    return float(coef) * math.pi / (float(den) if den else 1.0)


# --------------------------------------------------------------------------
# eigenfunction profiles


@dataclass(frozen=True)
class TrigSeries:
    """sum_j c_j * trig_j(k_j (y - shift)), trig in {sin, cos}.

    The semigroups act diagonally on these when the frequencies match the
    model's eigenfunctions.
    """

    terms: tuple  # ((kind, k, coef), ...)
    shift: float = 0.0

    def __call__(self, y):
        y = np.asarray(y, dtype=float) - self.shift
        out = np.zeros_like(y)
        for kind, k, c in self.terms:
            out = out + c * (np.sin(k * y) if kind == "sin" else np.cos(k * y))
        return out

    def sup(self) -> float:
        return float(sum(abs(c) for _, _, c in self.terms))

    def decay(self, model: SpatialModel, r):
        """Per-term decay factors e^{-lambda r}, or None if not an eigen-sum."""
        r = np.asarray(r, dtype=float)
        rates = []
        for kind, k, _ in self.terms:
            if isinstance(model, KilledBMInterval):
                n = k * model.length / math.pi
                if kind != "sin" or abs(n - round(n)) > 1e-12 or abs(self.shift - model.a) > 1e-12:
                    return None
                rates.append(k * k)
            elif isinstance(model, SpectralFractionalInterval):
                if kind != "sin" or abs(k - round(k)) > 1e-12 or self.shift != 0.0:
                    return None
                rates.append(abs(k) ** (2.0 * model.beta))
            elif isinstance(model, ReflectedBMHalfLine):
                if kind != "cos" or self.shift != 0.0:
                    return None
                rates.append(k * k)
            elif isinstance(model, FreeBM) and model.d == 1:
                rates.append(k * k)
            else:
                return None
        return [np.exp(-lam * r) for lam in rates]

    def evolve(self, model: SpatialModel, r, y):
        """e^{rL} applied to the profile, evaluated at y; None if not diagonal."""
        factors = self.decay(model, r)
        if factors is None:
            return None
        y = np.asarray(y, dtype=float) - self.shift
        out = 0.0
        for (kind, k, c), fac in zip(self.terms, factors):
            out = out + c * fac * (np.sin(k * y) if kind == "sin" else np.cos(k * y))
        return out


# --------------------------------------------------------------------------
# transition densities


def _check_time(s):
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise DomainError("transition time must be > 0")
    return s


def _check_points(model, *pts):
    for p in pts:
        if not np.all(model.contains(p)):
            raise DomainError(f"point outside the domain of {model.describe()}")


def _gauss(z, s):
    return np.exp(-(z * z) / (4.0 * s)) / np.sqrt(4.0 * math.pi * s)


def _killed_images(model: KilledBMInterval, s, x, y):
    L = model.length
    xa = x - model.a
    ya = y - model.a
    smax = float(np.max(s))
    K = max(2, int(math.ceil(math.sqrt(160.0 * smax) / (2.0 * L))) + 1)
    out = 0.0
    for k in range(-K, K + 1):
        out = out + _gauss(xa - ya + 2 * k * L, s) - _gauss(xa + ya + 2 * k * L, s)
    return np.maximum(out, 0.0)


def series_terms(s_min: float, power: float = 2.0) -> int:
    """Smallest N with sum_{n>N} exp(-n^power s_min) < SERIES_TAIL (integral bound)."""
    # int_N^inf exp(-u^p s) du = Gamma(1/p, N^p s) / (p s^(1/p))
    p = power
    n = 1
    while True:
        bound = special.gammaincc(1.0 / p, n**p * s_min) * math.gamma(1.0 / p) / (p * s_min ** (1.0 / p))
        if bound < SERIES_TAIL or n > 10**7:
            return n
        n = int(n * 1.25) + 1


def _sine_series(s, x, y, rates_fn, L, a, n_terms):
    n = np.arange(1, n_terms + 1)
    kap = n * math.pi / L
    s = np.asarray(s, dtype=float)[..., None]
    return np.maximum(
        (2.0 / L)
        * np.sum(np.sin(kap * (np.asarray(x)[..., None] - a)) * np.sin(kap * (np.asarray(y)[..., None] - a))
                 * np.exp(-rates_fn(n) * s), axis=-1),
        0.0,
    )


def _killed_density(model: KilledBMInterval, s, x, y):
    s, x, y = np.broadcast_arrays(np.asarray(s, float), np.asarray(x, float), np.asarray(y, float))
    out = np.empty(s.shape)
    small = s < model.series_floor
    if np.any(small):
        out[small] = _killed_images(model, s[small], x[small], y[small])
    big = ~small
    if np.any(big):
        L = model.length
        scale = (math.pi / L) ** 2
        n_terms = series_terms(float(s[big].min()) * scale)
        out[big] = _sine_series(s[big], x[big], y[big], model.eigenvalue, L, model.a, n_terms)
    return out


_SPECTRAL_MAX_TERMS = 4096


def _spectral_density(model: SpectralFractionalInterval, s, x, y):
    s, x, y = np.broadcast_arrays(np.asarray(s, float), np.asarray(x, float), np.asarray(y, float))
    out = np.empty(s.shape)
    p = 2.0 * model.beta
    flat_s = s.ravel()
    res = out.reshape(-1)
    xs, ys = x.ravel(), y.ravel()
    for s_val in np.unique(flat_s):
        sel = flat_s == s_val
        n_terms = series_terms(s_val, p)
        if n_terms <= _SPECTRAL_MAX_TERMS:
            res[sel] = _sine_series(s_val, xs[sel], ys[sel], model.eigenvalue, math.pi, 0.0, n_terms)
        else:
            res[sel] = _spectral_by_subordination(model, s_val, xs[sel], ys[sel])
    return out


def _subordination_rule(model: SpectralFractionalInterval, s: float):
    """Nodes T and weights for int g(T) P(T_s in dT), T_s = s^(1/beta) X."""
    beta = model.beta
    scale = s ** (1.0 / beta)
    t_max = 60.0  # killed mass beyond is below exp(-60)
    x_hi = max(t_max / scale, 10.0)
    x_lo = 1e-4 if beta <= 0.5 else 1e-8
    x, w = panel_rule(log_breaks(x_lo, x_hi, 6.0), 8)
    w = w * stable_density(beta, x)
    return scale * x, w


def _spectral_by_subordination(model, s, x, y):
    T, w = _subordination_rule(model, s)
    vals = _killed_density(model.killed, T[:, None], np.asarray(x)[None, :], np.asarray(y)[None, :])
    return w @ vals


def transition_density(model: SpatialModel, s, x, y):
    """Heat kernel p_s(x, y) of the model."""
    s = _check_time(s)
    _check_points(model, x, y)
    if isinstance(model, FreeBM):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if model.d == 1:
            out = _gauss(x - y, s)
        else:
            r2 = np.sum((x - y) ** 2, axis=-1)
            out = np.exp(-r2 / (4.0 * s)) / (4.0 * math.pi * s) ** (model.d / 2.0)
    elif isinstance(model, ReflectedBMHalfLine):
        out = _gauss(np.asarray(x) - np.asarray(y), s) + _gauss(np.asarray(x) + np.asarray(y), s)
    elif isinstance(model, KilledBMInterval):
        out = _killed_density(model, s, x, y)
    elif isinstance(model, SpectralFractionalInterval):
        out = _spectral_density(model, s, x, y)
    else:
        raise DomainError(f"unknown spatial model {model!r}")
    return float(out) if np.ndim(out) == 0 else out


def survival(model: SpatialModel, s, x) -> float:
    """int p_s(x, y) dy."""
    s = float(_check_time(s))
    return float(semigroup_apply(model, s, lambda y: np.ones_like(np.asarray(y, dtype=float)), x))


# --------------------------------------------------------------------------
# sampling


_EXACT_ONE = 800.0


def _killed_survive_prob(model: KilledBMInterval, x0, x1, ds):
    """P(no exit in [0, ds] | endpoints), the bridge ratio p_killed / p_free."""
    prob = np.zeros_like(x1)
    inside = (x1 > model.a) & (x1 < model.b)
    if not np.any(inside):
        return prob
    x0, x1, ds = x0[inside], x1[inside], ds[inside]
    L2 = model.length**2
    short = ds < 0.02 * L2
    pr = np.ones_like(x1)
    # one-sided bridge factors; the two-sided correction is below exp(-50).
    # A factor is exactly 1.0 in double precision once its exponent exceeds
    # 745, so only paths near the boundary need the exponentials.
    xs, ys, ts = x0[short], x1[short], ds[short]
    ea = (xs - model.a) * (ys - model.a) / ts
    eb = (model.b - xs) * (model.b - ys) / ts
    near = (ea < _EXACT_ONE) | (eb < _EXACT_ONE)
    sub = np.flatnonzero(short)[near]
    pr[sub] = -np.expm1(-ea[near]) * -np.expm1(-eb[near])
    long_ = ~short
    if np.any(long_):
        xs, ys, ts = x0[long_], x1[long_], ds[long_]
        free = _gauss(xs - ys, ts)
        kill = _killed_density(model, ts, xs, ys)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(free > 0, kill / free, 0.0)
        pr[long_] = np.clip(ratio, 0.0, 1.0)
    prob[inside] = pr
    return prob


def step_batch(model: SpatialModel, x, ds, rng):
    """Advance many alive states by times ``ds``; returns (new_x, alive)."""
    rng = as_generator(rng)
    x = np.asarray(x, dtype=float)
    ds = np.broadcast_to(np.asarray(ds, dtype=float), x.shape[:1] if x.ndim else ())
    if isinstance(model, FreeBM):
        if model.d == 1:
            new = x + np.sqrt(2.0 * ds) * rng.standard_normal(x.shape)
        else:
            new = x + np.sqrt(2.0 * ds)[..., None] * rng.standard_normal(x.shape)
        return new, np.ones(new.shape[:1] if new.ndim else (), dtype=bool)
    if isinstance(model, ReflectedBMHalfLine):
        new = np.abs(x + np.sqrt(2.0 * ds) * rng.standard_normal(x.shape))
        return new, np.ones(new.shape, dtype=bool)
    if isinstance(model, SpectralFractionalInterval):
        dt = ds ** (1.0 / model.beta) * positive_stable(model.beta, x.shape, rng)
        return step_batch(model.killed, x, dt, rng)
    if isinstance(model, KilledBMInterval):
        new = x + np.sqrt(2.0 * ds) * rng.standard_normal(x.shape)
        prob = _killed_survive_prob(model, np.atleast_1d(x), np.atleast_1d(new), np.atleast_1d(ds * np.ones_like(x)))
        alive = rng.uniform(size=prob.shape) < prob
        return new, alive.reshape(np.shape(new))
    raise DomainError(f"unknown spatial model {model!r}")


def sample_step(model: SpatialModel, x, ds: float, rng):
    """One transition over time ``ds`` from an alive state ``x``."""
    if x is None or np.any(np.isnan(np.asarray(x, dtype=float))):
        raise UsageError("cannot step a dead state")
    if not ds > 0:
        raise DomainError("step time must be > 0")
    _check_points(model, x)
    arr = np.asarray(x, dtype=float)
    batch = arr[None, ...]
    new, alive = step_batch(model, batch, np.array([ds]), rng)
    point = new[0] if model.dim > 1 else float(new[0])
    return point, bool(np.asarray(alive).ravel()[0])


# --------------------------------------------------------------------------
# semigroup


def _window_breaks(center, sigma, lo=-np.inf, hi=np.inf, panels=_WINDOW_PANELS):
    a = max(center - _WINDOW * sigma, lo)
    b = min(center + _WINDOW * sigma, hi)
    if not b > a:
        return np.array([lo, lo])
    return np.linspace(a, b, panels + 1)


def _clip_breaks(extra, a, b):
    extra = np.asarray(extra, dtype=float).ravel()
    return extra[(extra > a) & (extra < b)]


def _interval_coeffs(model, Q, s_col, n_terms, extra_breaks, a, L, refine=1):
    """Sine coefficients of Q(s, .) on (a, a + L) for each s."""
    panels = max(64, int(n_terms // 2)) * refine
    breaks = merge_breaks(np.linspace(a, a + L, panels + 1), _clip_breaks(extra_breaks, a, a + L))
    y, w = panel_rule(breaks, 8)
    vals = np.broadcast_to(Q(s_col, y[None, :]), (s_col.shape[0], y.size))
    n = np.arange(1, n_terms + 1)
    basis = np.sin(np.outer(y - a, n * math.pi / L))
    return (2.0 / L) * (vals * w) @ basis, n


def _apply_window(model, s, x, Q, extra_breaks, lo, hi, kernel, refine=1):
    """int kernel(s, x, y) Q(s, y) dy for each s using Gaussian windows."""
    out = np.empty(s.size)
    extra = np.asarray(extra_breaks, dtype=float).ravel()
    for i, si in enumerate(s):
        sigma = math.sqrt(2.0 * si)
        panels = _WINDOW_PANELS * refine
        parts = [_window_breaks(x, sigma, lo, hi, panels)]
        if isinstance(model, ReflectedBMHalfLine):
            parts.append(_window_breaks(-x, sigma, lo, hi, panels))
        br = merge_breaks(*parts)
        if br.size < 2 or br[-1] <= br[0]:
            out[i] = 0.0
            continue
        br = merge_breaks(br, _clip_breaks(extra, br[0], br[-1]))
        y, w = panel_rule(br, 8)
        vals = np.asarray(Q(np.array([[si]]), y[None, :]), dtype=float).reshape(-1)
        if vals.size == 1:
            vals = np.full(y.size, vals[0])
        out[i] = (w * kernel(si, x, y)) @ vals
    return out


def _apply(model: SpatialModel, s, x, Q, extra_breaks=(), refine: int = 1):
    """Vectorised e^{sL}[Q(s, .)](x) over an array of times ``s``.

    ``Q(s_col, y)`` receives ``s`` as a column and ``y`` as a row and must
    broadcast to ``(len(s), len(y))``.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty(s.size)
    if isinstance(model, FreeBM):
        if model.d != 1:
            return _apply_free_nd(model, s, x, Q, refine)
        return _apply_window(
            model, s, x, Q, extra_breaks, -np.inf, np.inf, lambda si, xx, y: _gauss(xx - y, si), refine
        )
    if isinstance(model, ReflectedBMHalfLine):
        return _apply_window(
            model, s, x, Q, extra_breaks, 0.0, np.inf, lambda si, xx, y: _gauss(xx - y, si) + _gauss(xx + y, si), refine
        )
    if isinstance(model, KilledBMInterval):
        L = model.length
        big = s >= model.series_floor
        if np.any(big):
            sb = s[big]
            n_terms = series_terms(float(sb.min()) * (math.pi / L) ** 2)
            coef, n = _interval_coeffs(model, Q, sb[:, None], n_terms, extra_breaks, model.a, L, refine)
            decay = np.exp(-np.outer(sb, model.eigenvalue(n)))
            out[big] = (coef * decay) @ np.sin(n * math.pi * (x - model.a) / L)
        if np.any(~big):
            out[~big] = _apply_window(
                model, s[~big], x, Q, extra_breaks, model.a, model.b,
                lambda si, xx, y: _killed_images(model, si, xx, y), refine,
            )
        return out
    if isinstance(model, SpectralFractionalInterval):
        p = 2.0 * model.beta
        for i, si in enumerate(s):
            n_terms = series_terms(si, p)
            if n_terms <= 512:
                coef, n = _interval_coeffs(model, Q, np.array([[si]]), n_terms, extra_breaks, 0.0, math.pi, refine)
                out[i] = (coef[0] * np.exp(-model.eigenvalue(n) * si)) @ np.sin(n * x)
            else:
                T, w = _subordination_rule(model, si)

                def Qi(_, y, si=si):
                    return Q(np.array([[si]]), y)

                inner = _apply(model.killed, T, x, Qi, extra_breaks, refine)
                out[i] = w @ inner
        return out
    raise DomainError(f"unknown spatial model {model!r}")


def _apply_free_nd(model, s, x, Q, refine=1):
    x = np.asarray(x, dtype=float)
    d = model.d
    zg, wg = panel_rule(np.linspace(-_WINDOW, _WINDOW, _WINDOW_PANELS * refine + 1), 8)
    g1 = wg * np.exp(-0.5 * zg**2) / math.sqrt(2.0 * math.pi)
    z = np.stack([g.ravel() for g in np.meshgrid(*([zg] * d), indexing="ij")], axis=-1)
    w = np.prod(np.stack([g.ravel() for g in np.meshgrid(*([g1] * d), indexing="ij")], axis=-1), axis=-1)
    out = np.empty(s.size)
    for i, si in enumerate(s):
        y = x + math.sqrt(2.0 * si) * z
        vals = np.broadcast_to(Q(np.array([[si]]), y[None, ...]), (1, y.shape[0]))
        out[i] = vals[0] @ w
    return out


_PROFILE_MAX_TERMS = 8192


@lru_cache(maxsize=64)
def _profile_sine_coeffs(profile, a: float, L: float, n_terms: int, breaks: tuple) -> np.ndarray:
    panels = max(256, n_terms)
    br = merge_breaks(np.linspace(a, a + L, panels + 1), np.asarray(breaks, dtype=float))
    y, w = panel_rule(br, 8)
    vals = np.asarray(profile(y), dtype=float) * w
    n = np.arange(1, n_terms + 1)
    return (2.0 / L) * (vals @ np.sin(np.outer(y - a, n * math.pi / L)))


def profile_evolution(model: SpatialModel, profile, s, x, extra_breaks=()):
    """e^{sL} profile at x for every s, from sine coefficients computed once
    per profile. Returns None on unbounded domains, for unhashable profiles,
    or when the smallest s would need more than _PROFILE_MAX_TERMS terms."""
    if isinstance(model, KilledBMInterval):
        a, L, power, scale = model.a, model.length, 2.0, (math.pi / model.length) ** 2
    elif isinstance(model, SpectralFractionalInterval):
        a, L, power, scale = 0.0, math.pi, 2.0 * model.beta, 1.0
    else:
        return None
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if s.size == 0 or not float(s.min()) > 0:
        return None
    need = series_terms(float(s.min()) * scale, power)
    if need > _PROFILE_MAX_TERMS:
        return None
    n_terms = 1 << max(6, (need - 1).bit_length())
    breaks = tuple(float(b) for b in _clip_breaks(extra_breaks, a, a + L))
    try:
        coef = _profile_sine_coeffs(profile, float(a), float(L), n_terms, breaks)
    except TypeError:
        return None
    n = np.arange(1, n_terms + 1)
    basis = np.sin(n * math.pi * (float(x) - a) / L)
    return (np.exp(-np.outer(s, model.eigenvalue(n))) * coef) @ basis


def semigroup_apply(model: SpatialModel, r, q, x, extra_breaks=()):
    """e^{rL} q evaluated at x, i.e. int p_r(x, y) q(y) dy.

    Eigenfunction sums (:class:`TrigSeries`) are propagated exactly; other
    data is integrated numerically. ``q`` is extended by zero outside the
    domain. ``extra_breaks`` lets the caller add quadrature breakpoints
    where ``q`` has fine structure.
    """
    r_arr = _check_time(r)
    _check_points(model, x)
    if isinstance(q, TrigSeries):
        exact = q.evolve(model, r_arr, x)
        if exact is not None:
            return float(exact) if np.ndim(exact) == 0 else exact
    hints = getattr(q, "breakpoints", None)
    breaks = list(np.ravel(extra_breaks))
    if callable(hints):
        breaks.extend(np.ravel(hints()))

    def Q(_, y):
        return q(y)

    out = _apply(model, np.atleast_1d(r_arr).ravel(), x, Q, np.asarray(breaks, dtype=float))
    return float(out[0]) if np.ndim(r_arr) == 0 else out.reshape(r_arr.shape)


def domain_breaks(model: SpatialModel) -> np.ndarray:
    if isinstance(model, (KilledBMInterval, SpectralFractionalInterval)):
        return np.array([model.a, model.b])
    if isinstance(model, ReflectedBMHalfLine):
        return np.array([0.0])
    return np.empty(0)


__all__ = [
    "SpatialModel", "FreeBM", "KilledBMInterval", "ReflectedBMHalfLine", "SpectralFractionalInterval",
    "TrigSeries", "parse_spatial", "transition_density", "survival", "sample_step", "step_batch",
    "semigroup_apply", "series_terms",
]
