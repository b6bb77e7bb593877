"""Levy subordinators, their inverse (first passage) and the derived densities.

Three kernels are supported:

``Stable(alpha)``
    nu(r) = r^(-1-alpha) / |Gamma(-alpha)|, Laplace exponent k^alpha.
``TemperedStable(alpha, lam)``
    the stable density damped by exp(-lam r).
``Tabulated(r, values, small_exponent, large_exponent)``
    a user grid with power-law continuation on both sides.

The stable case has closed forms for the potential and overshoot densities.
The tempered potential density is a Mittag-Leffler function, so its overshoot
density is a one-dimensional quadrature. Tabulated kernels use a Monte Carlo
occupation histogram for the potential density instead.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import special

from ._quad import gauss_legendre, log_breaks, merge_breaks, panel_rule
from .errors import ConfigError, DomainError, RunawayPathError
from .rng import as_generator, stream

DEFAULT_MAX_STEPS = 10**8

# integration range for generic nu-weighted integrals; remainders are analytic
_NU_LO = 1e-16
_NU_HI = 1e16


def positive_stable(alpha: float, size, rng) -> np.ndarray:
    """Standard positive alpha-stable variates, E[exp(-k X)] = exp(-k^alpha).

    Uses Kanter's form of the Chambers-Mallows-Stuck transformation. For
    alpha = 1/2 the exact Levy representation 1 / (2 Z^2) is used instead.
    """
    rng = as_generator(rng)
    if alpha == 0.5:
        z = rng.standard_normal(size)
        return 0.5 / (z * z)
    u = rng.uniform(0.0, np.pi, size)
    e = rng.standard_exponential(size)
    return (np.sin(alpha * u) / np.sin(u) ** (1.0 / alpha)) * (
        np.sin((1.0 - alpha) * u) / e
    ) ** ((1.0 - alpha) / alpha)


def stable_density(alpha: float, x) -> np.ndarray:
    """Density of the standard positive alpha-stable law at ``x``.

    Closed form for alpha = 1/2, otherwise Zolotarev's integral
    representation evaluated by Gauss-Legendre over (0, pi).
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    if alpha == 0.5:
        xp = x[pos]
        out[pos] = np.exp(-0.25 / xp) / (2.0 * np.sqrt(np.pi) * xp**1.5)
        return out
    theta, w = panel_rule(np.linspace(0.0, np.pi, 17), order=16)
    a = (np.sin(alpha * theta) / np.sin(theta)) ** (1.0 / (1.0 - alpha)) * (
        np.sin((1.0 - alpha) * theta) / np.sin(alpha * theta)
    )
    xp = x[pos][:, None]
    z = xp ** (-alpha / (1.0 - alpha))
    integrand = a * np.exp(-a * z)
    out[pos] = (alpha / (1.0 - alpha)) * xp[:, 0] ** (-1.0 / (1.0 - alpha)) * (integrand @ w) / np.pi
    return out


# --------------------------------------------------------------------------
# kernels


@dataclass(frozen=True)
class LevyKernel:
    """Common interface of the subordination kernels."""

    def levy_density(self, r) -> np.ndarray:
        raise NotImplementedError

    def laplace_exponent(self, k) -> np.ndarray:
        raise NotImplementedError

    def sample(self, h: float, size, rng) -> np.ndarray:
        raise NotImplementedError

    def small_moment(self, eps) -> np.ndarray:
        """int_0^eps r nu(r) dr."""
        raise NotImplementedError

    def tail_mass(self, x) -> np.ndarray:
        """int_x^inf nu(r) dr for x > 0."""
        raise NotImplementedError

    @property
    def small_index(self) -> float:
        """Index a with nu(r) ~ c r^(-1-a) as r -> 0."""
        raise NotImplementedError

    @property
    def small_constant(self) -> float:
        raise NotImplementedError

    def nu_rule(self, lo: float = _NU_LO, hi: float = _NU_HI, per_decade: float = 4.0, order: int = 8):
        """Nodes r and weights w*nu(r) for int_lo^hi F(r) nu(r) dr."""
        breaks = merge_breaks(log_breaks(lo, hi, per_decade), self._kinks(lo, hi))
        r, w = panel_rule(breaks, order)
        return r, w * self.levy_density(r)

    def _kinks(self, lo, hi) -> np.ndarray:
        return np.empty(0)

    def potential_factor(self, s):
        """g(s) = u(s) s^(1-a) when the potential density u is known in
        closed form (g is then smooth in s^a), else None."""
        return None

    def describe(self) -> str:
        raise NotImplementedError


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"stable index must lie in (0, 1), got {alpha}")


@dataclass(frozen=True)
class Stable(LevyKernel):
    alpha: float

    def __post_init__(self):
        _check_alpha(self.alpha)

    @property
    def _c(self) -> float:
        return 1.0 / abs(math.gamma(-self.alpha))

    def levy_density(self, r):
        r = np.asarray(r, dtype=float)
        return self._c * r ** (-1.0 - self.alpha)

    def laplace_exponent(self, k):
        return np.asarray(k, dtype=float) ** self.alpha

    def sample(self, h, size, rng):
        return h ** (1.0 / self.alpha) * positive_stable(self.alpha, size, rng)

    def small_moment(self, eps):
        a = self.alpha
        return self._c * np.asarray(eps, dtype=float) ** (1.0 - a) / (1.0 - a)

    def tail_mass(self, x):
        a = self.alpha
        return self._c * np.asarray(x, dtype=float) ** (-a) / a

    @property
    def small_index(self):
        return self.alpha

    @property
    def small_constant(self):
        return self._c

    def describe(self):
        return f"stable:{self.alpha:g}"

    def potential_factor(self, s):
        return np.full_like(np.asarray(s, dtype=float), 1.0 / math.gamma(self.alpha))


# beyond lam*s = 40 the potential density is its renewal limit to e^-40
_RENEWAL_LIMIT = 40.0


def _tempered_factor(alpha: float, lam: float, s):
    """e^(-lam s) E_{a,a}((lam s)^a), the inverse Laplace transform of
    1 / ((k + lam)^a - lam^a) divided by s^(a-1).

    The series has positive terms, so it is summed in log space.
    """
    s = np.asarray(s, dtype=float)
    if lam == 0:
        return np.full_like(s, 1.0 / math.gamma(alpha))
    z = lam * s
    out = np.empty_like(z)
    far = z > _RENEWAL_LIMIT
    # u(s) -> 1 / E[S_1] = lam^(1-a) / a
    out[far] = lam ** (1.0 - alpha) / alpha * s[far] ** (1.0 - alpha)
    zn = z[~far]
    if zn.size:
        n = np.arange(int((2 * _RENEWAL_LIMIT + 10 * math.sqrt(_RENEWAL_LIMIT)) / alpha) + 40)
        with np.errstate(divide="ignore"):
            logz = np.log(zn)
        lg = special.gammaln(alpha * n + alpha)
        vals = np.empty_like(zn)
        for k in range(0, zn.size, 8192):
            sl = slice(k, k + 8192)
            logs = alpha * n[None, :] * logz[sl, None] - lg[None, :]
            logs[:, 0] = -lg[0]
            vals[sl] = np.exp(special.logsumexp(logs, axis=1) - zn[sl])
        out[~far] = vals
    return out


@dataclass(frozen=True)
class TemperedStable(LevyKernel):
    alpha: float
    lam: float

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not self.lam >= 0:
            raise DomainError(f"tempering rate must be >= 0, got {self.lam}")

    @property
    def _c(self) -> float:
        return 1.0 / abs(math.gamma(-self.alpha))

    def levy_density(self, r):
        r = np.asarray(r, dtype=float)
        return self._c * np.exp(-self.lam * r) * r ** (-1.0 - self.alpha)

    def laplace_exponent(self, k):
        k = np.asarray(k, dtype=float)
        return (k + self.lam) ** self.alpha - self.lam**self.alpha

    def sample(self, h, size, rng):
        # exact: a stable draw is kept with probability exp(-lam * draw)
        rng = as_generator(rng)
        out = h ** (1.0 / self.alpha) * positive_stable(self.alpha, size, rng)
        if self.lam == 0:
            return out
        out = np.atleast_1d(out)
        todo = np.flatnonzero(rng.uniform(size=out.shape).ravel() > np.exp(-self.lam * out.ravel()))
        flat = out.reshape(-1)
        while todo.size:
            draw = h ** (1.0 / self.alpha) * positive_stable(self.alpha, todo.size, rng)
            keep = rng.uniform(size=todo.size) <= np.exp(-self.lam * draw)
            flat[todo[keep]] = draw[keep]
            todo = todo[~keep]
        return out

    def small_moment(self, eps):
        a, lam = self.alpha, self.lam
        eps = np.asarray(eps, dtype=float)
        if lam == 0:
            return self._c * eps ** (1.0 - a) / (1.0 - a)
        return self._c * lam ** (a - 1.0) * special.gammainc(1.0 - a, lam * eps) * math.gamma(1.0 - a)

    def tail_mass(self, x):
        a, lam = self.alpha, self.lam
        x = np.asarray(x, dtype=float)
        if lam == 0:
            return self._c * x ** (-a) / a
        z = lam * x
        # Gamma(-a, z) = (z^-a e^-z - Gamma(1-a, z)) / a
        upper = special.gammaincc(1.0 - a, z) * math.gamma(1.0 - a)
        return self._c * lam**a * (z ** (-a) * np.exp(-z) - upper) / a

    @property
    def small_index(self):
        return self.alpha

    @property
    def small_constant(self):
        return self._c

    def describe(self):
        return f"tempered:{self.alpha:g}:{self.lam:g}"

    def potential_factor(self, s):
        return _tempered_factor(self.alpha, self.lam, s)


@dataclass(frozen=True)
class Tabulated(LevyKernel):
    """Levy density given on a grid, continued by power laws.

    Below the first grid point nu(r) = nu(r0) (r / r0)^small_exponent with
    small_exponent in (-2, -1]; above the last point the large exponent
    (< -1) is used. Between grid points log nu is interpolated linearly in
    log r (linear in r where a value is zero).
    """

    r: tuple
    values: tuple
    small_exponent: float
    large_exponent: float
    _grid: np.ndarray = field(init=False, repr=False, compare=False, hash=False)
    _vals: np.ndarray = field(init=False, repr=False, compare=False, hash=False)
    _tail_at_grid: np.ndarray = field(init=False, repr=False, compare=False, hash=False)
    _jump_table: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "r", tuple(r.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))
        if r.ndim != 1 or r.size < 2 or r.size != v.size:
            raise ConfigError("tabulated kernel needs matching r and nu columns with >= 2 rows")
        if np.any(r <= 0) or np.any(np.diff(r) <= 0):
            raise ConfigError("tabulated r grid must be positive and strictly increasing")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ConfigError("tabulated nu values must be finite and nonnegative")
        if v[0] <= 0 or v[-1] <= 0:
            raise ConfigError("tabulated nu must be positive at both grid ends to carry the power-law tails")
        if not (-2.0 < self.small_exponent <= -1.0):
            raise ConfigError(
                f"small-r exponent must lie in (-2, -1] so that nu is not integrable at 0, got {self.small_exponent}"
            )
        if not self.large_exponent < -1.0:
            raise ConfigError(f"large-r exponent must be < -1, got {self.large_exponent}")
        object.__setattr__(self, "_grid", r)
        object.__setattr__(self, "_vals", v)
        # cumulative tail masses at the grid points
        seg = np.empty(r.size - 1)
        for i in range(r.size - 1):
            nodes, w = panel_rule(log_breaks(r[i], r[i + 1], 8.0), 8)
            seg[i] = w @ self.levy_density(nodes)
        far = self._power_tail(r[-1])
        tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]]) + far
        object.__setattr__(self, "_tail_at_grid", tail)
        # sanity of the (r ^ 1) nu integrability requirement
        check = float(self.small_moment(min(1.0, r[0])))
        if r[0] < 1.0:
            nodes, w = self.nu_rule(r[0], 1.0)
            check += float(w @ nodes)
        check += float(self.tail_mass(1.0))
        if not np.isfinite(check):
            raise ConfigError("tabulated kernel fails int (r ^ 1) nu(r) dr < inf")
        object.__setattr__(self, "_jump_table", self._build_jump_table())

    def _power_tail(self, x):
        p = self.large_exponent
        rn, vn = self._grid[-1], self._vals[-1]
        return vn * rn ** (-p) * np.asarray(x, dtype=float) ** (p + 1.0) / (-p - 1.0)

    def levy_density(self, r):
        r = np.asarray(r, dtype=float)
        g, v = self._grid, self._vals
        out = np.empty_like(r)
        lo = r < g[0]
        hi = r > g[-1]
        mid = ~(lo | hi)
        out[lo] = v[0] * (r[lo] / g[0]) ** self.small_exponent
        out[hi] = v[-1] * (r[hi] / g[-1]) ** self.large_exponent
        if np.all(v > 0):
            out[mid] = np.exp(np.interp(np.log(r[mid]), np.log(g), np.log(v)))
        else:
            out[mid] = np.interp(r[mid], g, v)
        return out

    def _kinks(self, lo, hi):
        g = self._grid
        return g[(g > lo) & (g < hi)]

    def laplace_exponent(self, k):
        k = np.asarray(k, dtype=float)
        nodes, w = self.nu_rule()
        body = -np.expm1(-np.multiply.outer(k, nodes)) @ w
        return k * self.small_moment(_NU_LO) + body + self.tail_mass(_NU_HI)

    def small_moment(self, eps):
        eps = np.atleast_1d(np.asarray(eps, dtype=float))
        g0, v0, p = self._grid[0], self._vals[0], self.small_exponent
        c = v0 * g0 ** (-p)
        below = np.minimum(eps, g0)
        out = c * below ** (p + 2.0) / (p + 2.0)
        for i in np.flatnonzero(eps > g0):
            nodes, w = panel_rule(merge_breaks(log_breaks(g0, eps[i], 8.0), self._kinks(g0, eps[i])), 8)
            out[i] += w @ (nodes * self.levy_density(nodes))
        return out if out.size > 1 else out[0]

    def tail_mass(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        g, p_s = self._grid, self.small_exponent
        out = np.empty_like(x)
        lo = x < g[0]
        hi = x >= g[-1]
        mid = ~(lo | hi)
        c = self._vals[0] * g[0] ** (-p_s)
        xl = x[lo]
        if p_s == -1.0:
            extra = c * np.log(g[0] / xl)
        else:
            extra = c * (g[0] ** (p_s + 1.0) - xl ** (p_s + 1.0)) / (p_s + 1.0)
        out[lo] = self._tail_at_grid[0] + extra
        out[hi] = self._power_tail(x[hi])
        if np.any(mid):
            xm = x[mid]
            idx = np.searchsorted(g, xm, side="right")
            right = g[idx]
            xg, wg = gauss_legendre(16)
            nodes = xm[:, None] + 0.5 * (right - xm)[:, None] * (xg + 1.0)
            part = (0.5 * (right - xm)[:, None] * wg * self.levy_density(nodes)).sum(axis=1)
            out[mid] = self._tail_at_grid[idx] + part
        return out if out.size > 1 else out[0]

    @property
    def small_index(self):
        return -1.0 - self.small_exponent

    @property
    def small_constant(self):
        return self._vals[0] * self._grid[0] ** (-self.small_exponent)

    def _build_jump_table(self):
        g = self._grid
        rr = np.geomspace(g[0], g[-1] * 1e8, 2000)
        rr = np.unique(np.concatenate([rr, g]))
        lam = self.tail_mass(rr)
        # steep fitted tails underflow to 0; the inversion works in log space
        keep = lam > 0
        return rr[keep], lam[keep]

    def sample(self, h, size, rng):
        """Compound-Poisson jumps above the first grid point plus the mean of
        the smaller jumps as drift."""
        rng = as_generator(rng)
        rr, lam = self._jump_table
        total = lam[0]
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape))
        counts = rng.poisson(h * total, n)
        m = int(counts.sum())
        u = rng.uniform(size=m) * total
        # invert the decreasing tail function in log space
        inside = u >= lam[-1]
        sizes = np.empty(m)
        sizes[inside] = np.exp(np.interp(-np.log(u[inside]), -np.log(lam), np.log(rr)))
        p = self.large_exponent
        c = self._vals[-1] * self._grid[-1] ** (-p) / (-p - 1.0)
        sizes[~inside] = (u[~inside] / c) ** (1.0 / (p + 1.0))
        owner = np.repeat(np.arange(n), counts)
        jumps = np.bincount(owner, weights=sizes, minlength=n)
        drift = h * float(self.small_moment(self._grid[0]))
        return (drift + jumps).reshape(shape)

    def describe(self):
        return f"tabulated:{len(self.r)}pts"


def load_tabulated(path) -> Tabulated:
    """Read a two-column (r, nu) CSV.

    Header lines starting with ``#`` carry ``small_exponent: value`` and
    ``large_exponent: value``.
    """
    meta = {}
    rows = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for line in fh:
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                body = s.lstrip("#").strip()
                for sep in (":", "="):
                    if sep in body:
                        key, val = body.split(sep, 1)
                        meta[key.strip().lower()] = val.strip()
                        break
                continue
            rows.append(s)
    data = []
    for rec in csv.reader(rows):
        try:
            data.append((float(rec[0]), float(rec[1])))
        except (ValueError, IndexError):
            continue  # column header line
    if "small_exponent" not in meta or "large_exponent" not in meta:
        raise ConfigError(f"{path}: header must declare small_exponent and large_exponent")
    r, v = zip(*data) if data else ((), ())
    return Tabulated(r, v, float(meta["small_exponent"]), float(meta["large_exponent"]))


def save_tabulated(kernel: Tabulated, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"# small_exponent: {kernel.small_exponent!r}\n")
        fh.write(f"# large_exponent: {kernel.large_exponent!r}\n")
        fh.write("r,nu\n")
        for r, v in zip(kernel.r, kernel.values):
            fh.write(f"{r!r},{v!r}\n")


def tabulate(kernel: LevyKernel, r) -> Tabulated:
    """Tabulate an analytic kernel on ``r`` with its own power-law ends."""
    r = np.asarray(r, dtype=float)
    a = kernel.small_index
    tail = -1.0 - a
    if isinstance(kernel, TemperedStable) and kernel.lam > 0:
        tail = -1.0 - a - kernel.lam * r[-1]  # local log-slope at the last point
    return Tabulated(tuple(r), tuple(kernel.levy_density(r)), -1.0 - a, tail)


# --------------------------------------------------------------------------
# kernel-level operations


def laplace_exponent(kernel: LevyKernel, k):
    """psi(k) = int_0^inf (1 - exp(-k s)) nu(s) ds."""
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr <= 0):
        raise DomainError("Laplace exponent needs k > 0")
    out = kernel.laplace_exponent(k_arr)
    return float(out) if np.ndim(out) == 0 else out


def sample_increment(kernel: LevyKernel, h: float, rng, size=None):
    """Draw S_h, the subordinator increment over operational time h."""
    if not h > 0:
        raise DomainError("operational step h must be > 0")
    n = 1 if size is None else size
    out = kernel.sample(h, n, as_generator(rng))
    return float(np.ravel(out)[0]) if size is None else out


@dataclass(frozen=True)
class SubordinatorCrossing:
    """A subordinator path sampled on the grid k*h up to first passage of t."""

    h: float
    values: np.ndarray = field(repr=False)
    index: int
    crossing_value: float
    target: float

    @property
    def tau_hat(self) -> float:
        return self.index * self.h

    @property
    def overshoot(self) -> float:
        return self.crossing_value - self.target


def simulate_to_crossing(kernel: LevyKernel, t: float, h: float, rng, max_steps: int = DEFAULT_MAX_STEPS) -> SubordinatorCrossing:
    if not (t > 0 and h > 0):
        raise DomainError("need t > 0 and h > 0")
    rng = as_generator(rng)
    chunks = [np.zeros(1)]
    level = 0.0
    steps = 0
    chunk = 256
    while True:
        inc = kernel.sample(h, chunk, rng)
        path = level + np.cumsum(inc)
        hit = np.flatnonzero(path > t)
        if hit.size:
            j = hit[0]
            chunks.append(path[: j + 1])
            values = np.concatenate(chunks)
            return SubordinatorCrossing(h, values, steps + j + 1, float(values[-1]), float(t))
        chunks.append(path)
        level = path[-1]
        steps += chunk
        if steps >= max_steps:
            raise RunawayPathError(
                f"subordinator did not pass t={t} within {max_steps} steps",
                steps=steps, level=float(level), t=t, h=h, kernel=kernel.describe(),
            )
        chunk = min(chunk * 2, 1 << 16)


@dataclass(frozen=True)
class CrossingSample:
    """Vectorised first-passage data for many independent paths."""

    h: float
    t: float
    index: np.ndarray
    before: np.ndarray
    after: np.ndarray

    @property
    def tau_hat(self) -> np.ndarray:
        return self.index * self.h

    @property
    def overshoot(self) -> np.ndarray:
        return self.after - self.t

    @property
    def undershoot(self) -> np.ndarray:
        return self.t - self.before


def sample_crossings(kernel: LevyKernel, t: float, h: float, n: int, rng, max_steps: int = DEFAULT_MAX_STEPS,
                     chunk: int = 128) -> CrossingSample:
    """First passage over ``t`` for ``n`` paths, without storing the paths."""
    if not (t > 0 and h > 0):
        raise DomainError("need t > 0 and h > 0")
    rng = as_generator(rng)
    index = np.zeros(n, dtype=np.int64)
    before = np.zeros(n)
    after = np.zeros(n)
    active = np.arange(n)
    level = np.zeros(n)
    steps = 0
    while active.size:
        inc = kernel.sample(h, (active.size, chunk), rng)
        path = level[:, None] + np.cumsum(inc, axis=1)
        over = path > t
        hit = over.any(axis=1)
        j = np.argmax(over, axis=1)
        done = active[hit]
        jd = j[hit]
        rows = np.flatnonzero(hit)
        index[done] = steps + jd + 1
        after[done] = path[rows, jd]
        prev = np.where(jd > 0, path[rows, np.maximum(jd - 1, 0)], level[rows])
        before[done] = prev
        level = path[~hit, -1]
        active = active[~hit]
        steps += chunk
        if active.size and steps >= max_steps:
            raise RunawayPathError(
                f"{active.size} paths did not pass t={t} within {max_steps} steps",
                steps=steps, remaining=int(active.size), t=t, h=h, kernel=kernel.describe(),
            )
    return CrossingSample(h, t, index, before, after)


def marginal_density(kernel: LevyKernel, r: float, s):
    """Density of S_r at s, available for the stable kernel only."""
    if not isinstance(kernel, Stable):
        raise DomainError("marginal density is only exposed for the stable kernel")
    a = kernel.alpha
    scale = r ** (1.0 / a)
    return stable_density(a, np.asarray(s, dtype=float) / scale) / scale


# --------------------------------------------------------------------------
# potential density


@dataclass(frozen=True)
class PotentialTable:
    """Occupation-histogram estimate of the potential density.

    ``edges[0] = 0``; the first bin uses the small-s power law of the kernel,
    bins ``1..`` hold piecewise-constant Monte Carlo values.
    """

    edges: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    small_index: float
    small_coef: float
    n_paths: int
    h: float

    @property
    def s_max(self) -> float:
        return float(self.edges[-1])

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        first = s < self.edges[1]
        out[first] = self._head(s[first])
        j = np.clip(np.searchsorted(self.edges, s[~first], side="right") - 1, 1, self.values.size - 1)
        out[~first] = self.values[j]
        return out

    def _head(self, s):
        a = self.small_index
        if a > 0:
            return self.small_coef * s ** (a - 1.0)
        return np.full_like(s, self.values[0])

    def head_mass(self, upto) -> np.ndarray:
        """int_0^upto of the first-bin power law (upto <= edges[1])."""
        a = self.small_index
        upto = np.asarray(upto, dtype=float)
        if a > 0:
            return self.small_coef * upto**a / a
        return self.values[0] * upto


def build_potential_table(kernel: LevyKernel, s_max: float = 4.0, n_paths: int = 4000, h: float | None = None,
                          n_bins: int = 64, seed: int = 7_340_411) -> PotentialTable:
    """Estimate u(s) = int_0^inf p_r(s) dr from simulated occupation times."""
    a = kernel.small_index
    s1 = s_max * 1e-4
    edges = np.concatenate([[0.0], np.geomspace(s1, s_max, n_bins)])
    if h is None:
        h = min(1e-3, (0.05 * s1) ** max(a, 0.05))
    rng = stream(seed, 1)
    nb = edges.size - 1
    occ = np.zeros((n_paths, nb))
    # S_0 = 0 enters with half weight (trapezoid at r = 0)
    occ[:, 0] += 0.5 * h
    level = np.zeros(n_paths)
    active = np.arange(n_paths)
    while active.size:
        level = level + kernel.sample(h, active.size, rng)
        alive = level < s_max
        active, level = active[alive], level[alive]
        b = np.searchsorted(edges, level, side="right") - 1
        np.add.at(occ, (active, b), h)
    width = np.diff(edges)
    values = occ.mean(axis=0) / width
    stderr = occ.std(axis=0, ddof=1) / np.sqrt(n_paths) / width
    if a > 0:
        coef = kernel.small_constant * abs(math.gamma(-a)) * math.gamma(a)
        coef = 1.0 / coef
    else:
        coef = values[0]
    return PotentialTable(edges, values, stderr, a, coef, n_paths, h)


@lru_cache(maxsize=32)
def _cached_table(kernel: LevyKernel, s_max: float) -> PotentialTable:
    return build_potential_table(kernel, s_max)


def potential_table(kernel: LevyKernel, s_needed: float = 4.0) -> PotentialTable:
    s_max = 4.0
    while s_max < s_needed:
        s_max *= 2.0
    return _cached_table(kernel, s_max)


def potential_density(kernel: LevyKernel, s):
    """u(s) = int_0^inf p_r(s) dr."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= 0):
        raise DomainError("potential density needs s > 0")
    g = kernel.potential_factor(s_arr)
    if g is not None:
        out = s_arr ** (kernel.small_index - 1.0) * g
    else:
        out = potential_table(kernel, float(np.max(s_arr)))(s_arr)
    return float(out) if np.ndim(out) == 0 else out


def potential_stderr(kernel: LevyKernel, s):
    s_arr = np.asarray(s, dtype=float)
    if kernel.potential_factor(s_arr) is not None:
        return np.zeros_like(s_arr)
    table = potential_table(kernel, float(np.max(s_arr)))
    j = np.clip(np.searchsorted(table.edges, s_arr, side="right") - 1, 0, table.values.size - 1)
    err = table.stderr[j]
    return np.where(s_arr < table.edges[1], 0.0, err)


def _factor_integral(kernel: LevyKernel, t: float, weight=None, order: int = 16, panels: int = 8) -> float:
    """int_0^t u(s) weight(s) ds with s = w^(1/a), where u s^(1-a) is smooth in w."""
    a = kernel.small_index
    w, ww = panel_rule(np.linspace(0.0, t**a, panels + 1), order)
    s = w ** (1.0 / a)
    vals = kernel.potential_factor(s)
    if weight is not None:
        vals = vals * weight(s)
    return float(ww @ vals) / a


def inverse_mean(kernel: LevyKernel, t: float) -> tuple[float, float]:
    """E[tau_0(t)] = int_0^t u(s) ds with its Monte Carlo error (zero when u
    is known in closed form)."""
    if isinstance(kernel, Stable):
        return t**kernel.alpha / math.gamma(kernel.alpha + 1.0), 0.0
    if kernel.potential_factor(np.array([t])) is not None:
        return _factor_integral(kernel, t, panels=max(8, int(math.ceil(t**kernel.small_index)) * 4)), 0.0
    table = potential_table(kernel, t)
    e = table.edges
    s1 = e[1]
    mass = float(table.head_mass(min(t, s1)))
    var = 0.0
    hi = np.minimum(e[2:], t)
    lo = e[1:-1]
    w = np.clip(hi - lo, 0.0, None)
    mass += float(w @ table.values[1:])
    var += float((w**2) @ table.stderr[1:] ** 2)
    return mass, math.sqrt(var)


# --------------------------------------------------------------------------
# overshoot density


def _stable_overshoot(alpha, t, r):
    return t**alpha * r ** (-alpha) / (t + r) / (math.gamma(alpha) * math.gamma(1.0 - alpha))


def _factor_overshoot(kernel: LevyKernel, t: float, r: np.ndarray) -> np.ndarray:
    """int_0^t nu(t - z + r) u(z) dz for a closed-form u.

    [0, t/2] uses z = w^(1/a); on [t/2, t] the distance v = t - z gets
    panels graded on the scale r, where nu(v + r) varies.
    """
    a = kernel.small_index
    half = 0.5 * t
    w, ww = panel_rule(np.linspace(0.0, half**a, 9), 16)
    z = w ** (1.0 / a)
    left = (ww * kernel.potential_factor(z) / a) @ kernel.levy_density(t - z[None, :] + r[:, None]).T
    # per r: panels [0, r/100], geometric up to r, then log panels to t/2
    rows, starts, ends = [], [], []
    for i, ri in enumerate(r):
        if ri < half:
            b = np.concatenate([[0.0], ri * np.geomspace(1e-2, 1.0, 5), log_breaks(ri, half, 6.0)[1:]])
        else:
            b = np.linspace(0.0, half, 5)
        rows.append(np.full(b.size - 1, i))
        starts.append(b[:-1])
        ends.append(b[1:])
    rows, lo, hi = np.concatenate(rows), np.concatenate(starts), np.concatenate(ends)
    xg, wg = gauss_legendre(10)
    v = 0.5 * (hi - lo)[:, None] * (xg + 1.0)[None, :] + lo[:, None]
    wv = 0.5 * (hi - lo)[:, None] * wg[None, :]
    # u is analytic on [t/2, t]; a Chebyshev interpolant avoids re-summing the series
    cheb = np.polynomial.Chebyshev.interpolate(
        lambda z: z ** (a - 1.0) * kernel.potential_factor(z), 64, domain=[half, t])
    u = cheb(t - v)
    per_panel = (wv * u * kernel.levy_density(v + r[rows][:, None])).sum(axis=1)
    return left + np.bincount(rows, weights=per_panel, minlength=r.size)


def _general_overshoot(kernel: LevyKernel, t: float, r: np.ndarray):
    """int_0^t nu(t - z + r) u(z) dz with u from the occupation table.

    Piecewise-constant bins integrate nu exactly through its tail mass; the
    power-law head uses Gauss-Legendre after z = w^(1/a).
    """
    table = potential_table(kernel, t)
    e = table.edges
    rr = r[:, None]
    lo = e[1:-1][None, :]
    hi = np.minimum(e[2:], t)[None, :]
    valid = hi > lo
    lo_c = np.minimum(lo, t)
    hi_c = np.where(valid, hi, lo_c)
    dnu = kernel.tail_mass(t - hi_c + rr).reshape(rr.shape[0], -1) - kernel.tail_mass(t - lo_c + rr).reshape(rr.shape[0], -1)
    dnu = np.where(valid, dnu, 0.0)
    value = dnu @ table.values[1:]
    var = (dnu**2) @ table.stderr[1:] ** 2
    # head bin [0, min(s1, t)]
    top = min(e[1], t)
    a = table.small_index
    xg, wg = gauss_legendre(24)
    if a > 0:
        wmax = top**a
        w = 0.5 * wmax * (xg + 1.0)
        z = w ** (1.0 / a)
        head = (0.5 * wmax * wg * kernel.levy_density(t - z[None, :] + rr)).sum(axis=1) * table.small_coef / a
    else:
        head = table.values[0] * (kernel.tail_mass(t - top + r) - kernel.tail_mass(t + r))
    return value + head, np.sqrt(var)


def overshoot_density(kernel: LevyKernel, t: float, r):
    """Density of S_{tau_0(t)} - t at r."""
    r_arr = np.asarray(r, dtype=float)
    if not t > 0 or np.any(r_arr <= 0):
        raise DomainError("overshoot density needs t > 0 and r > 0")
    if isinstance(kernel, Stable):
        out = _stable_overshoot(kernel.alpha, t, r_arr)
    elif kernel.potential_factor(np.array([t])) is not None:
        out = _factor_overshoot(kernel, t, np.atleast_1d(r_arr).ravel()).reshape(r_arr.shape)
    else:
        out = _general_overshoot(kernel, t, np.atleast_1d(r_arr).ravel())[0].reshape(r_arr.shape)
    return float(out) if np.ndim(out) == 0 else out


def overshoot_density_stderr(kernel: LevyKernel, t: float, r):
    """Propagated Monte Carlo error of :func:`overshoot_density` (0 when the
    potential density is known in closed form)."""
    r_arr = np.asarray(r, dtype=float)
    if kernel.potential_factor(np.array([t])) is not None:
        return np.zeros_like(r_arr)
    return _general_overshoot(kernel, t, np.atleast_1d(r_arr).ravel())[1].reshape(r_arr.shape)


def overshoot_cdf(kernel: LevyKernel, t: float, r):
    """P(S_{tau_0(t)} - t <= r)."""
    r_arr = np.asarray(r, dtype=float)
    if isinstance(kernel, Stable):
        a = kernel.alpha
        out = special.betainc(1.0 - a, a, r_arr / (t + r_arr))
    else:
        flat = np.atleast_1d(r_arr).ravel()
        out = np.empty_like(flat)
        for i, ri in enumerate(flat):
            nodes, w = overshoot_rule(kernel, t, lo=1e-12 * t, hi=ri)
            out[i] = w @ overshoot_density(kernel, t, nodes)
        out = out.reshape(r_arr.shape)
    return float(out) if np.ndim(out) == 0 else out


def overshoot_tail_bound(kernel: LevyKernel, t: float, R: float) -> float:
    """Upper bound on P(overshoot > R): nu-tail at R times E[tau_0(t)]."""
    if isinstance(kernel, Stable):
        a = kernel.alpha
        return float(special.betainc(a, 1.0 - a, t / (t + R)))
    mean, _ = inverse_mean(kernel, t)
    return float(kernel.tail_mass(R)) * mean


def overshoot_head_bound(kernel: LevyKernel, t: float, r0: float) -> float:
    """Approximate P(overshoot < r0) from the r^(-a) behaviour at 0."""
    if isinstance(kernel, Stable):
        return float(overshoot_cdf(kernel, t, r0))
    a = kernel.small_index
    p0 = overshoot_density(kernel, t, r0)
    return float(p0 * r0 / (1.0 - a))


def overshoot_rule(kernel: LevyKernel, t: float, lo: float | None = None, hi: float | None = None,
                   per_decade: float = 4.0, order: int = 8, tol: float = 1e-7):
    """Log-spaced composite rule for integrals against the overshoot law.

    Default limits come from the analytic head and tail bounds so that the
    mass outside [lo, hi] is below ``tol`` for the stable kernel.
    """
    if lo is None or hi is None:
        dlo, dhi = overshoot_range(kernel, t, tol)
        lo = dlo if lo is None else lo
        hi = dhi if hi is None else hi
    breaks = merge_breaks(log_breaks(lo, hi, per_decade), [t] if lo < t < hi else [])
    return panel_rule(breaks, order)


def overshoot_range(kernel: LevyKernel, t: float, tol: float = 1e-7) -> tuple[float, float]:
    a = kernel.small_index
    if isinstance(kernel, Stable):
        s = math.sin(math.pi * a) / math.pi
        lo = t * (tol * (1.0 - a) / s) ** (1.0 / (1.0 - a))
        hi = t * (s / (a * tol)) ** (1.0 / a)
        return lo, hi
    # the density behaves like C r^(-a) near 0; keep the head mass below tol
    r0 = t * 1e-8
    C = overshoot_density(kernel, t, r0) * r0**a
    lo = min(t * 1e-3, (tol * (1.0 - a) / C) ** (1.0 / (1.0 - a)))
    hi = t
    mean, _ = inverse_mean(kernel, t)
    while float(kernel.tail_mass(hi)) * mean > tol and hi < 1e300:
        hi *= 4.0
    return lo, hi


def parse_kernel(spec: str) -> LevyKernel:
    """Build a kernel from ``stable:a``, ``tempered:a:lam`` or ``tabulated:path``."""
    if not isinstance(spec, str) or not spec:
        raise ConfigError(f"kernel spec must be a non-empty string, got {spec!r}")
    name, _, rest = spec.partition(":")
    name = name.strip().lower()
    try:
        if name == "stable":
            return Stable(float(rest))
        if name == "tempered":
            a, _, lam = rest.partition(":")
            return TemperedStable(float(a), float(lam))
        if name == "tabulated":
            if not rest:
                raise ConfigError("tabulated kernel needs a file path")
            return load_tabulated(rest)
    except DomainError as exc:
        raise ConfigError(f"bad kernel spec {spec!r}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad kernel spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown kernel {name!r}; use stable:a, tempered:a:lam or tabulated:path")
