"""Overshoot continuous-time random walks and their scaling limit.

Waits are Pareto with survival w^(-alpha) on [1, inf). With
b_n = (n Gamma(1 - alpha))^(1/alpha), the sum of n waits divided by b_n
converges to a standard alpha-stable variable (Laplace transform
exp(-k^alpha)). Each jump is Normal(0, 2 W_i), coupled to its wait.

The rescaled position at time t is (sum_{i <= N} X_i) / sqrt(b_n), where N
is the first index whose cumulative wait exceeds t * b_n. The straddling jump is included (overshoot convention);
the undershoot convention stops one jump earlier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .quadrature import fundamental_bin_masses
from .rng import stream
from .subordinator import Stable

BLOCK = 20_000


@dataclass(frozen=True)
class WalkSpec:
    alpha: float
    n: int = 1
    convention: str = "overshoot"

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise DomainError("tail index must lie in (0, 1)")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("scale n must be a positive integer")
        if self.convention not in ("overshoot", "undershoot"):
            raise DomainError("convention must be 'overshoot' or 'undershoot'")

    @property
    def scale(self) -> float:
        """b_n, the normalisation of the renewal sums."""
        return (self.n * math.gamma(1.0 - self.alpha)) ** (1.0 / self.alpha)


def pareto_waits(alpha: float, size, rng) -> np.ndarray:
    """Waits with P(W > w) = w^(-alpha), w >= 1."""
    return rng.uniform(size=size) ** (-1.0 / alpha)


def _positions(spec: WalkSpec, t: float, m: int, rng) -> np.ndarray:
    """Rescaled positions of m walkers.

    Given the waits, the sum of the coupled Gaussian jumps is exactly
    Normal(0, 2 * sum of the waits involved), so one normal draw per walker
    suffices.
    """
    level = t * spec.scale
    total = np.zeros(m)          # cumulative wait
    active = np.arange(m)
    used = np.zeros(m)           # wait mass whose jumps count
    while active.size:
        # bounded memory: about 4e6 draws per round
        chunk = max(16, min(4 * spec.n, 4_000_000 // active.size))
        w = pareto_waits(spec.alpha, (active.size, chunk), rng)
        cum = total[active, None] + np.cumsum(w, axis=1)
        over = cum > level
        hit = over.any(axis=1)
        j = np.argmax(over, axis=1)
        rows = np.flatnonzero(hit)
        done = active[rows]
        jd = j[rows]
        if spec.convention == "overshoot":
            used[done] = cum[rows, jd]
        else:
            used[done] = np.where(jd > 0, cum[rows, np.maximum(jd - 1, 0)], total[done])
        keep = ~hit
        total[active[keep]] = cum[keep, -1]
        active = active[keep]
    z = rng.standard_normal(m)
    return np.sqrt(2.0 * used / spec.scale) * z


def simulate_positions(spec: WalkSpec, t: float, walkers: int, seed: int, key: int = 0) -> np.ndarray:
    """Positions of independent walkers in blocks with derived streams."""
    if not t > 0:
        raise DomainError("t must be > 0")
    out = []
    for b, start in enumerate(range(0, walkers, BLOCK)):
        m = min(BLOCK, walkers - start)
        rng = stream(seed, 0x0C7, key, spec.n, b)
        out.append(_positions(spec, t, m, rng))
    return np.concatenate(out)


def simulate_position(spec: WalkSpec, t: float, rng) -> float:
    """A single rescaled walker position."""
    if not t > 0:
        raise DomainError("t must be > 0")
    return float(_positions(spec, t, 1, rng)[0])


def coupled_jumps(alpha: float, size: int, rng):
    """Waits and their explicitly drawn jumps X_i ~ Normal(0, 2 W_i)."""
    w = pareto_waits(alpha, size, rng)
    x = rng.standard_normal(size) * np.sqrt(2.0 * w)
    return w, x


# --------------------------------------------------------------------------
# histograms


@dataclass(frozen=True)
class DensityTable:
    edges: np.ndarray
    mass: np.ndarray
    outside: float = 0.0

    @property
    def density(self) -> np.ndarray:
        return self.mass / np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def empirical_density(samples, bins=50, range=None) -> DensityTable:
    """Normalised histogram; ``mass`` sums to the fraction inside the bins."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise DomainError("need at least 2 samples")
    if np.ndim(bins) == 0:
        if int(bins) < 1:
            raise DomainError("need at least one bin")
        lo, hi = (float(x.min()), float(x.max())) if range is None else map(float, range)
        if not hi > lo:
            if range is None:
                # degenerate sample: a single bin around the common value
                return DensityTable(np.array([lo - 0.5, lo + 0.5]), np.array([1.0]), 0.0)
            raise DomainError("histogram range must have positive width")
        edges = np.linspace(lo, hi, int(bins) + 1)
    else:
        edges = np.asarray(bins, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise DomainError("bin edges must be strictly increasing with at least two entries")
    counts, _ = np.histogram(x, edges)
    mass = counts / x.size
    return DensityTable(edges, mass, 1.0 - float(mass.sum()))


def l1_to_masses(table: DensityTable, masses) -> float:
    """L1 distance between a histogram and a law given by its bin masses,
    counting the probability outside the bins on both sides."""
    masses = np.asarray(masses, dtype=float)
    return float(np.abs(table.mass - masses).sum() + abs(table.outside - (1.0 - masses.sum())))


def limit_edges(t: float, width: float = 12.0, bins: int = 80) -> np.ndarray:
    return np.linspace(-width * math.sqrt(t), width * math.sqrt(t), bins + 1)


def distance_to_limit(spec: WalkSpec, t: float, walkers: int, seed: int, edges=None, key: int = 0) -> float:
    x = simulate_positions(spec, t, walkers, seed, key)
    edges = limit_edges(t) if edges is None else edges
    masses = fundamental_bin_masses(Stable(spec.alpha), t, edges)
    return l1_to_masses(empirical_density(x, edges), masses)


def convergence_sweep(alpha: float, t: float, scales, walkers: int, seed: int, edges=None,
                      convention: str = "overshoot") -> list[tuple[int, float]]:
    """(n, L1 distance to the limit law) for each scale."""
    scales = [int(n) for n in scales]
    if any(b < a for a, b in zip(scales, scales[1:])):
        raise DomainError("scales must be nondecreasing")
    return [(n, distance_to_limit(WalkSpec(alpha, n, convention), t, walkers, seed, edges)) for n in scales]
