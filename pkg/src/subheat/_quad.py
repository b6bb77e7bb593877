"""Composite Gauss-Legendre building blocks used by every quadrature route."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(breaks, order: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite rule over consecutive breakpoints.

    ``breaks`` has shape (..., P + 1) and must be sorted along the last axis;
    the result has shape (..., P * order). Zero-width panels get zero weight.
    """
    breaks = np.asarray(breaks, dtype=float)
    xg, wg = gauss_legendre(order)
    lo = breaks[..., :-1, None]
    half = 0.5 * (breaks[..., 1:, None] - lo)
    nodes = lo + half * (xg + 1.0)
    weights = half * wg
    shape = breaks.shape[:-1] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def log_breaks(lo: float, hi: float, per_decade: float = 4.0) -> np.ndarray:
    """Geometric breakpoints from lo to hi (both > 0)."""
    n = max(1, int(np.ceil(np.log10(hi / lo) * per_decade)))
    return np.geomspace(lo, hi, n + 1)


def graded_breaks(a: float, b: float, scale: float, per_decade: float = 4.0) -> np.ndarray:
    """Breakpoints on [a, b] refined geometrically toward ``a``.

    The first panel has width about ``scale``; use it for endpoint
    singularities of the power-law type.
    """
    if b <= a:
        return np.array([a, b])
    width = b - a
    scale = min(scale, width)
    if scale >= width:
        return np.array([a, b])
    offsets = np.concatenate([[0.0], log_breaks(scale, width, per_decade)])
    return a + offsets


def merge_breaks(*parts) -> np.ndarray:
    out = np.unique(np.concatenate([np.atleast_1d(np.asarray(p, dtype=float)) for p in parts]))
    return out
