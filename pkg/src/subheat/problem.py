"""Problem data: the built-in function registry and ``ProblemSpec``.

Every built-in is a separable function ``F(s, y) = exp(rate * s) * profile(y)``
with a bounded profile. Names accepted by :func:`make_function`:

``constant``             value (default 1)
``zero``                 identically 0
``gaussian-bump``        amplitude * exp(-|y - center|^2 / width^2)
``first-eigenfunction``  sin(pi (y - a) / (b - a)) on intervals, cos(k y) on
                         the line and half-line (k defaults to 1)
``exp-time-modulated``   exp(rate * s) times a ``base`` built-in
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .spatial import (
    FreeBM,
    KilledBMInterval,
    ReflectedBMHalfLine,
    SpatialModel,
    SpectralFractionalInterval,
    TrigSeries,
)
from .subordinator import LevyKernel


@dataclass(frozen=True)
class Constant:
    value: float = 1.0
    dim: int = 1

    def __call__(self, y):
        shape = np.shape(y) if self.dim == 1 else np.shape(y)[:-1]
        return np.full(shape, float(self.value))

    def sup(self) -> float:
        return abs(self.value)


@dataclass(frozen=True)
class GaussianBump:
    center: float = 0.0
    width: float = 1.0
    amplitude: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if not self.width > 0:
            raise ConfigError("gaussian-bump width must be > 0")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.dim == 1:
            r2 = (y - self.center) ** 2
        else:
            r2 = np.sum((y - self.center) ** 2, axis=-1)
        return self.amplitude * np.exp(-r2 / self.width**2)

    def sup(self) -> float:
        return abs(self.amplitude)

    def evolve(self, model: SpatialModel, r, y):
        """Closed-form heat flow in free space (and on the half-line when the
        bump is centred at 0); None elsewhere."""
        centred = self.dim == 1 and float(np.ravel(self.center)[0]) == 0.0
        if not (isinstance(model, FreeBM) and model.d == self.dim) and not (isinstance(model, ReflectedBMHalfLine) and centred):
            return None
        w2 = self.width**2 + 4.0 * np.asarray(r, dtype=float)
        y = np.asarray(y, dtype=float)
        r2 = (y - self.center) ** 2 if self.dim == 1 else np.sum((y - self.center) ** 2, axis=-1)
        return self.amplitude * (self.width / np.sqrt(w2)) ** self.dim * np.exp(-r2 / w2)

    def breakpoints(self):
        if self.dim != 1:
            return np.empty(0)
        return self.center + self.width * np.linspace(-8.0, 8.0, 17)


@dataclass(frozen=True)
class DataFunction:
    """F(s, y) = exp(rate * s) * profile(y); ``spec`` records how it was built."""

    profile: object
    rate: float = 0.0
    spec: dict = field(default_factory=dict, compare=False, hash=False)

    def __call__(self, s, y):
        val = self.profile(y)
        if self.rate == 0.0:
            return val * np.ones_like(np.asarray(s, dtype=float)) if np.ndim(s) else val
        return np.exp(self.rate * np.asarray(s, dtype=float)) * val

    @property
    def time_independent(self) -> bool:
        return self.rate == 0.0

    def sup(self, lo: float = -math.inf, hi: float = 0.0) -> float:
        """sup of |F| over s in [lo, hi]."""
        base = self.profile.sup() if hasattr(self.profile, "sup") else math.inf
        if self.rate == 0.0:
            return base
        edge = hi if self.rate > 0 else lo
        if not math.isfinite(edge):
            return math.inf
        return base * math.exp(self.rate * edge)

    def breakpoints(self):
        fn = getattr(self.profile, "breakpoints", None)
        return fn() if callable(fn) else np.empty(0)

    @property
    def is_zero(self) -> bool:
        return isinstance(self.profile, Constant) and self.profile.value == 0.0


def _first_eigen(model: SpatialModel, k: float = 1.0):
    if isinstance(model, KilledBMInterval):
        return TrigSeries((("sin", math.pi / model.length, 1.0),), shift=model.a)
    if isinstance(model, SpectralFractionalInterval):
        return TrigSeries((("sin", 1.0, 1.0),))
    if isinstance(model, (FreeBM, ReflectedBMHalfLine)):
        if isinstance(model, FreeBM) and model.d != 1:
            raise ConfigError("first-eigenfunction is only registered for one-dimensional models")
        return TrigSeries((("cos", float(k), 1.0),))
    raise ConfigError(f"no eigenfunction registered for {model!r}")


REGISTRY = ("constant", "zero", "gaussian-bump", "first-eigenfunction", "exp-time-modulated")


def make_function(spec, model: SpatialModel) -> DataFunction:
    """Build a registered function from a name or a ``{"name": ..., params}`` dict."""
    if isinstance(spec, DataFunction):
        return spec
    if isinstance(spec, str):
        spec = {"name": spec}
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigError(f"function spec must be a name or a mapping with 'name', got {spec!r}")
    params = dict(spec)
    name = params.pop("name")
    rec = {"name": name, **params}
    try:
        if name == "constant":
            value = float(params.pop("value", 1.0))
            if params:
                _extra(name, params)
            return DataFunction(Constant(value, model.dim), spec=rec)
        if name == "zero":
            if params:
                _extra(name, params)
            return DataFunction(Constant(0.0, model.dim), spec=rec)
        if name == "gaussian-bump":
            center = params.pop("center", 0.0)
            bump = GaussianBump(
                np.asarray(center, dtype=float) if np.ndim(center) else float(center),
                float(params.pop("width", 1.0)),
                float(params.pop("amplitude", 1.0)),
                model.dim,
            )
            if params:
                _extra(name, params)
            return DataFunction(bump, spec=rec)
        if name == "first-eigenfunction":
            k = float(params.pop("k", 1.0))
            if params:
                _extra(name, params)
            return DataFunction(_first_eigen(model, k), spec=rec)
        if name == "exp-time-modulated":
            rate = float(params.pop("rate", 1.0))
            base = make_function(params.pop("base", "constant"), model)
            if params:
                _extra(name, params)
            if base.rate != 0.0:
                raise ConfigError("exp-time-modulated base must be time independent")
            return DataFunction(base.profile, rate, spec=rec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameters for {name!r}: {exc}") from exc
    raise ConfigError(f"unknown function {name!r}; registered: {', '.join(REGISTRY)}")


def _extra(name, params):
    raise ConfigError(f"unexpected parameters for {name!r}: {sorted(params)}")


def _sample_points(model: SpatialModel) -> np.ndarray:
    if isinstance(model, (KilledBMInterval, SpectralFractionalInterval)):
        return np.linspace(model.a, model.b, 33)[1:-1]
    if isinstance(model, ReflectedBMHalfLine):
        return np.linspace(0.0, 10.0, 33)
    if model.dim == 1:
        return np.linspace(-10.0, 10.0, 33)
    return np.zeros((1, model.dim))


@dataclass(frozen=True)
class ProblemSpec:
    """Data of the history problem (``phi``, ``f``) and/or the Caputo-type
    problem (``phi0``, ``g``)."""

    spatial: SpatialModel
    kernel: LevyKernel
    T: float
    f: DataFunction | None = None
    phi: DataFunction | None = None
    phi0: object | None = None
    g: DataFunction | None = None

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError("horizon T must be > 0")
        m = self.spatial
        for attr in ("f", "phi", "g"):
            val = getattr(self, attr)
            if val is not None and not isinstance(val, DataFunction) and not callable(val):
                object.__setattr__(self, attr, make_function(val, m))
            elif isinstance(val, (str, dict)):
                object.__setattr__(self, attr, make_function(val, m))
        if isinstance(self.phi0, (str, dict)):
            object.__setattr__(self, "phi0", make_function(self.phi0, m))
        if self.phi is None and self.phi0 is None:
            raise ConfigError("problem needs history data phi or Caputo data phi0")
        self._validate_bounds()

    def _validate_bounds(self):
        y = _sample_points(self.spatial)
        checks = []
        if self.phi is not None:
            checks.append(("phi", self.phi, np.array([-10.0, -1.0, -1e-3, 0.0])))
        for name in ("f", "g"):
            fn = getattr(self, name)
            if fn is not None:
                checks.append((name, fn, np.linspace(0.0, self.T, 5)))
        for name, fn, times in checks:
            vals = np.asarray(fn(times[:, None], y[None, ...] if y.ndim == 1 else y[None, :, :]), dtype=float)
            if not np.all(np.isfinite(vals)):
                raise ConfigError(f"{name} is not finite on the validation grid")
            bound = fn.sup(*((-math.inf, 0.0) if name == "phi" else (0.0, self.T))) if isinstance(fn, DataFunction) else None
            if bound is not None and not math.isfinite(bound):
                raise ConfigError(f"{name} is unbounded on its time range")
            if bound is not None and np.max(np.abs(vals)) > bound * (1 + 1e-12) + 1e-300:
                raise ConfigError(f"{name} exceeds its declared bound")
        if self.phi0 is not None:
            vals = np.asarray(eval_phi0(self.phi0, y), dtype=float)
            if not np.all(np.isfinite(vals)):
                raise ConfigError("phi0 is not finite on the validation grid")

    @property
    def forcing(self):
        return self.f

    def with_caputo(self, phi0, g) -> "ProblemSpec":
        return ProblemSpec(self.spatial, self.kernel, self.T, self.f, self.phi, phi0, g)

    def describe(self) -> dict:
        def fs(v):
            if v is None:
                return None
            return getattr(v, "spec", None) or repr(v)

        return {
            "spatial": self.spatial.describe(),
            "kernel": self.kernel.describe(),
            "T": self.T,
            "f": fs(self.f),
            "phi": fs(self.phi),
            "phi0": fs(self.phi0),
            "g": fs(self.g),
        }


def eval_phi0(phi0, y):
    """Caputo data is either a registry function (read at s = 0) or a callable of y."""
    if isinstance(phi0, DataFunction):
        return phi0(0.0, y)
    return phi0(y)


ZERO = DataFunction(Constant(0.0), spec={"name": "zero"})
