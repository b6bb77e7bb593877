"""Monte Carlo estimators built on the subordinated path functional.

For each path the subordinator is stepped on the operational grid k*h and the
spatial process is advanced over each subordinated increment. While the path
is alive and S_k <= t the forcing is accumulated with the left-point rule
h * F(t - S_k, B_{S_k}); at the first k with S_k > t an alive path collects
the payoff at (t - S_k, B_{S_k}). Paths killed on the way keep only the
forcing they collected before death.

Paths are processed in fixed blocks, each with its own random stream derived
from (seed, point key, block index). Results therefore depend only on the
seed and the parameters, not on how the work is distributed.
"""

from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RunawayPathError, SubheatError
from .problem import ProblemSpec, eval_phi0
from .rng import fingerprint, stream
from .spatial import FreeBM, step_batch
from .subordinator import DEFAULT_MAX_STEPS

BLOCK = 50_000


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n_paths: int
    h: float
    fingerprint: str

    def as_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "n_paths": self.n_paths, "h": self.h,
                "fingerprint": self.fingerprint}


def point_key(t: float, x) -> tuple[int, int]:
    """Stream key derived from the coordinates, so a point gets the same
    stream whatever grid it belongs to."""
    raw = np.concatenate([[float(t)], np.ravel(np.asarray(x, dtype=float))]).tobytes()
    digest = hashlib.sha256(raw).digest()
    return int.from_bytes(digest[:4], "little"), int.from_bytes(digest[4:8], "little")


def _path_values(problem: ProblemSpec, t: float, x, n: int, h: float, rng, payoff, forcing, max_steps: int) -> np.ndarray:
    model = problem.spatial
    kernel = problem.kernel
    out = np.zeros(n)
    idx = np.arange(n)
    S = np.zeros(n)
    x_arr = np.asarray(x, dtype=float)
    B = np.broadcast_to(x_arr, (n,) + x_arr.shape).copy()
    acc = np.zeros(n)
    steps = 0
    while idx.size:
        if forcing is not None:
            acc += h * forcing(t - S, B)
        dS = kernel.sample(h, idx.size, rng)
        S = S + dS
        B, alive = step_batch(model, B, dS, rng)
        crossed = S > t
        done = crossed | ~alive
        if done.any():
            total = acc[done]
            pay = crossed[done] & alive[done]
            if pay.any():
                total = total.copy()
                total[pay] += payoff(t - S[done][pay], B[done][pay])
            out[idx[done]] = total
            keep = ~done
            idx, S, B, acc = idx[keep], S[keep], B[keep], acc[keep]
        steps += 1
        if idx.size and steps >= max_steps:
            raise RunawayPathError(
                f"{idx.size} paths still below t={t} after {steps} steps",
                steps=steps, remaining=int(idx.size), t=t, h=h,
                kernel=kernel.describe(), spatial=model.describe(),
            )
    return out


def _check_point(problem: ProblemSpec, t: float, x) -> None:
    if not (0.0 < t <= problem.T):
        raise DomainError(f"t={t} outside (0, T={problem.T}]")
    if not np.all(problem.spatial.contains(x)):
        raise DomainError(f"x={x} outside the domain of {problem.spatial.describe()}")
    if isinstance(problem.spatial, FreeBM) and problem.spatial.d > 1 and np.shape(x) != (problem.spatial.d,):
        raise DomainError(f"x must have {problem.spatial.d} coordinates")


def _estimate(problem, t, x, n_paths, h, seed, payoff, forcing, tag, max_steps, key=None):
    _check_point(problem, t, x)
    if n_paths < 2:
        raise DomainError("need at least 2 paths")
    if not h > 0:
        raise DomainError("step h must be > 0")
    key = point_key(t, x) if key is None else key
    chunks = []
    for b, start in enumerate(range(0, n_paths, BLOCK)):
        m = min(BLOCK, n_paths - start)
        rng = stream(seed, *key, b)
        chunks.append(_path_values(problem, t, x, m, h, rng, payoff, forcing, max_steps))
    values = np.concatenate(chunks)
    mean = math.fsum(values) / n_paths
    var = math.fsum((values - mean) ** 2) / (n_paths - 1)
    fp = fingerprint(seed, tag, problem.describe(), float(t), np.ravel(np.asarray(x, dtype=float)).tolist(), n_paths, h, BLOCK)
    return McEstimate(mean, math.sqrt(var / n_paths), n_paths, h, fp)


def estimate_history(problem: ProblemSpec, t: float, x, n_paths: int, h: float, seed: int,
                     max_steps: int = DEFAULT_MAX_STEPS) -> McEstimate:
    """Estimate the history-problem solution u(t, x)."""
    if problem.phi is None:
        raise DomainError("history data phi is not set")
    phi, f = problem.phi, problem.f
    forcing = None if f is None or getattr(f, "is_zero", False) else f
    return _estimate(problem, t, x, n_paths, h, seed, phi, forcing, "mc", max_steps)


def estimate_caputo(problem: ProblemSpec, t: float, x, n_paths: int, h: float, seed: int,
                    max_steps: int = DEFAULT_MAX_STEPS) -> McEstimate:
    """Estimate the Caputo-type solution with terminal data phi0 and forcing g."""
    if problem.phi0 is None:
        raise DomainError("Caputo data phi0 is not set")
    phi0, g = problem.phi0, problem.g

    def payoff(_, y):
        return eval_phi0(phi0, y)

    forcing = None if g is None or getattr(g, "is_zero", False) else g
    return _estimate(problem, t, x, n_paths, h, seed, payoff, forcing, "mc", max_steps)


def _field_task(args):
    form, problem, t, x, n_paths, h, seed, max_steps = args
    fn = estimate_history if form == "history" else estimate_caputo
    try:
        return fn(problem, t, x, n_paths, h, seed, max_steps)
    except SubheatError as exc:
        exc.args = (f"at (t={t}, x={x}): {exc.args[0] if exc.args else exc}",) + tuple(exc.args[1:])
        raise


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("SUBHEAT_WORKERS", "1")))
    except ValueError:
        return 1


def estimate_field(problem: ProblemSpec, ts, xs, n_paths: int, h: float, seed: int, workers: int | None = None,
                   form: str = "history", max_steps: int = DEFAULT_MAX_STEPS) -> np.ndarray:
    """Point estimates on the tensor grid ``ts x xs``; returns an object array
    of :class:`McEstimate` with shape (len(ts), len(xs))."""
    ts = list(np.atleast_1d(np.asarray(ts, dtype=float)))
    xs = list(xs) if np.ndim(xs) else [xs]
    tasks = [(form, problem, float(t), x, n_paths, h, seed, max_steps) for t in ts for x in xs]
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(tasks) == 1:
        results = [_field_task(a) for a in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_field_task, tasks))
    grid = np.empty((len(ts), len(xs)), dtype=object)
    for k, est in enumerate(results):
        grid[divmod(k, len(xs))] = est
    return grid
