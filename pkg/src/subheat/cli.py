"""Command-line runner.

Every subcommand writes CSV whose leading ``#`` lines form a manifest (the
full configuration, seed and library versions). Wall time goes to a
``<out>.manifest.json`` sidecar, so the CSV itself is byte-reproducible.
``--config`` accepts JSON, YAML, or a CSV produced by an earlier run, in
which case that run is repeated.

Exit status: 0 success, 1 a comparison or residual check failed, 2 bad
configuration, 3 accuracy target missed, 4 runaway path.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import platform
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
import scipy
import yaml

from . import __version__
from .errors import ConfigError, SubheatError
from .mc import default_workers, estimate_field
from .octrw import WalkSpec, convergence_sweep, empirical_density, limit_edges, simulate_positions
from .operator import (
    OperatorConfig,
    apply_Hnu,
    caputo_problem,
    registered_test_functions,
    weak_residual,
)
from .problem import REGISTRY, DataFunction, ProblemSpec
from .quadrature import QuadratureConfig, SolutionField, fundamental_bin_masses, solve
from .spatial import KilledBMInterval, SpectralFractionalInterval, _number, parse_spatial
from .subordinator import DEFAULT_MAX_STEPS, Stable, overshoot_density, parse_kernel

COMMANDS = ("solve-mc", "solve-quad", "compare", "density", "octrw", "residual", "reduce-history")


@dataclass(frozen=True)
class RunConfig:
    command: str
    kernel: str = "stable:0.5"
    spatial: str = "free"
    T: float = 1.0
    phi: object = "constant"
    f: object = "zero"
    t: tuple = (1.0,)
    x: tuple = (0.0,)
    x_range: tuple | None = None
    n_paths: int = 10_000
    h: float = 1e-3
    max_steps: int = DEFAULT_MAX_STEPS
    seed: int = 0
    tol: float = 1e-6
    compare_tol: float = 0.01
    r_min: float = 1e-3
    r_max: float = 1e3
    per_decade: int = 4
    alpha: float = 0.5
    scales: tuple = (100, 1000, 10000)
    walkers: int = 100_000
    convention: str = "overshoot"
    table: str = "distance"
    bins: int = 80
    width: float = 12.0
    nt: int = 40
    nx: int = 41
    strong_rtol: float = 0.05
    weak_rtol: float = 0.01

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        for name in ("T", "h", "tol", "compare_tol", "r_min", "r_max", "width", "strong_rtol", "weak_rtol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        for name in ("n_paths", "max_steps", "per_decade", "walkers", "bins", "nt", "nx"):
            val = getattr(self, name)
            if int(val) != val or val < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.n_paths < 2:
            raise ConfigError("n_paths must be at least 2")
        if not self.r_max > self.r_min:
            raise ConfigError("r_max must exceed r_min")
        if self.convention not in ("overshoot", "undershoot"):
            raise ConfigError("convention must be overshoot or undershoot")
        if self.table not in ("distance", "histogram"):
            raise ConfigError("table must be distance or histogram")
        if not self.t:
            raise ConfigError("at least one time is needed")
        if not self.x:
            raise ConfigError("at least one point is needed")

    def to_dict(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = [list(e) if isinstance(e, tuple) else e for e in v]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        if "command" not in data:
            raise ConfigError("config has no command")
        clean = {}
        for k, v in data.items():
            if k in ("t", "x", "scales", "x_range") and v is not None:
                v = _as_list(v)
                v = tuple(tuple(_num(e) for e in item) if isinstance(item, (list, tuple)) else _num(item) for item in v)
                if k == "scales":
                    v = tuple(int(e) for e in v)
            elif k in ("T", "h", "tol", "compare_tol", "r_min", "r_max", "alpha", "width", "strong_rtol", "weak_rtol"):
                v = _num(v)
            elif k in ("n_paths", "max_steps", "seed", "per_decade", "walkers", "bins", "nt", "nx"):
                v = _int(k, v)
            clean[k] = v
        return cls(**clean)


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _num(v) -> float:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    if isinstance(v, str):
        return _number(v)
    raise ConfigError(f"expected a number, got {v!r}")


def _int(name, v) -> int:
    try:
        f = float(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be an integer") from exc
    if f != int(f):
        raise ConfigError(f"{name} must be an integer")
    return int(f)


# --------------------------------------------------------------------------
# function specs


def parse_function(text: str):
    """``name`` or ``name:key=value,...``; dotted keys nest (``base.width=0.5``).

    A JSON object is also accepted.
    """
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad function spec {text!r}: {exc}") from exc
    name, _, rest = text.partition(":")
    if name not in REGISTRY:
        raise ConfigError(f"unknown function {name!r}; registered: {', '.join(REGISTRY)}")
    if not rest:
        return name
    spec: dict = {"name": name}
    for item in rest.split(","):
        key, eq, val = item.partition("=")
        if not eq:
            raise ConfigError(f"expected key=value in {text!r}, got {item!r}")
        parts = key.strip().split(".")
        node = spec
        for p in parts[:-1]:
            cur = node.get(p)
            if isinstance(cur, str):
                cur = {"name": cur}
            node[p] = cur if isinstance(cur, dict) else {}
            node = node[p]
        val = val.strip()
        if parts[-1] == "name" or (parts[-1] == "base" and val in REGISTRY):
            existing = node.get(parts[-1])
            if isinstance(existing, dict):
                existing["name"] = val
            else:
                node[parts[-1]] = val
        else:
            node[parts[-1]] = _number(val)
    return spec


# --------------------------------------------------------------------------
# config assembly


def _read_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {path} not found")
    text = p.read_text(encoding="utf-8")
    if p.suffix == ".csv" or text.startswith("#"):
        for line in text.splitlines():
            if line.startswith("# config: "):
                return json.loads(line[len("# config: "):])
            if not line.startswith("#"):
                break
        raise ConfigError(f"{path} carries no run manifest")
    try:
        data = json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a mapping")
    return data


def _build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=S, help="JSON/YAML config, or a CSV from an earlier run")
    common.add_argument("--out", default=S, help="output CSV (default: stdout)")
    common.add_argument("--seed", type=int, default=S)
    common.add_argument("--workers", type=int, default=S,
                        help="worker processes (default: $SUBHEAT_WORKERS or 1); never changes results")

    problem = argparse.ArgumentParser(add_help=False)
    problem.add_argument("--kernel", default=S, help="stable:a | tempered:a:lam | tabulated:path")
    problem.add_argument("--spatial", default=S, help="free[:d] | killed[:a:b] | reflected | spectral:beta")
    problem.add_argument("--T", type=float, default=S, help="time horizon")
    problem.add_argument("--phi", type=parse_function, default=S, help="history data, e.g. gaussian-bump:center=1,width=0.5")
    problem.add_argument("--f", type=parse_function, default=S, help="forcing, e.g. first-eigenfunction")
    problem.add_argument("--t", nargs="+", default=S, help="evaluation times")
    problem.add_argument("--x", nargs="+", default=S, help="evaluation points (comma-separated coordinates in d > 1)")

    mc = argparse.ArgumentParser(add_help=False)
    mc.add_argument("--n-paths", dest="n_paths", type=int, default=S)
    mc.add_argument("--h", type=float, default=S, help="operational time step")
    mc.add_argument("--max-steps", dest="max_steps", type=int, default=S)

    quad = argparse.ArgumentParser(add_help=False)
    quad.add_argument("--tol", type=float, default=S, help="quadrature tolerance")

    parser = argparse.ArgumentParser(prog="subheat", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"subheat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve-mc", parents=[common, problem, mc], help="Monte Carlo point estimates")
    sub.add_parser("solve-quad", parents=[common, problem, quad], help="quadrature point values")
    cmp_ = sub.add_parser("compare", parents=[common, problem, mc, quad], help="MC against quadrature")
    cmp_.add_argument("--compare-tol", dest="compare_tol", type=float, default=S,
                      help="absolute slack added to 3 standard errors")
    dens = sub.add_parser("density", parents=[common], help="overshoot density at level t")
    dens.add_argument("--kernel", default=S)
    dens.add_argument("--t", nargs="+", default=S)
    dens.add_argument("--r-min", dest="r_min", type=float, default=S)
    dens.add_argument("--r-max", dest="r_max", type=float, default=S)
    dens.add_argument("--per-decade", dest="per_decade", type=int, default=S)
    walk = sub.add_parser("octrw", parents=[common], help="OCTRW convergence to the limit law")
    walk.add_argument("--alpha", type=float, default=S)
    walk.add_argument("--t", nargs="+", default=S)
    walk.add_argument("--scales", nargs="+", type=int, default=S)
    walk.add_argument("--walkers", type=int, default=S)
    walk.add_argument("--convention", choices=("overshoot", "undershoot"), default=S)
    walk.add_argument("--table", choices=("distance", "histogram"), default=S)
    walk.add_argument("--bins", type=int, default=S)
    walk.add_argument("--width", type=float, default=S, help="histogram half-width in units of sqrt(t)")
    res = sub.add_parser("residual", parents=[common, problem, quad], help="strong and weak residuals")
    res.add_argument("--x-range", dest="x_range", nargs=2, default=S)
    res.add_argument("--nt", type=int, default=S)
    res.add_argument("--nx", type=int, default=S)
    res.add_argument("--strong-rtol", dest="strong_rtol", type=float, default=S)
    res.add_argument("--weak-rtol", dest="weak_rtol", type=float, default=S)
    red = sub.add_parser("reduce-history", parents=[common, problem, quad], help="history form against Caputo form")
    red.add_argument("--x-range", dest="x_range", nargs=2, default=S)
    red.add_argument("--nt", type=int, default=S)
    red.add_argument("--nx", type=int, default=S)
    return parser


def _point(text):
    if isinstance(text, str) and "," in text:
        return tuple(_number(p) for p in text.split(","))
    return text


def make_config(argv) -> tuple[RunConfig, str | None, int]:
    args = vars(_build_parser().parse_args(argv))
    command = args.pop("command")
    out = args.pop("out", None)
    workers = args.pop("workers", None)
    data: dict = {}
    if "config" in args:
        data = _read_config(args.pop("config"))
        if data.get("command", command) != command:
            raise ConfigError(f"config is for {data['command']!r}, not {command!r}")
    if "x" in args:
        args["x"] = [_point(p) for p in args["x"]]
    data.update(args)
    data["command"] = command
    cfg = RunConfig.from_dict(data)
    return cfg, out, default_workers() if workers is None else int(workers)


# --------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _versions() -> dict:
    return {"subheat": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def render(cfg: RunConfig, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(f"# subheat {__version__}\n")
    buf.write(f"# command: {cfg.command}\n")
    buf.write(f"# config: {json.dumps(cfg.to_dict(), sort_keys=True)}\n")
    buf.write(f"# seed: {cfg.seed}\n")
    buf.write("# versions: " + ", ".join(f"{k}={v}" for k, v in _versions().items()) + "\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _write(cfg: RunConfig, out: str | None, header, rows, wall: float, status: int) -> None:
    text = render(cfg, header, rows)
    if out is None:
        sys.stdout.write(text)
        return
    Path(out).write_text(text, encoding="utf-8")
    side = {"config": cfg.to_dict(), "versions": _versions(), "wall_time_s": wall, "exit_status": status,
            "rows": len(rows)}
    Path(str(out) + ".manifest.json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# --------------------------------------------------------------------------
# subcommands


def _problem(cfg: RunConfig) -> ProblemSpec:
    model = parse_spatial(cfg.spatial)
    return ProblemSpec(model, parse_kernel(cfg.kernel), cfg.T, f=cfg.f, phi=cfg.phi)


def _x_cols(problem: ProblemSpec) -> list[str]:
    d = problem.spatial.dim
    return ["x"] if d == 1 else [f"x{i + 1}" for i in range(d)]


def _xv(x) -> list:
    return list(x) if isinstance(x, tuple) else [x]


def _xarg(x):
    return np.asarray(x, dtype=float) if isinstance(x, tuple) else float(x)


def _x_range(cfg: RunConfig, model):
    if cfg.x_range is not None:
        return tuple(float(v) for v in cfg.x_range)
    if isinstance(model, (KilledBMInterval, SpectralFractionalInterval)):
        return (model.a, model.b)
    raise ConfigError("--x-range is required on unbounded domains")


def cmd_solve_mc(cfg: RunConfig, workers: int):
    problem = _problem(cfg)
    xs = [_xarg(x) for x in cfg.x]
    grid = estimate_field(problem, cfg.t, xs, cfg.n_paths, cfg.h, cfg.seed, workers, max_steps=cfg.max_steps)
    rows = [[t, *_xv(x), grid[i, j].mean, grid[i, j].stderr]
            for i, t in enumerate(cfg.t) for j, x in enumerate(cfg.x)]
    return ["t", *_x_cols(problem), "value", "stderr"], rows, 0


def cmd_solve_quad(cfg: RunConfig, workers: int):
    problem = _problem(cfg)
    qc = QuadratureConfig(tol=cfg.tol)
    rows = []
    for t in cfg.t:
        for x in cfg.x:
            res = solve(problem, t, _xarg(x), qc)
            rows.append([t, *_xv(x), res.value, res.error + res.mc_error])
    return ["t", *_x_cols(problem), "value", "errest"], rows, 0


def cmd_compare(cfg: RunConfig, workers: int):
    problem = _problem(cfg)
    xs = [_xarg(x) for x in cfg.x]
    grid = estimate_field(problem, cfg.t, xs, cfg.n_paths, cfg.h, cfg.seed, workers, max_steps=cfg.max_steps)
    qc = QuadratureConfig(tol=cfg.tol)
    rows = []
    status = 0
    for i, t in enumerate(cfg.t):
        for j, x in enumerate(cfg.x):
            est = grid[i, j]
            q = solve(problem, t, xs[j], qc)
            diff = abs(est.mean - q.value)
            bound = 3.0 * est.stderr + cfg.compare_tol + q.error + q.mc_error
            ok = diff < bound
            status = status or (0 if ok else 1)
            rows.append([t, *_xv(x), est.mean, est.stderr, q.value, q.error + q.mc_error, diff, bound,
                         "PASS" if ok else "FAIL"])
            print(f"t={t:g} x={x}: MC={est.mean:.6g}±{est.stderr:.2g} quad={q.value:.6g}±{q.error:.2g} "
                  f"{'PASS' if ok else 'FAIL'}", file=sys.stderr)
    header = ["t", *_x_cols(problem), "mc", "mc_stderr", "quad", "quad_err", "diff", "bound", "status"]
    return header, rows, status


def cmd_density(cfg: RunConfig, workers: int):
    kernel = parse_kernel(cfg.kernel)
    lo, hi = math.log10(cfg.r_min), math.log10(cfg.r_max)
    n = max(2, int(round((hi - lo) * cfg.per_decade)) + 1)
    r = 10.0 ** np.linspace(lo, hi, n)
    rows = []
    for t in cfg.t:
        dens = overshoot_density(kernel, t, r)
        rows.extend([t, ri, di] for ri, di in zip(r, dens))
    return ["t", "r", "density"], rows, 0


def cmd_octrw(cfg: RunConfig, workers: int):
    t = float(cfg.t[0])
    edges = limit_edges(t, cfg.width, cfg.bins)
    if cfg.table == "distance":
        sweep = convergence_sweep(cfg.alpha, t, cfg.scales, cfg.walkers, cfg.seed, edges, cfg.convention)
        return ["n", "l1"], [[n, d] for n, d in sweep], 0
    limit = fundamental_bin_masses(Stable(cfg.alpha), t, edges)
    rows = []
    for n in cfg.scales:
        x = simulate_positions(WalkSpec(cfg.alpha, n, cfg.convention), t, cfg.walkers, cfg.seed)
        table = empirical_density(x, edges)
        rows.extend([n, lo, hi, m, lm] for lo, hi, m, lm in zip(edges[:-1], edges[1:], table.mass, limit))
    return ["n", "bin_lo", "bin_hi", "mass", "limit_mass"], rows, 0


def _sup_f(problem: ProblemSpec) -> float:
    f = problem.f
    if isinstance(f, DataFunction):
        return f.sup(0.0, problem.T)
    return 1.0


def cmd_residual(cfg: RunConfig, workers: int):
    problem = _problem(cfg)
    model, kernel = problem.spatial, problem.kernel
    xr = _x_range(cfg, model)
    field_ = SolutionField.build(problem, cfg.nt, cfg.nx, xr, QuadratureConfig(tol=max(cfg.tol, 1e-6)))
    oc = OperatorConfig()
    rows = []
    status = 0
    for t in cfg.t:
        for x in cfg.x:
            xv = _xarg(x)
            hu = apply_Hnu(field_, model, kernel, t, xv, oc)
            fv = 0.0 if problem.f is None else float(np.asarray(problem.f(t, xv)))
            val = hu.value + fv
            bound = cfg.strong_rtol * abs(fv)
            ok = abs(val) < bound
            status = status or (0 if ok else 1)
            rows.append(["strong", "", t, x, val, bound, "PASS" if ok else "FAIL"])
    scale = _sup_f(problem)
    for name, test in registered_test_functions(model, problem.T).items():
        val = weak_residual(field_, problem.f, test, model, kernel, problem.T, oc, xr)
        bound = cfg.weak_rtol * scale * test.l1_norm(model, xr)
        ok = abs(val) < bound
        status = status or (0 if ok else 1)
        rows.append(["weak", name, "", "", val, bound, "PASS" if ok else "FAIL"])
    return ["kind", "test", "t", "x", "residual", "bound", "status"], rows, status


def cmd_reduce_history(cfg: RunConfig, workers: int):
    problem = _problem(cfg)
    xr = _x_range(cfg, problem.spatial)
    caputo, g = caputo_problem(problem, cfg.nt, cfg.nx, xr)
    qc = QuadratureConfig(tol=cfg.tol)
    rows = []
    status = 0
    for t in cfg.t:
        for x in cfg.x:
            a = solve(problem, t, _xarg(x), qc)
            b = solve(caputo, t, _xarg(x), qc, form="caputo")
            diff = abs(a.value - b.value)
            bound = a.error + a.mc_error + b.error + b.mc_error + g.solution_error(problem.kernel, t)
            ok = diff < bound
            status = status or (0 if ok else 1)
            rows.append([t, x, a.value, b.value, diff, bound, "PASS" if ok else "FAIL"])
    return ["t", "x", "history", "caputo", "diff", "bound", "status"], rows, status


HANDLERS = {
    "solve-mc": cmd_solve_mc,
    "solve-quad": cmd_solve_quad,
    "compare": cmd_compare,
    "density": cmd_density,
    "octrw": cmd_octrw,
    "residual": cmd_residual,
    "reduce-history": cmd_reduce_history,
}


def run(cfg: RunConfig, out: str | None = None, workers: int = 1) -> int:
    start = time.perf_counter()
    header, rows, status = HANDLERS[cfg.command](cfg, workers)
    _write(cfg, out, header, rows, time.perf_counter() - start, status)
    return status


def main(argv=None) -> int:
    try:
        cfg, out, workers = make_config(argv)
        return run(cfg, out, workers)
    except SubheatError as exc:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        for attr, key in (("estimate", "estimate"), ("error", "error_estimate"), ("diagnostics", "diagnostics")):
            val = getattr(exc, attr, None)
            if val is not None:
                payload[key] = val
        print(json.dumps(payload, default=str), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
