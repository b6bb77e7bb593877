"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v`` to see the verdict lines.
"""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from subheat.cli import main
from subheat.mc import estimate_caputo, estimate_field, estimate_history
from subheat.octrw import WalkSpec, convergence_sweep, simulate_positions
from subheat.operator import (
    adjoint_pairing,
    apply_Hnu,
    caputo_problem,
    pair,
    registered_test_functions,
    weak_residual,
)
from subheat.problem import ProblemSpec, make_function
from subheat.quadrature import SolutionField, solve
from subheat.rng import stream
from subheat.spatial import (
    FreeBM,
    KilledBMInterval,
    ReflectedBMHalfLine,
    SpectralFractionalInterval,
    survival,
    transition_density,
)
from subheat.subordinator import (
    Stable,
    TemperedStable,
    overshoot_density,
    overshoot_rule,
    sample_crossings,
)

PI = math.pi


@pytest.fixture
def report(capsys, request):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number:2d} {title}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail
    return emit


def killed_problem():
    phi = {"name": "exp-time-modulated", "rate": 1.0, "base": {"name": "gaussian-bump", "center": PI / 2, "width": 0.5}}
    return ProblemSpec(KilledBMInterval(), Stable(0.5), 1.0, f="first-eigenfunction", phi=phi)


@pytest.fixture(scope="module")
def killed_field():
    p = killed_problem()
    return p, SolutionField.build(p)


def stable_overshoot_pdf(alpha, t, r):
    return math.sin(PI * alpha) / PI * t ** alpha * r ** -alpha / (t + r)


def test_criterion_01_overshoot_law(report):
    edges = np.geomspace(1e-3, 1e3, 41)
    dists = {}
    for i, a in enumerate((0.5, 0.75)):
        c = sample_crossings(Stable(a), 1.0, 1e-3, 200_000, stream(101, i))
        counts, _ = np.histogram(c.overshoot, edges)
        emp = counts / c.overshoot.size
        exact = np.array([integrate.quad(lambda r: stable_overshoot_pdf(a, 1.0, r), lo, hi, epsabs=0, epsrel=1e-10)[0]
                          for lo, hi in zip(edges[:-1], edges[1:])])
        dists[a] = float(np.abs(emp - exact).sum() + abs((1 - emp.sum()) - (1 - exact.sum())))
    ok = all(d < 0.05 for d in dists.values())
    report(1, "overshoot law", ok, ", ".join(f"alpha={a}: L1={d:.4f}" for a, d in dists.items()) + " < 0.05")


def test_criterion_02_inverse_mean(report):
    h = 1e-3
    c = sample_crossings(Stable(0.5), 1.0, h, 100_000, stream(102))
    tau = c.tau_hat
    mean, se = tau.mean(), tau.std(ddof=1) / math.sqrt(tau.size)
    target = 1 / math.gamma(1.5)
    diff = abs(mean - target)
    report(2, "inverse-subordinator mean", diff < 3 * se + 2 * h,
           f"mean={mean:.5f} target={target:.5f} |diff|={diff:.2e} bound={3 * se + 2 * h:.2e}")


def test_criterion_03_normalizations(report):
    lines = []
    ok = True
    for kernel in (Stable(0.5), Stable(0.75), TemperedStable(0.5, 1.0)):
        for t in (0.1, 1.0, 10.0):
            r, w = overshoot_rule(kernel, t)
            mass = float(w @ overshoot_density(kernel, t, r))
            ok &= abs(mass - 1.0) < 1e-3
            lines.append(f"{kernel.describe()} t={t}: {mass:.6f}")
    for model, x, lo in ((FreeBM(), 0.3, -np.inf), (ReflectedBMHalfLine(), 0.3, 0.0)):
        for s in (0.1, 1.0, 10.0):
            mass = sum(integrate.quad(lambda y: transition_density(model, s, x, y), a, b, epsabs=1e-13, epsrel=1e-12)[0]
                       for a, b in ((lo, x), (x, np.inf)))
            ok &= abs(mass - 1.0) < 1e-6
            lines.append(f"{model.describe()} s={s}: 1{mass - 1:+.1e}")
    for model in (KilledBMInterval(), SpectralFractionalInterval(0.5)):
        ss = np.geomspace(1e-3, 10.0, 25)
        surv = np.array([survival(model, s, PI / 2) for s in ss])
        mono = bool(np.all(np.diff(surv) <= 1e-12) and np.all(surv <= 1 + 1e-12))
        ok &= mono
        lines.append(f"{model.describe()} survival monotone={mono}")
    report(3, "normalizations", ok, "; ".join(lines))


def test_criterion_04_constant_preservation(report):
    lines = []
    ok = True
    for model, kernel, x in ((FreeBM(), Stable(0.5), 0.0), (ReflectedBMHalfLine(), Stable(0.75), 0.5)):
        p = ProblemSpec(model, kernel, 1.0, phi="constant", f="zero")
        for t in (0.5, 1.0):
            e = estimate_history(p, t, x, 5000, 1e-3, 104)
            q = solve(p, t, x)
            ok &= e.mean == 1.0 and e.stderr == 0.0 and abs(q.value - 1.0) < 1e-3
            lines.append(f"{model.describe()} t={t}: mc={e.mean!r} se={e.stderr!r} quad={q.value:.8f}")
    report(4, "constant preservation", ok, "; ".join(lines))


CROSS_CASES = {
    "free": (FreeBM(), Stable(0.5), 0.0, (-1.0, 0.0, 1.0)),
    "killed": (KilledBMInterval(), Stable(0.5), PI / 2, (PI / 4, PI / 2, 3 * PI / 4)),
    "reflected": (ReflectedBMHalfLine(), Stable(0.75), 0.0, (0.25, 1.0, 2.0)),
    "spectral": (SpectralFractionalInterval(0.5), Stable(0.5), PI / 2, (PI / 4, PI / 2, 3 * PI / 4)),
}


def test_criterion_05_mc_vs_quadrature(report):
    ts = (0.25, 0.5, 1.0)
    worst = {}
    ok = True
    for name, (model, kernel, center, xs) in CROSS_CASES.items():
        p = ProblemSpec(model, kernel, 1.0, f="first-eigenfunction",
                        phi={"name": "gaussian-bump", "center": center, "width": 0.5})
        grid = estimate_field(p, ts, list(xs), 100_000, 1e-3, 105, workers=1)
        ratio = 0.0
        for i, t in enumerate(ts):
            for j, x in enumerate(xs):
                e = grid[i, j]
                q = solve(p, t, x)
                bound = 3 * e.stderr + 0.01
                ok &= abs(e.mean - q.value) < bound
                ratio = max(ratio, abs(e.mean - q.value) / bound)
        worst[name] = ratio
    report(5, "MC/quadrature cross-validation", ok,
           "max |MC-quad|/(3SE+0.01): " + ", ".join(f"{k}={v:.2f}" for k, v in worst.items()))


def test_criterion_06_history_to_caputo(report):
    p = killed_problem()
    cp, g = caputo_problem(p)
    ok = True
    lines = []
    for t, x in ((0.25, 1.0), (0.5, PI / 2), (1.0, 2.2)):
        a = solve(p, t, x)
        b = solve(cp, t, x, form="caputo")
        qerr = a.error + a.mc_error + b.error + b.mc_error + g.solution_error(p.kernel, t)
        e = estimate_caputo(cp, t, x, 20_000, 1e-3, 106)
        ok &= abs(a.value - b.value) < qerr
        ok &= abs(e.mean - a.value) < 3 * e.stderr + qerr + 0.01
        lines.append(f"t={t} x={x:.3f}: quad diff={abs(a.value - b.value):.1e} (< {qerr:.1e}), "
                     f"mc diff={abs(e.mean - a.value):.1e} (se {e.stderr:.1e})")
    report(6, "history-to-Caputo reduction", ok, "; ".join(lines))


def test_criterion_07_strong_residual(report, killed_field):
    p, U = killed_field
    worst = 0.0
    for t, x in ((0.3, 1.0), (0.5, 1.5), (0.7, 2.0), (0.9, 0.8), (0.6, 2.5)):
        hu = apply_Hnu(U, p.spatial, p.kernel, t, x).value
        f = float(p.f(t, x))
        worst = max(worst, abs(hu + f) / abs(f))
    report(7, "strong-form residual", worst < 0.05, f"max relative residual {worst:.2e} < 0.05")


def test_criterion_08_weak_residual(report, killed_field):
    p, U = killed_field
    ok = True
    lines = []
    fsup = p.f.sup(0.0, p.T)
    for name, tf in registered_test_functions(p.spatial, p.T).items():
        r = weak_residual(U, p.f, tf, p.spatial, p.kernel, p.T)
        bound = 1e-2 * fsup * tf.l1_norm(p.spatial)
        ok &= abs(r) < bound
        lines.append(f"{name}: {abs(r):.1e} < {bound:.1e}")
    report(8, "weak residual", ok, "; ".join(lines))


def test_criterion_09_duality(report):
    K, nu = KilledBMInterval(), Stable(0.5)
    u = make_function({"name": "exp-time-modulated", "rate": 1.0, "base": "first-eigenfunction"}, K)
    seen = []

    def Hu(t, x):
        vals = np.array([[apply_Hnu(u, K, nu, float(ti), float(xi)).value for xi in x[0]] for ti in t[:, 0]])
        seen.append(np.max(np.abs(vals)))
        return vals

    ok = True
    lines = []
    for name, tf in registered_test_functions(K).items():
        lhs = pair(Hu, tf, K)
        rhs = adjoint_pairing(u, tf, K, nu, 1.0).value
        # bump-sin2 is orthogonal to sin, so scale by the size of the integrand
        scale = max(abs(lhs), seen[-1] * tf.l1_norm(K))
        rel = abs(lhs - rhs) / scale
        ok &= rel < 1e-3
        lines.append(f"{name}: {lhs:.6g} vs {rhs:.6g} rel={rel:.1e}")
    report(9, "duality", ok, "; ".join(lines))


def test_criterion_10_octrw_convergence(report):
    sweep = convergence_sweep(0.5, 1.0, [100, 1000, 10_000], 100_000, 110)
    d = [v for _, v in sweep]
    violations = sum(b >= a for a, b in zip(d, d[1:]))
    over = simulate_positions(WalkSpec(0.5, 100, "overshoot"), 1.0, 100_000, 111)
    under = simulate_positions(WalkSpec(0.5, 100, "undershoot"), 1.0, 100_000, 111)
    pval = stats.ks_2samp(over, under).pvalue
    ok = violations <= 1 and d[-1] < 0.1 and pval < 1e-3
    report(10, "OCTRW convergence", ok,
           "L1 " + ", ".join(f"n={n}: {v:.4f}" for n, v in sweep)
           + f"; violations={violations}; overshoot vs undershoot KS p={pval:.1e}")


def test_criterion_11_determinism(report, tmp_path):
    p = killed_problem()
    a = estimate_field(p, [0.5, 1.0], [1.0, 2.0], 3000, 1e-3, 111, workers=1)
    b = estimate_field(p, [0.5, 1.0], [1.0, 2.0], 3000, 1e-3, 111, workers=2)
    fields = all(x.mean == y.mean and x.stderr == y.stderr and x.fingerprint == y.fingerprint
                 for x, y in zip(a.ravel(), b.ravel()))
    cp = ProblemSpec(FreeBM(), Stable(0.5), 1.0, phi0="zero", g="constant")
    caputo = estimate_caputo(cp, 1.0, 0.0, 3000, 1e-3, 7) == estimate_caputo(cp, 1.0, 0.0, 3000, 1e-3, 7)
    cross = (sample_crossings(Stable(0.6), 1.0, 1e-3, 2000, stream(5)).after.tobytes()
             == sample_crossings(Stable(0.6), 1.0, 1e-3, 2000, stream(5)).after.tobytes())
    walks = (simulate_positions(WalkSpec(0.5, 100), 1.0, 30_000, 9).tobytes()
             == simulate_positions(WalkSpec(0.5, 100), 1.0, 30_000, 9).tobytes())
    outs = []
    for w in ("1", "2"):
        out = tmp_path / f"run{w}.csv"
        main(["solve-mc", "--spatial", "reflected", "--kernel", "stable:0.75", "--phi", "gaussian-bump:width=0.5",
              "--t", "0.5", "1", "--x", "0.5", "--n-paths", "3000", "--seed", "11", "--workers", w, "--out", str(out)])
        outs.append(out.read_bytes())
    cli = outs[0] == outs[1]
    ok = fields and caputo and cross and walks and cli
    report(11, "determinism", ok,
           f"field={fields} caputo={caputo} crossings={cross} octrw={walks} cli={cli}")
