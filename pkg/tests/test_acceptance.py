"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line; the lines are printed together in the
terminal summary (see ``conftest.py``) and also to stdout when run with
``-s``.
"""

import io
import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import ACCEPTANCE_LINES, SEVEN_FIFTHS_PI
from sirphase import cli
from sirphase.integrate import DEFAULT_IC, IntegratorConfig, integrate, strobe_sample
from sirphase.lyapunov import LAMBDA_TOL, LyapunovConfig, largest_exponent, tangent_exponents
from sirphase.model import (
    ModelParams, basic_reproduction_number, equilibria, jacobian, kot_mean, kot_shape,
    vector_field,
)
from sirphase.scan import (
    GridSpec2D, Regime, ScanParameter, ScanSpec1D, bifurcation_scan, density_grid,
)
from test_lyapunov import _linear, _linear_jac

STROBE_RESOLUTION = 1e-5


def report(tag, ok, detail):
    line = f"{tag} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def phase_grid():
    """Density grid rows alpha = 0.001 and 0.009 over phi in [0, 2pi] (101 nodes)."""
    spec = GridSpec2D(phi_lo=0.0, phi_hi=2 * math.pi, alpha_lo=0.001, alpha_hi=0.009,
                      phi_points=101, alpha_points=2)
    start = time.perf_counter()
    cells = density_grid(spec)
    return cells, time.perf_counter() - start


def test_c1_chaos_baseline():
    start = time.perf_counter()
    est = largest_exponent(DEFAULT_IC, ModelParams())
    elapsed = time.perf_counter() - start
    ok = 0.05 <= est.lambda1 <= 0.15 and elapsed <= 60
    report("C1", ok, f"chaos baseline: lambda1 = {est.lambda1:.4f} +- {est.std_error:.4f} "
                     f"(want [0.05, 0.15]), {elapsed:.1f} s (limit 60 s)")


def test_c2_phase_control_suppression():
    p = ModelParams().with_values(alpha=0.009, r=2.0, phi=SEVEN_FIFTHS_PI)
    start = time.perf_counter()
    est = largest_exponent(DEFAULT_IC, p)
    distinct = strobe_sample(DEFAULT_IC, p).distinct(STROBE_RESOLUTION)
    elapsed = time.perf_counter() - start
    ok = est.lambda1 <= 0.01 and distinct <= 16 and elapsed <= 60
    report("C2", ok, f"phase control at phi = 7pi/5, alpha = 0.009: lambda1 = {est.lambda1:.4f} "
                     f"+- {est.std_error:.4f} (want <= 0.01), {distinct} strobe points at 1e-5 "
                     f"(want <= 16), {elapsed:.1f} s (limit 60 s)")


def test_c3_epsilon_bifurcation_structure():
    spec = ScanSpec1D(ScanParameter.EPSILON, 0.134, 0.14, points=201)
    start = time.perf_counter()
    result = bifurcation_scan(spec)
    elapsed = time.perf_counter() - start
    lam = result.lambdas
    periodic = [pt.lambda1 <= LAMBDA_TOL and
                pt.samples is not None and
                _distinct(pt.samples) <= 16 for pt in result.points]
    longest = _longest_run(periodic)
    chaotic = int(np.sum(lam > 0.01))
    failed = sum(pt.failed for pt in result.points)
    ok = chaotic > 0 and longest >= 3 and failed == 0 and elapsed <= 1800
    report("C3", ok, f"epsilon scan, 201 points: {chaotic} chaotic (lambda1 > 0.01), longest "
                     f"periodic window {longest} points (want >= 3), {failed} failed, "
                     f"{elapsed:.0f} s (limit 1800 s)")


def test_c4_phase_threshold(phase_grid):
    cells, elapsed = phase_grid
    row = [c for c in cells if c.alpha == 0.009 and c.phi >= math.pi]
    white = [c.bin is Regime.WHITE for c in row]
    tail = len(white) - (max((k for k, w in enumerate(white) if not w), default=-1) + 1)
    threshold = row[len(row) - tail - 1].phi if tail < len(row) else math.pi
    # a real transition: chaotic cells before, and a non-trivial white band after
    ok = len(row) >= 50 and 0 < len(row) - tail and tail >= 5
    report("C4", ok, f"phase threshold on alpha = 0.009 row ({len(row)} points in [pi, 2pi]): "
                     f"all {tail} cells with phi > {threshold / math.pi:.3f}pi are WHITE; "
                     f"{len(row) - tail} non-white before (grid {elapsed:.0f} s)")


def test_c5_small_alpha_persistence(phase_grid):
    cells, _ = phase_grid
    row = [c for c in cells if c.alpha == 0.001]
    chaotic = sum(c.bin is not None and c.bin is not Regime.WHITE for c in row)
    frac = chaotic / len(row)
    report("C5", frac >= 0.25, f"alpha = 0.001 row: {chaotic}/{len(row)} cells chaotic "
                               f"({frac:.0%}, want >= 25%)")


def test_c6_reproduction_number():
    r0 = basic_reproduction_number(ModelParams())
    report("C6", 30.0 <= r0 <= 30.2, f"R0 = {r0:.4f} (want [30.0, 30.2])")


def test_c7_property_suite(tmp_path, monkeypatch):
    checks = {}
    rng = np.random.default_rng(7)

    p = ModelParams().with_values(alpha=0.009, phi=SEVEN_FIFTHS_PI)
    worst = 0.0
    for _ in range(100):
        s, i = rng.uniform(0, 1), rng.uniform(0, 0.05)
        x, t = np.array([s, i, max(0.0, 1 - s - i)]), rng.uniform(0, 10)
        exact = jacobian(t, x, p)
        fd = np.empty((3, 3))
        for k in range(3):
            e = np.zeros(3)
            e[k] = 1e-6
            fd[:, k] = (vector_field(t, x + e, p) - vector_field(t, x - e, p)) / 2e-6
        worst = max(worst, np.max(np.abs(exact - fd)) / np.max(np.abs(exact)))
    checks["jacobian vs finite differences"] = (worst <= 1e-6, f"{worst:.1e}")

    traj = integrate(DEFAULT_IC, 0.0, 1000.0, ModelParams(), dt=0.01)
    drift = float(np.max(np.abs(traj.states.sum(axis=1) - 1.0)))
    checks["conservation over 1000 years"] = (drift <= 1e-8, f"{drift:.1e}")

    cfg = LyapunovConfig(total_time=5000.0, transient=0.0)
    diag = np.diag([0.3, -0.1, -0.5])
    upper = diag + np.triu([[0, 0.7, -0.4], [0, 0, 0.9], [0, 0, 0]])
    err = 0.0
    for a in (diag, upper):
        est = tangent_exponents(_linear, _linear_jac, a.ravel(), np.zeros(3), 3, cfg)
        err = max(err, float(np.max(np.abs(np.array(est.spectrum) - [0.3, -0.1, -0.5]))))
    checks["linear Lyapunov oracle"] = (err <= 1e-3, f"{err:.1e}")

    q, _ = quad(kot_shape, 0, 2 * math.pi, epsabs=1e-13, epsrel=1e-13, limit=200)
    mean_err = max(abs(q / (2 * math.pi) - 0.381966), abs(kot_mean() - q / (2 * math.pi)))
    checks["kot mean vs quadrature"] = (mean_err <= 1e-6, f"{mean_err:.1e}")

    unforced = ModelParams().with_values(epsilon=0.0, v0=0.0, alpha=0.0)
    eq = equilibria(unforced)
    res = max(np.max(np.abs(vector_field(0.0, x, unforced))) for x in (eq.disease_free, eq.endemic))
    checks["equilibria residuals"] = (res < 1e-12, f"{res:.1e}")

    outputs = []
    for workers in ("1", "2"):
        d = tmp_path / f"w{workers}"
        d.mkdir()
        monkeypatch.chdir(d)
        code = cli.main(["sweep", "--grid", "4x3", "--total-time", "200", "--lyap-transient", "50",
                         "--workers", workers, "--out", "sweep.csv"])
        outputs.append((code, (d / "sweep.csv").read_bytes()))
    same = outputs[0] == outputs[1] and outputs[0][0] == 0
    checks["parallel/serial sweep bytes"] = (same, "identical" if same else "differ")

    ok = all(v[0] for v in checks.values())
    detail = "; ".join(f"{k} {'ok' if v[0] else 'FAIL'} ({v[1]})" for k, v in checks.items())
    report("C7", ok, f"property suite: {detail}")


def _distinct(samples):
    from sirphase.integrate import count_distinct
    return count_distinct(samples, STROBE_RESOLUTION)


def _longest_run(flags):
    best = run = 0
    for flag in flags:
        run = run + 1 if flag else 0
        best = max(best, run)
    return best
