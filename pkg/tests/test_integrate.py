import math

import numba
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sirphase.errors import IntegrationError, NonFiniteState, StepSizeUnderflow, ValidationError
from sirphase.integrate import (
    DEFAULT_IC, IntegratorConfig, count_distinct, detect_period, divergence_demo,
    integrate, output_grid, solve, strobe_sample,
)
from sirphase.model import ModelParams, equilibria

SPEC_IC = (0.06, 0.001, 0.939)


@numba.njit(cache=True)
def _decay(t, x, a, out):
    out[0] = -x[0]


@numba.njit(cache=True)
def _blowup(t, x, a, out):
    out[0] = x[0] * x[0]


@numba.njit(cache=True)
def _nan_after_half(t, x, a, out):
    out[0] = math.nan if t > 0.5 else 1.0


@numba.njit(cache=True)
def _rk4_reference(x, years, h):
    """Fixed-step classical RK4 for the baseline system, written out longhand."""
    beta0, eps, gamma, mu, sigma, v0 = 1505.0, 0.138, 50.0, 0.01, 0.01, 0.071

    def rhs(t, s, i, r):
        c = math.cos(2.0 * math.pi * t)
        beta = beta0 * (1.0 + eps * (2.0 / 3.0 + c) / (1.0 + 2.0 / 3.0 * c))
        return (sigma - mu * s - beta * s * i - v0 * s,
                beta * s * i - (gamma + mu) * i,
                gamma * i - mu * r + v0 * s)

    s, i, r = x[0], x[1], x[2]
    steps = int(round(years / h))
    for k in range(steps):
        t = k * h
        a1, b1, c1 = rhs(t, s, i, r)
        a2, b2, c2 = rhs(t + h / 2, s + h / 2 * a1, i + h / 2 * b1, r + h / 2 * c1)
        a3, b3, c3 = rhs(t + h / 2, s + h / 2 * a2, i + h / 2 * b2, r + h / 2 * c2)
        a4, b4, c4 = rhs(t + h, s + h * a3, i + h * b3, r + h * c3)
        s += h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        i += h / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
        r += h / 6 * (c1 + 2 * c2 + 2 * c3 + c4)
    return np.array([s, i, r])


# config ---------------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    dict(min_step=0.1, max_step=0.05), dict(min_step=0.0), dict(rel_tol=0.0),
    dict(abs_tol=-1.0), dict(transient=-1.0), dict(sample_window=-2.0),
])
def test_config_validation(kwargs):
    with pytest.raises(ValidationError):
        IntegratorConfig(**kwargs)


def test_output_grid():
    grid = output_grid(0.0, 200.0, 0.01)
    assert len(grid) == 20001 and grid[-1] == 200.0
    np.testing.assert_array_equal(output_grid(0.0, 1.05, 0.5), [0.0, 0.5, 1.0, 1.05])
    np.testing.assert_array_equal(output_grid(2.0, 3.0, None), [2.0, 3.0])


# examples -----------------------------------------------------------------------

def test_scalar_decay():
    traj = solve(_decay, np.zeros(0), [1.0], [0.0, 1.0], IntegratorConfig())
    assert traj.states[-1, 0] == pytest.approx(math.exp(-1), abs=1e-8)


def test_endemic_equilibrium_fixed_point(unforced):
    ee = equilibria(unforced).endemic
    traj = integrate(ee, 0.0, 100.0, unforced, dt=1.0)
    assert np.max(np.abs(traj.states - np.asarray(ee))) < 1e-8


def test_matches_fixed_step_rk4_reference(baseline):
    # the 50-year path from this start passes I ~ 1e-20, so the absolute
    # tolerance has to sit far below that for a 1e-6 comparison
    ref = _rk4_reference(np.array(SPEC_IC), 50.0, 1e-5)
    cfg = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-40)
    got = integrate(SPEC_IC, 0.0, 50.0, baseline, cfg, dt=None).states[-1]
    np.testing.assert_allclose(got, ref, rtol=0, atol=1e-6)


def test_strobe_unforced_collapses():
    p = ModelParams().with_values(epsilon=0.0)
    series = strobe_sample(DEFAULT_IC, p)
    assert len(series) == 300
    assert np.ptp(series.samples, axis=0).max() < 1e-6
    np.testing.assert_array_equal(np.diff(series.times), 1.0)
    assert series.times[0] == 500.0


def test_strobe_period_one_regime():
    p = ModelParams().with_values(epsilon=0.02)
    series = strobe_sample(DEFAULT_IC, p)
    d = np.max(np.abs(series.samples[:, None, :] - series.samples[None, :, :]))
    assert d < 1e-6
    assert detect_period(series.samples, 1e-9) == 1


def test_strobe_chaotic_baseline(baseline):
    assert strobe_sample(DEFAULT_IC, baseline).distinct(1e-6) >= 50


@pytest.mark.parametrize("window, count", [(0.0, 0), (10.5, 10), (3.0, 3)])
def test_strobe_sample_count(window, count, baseline):
    cfg = IntegratorConfig(transient=2.5, sample_window=window)
    series = strobe_sample(DEFAULT_IC, baseline, cfg)
    assert len(series) == count
    if count:
        assert series.times[0] == 3.0


def test_divergence_chaotic(baseline):
    first, second = divergence_demo(SPEC_IC, 1e-6, baseline, duration=100.0, dt=0.01)
    np.testing.assert_allclose(first.states[0] - second.states[0], [-1e-6, 0.0, 1e-6], atol=1e-15)
    rel = np.abs(first.i - second.i) / np.maximum(first.i, second.i)
    assert rel.max() > 0.5


def test_divergence_stable_equilibrium():
    p = ModelParams().with_values(epsilon=0.0, v0=0.0)
    ee = equilibria(p).endemic
    first, second = divergence_demo(ee, 1e-6, p, duration=300.0, dt=1.0)
    gap = np.max(np.abs(first.states - second.states), axis=1)
    assert gap[-1] < 1e-2 * gap[0]


def test_divergence_zero_delta_identical(baseline):
    first, second = divergence_demo(DEFAULT_IC, 0.0, baseline, duration=20.0)
    np.testing.assert_array_equal(first.states, second.states)


# errors ---------------------------------------------------------------------

def test_step_size_underflow_reports_time():
    with pytest.raises(StepSizeUnderflow) as info:
        solve(_blowup, np.zeros(0), [1.0], [0.0, 2.0], IntegratorConfig())
    assert info.value.t == pytest.approx(1.0, abs=1e-3)
    assert "t =" in str(info.value)


def test_non_finite_state():
    # the field is NaN from t = 0.5 on; starting there fails on the first evaluation
    with pytest.raises(NonFiniteState) as info:
        solve(_nan_after_half, np.zeros(0), [0.0], [0.6, 1.0], IntegratorConfig())
    assert isinstance(info.value, IntegrationError)
    assert info.value.t == 0.6


def test_non_finite_initial_state(baseline):
    with pytest.raises(NonFiniteState):
        integrate((math.nan, 0.001, 0.939), 0.0, 1.0, baseline)


def test_nan_inside_a_step_shrinks_until_underflow():
    with pytest.raises(StepSizeUnderflow) as info:
        solve(_nan_after_half, np.zeros(0), [0.0], [0.0, 1.0], IntegratorConfig())
    assert info.value.t == pytest.approx(0.5, abs=1e-3)


def test_backwards_rejected(baseline):
    with pytest.raises(ValueError):
        integrate(DEFAULT_IC, 5.0, 1.0, baseline)


# invariants -----------------------------------------------------------------

def test_conservation_and_positivity_long_chaotic_run(baseline):
    cfg = IntegratorConfig()
    traj = integrate(DEFAULT_IC, 0.0, 1000.0, baseline, cfg, dt=0.01)
    drift = np.max(np.abs(traj.states.sum(axis=1) - 1.0))
    assert drift <= 100 * cfg.abs_tol
    assert traj.states.min() >= -10 * cfg.abs_tol
    assert traj.i.min() > 0


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 0.9), st.floats(1e-6, 0.05), st.floats(0, 0.3),
       st.floats(0, 0.009), st.floats(0, 2 * math.pi))
def test_conservation_property(s, i, eps, alpha, phi):
    x0 = (s, i, 1.0 - s - i)
    p = ModelParams().with_values(epsilon=eps, alpha=alpha, phi=phi)
    cfg = IntegratorConfig()
    traj = integrate(x0, 0.0, 20.0, p, cfg, dt=0.1)
    assert np.max(np.abs(traj.states.sum(axis=1) - 1.0)) <= 100 * cfg.abs_tol
    assert traj.states.min() >= -10 * cfg.abs_tol
    assert traj.i.min() > 0


@pytest.mark.parametrize("coarse", [(1e-6, 1e-8), (1e-8, 1e-10), (1e-10, 1e-12)])
def test_tolerance_convergence(coarse, baseline):
    rtol, atol = coarse
    a = integrate(DEFAULT_IC, 0.0, 50.0, baseline, IntegratorConfig(rtol, atol), dt=None)
    b = integrate(DEFAULT_IC, 0.0, 50.0, baseline, IntegratorConfig(rtol / 2, atol / 2), dt=None)
    assert np.max(np.abs(a.states[-1] - b.states[-1])) < a.error_estimate


def test_strobe_independent_of_max_step():
    # periodic regime: chaos would amplify any rounding difference
    p = ModelParams().with_values(epsilon=0.1355)
    cfg = IntegratorConfig(transient=200, sample_window=50)
    a = strobe_sample(DEFAULT_IC, p, cfg)
    b = strobe_sample(DEFAULT_IC, p, IntegratorConfig(max_step=0.01, transient=200, sample_window=50))
    np.testing.assert_array_equal(a.times, b.times)
    assert np.max(np.abs(a.samples - b.samples)) < 1e-8


# helpers --------------------------------------------------------------------

def test_count_distinct():
    pts = np.array([[0.0, 0.0], [1e-7, 0.0], [1.0, 1.0], [1.0, 1.0 + 2e-6]])
    assert count_distinct(pts, 1e-6) == 3
    assert count_distinct(pts, 1e-5) == 2
    assert count_distinct([0.1, 0.1, 0.2], 1e-9) == 2
    assert count_distinct(np.empty((0, 3)), 1e-6) == 0


def test_detect_period():
    base = np.array([0.1, 0.5, 0.3])
    assert detect_period(np.tile(base, 10), 1e-12) == 3
    assert detect_period(np.arange(10.0), 1e-3, max_period=5) is None
