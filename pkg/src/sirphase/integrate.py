"""Adaptive integration of the forced SIR system.

The full three-dimensional system is integrated (R is not eliminated), so
``S + I + R = 1`` stays available as a running correctness check. Output
times and year boundaries are hit exactly by truncating the step that
would cross them; no interpolation is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _solver
from .errors import NonFiniteState, StepSizeUnderflow, ValidationError
from .model import ModelParams, sir_field, sir_jacobian

# Point on the chaotic attractor of the unperturbed reference system
# (eps = 0.138, v0 = 0.071, alpha = 0) at a year boundary, reached by
# integrating 500 years from (0.06, 0.001, 0.939).
DEFAULT_IC = (0.036793272200, 5.7317326e-05, 0.963149410474)


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 0.05
    min_step: float = 1e-12
    transient: float = 500.0
    sample_window: float = 300.0

    def __post_init__(self):
        if not 0 < self.min_step <= self.max_step:
            raise ValidationError(
                f"need 0 < min_step <= max_step (got {self.min_step}, {self.max_step})"
            )
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValidationError("rel_tol and abs_tol must be > 0")
        if not (self.transient >= 0 and self.sample_window >= 0):
            raise ValidationError("transient and sample_window must be >= 0")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), n)
    error_estimate: float = 0.0  # sum of accepted local error estimates

    def __len__(self):
        return len(self.times)

    @property
    def s(self):
        return self.states[:, 0]

    @property
    def i(self):
        return self.states[:, 1]

    @property
    def r(self):
        return self.states[:, 2]


@dataclass
class StrobeSeries:
    times: np.ndarray
    samples: np.ndarray  # shape (count, 3)

    def __len__(self):
        return len(self.samples)

    def distinct(self, resolution: float) -> int:
        return count_distinct(self.samples, resolution)


class Stepper:
    """Stateful wrapper around the compiled kernel.

    Keeps the current time, state and the step-size proposal between calls
    to :meth:`advance`, so consecutive segments continue seamlessly.
    ``m`` tangent vectors are co-integrated when ``m > 0`` (``jac`` needed).
    """

    def __init__(self, field, args, y0, t0, cfg: IntegratorConfig, jac=None, n=None, m=0):
        self.field = field
        self.jac = jac if jac is not None else _solver._no_jacobian
        self.args = np.ascontiguousarray(args, dtype=np.float64)
        self.y = np.array(y0, dtype=np.float64)
        self.n = len(self.y) if n is None else n
        self.m = m
        if len(self.y) != self.n * (1 + m):
            raise ValueError("state length does not match n and m")
        self.t = float(t0)
        self.cfg = cfg
        self.h = min(cfg.max_step, 1e-4)
        self.stats = np.zeros(3)

    def advance(self, t1: float) -> np.ndarray:
        if t1 < self.t:
            raise ValueError(f"cannot integrate backwards from {self.t} to {t1}")
        if t1 == self.t:
            return self.y
        cfg = self.cfg
        t, h, status = _solver.advance(
            self.field, self.jac, self.args, self.t, self.y, float(t1), self.h,
            self.n, self.m, cfg.rel_tol, cfg.abs_tol, cfg.max_step, cfg.min_step,
            self.stats,
        )
        self.t, self.h = t, h
        if status == _solver.UNDERFLOW:
            raise StepSizeUnderflow("step size fell below min_step", t)
        if status == _solver.NONFINITE:
            raise NonFiniteState("state became non-finite", t)
        return self.y

    @property
    def state(self) -> np.ndarray:
        return self.y[: self.n]


def solve(field, args, x0, times, cfg: IntegratorConfig, jac=None) -> Trajectory:
    """Integrate any compiled vector field, recording at ``times``.

    ``times[0]`` is the initial time. This is the generic entry point used
    by :func:`integrate`; it also serves arbitrary test systems.
    """
    times = np.asarray(times, dtype=np.float64)
    if np.any(np.diff(times) <= 0):
        raise ValueError("output times must be strictly increasing")
    stepper = Stepper(field, args, x0, times[0], cfg, jac=jac)
    states = np.empty((len(times), stepper.n))
    states[0] = stepper.y
    for k in range(1, len(times)):
        states[k] = stepper.advance(times[k])
    return Trajectory(times, states, float(stepper.stats[2]))


def output_grid(t0: float, t1: float, dt: float | None) -> np.ndarray:
    if not t1 > t0:
        raise ValueError(f"need t1 > t0 (got {t0}, {t1})")
    if dt is None:
        return np.array([t0, t1])
    count = int(math.floor((t1 - t0) / dt + 1e-9))
    grid = t0 + dt * np.arange(count + 1)
    if t1 - grid[-1] > 1e-9 * dt:
        grid = np.append(grid, t1)
    else:
        grid[-1] = t1
    return grid


def integrate(x0, t0: float, t1: float, p: ModelParams,
              cfg: IntegratorConfig | None = None, dt: float | None = 0.01) -> Trajectory:
    """Integrate the model from ``t0`` to ``t1``.

    States are recorded every ``dt`` years (``dt=None`` keeps only the two
    endpoints). Raises :class:`StepSizeUnderflow` or
    :class:`NonFiniteState` on numerical failure.
    """
    cfg = cfg or IntegratorConfig()
    return solve(sir_field, p.as_array(), x0, output_grid(t0, t1, dt), cfg, jac=sir_jacobian)


def strobe_sample(x0, p: ModelParams, cfg: IntegratorConfig | None = None,
                  t0: float = 0.0) -> StrobeSeries:
    """Annual Poincare section: skip the transient, then sample once a year.

    Samples are taken at integer model years, where the contact-rate forcing
    is at phase zero, starting with the first boundary at or after
    ``t0 + transient``.
    """
    cfg = cfg or IntegratorConfig()
    count = int(math.floor(cfg.sample_window))
    stepper = Stepper(sir_field, p.as_array(), x0, t0, cfg, jac=sir_jacobian)
    start = float(math.ceil(t0 + cfg.transient))
    times = start + np.arange(count, dtype=np.float64)
    samples = np.empty((count, 3))
    for k, t in enumerate(times):
        samples[k] = stepper.advance(t)
    return StrobeSeries(times, samples)


def divergence_demo(x0, delta: float, p: ModelParams, cfg: IntegratorConfig | None = None,
                    duration: float = 200.0, dt: float = 0.01, t0: float = 0.0):
    """Trajectories from ``x0`` and from ``x0 + (delta, 0, -delta)``.

    The perturbation keeps ``S + I + R`` unchanged.
    """
    cfg = cfg or IntegratorConfig()
    x0 = np.asarray(x0, dtype=np.float64)
    shifted = x0 + np.array([delta, 0.0, -delta])
    return (integrate(x0, t0, t0 + duration, p, cfg, dt),
            integrate(shifted, t0, t0 + duration, p, cfg, dt))


def count_distinct(points, resolution: float) -> int:
    """Number of clusters among ``points`` at sup-norm ``resolution``.

    Greedy: a point opens a new cluster when it is farther than
    ``resolution`` from every existing representative.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if points.shape[0] == 0:
        return 0
    reps = []
    for pt in points:
        if not reps or np.min(np.max(np.abs(np.asarray(reps) - pt), axis=1)) > resolution:
            reps.append(pt)
    return len(reps)


def detect_period(points, tol: float, max_period: int = 64) -> int | None:
    """Smallest k with ``|x[n+k] - x[n]| <= tol`` (sup norm) for all n.

    Returns ``None`` when no period up to ``max_period`` fits the samples.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    for k in range(1, min(max_period, len(points) - 1) + 1):
        if np.max(np.abs(points[k:] - points[:-k])) <= tol:
            return k
    return None
