"""Parameter sweeps: 1D bifurcation/Lyapunov scans and the (phi, alpha) grid.

Every parameter point is an independent task started from the same initial
condition, so results do not depend on evaluation order or worker count.
Points are distributed over a process pool; results come back in grid
order.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import IntegrationError, ValidationError
from .integrate import DEFAULT_IC, IntegratorConfig, strobe_sample
from .lyapunov import LAMBDA_TOL, LyapunovConfig, largest_exponent
from .model import TWO_PI, ModelParams


class ScanParameter(enum.Enum):
    EPSILON = "epsilon"
    PHI = "phi"

    @property
    def domain(self) -> tuple[float, float]:
        return (0.0, 1.0) if self is ScanParameter.EPSILON else (0.0, TWO_PI)


class Regime(enum.Enum):
    WHITE = "WHITE"
    BLUE = "BLUE"
    GREEN = "GREEN"
    RED = "RED"
    ORANGE = "ORANGE"


def classify_regime(lambda1: float, tol: float = LAMBDA_TOL) -> Regime:
    """Colour class of a largest exponent (1/year).

    WHITE up to ``tol``, then BLUE to 0.005, GREEN to 0.01, RED to 0.015
    and ORANGE above; upper bounds are inclusive.
    """
    if lambda1 <= tol:
        return Regime.WHITE
    if lambda1 <= 0.005:
        return Regime.BLUE
    if lambda1 <= 0.01:
        return Regime.GREEN
    if lambda1 <= 0.015:
        return Regime.RED
    return Regime.ORANGE


def grid_nodes(lo: float, hi: float, points: int) -> np.ndarray:
    # k / (points - 1) is correctly rounded, so refining to 2n-1 points reproduces
    # the old nodes bit for bit; this form also hits both endpoints exactly
    fractions = [k / (points - 1) for k in range(points)]
    return np.array([lo * (1.0 - f) + hi * f for f in fractions])


def _lyap_grid_default() -> LyapunovConfig:
    return LyapunovConfig(total_time=1500.0)


@dataclass(frozen=True)
class ScanSpec1D:
    parameter: ScanParameter
    lo: float
    hi: float
    points: int = 601
    base: ModelParams = field(default_factory=ModelParams)
    integ: IntegratorConfig = field(default_factory=IntegratorConfig)
    lyap: LyapunovConfig = field(default_factory=LyapunovConfig)
    x0: tuple[float, float, float] = DEFAULT_IC
    with_lyapunov: bool = True
    continuation: bool = False

    def __post_init__(self):
        if isinstance(self.parameter, str):
            object.__setattr__(self, "parameter", ScanParameter(self.parameter))
        if not self.lo < self.hi:
            raise ValidationError(f"scan range must satisfy lo < hi (got {self.lo}, {self.hi})")
        if self.points < 2:
            raise ValidationError("a scan needs at least 2 points")
        dlo, dhi = self.parameter.domain
        if self.lo < dlo or self.hi > dhi:
            raise ValidationError(
                f"{self.parameter.value} range [{self.lo}, {self.hi}] leaves [{dlo}, {dhi}]"
            )

    def values(self) -> np.ndarray:
        return grid_nodes(self.lo, self.hi, self.points)


@dataclass(frozen=True)
class GridSpec2D:
    phi_lo: float = 0.0
    phi_hi: float = TWO_PI
    alpha_lo: float = 0.001
    alpha_hi: float = 0.01
    phi_points: int = 126
    alpha_points: int = 46
    base: ModelParams = field(default_factory=ModelParams)
    integ: IntegratorConfig = field(default_factory=IntegratorConfig)
    lyap: LyapunovConfig = field(default_factory=_lyap_grid_default)
    x0: tuple[float, float, float] = DEFAULT_IC

    def __post_init__(self):
        if not (0.0 <= self.phi_lo < self.phi_hi <= TWO_PI):
            raise ValidationError("need 0 <= phi_lo < phi_hi <= 2pi")
        if not (0.0 <= self.alpha_lo < self.alpha_hi):
            raise ValidationError("need 0 <= alpha_lo < alpha_hi")
        if self.alpha_hi > self.base.vaccination.v0:
            raise ValidationError(
                f"alpha_hi = {self.alpha_hi} exceeds v0 = {self.base.vaccination.v0}"
            )
        if self.phi_points < 2 or self.alpha_points < 2:
            raise ValidationError("grid needs at least 2 points per axis")

    def phis(self) -> np.ndarray:
        return grid_nodes(self.phi_lo, self.phi_hi, self.phi_points)

    def alphas(self) -> np.ndarray:
        return grid_nodes(self.alpha_lo, self.alpha_hi, self.alpha_points)


@dataclass
class ScanPoint:
    value: float
    samples: np.ndarray | None = None  # annual strobe states, shape (k, 3)
    lambda1: float = math.nan
    std_error: float = math.nan
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class ScanResult:
    parameter: ScanParameter
    points: list[ScanPoint]

    @property
    def values(self) -> np.ndarray:
        return np.array([pt.value for pt in self.points])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([pt.lambda1 for pt in self.points])


@dataclass
class DensityCell:
    phi: float
    alpha: float
    lambda1: float
    std_error: float = math.nan
    bin: Regime | None = None
    error: str | None = None


# Task execution -------------------------------------------------------------

def run_tasks(fn: Callable, tasks: Sequence, workers: int | None = None) -> list:
    """Map ``fn`` over ``tasks`` with a bounded process pool, keeping order."""
    tasks = list(tasks)
    if workers is None:
        workers = os.cpu_count() or 1
    workers = max(1, min(workers, len(tasks) or 1))
    if workers == 1:
        return [fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (8 * workers))))


def _point_params(spec: ScanSpec1D, value: float) -> ModelParams:
    return spec.base.with_values(**{spec.parameter.value: float(value)})


def _scan_point(task) -> ScanPoint:
    params, value, x0, integ, lyap, strobe, lyapunov = task
    point = ScanPoint(float(value))
    try:
        if strobe:
            point.samples = strobe_sample(x0, params, integ).samples
        if lyapunov:
            est = largest_exponent(x0, params, lyap, integ)
            point.lambda1, point.std_error = est.lambda1, est.std_error
    except IntegrationError as exc:
        point.error = str(exc)
    return point


def _run_1d(spec: ScanSpec1D, strobe: bool, lyapunov: bool, workers: int | None) -> ScanResult:
    values = spec.values()
    if spec.continuation:
        return ScanResult(spec.parameter, _continuation(spec, values, strobe, lyapunov))
    tasks = [(_point_params(spec, v), v, spec.x0, spec.integ, spec.lyap, strobe, lyapunov)
             for v in values]
    return ScanResult(spec.parameter, run_tasks(_scan_point, tasks, workers))


def _continuation(spec, values, strobe, lyapunov) -> list[ScanPoint]:
    # each point starts where the previous point's attractor left off
    x0 = np.asarray(spec.x0, dtype=np.float64)
    points = []
    for v in values:
        params = _point_params(spec, v)
        point = _scan_point((params, v, x0, spec.integ, spec.lyap, True, lyapunov))
        if not point.failed:
            x0 = point.samples[-1]
            if not strobe:
                point.samples = None
        points.append(point)
    return points


def bifurcation_scan(spec: ScanSpec1D, workers: int | None = None) -> ScanResult:
    """Annual strobe samples per parameter value (plus lambda1 if requested)."""
    return _run_1d(spec, True, spec.with_lyapunov, workers)


def lyapunov_scan_1d(spec: ScanSpec1D, workers: int | None = None) -> ScanResult:
    """Largest exponent and its block standard error per parameter value."""
    return _run_1d(spec, False, True, workers)


def _grid_cell(task) -> DensityCell:
    params, phi, alpha, x0, integ, lyap = task
    try:
        est = largest_exponent(x0, params, lyap, integ)
    except IntegrationError as exc:
        return DensityCell(phi, alpha, math.nan, math.nan, None, str(exc))
    return DensityCell(phi, alpha, est.lambda1, est.std_error, classify_regime(est.lambda1))


def grid_tasks(spec: GridSpec2D) -> Iterable[tuple]:
    for alpha in spec.alphas():
        for phi in spec.phis():
            params = spec.base.with_values(alpha=float(alpha), phi=float(phi))
            yield params, float(phi), float(alpha), spec.x0, spec.integ, spec.lyap


def density_grid(spec: GridSpec2D, workers: int | None = None) -> list[DensityCell]:
    """Classified lambda1 at every (phi, alpha) node; alpha-major order."""
    return run_tasks(_grid_cell, list(grid_tasks(spec)), workers)
