"""Lyapunov exponents from the variational equations.

The state is co-integrated with one or more tangent vectors obeying
``dq/dt = J(t, x(t)) q``. Every ``renorm_interval`` years the tangent
vectors are re-orthonormalized by modified Gram-Schmidt and the logarithms
of the stretching factors are accumulated. Exponents are in 1/year with
natural logarithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .integrate import IntegratorConfig, Stepper
from .model import ModelParams, sir_field, sir_jacobian

# lambda1 above this counts as chaotic (1/year)
LAMBDA_TOL = 1e-3
# std_error above this marks an estimate as not converged
CONVERGENCE_LIMIT = 0.02


@dataclass(frozen=True)
class LyapunovConfig:
    total_time: float = 3000.0
    renorm_interval: float = 0.5
    transient: float = 500.0
    block_count: int = 10
    seed: int = 0

    def __post_init__(self):
        if not self.renorm_interval > 0:
            raise ValidationError("renorm_interval must be > 0")
        if not self.total_time >= 100 * self.renorm_interval:
            raise ValidationError(
                f"total_time must be >= 100 * renorm_interval "
                f"(got {self.total_time}, {self.renorm_interval})"
            )
        if self.block_count < 2:
            raise ValidationError("block_count must be >= 2")
        if self.transient < 0:
            raise ValidationError("transient must be >= 0")


@dataclass(frozen=True)
class LyapunovEstimate:
    lambda1: float
    std_error: float
    spectrum: tuple[float, ...] | None = None
    spectrum_errors: tuple[float, ...] | None = None

    @property
    def converged(self) -> bool:
        return self.std_error <= CONVERGENCE_LIMIT


def gram_schmidt(q: np.ndarray) -> np.ndarray:
    """Orthonormalize the columns of ``q`` in place; return their norms."""
    n, m = q.shape
    norms = np.empty(m)
    for j in range(m):
        v = q[:, j]
        for k in range(j):
            v -= np.dot(q[:, k], v) * q[:, k]
        norms[j] = np.linalg.norm(v)
        v /= norms[j]
    return norms


def _initial_tangents(n: int, m: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    q = rng.standard_normal((n, m))
    gram_schmidt(q)
    return q


def _block_rates(logs: np.ndarray, dt: float, blocks: int) -> np.ndarray:
    return np.array([chunk.sum(axis=0) / (len(chunk) * dt)
                     for chunk in np.array_split(logs, blocks)])


def tangent_exponents(field, jac, args, x0, m: int, cfg: LyapunovConfig,
                      integ: IntegratorConfig | None = None,
                      t0: float = 0.0) -> LyapunovEstimate:
    """Exponents of ``m`` tangent directions for any compiled vector field.

    The state alone is integrated through ``cfg.transient``; then tangent
    vectors (seeded random, orthonormal) are attached and followed for
    ``cfg.total_time`` years.
    """
    integ = integ or IntegratorConfig()
    x0 = np.asarray(x0, dtype=np.float64)
    n = len(x0)
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= {n} tangent vectors")

    stepper = Stepper(field, args, x0, t0, integ)
    start = t0 + cfg.transient
    x = stepper.advance(start).copy()

    q = _initial_tangents(n, m, cfg.seed)
    tangent = Stepper(field, args, np.concatenate([x, q.ravel()]), start, integ,
                      jac=jac, n=n, m=m)
    tangent.h = stepper.h
    intervals = int(round(cfg.total_time / cfg.renorm_interval))
    logs = np.empty((intervals, m))
    for k in range(intervals):
        y = tangent.advance(start + (k + 1) * cfg.renorm_interval)
        q = y[n:].reshape(n, m)
        logs[k] = np.log(gram_schmidt(q))
        y[n:] = q.ravel()

    elapsed = intervals * cfg.renorm_interval
    rates = logs.sum(axis=0) / elapsed
    blocks = _block_rates(logs, cfg.renorm_interval, cfg.block_count)
    errors = blocks.std(axis=0, ddof=1) / math.sqrt(cfg.block_count)

    order = np.argsort(-rates, kind="stable")
    lam1, err1 = float(rates[order[0]]), float(errors[order[0]])
    if m == 1:
        return LyapunovEstimate(lam1, err1)
    return LyapunovEstimate(
        lam1, err1,
        spectrum=tuple(float(v) for v in rates[order]),
        spectrum_errors=tuple(float(v) for v in errors[order]),
    )


def largest_exponent(x0, p: ModelParams, cfg: LyapunovConfig | None = None,
                     integ: IntegratorConfig | None = None) -> LyapunovEstimate:
    """Largest exponent of the forced SIR flow started at ``x0`` (t = 0)."""
    return tangent_exponents(sir_field, sir_jacobian, p.as_array(), x0, 1,
                             cfg or LyapunovConfig(), integ)


def exponent_spectrum(x0, p: ModelParams, cfg: LyapunovConfig | None = None,
                      integ: IntegratorConfig | None = None) -> LyapunovEstimate:
    """All three exponents, sorted descending."""
    return tangent_exponents(sir_field, sir_jacobian, p.as_array(), x0, 3,
                             cfg or LyapunovConfig(), integ)
