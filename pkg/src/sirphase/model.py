"""Seasonally forced SIR model with a periodic vaccination perturbation.

State is the vector of population fractions (S, I, R); time is in years.
The contact rate is modulated by a yearly Kot-type shape and the
vaccination rate by the same shape at ``r`` times the frequency, shifted
by the phase ``phi``::

    dS/dt = sigma - mu S - beta(t) S I - v(t) S
    dI/dt = beta(t) S I - (gamma + mu) I
    dR/dt = gamma I - mu R + v(t) S

The compiled kernels at the bottom of this module take the parameters as a
packed float array (see :meth:`ModelParams.as_array`) so that they can be
passed straight into the solver.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numba as nb
import numpy as np

from .errors import ValidationError

TWO_PI = 2.0 * math.pi
KOT_A = 2.0 / 3.0

# Table values of the reference infection
SIGMA = 0.01
MU = 0.01
GAMMA = 50.0
BETA0 = 1505.0
EPSILON = 0.138
V0 = 0.071
ALPHA = 0.0
RATIO = 2.0
PHI = 0.0


class ForcingShape(enum.Enum):
    KOT = "kot"
    COSINE = "cos"

    @property
    def code(self) -> float:
        return 0.0 if self is ForcingShape.KOT else 1.0


@dataclass(frozen=True)
class ForcingParams:
    beta0: float = BETA0
    epsilon: float = EPSILON
    shape: ForcingShape = ForcingShape.KOT
    period: float = 1.0

    def __post_init__(self):
        if isinstance(self.shape, str):
            object.__setattr__(self, "shape", ForcingShape(self.shape))
        if not self.beta0 > 0:
            raise ValidationError(f"beta0 must be > 0 (got {self.beta0})")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValidationError(f"epsilon must lie in [0, 1] (got {self.epsilon})")
        if self.period != 1.0:
            raise ValidationError(f"forcing period is fixed at 1 year (got {self.period})")


@dataclass(frozen=True)
class VaccinationParams:
    v0: float = V0
    alpha: float = ALPHA
    r: float = RATIO
    phi: float = PHI

    def __post_init__(self):
        if not self.v0 >= 0:
            raise ValidationError(f"v0 must be >= 0 (got {self.v0})")
        if not 0.0 <= self.alpha <= self.v0:
            raise ValidationError(
                f"alpha must satisfy 0 <= alpha <= v0 (got alpha={self.alpha}, v0={self.v0})"
            )
        if not 0.0 <= self.phi <= TWO_PI:
            raise ValidationError(f"phi must lie in [0, 2pi] (got {self.phi})")
        if not self.r > 0:
            raise ValidationError(f"r must be > 0 (got {self.r})")


@dataclass(frozen=True)
class ModelParams:
    sigma: float = SIGMA
    mu: float = MU
    gamma: float = GAMMA
    forcing: ForcingParams = field(default_factory=ForcingParams)
    vaccination: VaccinationParams = field(default_factory=VaccinationParams)

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValidationError(f"sigma must be >= 0 (got {self.sigma})")
        if not self.mu > 0:
            raise ValidationError(f"mu must be > 0 (got {self.mu})")
        if not self.gamma > 0:
            raise ValidationError(f"gamma must be > 0 (got {self.gamma})")

    def as_array(self) -> np.ndarray:
        f, v = self.forcing, self.vaccination
        return np.array(
            [self.sigma, self.mu, self.gamma, f.beta0, f.epsilon, f.shape.code,
             v.v0, v.alpha, v.r, v.phi],
            dtype=np.float64,
        )

    def with_values(self, **changes) -> "ModelParams":
        """Copy with flat overrides, e.g. ``p.with_values(epsilon=0.0, phi=1.0)``."""
        top, forcing, vacc = {}, {}, {}
        for key, value in changes.items():
            if key in ("sigma", "mu", "gamma"):
                top[key] = value
            elif key in ("beta0", "epsilon", "shape"):
                forcing[key] = value
            elif key in ("v0", "alpha", "r", "phi"):
                vacc[key] = value
            else:
                raise KeyError(key)
        return ModelParams(
            forcing=_replace(self.forcing, forcing),
            vaccination=_replace(self.vaccination, vacc),
            **{"sigma": self.sigma, "mu": self.mu, "gamma": self.gamma, **top},
        )


def _replace(record, changes):
    if not changes:
        return record
    return type(record)(**{**record.__dict__, **changes})


class StateVec(NamedTuple):
    s: float
    i: float
    r: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=np.float64)

    def validate(self, tol: float = 1e-9) -> "StateVec":
        if not all(math.isfinite(c) for c in self):
            raise ValidationError(f"state has non-finite components: {tuple(self)}")
        if min(self) < -tol or abs(sum(self) - 1.0) > tol:
            raise ValidationError(
                f"state must be non-negative fractions summing to 1: {tuple(self)}"
            )
        return self


class Equilibria(NamedTuple):
    disease_free: StateVec
    endemic: StateVec
    endemic_physical: bool


# Python-level operations ---------------------------------------------------

def kot_shape(theta):
    """Kot-type periodic shape ``(2/3 + cos θ) / (1 + 2/3 cos θ)``.

    Ranges over [-1, 1] with the maximum at θ = 0 and the minimum at θ = π.
    Accepts scalars or arrays.
    """
    c = np.cos(theta)
    return (KOT_A + c) / (1.0 + KOT_A * c)


def kot_mean() -> float:
    """Closed-form mean of :func:`kot_shape` over one period."""
    return (1.0 - math.sqrt(1.0 - KOT_A**2)) / KOT_A


def contact_rate(t, p: ForcingParams):
    if p.shape is ForcingShape.KOT:
        shape = kot_shape(TWO_PI * np.asarray(t))
    else:
        shape = np.cos(TWO_PI * np.asarray(t))
    return p.beta0 * (1.0 + p.epsilon * shape)


def vaccination_rate(t, p: VaccinationParams):
    return p.v0 + p.alpha * kot_shape(TWO_PI * p.r * np.asarray(t) + p.phi)


def vector_field(t: float, x: Sequence[float], p: ModelParams) -> np.ndarray:
    out = np.empty(3)
    sir_field(float(t), np.asarray(x, dtype=np.float64), p.as_array(), out)
    return out


def jacobian(t: float, x: Sequence[float], p: ModelParams) -> np.ndarray:
    out = np.empty((3, 3))
    sir_jacobian(float(t), np.asarray(x, dtype=np.float64), p.as_array(), out)
    return out


def basic_reproduction_number(p: ModelParams) -> float:
    return p.forcing.beta0 * p.sigma / (p.mu * (p.mu + p.gamma))


def equilibria(p: ModelParams) -> Equilibria:
    """Disease-free and endemic equilibria of the unforced, unvaccinated model.

    Only ``sigma``, ``mu``, ``gamma`` and ``beta0`` enter; seasonality and
    vaccination settings of ``p`` are ignored. The endemic point has a
    negative infected fraction when R0 < 1 and is then flagged nonphysical.
    """
    beta0 = p.forcing.beta0
    r0 = basic_reproduction_number(p)
    dfe = StateVec(p.sigma / p.mu, 0.0, 0.0)
    ee = StateVec(
        (p.gamma + p.mu) / beta0,
        p.mu / beta0 * (r0 - 1.0),
        p.gamma / beta0 * (r0 - 1.0),
    )
    return Equilibria(dfe, ee, ee.i >= 0.0)


# Compiled kernels ----------------------------------------------------------
# Packed layout: sigma, mu, gamma, beta0, epsilon, shape, v0, alpha, r, phi

@nb.njit(cache=True)
def _kot(theta):
    c = math.cos(theta)
    return (KOT_A + c) / (1.0 + KOT_A * c)


@nb.njit(cache=True)
def _rates(t, a):
    theta = TWO_PI * t
    if a[5] == 0.0:
        shape = _kot(theta)
    else:
        shape = math.cos(theta)
    beta = a[3] * (1.0 + a[4] * shape)
    v = a[6] + a[7] * _kot(TWO_PI * a[8] * t + a[9])
    return beta, v


@nb.njit(cache=True)
def sir_field(t, x, a, out):
    sigma, mu, gamma = a[0], a[1], a[2]
    beta, v = _rates(t, a)
    s, i, r = x[0], x[1], x[2]
    infection = beta * s * i
    out[0] = sigma - mu * s - infection - v * s
    out[1] = infection - (gamma + mu) * i
    out[2] = gamma * i - mu * r + v * s


@nb.njit(cache=True)
def sir_jacobian(t, x, a, out):
    mu, gamma = a[1], a[2]
    beta, v = _rates(t, a)
    s, i = x[0], x[1]
    out[0, 0] = -mu - beta * i - v
    out[0, 1] = -beta * s
    out[0, 2] = 0.0
    out[1, 0] = beta * i
    out[1, 1] = beta * s - gamma - mu
    out[1, 2] = 0.0
    out[2, 0] = v
    out[2, 1] = gamma
    out[2, 2] = -mu
