"""Optimization predictor for the spreading distance and closed-form scaling laws.

The most probable position of the packet at time t maximizes the log weight

    w(x, t) = -x / xi + lam_max(x) * t,

where lam_max(x) is the largest growth rate expected within a volume x**d,
obtained by inverting the survival function of the ImDOS at probability x**-d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

import numpy as np
from scipy.special import erfcinv, erfc

from .errors import DomainError, ParameterError, RangeError
from .spectrum import SurvivalFunction

POINTS_PER_DECADE = 400


@dataclass(frozen=True)
class GaussianTail:
    """rho proportional to exp(-lam^2 / (2 sigma^2))."""

    sigma: float
    kind = "gaussian"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError("sigma must be positive")

    @property
    def support(self):
        return (-math.inf, math.inf)

    def __call__(self, lam):
        return 0.5 * erfc(np.asarray(lam, float) / (self.sigma * math.sqrt(2)))

    def quantile(self, p):
        return self.sigma * math.sqrt(2) * erfcinv(2 * np.asarray(p, float))

    def leading_order_quantile(self, p):
        """Asymptotic inversion sigma * sqrt(2 ln(1/p)), valid as p -> 0."""
        return self.sigma * np.sqrt(-2 * np.log(np.asarray(p, float)))


@dataclass(frozen=True)
class UniformTail:
    """rho = 1 / (2W) on [-W, W]."""

    W: float
    kind = "uniform"

    def __post_init__(self):
        if not self.W > 0:
            raise ParameterError("W must be positive")

    @property
    def support(self):
        return (-self.W, self.W)

    def __call__(self, lam):
        return np.clip((self.W - np.asarray(lam, float)) / (2 * self.W), 0.0, 1.0)

    def quantile(self, p):
        return self.W * (1 - 2 * np.asarray(p, float))


@dataclass(frozen=True)
class LinearTail:
    """rho = a - b * lam on [lower, lambda_edge], lower fixed by normalization.

    ``lambda_edge`` defaults to ``a / b`` so the density vanishes linearly at
    the edge; a smaller edge leaves a step at the top of the support.
    """

    a: float
    b: float
    lambda_edge: Optional[float] = None
    kind = "linear"

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ParameterError("a and b must be positive")
        if self.lambda_edge is None:
            object.__setattr__(self, "lambda_edge", self.a / self.b)
        if self.a - self.b * self.lambda_edge < -1e-12 * abs(self.a):
            raise ParameterError("density a - b*lambda is negative at lambda_edge")

    @property
    def _gap(self) -> float:
        return max(self.a - self.b * self.lambda_edge, 0.0)

    @property
    def lower(self) -> float:
        return (self.a - math.sqrt(self._gap ** 2 + 2 * self.b)) / self.b

    @property
    def support(self):
        return (self.lower, self.lambda_edge)

    def _antiderivative(self, lam):
        return self.a * lam - 0.5 * self.b * lam ** 2

    def __call__(self, lam):
        lam = np.clip(np.asarray(lam, float), self.lower, self.lambda_edge)
        return self._antiderivative(self.lambda_edge) - self._antiderivative(lam)

    def quantile(self, p):
        p = np.asarray(p, float)
        return (self.a - np.sqrt(self._gap ** 2 + 2 * self.b * p)) / self.b


TailClass = Union[GaussianTail, UniformTail, LinearTail]
Survival = Union[TailClass, SurvivalFunction]

TAIL_CLASSES = {cls.kind: cls for cls in (GaussianTail, UniformTail, LinearTail)}


def make_tail(kind: str, **params) -> TailClass:
    try:
        return TAIL_CLASSES[kind](**params)
    except KeyError:
        raise ParameterError(f"unknown tail kind {kind!r}; expected one of {sorted(TAIL_CLASSES)}") from None


def lambda_max_of_distance(survival: Survival, x, d: int):
    """Largest growth rate expected within distance ``x``: the quantile at ``x**-d``."""
    x = np.asarray(x, float)
    if np.any(x < 1):
        raise DomainError("distance must be >= 1")
    if d not in (1, 2, 3):
        raise DomainError(f"unsupported dimension {d}")
    lam = survival.quantile(x ** (-float(d)))
    lo, hi = survival.support
    lam = np.clip(lam, lo, hi)
    return lam if np.ndim(lam) else float(lam)


@dataclass
class PredictedTrajectory:
    times: np.ndarray
    xc_pred: np.ndarray
    lambda_opt: np.ndarray
    xi_used: float
    flags: list = field(default_factory=list)

    @property
    def valid(self) -> np.ndarray:
        return np.array([f == "ok" for f in self.flags])

    def rows(self):
        return zip(self.times, self.xc_pred, self.lambda_opt, self.flags)


def distance_grid(x_max: float, points_per_decade: int = POINTS_PER_DECADE) -> np.ndarray:
    """x = 10**(k / points_per_decade) for k = 0 .. up to the first point >= x_max."""
    if not x_max > 1:
        raise RangeError("x_max must exceed 1")
    kmax = int(math.ceil(points_per_decade * math.log10(x_max) - 1e-9))
    return 10.0 ** (np.arange(kmax + 1) / points_per_decade)


def predict_xc(survival: Survival, d: int, xi: float, times, x_max: float = 1e6,
               points_per_decade: int = POINTS_PER_DECADE, strict: bool = False) -> PredictedTrajectory:
    """Argmax of the weight factor on a log-spaced distance grid for each time.

    Flags: ``ok``; ``boundary`` when the maximum sits on the last grid point
    (raised as RangeError with ``strict``); ``extrapolated`` when an empirical
    survival function is inverted below its sampling resolution.
    """
    if not xi > 0:
        raise ParameterError("xi must be positive")
    times = np.atleast_1d(np.asarray(times, float))
    if times.size == 0 or np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ParameterError("times must be positive and strictly increasing")
    x = distance_grid(x_max, points_per_decade)
    lam = np.asarray(lambda_max_of_distance(survival, x, d), float)
    floor = survival.resolution_floor() if isinstance(survival, SurvivalFunction) else 0.0

    xc = np.empty(times.size)
    lam_opt = np.empty(times.size)
    flags = []
    for i, t in enumerate(times):
        k = int(np.argmax(-x / xi + lam * t))
        xc[i], lam_opt[i] = x[k], lam[k]
        if k == x.size - 1:
            if strict:
                raise RangeError(f"weight-factor maximum at grid edge x_max = {x[-1]:.4g} for t = {t:g}")
            flags.append("boundary")
        elif x[k] ** (-float(d)) < floor:
            flags.append("extrapolated")
        else:
            flags.append("ok")
    return PredictedTrajectory(times, xc, lam_opt, float(xi), flags)


@dataclass(frozen=True)
class ScalingLaw:
    """x_c ~ t**exponent * (ln t)**log_power."""

    kind: str
    d: int
    exponent: Fraction
    log_power: Fraction = Fraction(0)

    def __call__(self, t, prefactor: float = 1.0):
        t = np.asarray(t, float)
        out = prefactor * t ** float(self.exponent)
        if self.log_power:
            out = out * np.log(t) ** float(self.log_power)
        return out

    def describe(self) -> str:
        if self.log_power:
            return f"t^{self.exponent} (ln t)^{self.log_power}"
        return f"t^{self.exponent}"


def closed_form_scaling(kind: str, d: int) -> ScalingLaw:
    if d not in (1, 2):
        raise DomainError(f"closed forms tabulated for d in (1, 2), got {d}")
    if kind == "gaussian":
        return ScalingLaw(kind, d, Fraction(1), Fraction(-1, 2))
    if kind == "uniform":
        return ScalingLaw(kind, d, Fraction(1, d + 1))
    if kind == "linear":
        return ScalingLaw(kind, d, Fraction(2, d + 2))
    raise ParameterError(f"unknown tail kind {kind!r}")


def weak_disorder_gaussian_width(sigma_v: float, xi: float) -> float:
    """Width of the emergent Gaussian ImDOS when eigenstates average over xi sites (1D)."""
    if xi < 1:
        raise DomainError("xi must be >= 1")
    return sigma_v / math.sqrt(xi)
