"""One-loop flow of the coupling g = v eta^2 / D^4 for the Cole-Hopf transformed
disordered Schroedinger equation, with momentum cutoff set to 1.

    dg/dl = g [4 - d + 2 (12 - 5d) / d * K_d * g]

The dynamical exponent follows from the D recursion at the nontrivial fixed
point. The field-rescaling exponent chi is not reported: solving the v and eta
recursions at the d = 3 fixed point gives chi = -1/3 from both, and z does not
depend on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import DomainError, NoFixedPointError, ParameterError, SingularFlowError

RUNAWAY = 1e6


def kd(d: int) -> float:
    """K_d = S_d / (2 pi)^d with S_d the surface area of the unit sphere in d dimensions."""
    if d not in (1, 2, 3, 4):
        raise DomainError(f"K_d implemented for d in 1..4, got {d}")
    s_d = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    return s_d / (2 * math.pi) ** d


def _kg_star(d: int) -> Fraction:
    """K_d * g2* as an exact rational."""
    return Fraction(d * (d - 4), 2 * (12 - 5 * d))


def beta(g, d: int):
    """Right-hand side of the coupling flow."""
    return g * (4 - d + 2 * (12 - 5 * d) / d * kd(d) * g)


@dataclass(frozen=True)
class FixedPoints:
    d: int
    g1: float
    g2: float
    g1_stable: bool
    g2_physical: bool
    g2_stable: bool

    def slope_at(self, g: float) -> float:
        """d(beta)/dg, the linearized growth rate of a deviation."""
        return (4 - self.d) + 2 * 2 * (12 - 5 * self.d) / self.d * kd(self.d) * g


def fixed_points(d: int) -> FixedPoints:
    if d not in (1, 2, 3):
        raise DomainError(f"fixed points tabulated for d in 1..3, got {d}")
    g2 = float(_kg_star(d)) / kd(d)
    physical = g2 > 0
    # beta'(0) = 4 - d and beta'(g2) = -(4 - d)
    return FixedPoints(d, 0.0, g2, g1_stable=(4 - d) < 0, g2_physical=physical,
                       g2_stable=physical and (4 - d) > 0)


@dataclass
class FlowSeries:
    l: np.ndarray
    g: np.ndarray
    runaway: bool = False
    D: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    eta: Optional[np.ndarray] = None

    @property
    def final(self) -> float:
        return float(self.g[-1])


def _rk4(rhs, y0, l_max, dl, stop=None):
    n = int(math.ceil(l_max / dl - 1e-9))
    h = l_max / n if n else 0.0
    ys = [np.asarray(y0, float)]
    ls = [0.0]
    y = ys[0]
    for i in range(n):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys.append(y)
        ls.append((i + 1) * h)
        if stop is not None and stop(y):
            return np.array(ls), np.array(ys), True
    return np.array(ls), np.array(ys), False


def integrate_flow(g0: float, d: int, l_max: float, dl: float = 1e-2) -> FlowSeries:
    """Fixed-step RK4 integration; stops with ``runaway`` once g exceeds 1e6."""
    if g0 < 0:
        raise ParameterError("g0 must be non-negative")
    if not 0 < dl <= 1e-2:
        raise ParameterError("dl must lie in (0, 1e-2]")
    ls, ys, runaway = _rk4(lambda y: np.array([beta(y[0], d)]), [g0], l_max, dl,
                           stop=lambda y: not (abs(y[0]) <= RUNAWAY))
    return FlowSeries(ls, ys[:, 0], runaway)


def exponents(d: int) -> dict:
    """z = 2 - 2(d-2)/d * K_d g2* at the nontrivial fixed point, and 1/z."""
    if d != 3:
        raise NoFixedPointError(f"no physical attracting fixed point in d = {d}; only d = 3 is supported")
    z = 2 - Fraction(2 * (d - 2), d) * _kg_star(d)
    return {"z": z, "inverse_z": 1 / z}


def z_at_coupling(d: int, g: float) -> float:
    """z that keeps D fixed at an arbitrary coupling g."""
    return 2 - 2 * (d - 2) / d * kd(d) * g


def bare_flow(D0: float, v0: float, eta0: float, d: int, l_max: float, dl: float = 1e-2,
              z: float = 2.0, chi: float = 0.0) -> FlowSeries:
    """Integrate the D, v, eta recursions at fixed (z, chi); g is derived from them."""
    if not D0 > 0:
        raise ParameterError("D0 must be positive")
    if v0 < 0:
        raise ParameterError("v0 must be non-negative")
    k = kd(d)

    def rhs(y):
        D, v, eta = y
        if D <= 0:
            raise SingularFlowError("D reached zero")
        g = v * eta ** 2 / D ** 4
        return np.array([
            D * (z - 2 + 2 * (d - 2) / d * k * g),
            v * (2 * (z - chi - d / 2) - 2 * k * g),
            eta * (chi + z - 2 + 4 * k * g / d),
        ])

    def blown(y):
        if y[0] <= 0:
            raise SingularFlowError("D reached zero")
        return not np.all(np.isfinite(y))

    ls, ys, bad = _rk4(rhs, [D0, v0, eta0], l_max, dl, stop=blown)
    D, v, eta = ys.T
    g = v * eta ** 2 / D ** 4
    return FlowSeries(ls, g, bad, D, v, eta)
