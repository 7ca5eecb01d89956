"""Inner rescaling, blow-up chart K1 and the y1 normal-form coordinate.

K2 is the reactive-diffusive rescaling ``theta = 1 + eps * theta2``; K1 is the
matching chart ``(theta, eta, eps) = (1 - r1, eta, r1 * eps1)``. Flat factors
such as ``exp(-1/eps1)`` are evaluated in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .model import DomainError, Params, PhasePoint

#: K2 exponentials overflow past this theta2
THETA2_MAX = 700.0
RADICAND_FLOOR = -1e-14


@dataclass(frozen=True)
class K2Point:
    theta2: float
    eta: float


@dataclass(frozen=True)
class K1Point:
    r1: float
    eta: float
    eps1: float

    def __post_init__(self):
        if self.r1 < 0 or self.eps1 < 0:
            raise DomainError("K1 coordinates need r1 >= 0 and eps1 >= 0")


@dataclass(frozen=True)
class NormalFormPoint:
    r1: float
    y1: float
    eps1: float


@dataclass(frozen=True)
class TransitionDefaults:
    rho: float = 0.1
    delta: float = 0.5
    corridor: float = 0.5


DEFAULTS = TransitionDefaults()


# -- K2 -----------------------------------------------------------------------

def to_k2(p: PhasePoint, eps: float) -> K2Point:
    if not eps > 0:
        raise DomainError("to_k2 needs eps > 0")
    return K2Point((p.theta - 1.0) / eps, p.eta)


def from_k2(q: K2Point, eps: float) -> PhasePoint:
    if not eps > 0:
        raise DomainError("from_k2 needs eps > 0")
    return PhasePoint(1.0 + eps * q.theta2, q.eta)


def _check_theta2(theta2: float):
    if theta2 > THETA2_MAX:
        raise OverflowError(f"theta2={theta2} exceeds {THETA2_MAX}")


def k2_vector_field(q: K2Point, params: Params) -> tuple[float, float]:
    """Inner field ``(eta, theta2 e^theta2 / 2 + eps (c eta + theta2^2 e^theta2 / 2))``."""
    _check_theta2(q.theta2)
    e = math.exp(q.theta2)
    return q.eta, 0.5 * q.theta2 * e + params.eps * (params.c * q.eta + 0.5 * q.theta2 ** 2 * e)


def k2_rhs(c: float, eps: float):
    """Array form of :func:`k2_vector_field` for the integrator."""

    def rhs(t, y):
        th = y[0]
        if th > THETA2_MAX:
            return np.array([np.nan, np.nan])
        e = math.exp(th)
        return np.array([y[1], 0.5 * th * e + eps * (c * y[1] + 0.5 * th * th * e)])

    return rhs


def k2_saddle_eigenvalues(c: float, eps: float) -> tuple[float, float]:
    """Eigenvalues (unstable, stable) of the inner field at p+ = (0, 0)."""
    root = math.sqrt(eps * eps * c * c + 2.0)
    return 0.5 * (eps * c + root), 0.5 * (eps * c - root)


def hamiltonian(q: K2Point) -> float:
    _check_theta2(q.theta2)
    return 0.5 * q.eta ** 2 - 0.5 * (q.theta2 - 1.0) * math.exp(q.theta2)


_SERIES_CUT = 0.1
# 1 + (x - 1) e^x = sum_{n>=2} (n - 1) x^n / n!, used near x = 0 to avoid cancellation
_RAD_COEFFS = [(n - 1) / math.factorial(n) for n in range(2, 22)]


def _radicand_series(x):
    acc = 0.0 * x
    for coeff in reversed(_RAD_COEFFS):
        acc = (acc + coeff) * x
    return acc * x


def _separatrix_radicand(theta2: float) -> float:
    _check_theta2(theta2)
    if abs(theta2) < _SERIES_CUT:
        return _radicand_series(theta2)
    rad = 1.0 + (theta2 - 1.0) * math.exp(theta2)
    if rad < 0.0:
        if rad < RADICAND_FLOOR:
            raise DomainError(f"separatrix radicand {rad} negative at theta2={theta2}")
        rad = 0.0
    return rad


def separatrix_hs(theta2: float) -> float:
    """Stable separatrix of p+ in the eps = 0 inner system, tends to 1 as theta2 -> -inf."""
    s = -1.0 if theta2 > 0 else (1.0 if theta2 < 0 else 0.0)
    return s * math.sqrt(_separatrix_radicand(theta2))


def separatrix_hu(theta2: float) -> float:
    return -separatrix_hs(theta2)


def separatrix_hs_array(theta2: np.ndarray) -> np.ndarray:
    theta2 = np.asarray(theta2, dtype=float)
    rad = np.where(np.abs(theta2) < _SERIES_CUT, _radicand_series(theta2),
                   1.0 + (theta2 - 1.0) * np.exp(theta2))
    return -np.sign(theta2) * np.sqrt(np.clip(rad, 0.0, None))


# -- blow-up and chart changes -------------------------------------------------

def blowup_map(r: float, theta_bar: float, eps_bar: float) -> tuple[float, float]:
    if r < 0 or eps_bar < 0:
        raise DomainError("blow-up needs r >= 0 and eps_bar >= 0")
    return 1.0 + r * theta_bar, r * eps_bar


def kappa12(theta2: float, eps: float) -> tuple[float, float]:
    """K2 -> K1: ``r1 = -eps theta2``, ``eps1 = -1/theta2``; needs theta2 < 0."""
    if not theta2 < 0:
        raise DomainError("kappa12 needs theta2 < 0")
    return -eps * theta2, -1.0 / theta2


def kappa21(r1: float, eps1: float) -> tuple[float, float]:
    """K1 -> K2: returns ``(theta2, eps) = (-1/eps1, r1 eps1)``; needs eps1 > 0."""
    if not eps1 > 0:
        raise DomainError("kappa21 needs eps1 > 0")
    return -1.0 / eps1, r1 * eps1


# -- K1 -----------------------------------------------------------------------

def _flat(eps1: float, power: int) -> float:
    """``eps1**-power * exp(-1/eps1)``, exactly 0 at eps1 = 0."""
    if eps1 <= 0.0:
        return 0.0
    logv = -power * math.log(eps1) - 1.0 / eps1
    return math.exp(logv) if logv > -745.0 else 0.0


def k1_vector_field(p: K1Point, params: Params, divided: bool = False) -> tuple[float, float, float]:
    """Field in chart K1; ``divided=True`` gives the form divided by eta (used near q)."""
    r1, eta, eps1, c = p.r1, p.eta, p.eps1, params.c
    flat = 0.5 * (1.0 - r1) * _flat(eps1, 2)
    if not divided:
        return -r1 * eta, c * r1 * eta - flat, eps1 * eta
    if abs(eta) < 1e-8:
        raise DomainError("eta-divided K1 field needs eta bounded away from 0")
    return -r1, c * r1 - flat / eta, eps1


def k1_rhs(c: float, divided: bool = False):
    def rhs(t, y):
        r1, eta, eps1 = y
        flat = 0.5 * (1.0 - r1) * _flat(eps1, 2)
        if divided:
            return np.array([-r1, c * r1 - flat / eta, eps1])
        return np.array([-r1 * eta, c * r1 * eta - flat, eps1 * eta])

    return rhs


def _f1_radicand_shift(eps1: float) -> float:
    # (1/eps1 + 1) exp(-1/eps1)
    if eps1 <= 0.0:
        return 0.0
    logv = math.log1p(eps1) - math.log(eps1) - 1.0 / eps1
    return math.exp(logv) if logv > -745.0 else 0.0


def y1_coordinate(p: K1Point, c: float) -> float:
    return math.sqrt((p.eta + c * p.r1) ** 2 + _f1_radicand_shift(p.eps1))


def f1(y1: float, eps1: float) -> float:
    """Inverse of the y1 coordinate at r1 = 0: eta on the level set H = y1^2/2."""
    if y1 <= 0:
        raise DomainError("f1 needs y1 > 0")
    rad = 1.0 - _f1_radicand_shift(eps1) / (y1 * y1)
    if rad < 0.0:
        raise DomainError(f"f1 radicand negative for y1={y1}, eps1={eps1}")
    return y1 * math.sqrt(rad)


def F1_chart(r1: float, y1: float, eps1: float, c: float) -> float:
    """Flat coefficient of the y1 equation: dy1/dt = r1 * F1."""
    if eps1 <= 0.0:
        return 0.0
    fv = f1(y1, eps1)
    denom = fv - c * r1
    if denom == 0.0:
        raise DomainError("F1 denominator vanishes (f1 = c r1)")
    return 0.5 / y1 * _flat(eps1, 2) * (fv - c) / denom


def corner_integral(y1: float, c: float, delta: float) -> float:
    """``int_0^delta s^-2 F1(0, y1, s, c) ds``; the integrand is flat at s = 0."""

    def integrand(s):
        if s <= 0.0:
            return 0.0
        return s ** -2 * F1_chart(0.0, y1, s, c)

    val, _ = quad(integrand, 0.0, delta, epsabs=1e-15, epsrel=1e-13, limit=200)
    return val


def transition_map_leading(y1: float, eps1: float, c: float, rho: float = DEFAULTS.rho,
                           delta: float = DEFAULTS.delta) -> tuple[float, float, float]:
    """First-order corner passage from r1 = rho to eps1 = delta.

    Returns ``(r1_out, y1_out, delta)`` with ``r1_out = rho eps1 / delta`` and
    ``y1_out = y1 + rho eps1 int_0^delta s^-2 F1(0, y1, s, c) ds``.
    """
    if not (0.0 <= eps1 <= delta):
        raise DomainError("need 0 <= eps1 <= delta")
    r_out = rho * eps1 / delta
    if eps1 == 0.0:
        return r_out, y1, delta
    return r_out, y1 + rho * eps1 * corner_integral(y1, c, delta), delta


def transition_map_numeric(y1: float, eps1: float, c: float, rho: float = DEFAULTS.rho,
                           delta: float = DEFAULTS.delta, config=None) -> tuple[float, float, float]:
    """Corner passage by direct integration of the eta-divided K1 field."""
    from .integrate import IntegratorConfig, integrate

    cfg = config or IntegratorConfig(rel_tol=1e-13, abs_tol=1e-15)
    eta0 = -c * rho + f1(y1, eps1)
    traj = integrate(k1_rhs(c, divided=True), [rho, eta0, eps1], (0.0, math.log(delta / eps1)), cfg)
    r_out, eta_out, eps_out = traj.final
    return r_out, y1_coordinate(K1Point(r_out, eta_out, eps_out), c), eps_out
