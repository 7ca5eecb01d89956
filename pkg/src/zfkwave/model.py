"""Phase-plane form of the ZFK travelling-wave problem.

The travelling-wave ODE ``theta'' = c theta' - omega(theta, eps)`` is written as
the first-order system in ``(theta, eta)`` with ``eta = dtheta/dz``. All
exponentials of ``1/eps`` are assembled in log space before a single ``exp``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .shooting import WaveProfile

#: default admissible overshoot above theta = 1, in units of eps
THETA_MAX = 50.0


class DomainError(ValueError):
    """Argument outside the domain where an operation is defined."""


class SingularLimitError(DomainError):
    """Evaluation on the switching line theta = 1 at eps = 0."""


class NodeConditionError(DomainError):
    """p- is not a proper unstable node for the requested parameters."""


@dataclass(frozen=True)
class Params:
    c: float
    eps: float

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError(f"wave speed must be positive, got c={self.c}")
        if not self.eps >= 0:
            raise DomainError(f"eps must be non-negative, got eps={self.eps}")


@dataclass(frozen=True)
class PhasePoint:
    theta: float
    eta: float


@dataclass(frozen=True)
class Linearisation:
    lambda_strong: float
    lambda_weak: float
    v_strong: tuple[float, float]
    v_weak: tuple[float, float]


def log_reaction_omega(theta: float, eps: float) -> float:
    """Natural log of the reaction rate; ``-inf`` where the rate vanishes."""
    if theta <= 0.0 or theta == 1.0:
        return -math.inf
    prefactor = theta * abs(1.0 - theta)
    return math.log(prefactor) - 2.0 * math.log(eps) - math.log(2.0) - (1.0 - theta) / eps


def reaction_omega(theta: float, eps: float, theta_max: float = THETA_MAX) -> float:
    """Reaction rate ``theta (1 - theta) exp(-(1 - theta)/eps) / (2 eps^2)``.

    ``theta`` may overshoot 1 by at most ``eps * theta_max``; the rate is then
    negative. Values with exponent below the double range underflow to 0.
    """
    if not eps > 0:
        raise DomainError(f"reaction rate needs eps > 0, got {eps}")
    if theta < 0.0 or theta > 1.0 + eps * theta_max or math.isnan(theta):
        raise DomainError(f"theta={theta} outside [0, 1 + {theta_max} eps]")
    if theta == 0.0 or theta == 1.0:
        return 0.0
    logw = log_reaction_omega(theta, eps)
    value = math.exp(logw) if logw > -745.0 else 0.0
    return value if theta < 1.0 else -value


def reaction_omega_array(theta: np.ndarray, eps: float) -> np.ndarray:
    """Vectorised reaction rate for ``theta`` in [0, 1]; no domain guard."""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros_like(theta)
    mask = (theta > 0.0) & (theta < 1.0)
    t = theta[mask]
    out[mask] = np.exp(np.log(t * (1.0 - t)) - 2.0 * np.log(eps) - np.log(2.0) - (1.0 - t) / eps)
    return out


def vector_field(p: PhasePoint, params: Params) -> tuple[float, float]:
    if not params.eps > 0:
        raise DomainError("vector_field needs eps > 0; use normalized_vector_field at eps = 0")
    w = reaction_omega(p.theta, params.eps)
    return p.eta, params.c * p.eta - w


def _normalisation_log(theta: float, eps: float) -> float:
    # log of eps^-2 (1 + exp((theta - 1)/eps) / 2), computed without overflow
    a = (theta - 1.0) / eps - math.log(2.0)
    log1p_term = a + math.log1p(math.exp(-a)) if a > 0 else math.log1p(math.exp(a))
    return -2.0 * math.log(eps) + log1p_term


def normalized_vector_field(p: PhasePoint, params: Params) -> tuple[float, float]:
    """Vector field divided by ``eps^-2 (1 + exp((theta-1)/eps)/2)``.

    Same orbits as :func:`vector_field` for eps > 0; at eps = 0 it returns the
    piecewise-smooth limit, ``(0, theta (theta - 1))`` above the switching line
    and ``(0, 0)`` below it.
    """
    theta, eta, c, eps = p.theta, p.eta, params.c, params.eps
    if eps == 0.0:
        if theta == 1.0:
            raise SingularLimitError("normalised field is discontinuous at theta = 1 when eps = 0")
        if theta > 1.0:
            return 0.0, theta * (theta - 1.0)
        return 0.0, 0.0
    log_n = _normalisation_log(theta, eps)
    scale = math.exp(-log_n)
    # reaction / normalisation assembled in log space so theta > 1 stays finite
    if theta <= 0.0 or theta == 1.0:
        w_scaled = 0.0
    else:
        log_w = math.log(theta * abs(1.0 - theta)) - 2.0 * math.log(eps) - math.log(2.0) - (1.0 - theta) / eps
        w_scaled = math.exp(log_w - log_n)
        if theta > 1.0:
            w_scaled = -w_scaled
    return eta * scale, c * eta * scale - w_scaled


def jacobian_pminus(params: Params) -> np.ndarray:
    eps = params.eps
    # d omega / d theta at theta = 0
    domega = math.exp(-math.log(2.0) - 2.0 * math.log(eps) - 1.0 / eps)
    return np.array([[0.0, 1.0], [-domega, params.c]])


def linearize_pminus(params: Params) -> Linearisation:
    """Eigenpairs at p- = (0, 0) from the companion-form Jacobian.

    Eigenvectors are ``(1, lambda)``, normalised to unit length.
    """
    if not params.eps > 0:
        raise DomainError("linearisation at p- needs eps > 0")
    c, eps = params.c, params.eps
    # determinant of the Jacobian: exp(-1/eps) / (2 eps^2)
    log_det = -math.log(2.0) - 2.0 * math.log(eps) - 1.0 / eps
    det = math.exp(log_det) if log_det > -745.0 else 0.0
    if not log_det < 2.0 * math.log(c) - math.log(4.0):
        raise NodeConditionError(f"p- is not a proper node for c={c}, eps={eps}")
    # stable root formulae: the large root by the quadratic formula, the small one from the product
    disc = math.sqrt(c * c - 4.0 * det)
    lam_s = 0.5 * (c + disc)
    lam_w = det / lam_s
    v_s = np.array([1.0, lam_s]) / math.hypot(1.0, lam_s)
    v_w = np.array([1.0, lam_w]) / math.hypot(1.0, lam_w)
    return Linearisation(lam_s, lam_w, (float(v_s[0]), float(v_s[1])), (float(v_w[0]), float(v_w[1])))


def apply_symmetry(profile: "WaveProfile") -> "WaveProfile":
    """Map a profile through ``(eta, z, c) -> (-eta, -z, -c)``.

    Samples are reversed so that ``z`` stays increasing; applying the map
    twice returns the original arrays exactly.
    """
    return replace(
        profile,
        z=-profile.z[::-1],
        theta=profile.theta[::-1].copy(),
        eta=-profile.eta[::-1],
        c=-profile.c,
        segments=tuple(reversed(profile.segments)),
    )
