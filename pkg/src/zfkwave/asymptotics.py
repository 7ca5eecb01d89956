"""Slow-manifold series, minimal-speed expansion and first-order bifurcation function.

The flat slow manifold is the graph

    eta = h(theta, eps) = sum_k 2^-k F_k(theta, eps) eps^(1-3k) exp(-k (1-theta)/eps)

with ``F_1 = theta (1 - theta) / c`` and
``c F_k = sum_{j<k} (eps dF_j/dtheta + j F_j) F_{k-j}``. Each ``F_k`` is stored
as an integer polynomial ``P_k`` with ``F_k = P_k / c^(2k-1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from scipy.integrate import quad
from scipy.special import gammainc

from .charts import corner_integral, f1, separatrix_hs
from .model import DomainError, Params
from .poly import BivarPoly

DEFAULT_ORDER = 3
KAPPA_FACTOR = 10.0


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class SlowSeries:
    c: float
    terms: tuple[BivarPoly, ...]

    @property
    def K(self) -> int:
        return len(self.terms)

    def c_power(self, k: int) -> int:
        return 2 * k - 1

    def F(self, k: int, theta: float, eps: float) -> float:
        return self.terms[k - 1](theta, eps) / self.c ** self.c_power(k)

    def dF(self, k: int, theta: float, eps: float) -> float:
        return self.terms[k - 1].d_theta()(theta, eps) / self.c ** self.c_power(k)

    def recursion_residual(self, k: int) -> BivarPoly:
        """``c F_k - sum (eps dF_j + j F_j) F_{k-j}`` scaled by ``c^(2k-2)``; zero when exact."""
        if k == 1:
            return BivarPoly()
        rhs = BivarPoly()
        for j in range(1, k):
            Pj = self.terms[j - 1]
            rhs = rhs + (BivarPoly.eps() * Pj.d_theta() + Pj * j) * self.terms[k - j - 1]
        return self.terms[k - 1] - rhs

    def describe(self, k: int) -> str:
        """Human-readable ``F_k`` with the ``theta (1 - theta)`` factor pulled out."""
        P = self.terms[k - 1]
        Q = P.divide_theta_one_minus_theta()
        denom = self.c ** self.c_power(k)
        denom_txt = str(int(denom)) if float(denom).is_integer() else repr(float(denom))
        body = "θ(1-θ)" if Q == BivarPoly.const(1) else f"θ(1-θ)[{Q.format()}]"
        return body if denom == 1 else f"{body}/{denom_txt}"


@lru_cache(maxsize=64)
def _series_polys(K: int) -> tuple[BivarPoly, ...]:
    th = BivarPoly.theta()
    P = [th * (BivarPoly.const(1) - th)]
    for k in range(2, K + 1):
        acc = BivarPoly()
        for j in range(1, k):
            Pj = P[j - 1]
            acc = acc + (BivarPoly.eps() * Pj.d_theta() + Pj * j) * P[k - j - 1]
        P.append(acc)
    return tuple(P)


def build_series(c: float, K: int = DEFAULT_ORDER) -> SlowSeries:
    if not c > 0:
        raise DomainError("series needs c > 0")
    if K < 1:
        raise DomainError("series order K must be >= 1")
    return SlowSeries(c, _series_polys(K))


def _check_slow_domain(theta: float, eps: float, kappa_min: float | None):
    if not eps > 0:
        raise DomainError("slow manifold needs eps > 0")
    kappa = KAPPA_FACTOR * eps if kappa_min is None else kappa_min
    if theta < 0.0 or theta > 1.0 - kappa:
        raise DomainError(f"theta={theta} outside the series domain [0, {1.0 - kappa}]")


def series_terms(theta: float, eps: float, series: SlowSeries, derivative: bool = False) -> list[float]:
    """Individual series terms (or their theta-derivatives), each built in log space."""
    out = []
    for k in range(1, series.K + 1):
        log_scale = -k * math.log(2.0) + (1 - 3 * k) * math.log(eps) - k * (1.0 - theta) / eps
        F = series.F(k, theta, eps)
        amp = (series.dF(k, theta, eps) + k / eps * F) if derivative else F
        if amp == 0.0:
            out.append(0.0)
            continue
        logv = math.log(abs(amp)) + log_scale
        out.append(math.copysign(math.exp(logv), amp) if logv > -745.0 else 0.0)
    return out


def slow_manifold_eta(theta: float, params: Params, K: int = DEFAULT_ORDER,
                      kappa_min: float | None = None) -> tuple[float, float]:
    """Truncated slow-manifold graph ``h_K(theta)`` and the magnitude of its last term."""
    _check_slow_domain(theta, params.eps, kappa_min)
    terms = series_terms(theta, params.eps, build_series(params.c, K))
    return math.fsum(terms), abs(terms[-1])


def slow_manifold_slope(theta: float, params: Params, K: int = DEFAULT_ORDER) -> float:
    _check_slow_domain(theta, params.eps, None)
    return math.fsum(series_terms(theta, params.eps, build_series(params.c, K), derivative=True))


def slow_flow(theta: float, params: Params, K: int = DEFAULT_ORDER) -> float:
    """dtheta/dz on the slow manifold; equals the graph value since theta' = eta."""
    return slow_manifold_eta(theta, params, K)[0]


@lru_cache(maxsize=32)
def hs_tail_integral(tolerance: float = 1e-12) -> float:
    """``int_{-inf}^0 (1 - h^s(x)) dx``.

    Truncated at ``-L`` with ``(L + 2) exp(-L) < tolerance / 2``, which bounds the
    discarded tail since ``1 - sqrt(1 - a) <= a``.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    L = 1.0
    while (L + 2.0) * math.exp(-L) >= tolerance / 2:
        L *= 1.25
    val, err = quad(lambda x: 1.0 - separatrix_hs(x), -L, 0.0, epsabs=tolerance / 4, epsrel=0.0, limit=400)
    if not err < tolerance / 2:
        raise QuadratureError(f"tail integral did not converge (error estimate {err})")
    return val


def cbar_linear(eps: float) -> float:
    """Linear approximation ``1 + (I - 1) eps`` of the minimal wave speed."""
    if not eps >= 0:
        raise DomainError("eps must be non-negative")
    return 1.0 + (hs_tail_integral() - 1.0) * eps


def _flat_integral_tail(U: float) -> float:
    # int_U^inf u^2 e^-u / 2 du
    return 0.5 * (U * U + 2 * U + 2) * math.exp(-U)


def b_eps_derivative(delta: float = 0.5, tolerance: float = 1e-12) -> float:
    """eps-derivative of the bifurcation function at (c, eps) = (1, 0).

    Evaluates ``1 - f1(1, d)/d - (1/2) int_0^d s^-4 e^{-1/s} / f1(1, s) ds
    + int_d^inf s^-2 f1(1, s) ds``; the value does not depend on ``d``.
    """
    if not 0 < delta <= 1:
        raise DomainError("delta must lie in (0, 1]")
    f_delta = f1(1.0, delta)
    # u = 1/s turns the flat corner integral into a decaying tail on [1/delta, inf)
    U = 1.0 / delta
    U_max = U + 1.0
    while _flat_integral_tail(U_max) / f_delta >= tolerance / 4:
        U_max *= 1.25
    corner, e1 = quad(lambda u: 0.5 * u * u * math.exp(-u) / f1(1.0, 1.0 / u), U, U_max,
                      epsabs=tolerance / 4, epsrel=0.0, limit=400)
    # int_delta^inf s^-2 f1(1, s) ds = int_0^{1/delta} h^s(-u) du exactly
    outer, e2 = quad(lambda u: separatrix_hs(-u), 0.0, U, epsabs=tolerance / 4, epsrel=0.0, limit=400)
    if not (e1 < tolerance and e2 < tolerance):
        raise QuadratureError("b_eps_derivative quadrature did not converge")
    return 1.0 - f_delta / delta - corner + outer


def bifurcation_residual_order1(c: float, eps: float, delta: float = 0.5) -> float:
    """First-order bifurcation function ``B(Y_u(c, eps), c, eps)``; trusted to O(eps^2)."""
    X = c + eps * corner_integral(c, c, delta)
    U = 1.0 / delta
    # int_delta^inf s^-2 f1(1, s) ds and int_delta^inf s^-4 e^{-1/s} / 2 ds, via u = 1/s
    outer, err = quad(lambda u: separatrix_hs(-u), 0.0, U, epsabs=1e-13, epsrel=1e-13, limit=400)
    if not err < 1e-10:
        raise QuadratureError("outer integral did not converge")
    flat_part = float(gammainc(3.0, U))
    bracket = c * f1(X, delta) / delta - (c * outer + flat_part)
    return 0.5 * (X * X - 1.0) - eps * bracket
