"""Two-sided heteroclinic shooting for the minimal wave speed and wave profiles.

The strong unstable manifold of p- is followed forward in the original
coordinates; the stable manifold of p+ is followed backward in the inner
chart. Both are compared on the section ``theta2 = -Theta``
(``theta = 1 - eps * Theta``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .asymptotics import DEFAULT_ORDER, KAPPA_FACTOR, slow_flow, slow_manifold_eta
from .charts import k2_rhs, k2_saddle_eigenvalues, separatrix_hs
from .integrate import Event, IntegratorConfig, integrate
from .model import DomainError, Params, linearize_pminus

log = logging.getLogger(__name__)

SHOOT_INTEGRATOR = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14, h_init=1e-3)
SEGMENT_LABELS = ("slow", "fast", "inner")


class ShootingError(RuntimeError):
    pass


class CorridorEscapeError(ShootingError):
    """Backward stable-manifold orbit left the corridor 0 < eta < c + 1."""


class BracketError(ShootingError):
    pass


class NoConnectionError(ShootingError):
    """No heteroclinic connection inside [0, 1] for the requested speed."""


@dataclass(frozen=True)
class ShootConfig:
    Theta_match: float = 12.0
    delta0: float = 1e-4
    delta1: float = 1e-6
    c_bracket: tuple[float, float] | None = None
    root_tol: float = 1e-10
    sigma: float = 5.0
    unstable_mode: str = "integrate"
    integrator: IntegratorConfig = SHOOT_INTEGRATOR

    def __post_init__(self):
        if self.Theta_match < 8:
            raise ValueError("Theta_match must be >= 8")
        if not 0 < self.delta1 < 1e-2:
            raise ValueError("delta1 must be small and positive")
        if not 0 < self.delta0 < 1e-2:
            raise ValueError("delta0 must be small and positive")
        if self.c_bracket is not None and not self.c_bracket[0] < self.c_bracket[1]:
            raise ValueError("c_bracket must be increasing")
        if self.unstable_mode not in ("integrate", "graph"):
            raise ValueError("unstable_mode is 'integrate' or 'graph'")

    def section(self, eps: float) -> float:
        """Effective Theta; capped at 0.5/eps so the section stays at theta >= 1/2."""
        return self.Theta_match if eps == 0.0 else min(self.Theta_match, 0.5 / eps)

    def bracket(self, eps: float) -> tuple[float, float]:
        return self.c_bracket if self.c_bracket is not None else (1.0, 1.0 + 4.0 * eps)


@dataclass
class SpeedResult:
    cbar: float
    gap_at_root: float
    bracket_history: list[tuple[float, float]]
    eps: float
    iterations: int = 0
    monotone: bool = True
    theta_refinement: float | None = None


@dataclass(frozen=True)
class WaveProfile:
    z: np.ndarray
    theta: np.ndarray
    eta: np.ndarray
    c: float
    eps: float
    segments: tuple[str, ...]
    truncated: bool = False
    notes: tuple[str, ...] = ()

    def segment_set(self) -> set[str]:
        return set(self.segments)

    def mask(self, label: str) -> np.ndarray:
        return np.array([s == label for s in self.segments])


def zfk_rhs(c: float, eps: float):
    """Travelling-wave field for any real ``c``; the reaction is continued analytically."""
    log_pref = -2.0 * math.log(eps) - math.log(2.0)

    def rhs(t, y):
        th, eta = y[0], y[1]
        p = th * (1.0 - th)
        if p == 0.0:
            w = 0.0
        else:
            expo = log_pref - (1.0 - th) / eps
            if expo > 700.0:
                return np.array([np.nan, np.nan])
            w = math.copysign(math.exp(math.log(abs(p)) + expo), p) if expo > -745.0 else 0.0
        return np.array([eta, c * eta - w])

    return rhs


def _graph_eta(params: Params, Theta: float) -> float:
    return params.c * (1.0 - params.eps * Theta)


def unstable_trajectory(params: Params, config: ShootConfig, theta_end: float):
    lin = linearize_pminus(params)
    slope = lin.v_strong[1] / lin.v_strong[0]
    d0 = config.delta0
    stop = Event(lambda t, y: y[0] - theta_end, terminal=True)
    z_max = 50.0 * (math.log(1.0 / d0) + 10.0) / params.c
    traj = integrate(zfk_rhs(params.c, params.eps), [d0, slope * d0], (0.0, z_max),
                     config.integrator, [stop])
    if not traj.terminated:
        raise ShootingError("strong unstable orbit did not reach the matching section")
    return traj


def unstable_manifold(params: Params, config: ShootConfig | None = None, theta_stop: float = 1.0):
    """Strong unstable manifold of p- followed until theta = theta_stop or eta = 0."""
    cfg = config or ShootConfig()
    lin = linearize_pminus(params)
    d0 = cfg.delta0
    seed = [d0, lin.v_strong[1] / lin.v_strong[0] * d0]
    events = [Event(lambda t, y: y[0] - theta_stop, terminal=True), Event(lambda t, y: y[1], terminal=True)]
    z_max = 50.0 * (math.log(1.0 / d0) + 10.0) / params.c
    return integrate(zfk_rhs(params.c, params.eps), seed, (0.0, z_max), cfg.integrator, events)


def unstable_eta_at_match(params: Params, config: ShootConfig | None = None) -> float:
    """eta of the strong unstable manifold of p- on the section theta = 1 - eps Theta.

    In ``graph`` mode (and always at eps = 0) this is ``c (1 - eps Theta)``; in
    ``integrate`` mode the manifold is followed numerically from p-.
    """
    cfg = config or ShootConfig()
    if cfg.unstable_mode == "graph" or params.eps == 0.0:
        return _graph_eta(params, cfg.section(params.eps))
    traj = unstable_trajectory(params, cfg, 1.0 - params.eps * cfg.section(params.eps))
    return float(traj.final[1])


def unstable_graph_discrepancy(params: Params, config: ShootConfig | None = None) -> float:
    """Integrated minus graph value of the unstable side at the matching section."""
    cfg = replace(config or ShootConfig(), unstable_mode="integrate")
    if params.eps == 0.0:
        return 0.0
    return unstable_eta_at_match(params, cfg) - _graph_eta(params, cfg.section(params.eps))


def stable_trajectory(params: Params, config: ShootConfig):
    c, eps = params.c, params.eps
    _, lam_minus = k2_saddle_eigenvalues(c, eps)
    d1 = config.delta1
    seed = [-d1, -lam_minus * d1]
    Theta = config.section(eps)
    events = [
        Event(lambda t, y: y[0] + Theta, terminal=True),
        Event(lambda t, y: y[1], terminal=True),
        Event(lambda t, y: y[1] - (c + 1.0), terminal=True),
    ]
    z2_max = 10.0 * (math.log(1.0 / d1) + Theta) + 100.0
    traj = integrate(k2_rhs(c, eps), seed, (0.0, -z2_max), config.integrator, events)
    if not traj.terminated:
        raise ShootingError("stable orbit did not reach the matching section")
    index = traj.event_hits[-1][0]
    if index != 0:
        raise CorridorEscapeError(f"stable manifold left the corridor for c={c}, eps={eps}")
    return traj


def stable_eta_at_match(params: Params, config: ShootConfig | None = None) -> float:
    """eta of the stable manifold of p+ on theta2 = -Theta (backward in the inner chart)."""
    cfg = config or ShootConfig()
    return float(stable_trajectory(params, cfg).final[1])


def gap(c: float, eps: float, config: ShootConfig | None = None) -> float:
    """Unstable minus stable eta on the section; positive for weak connections."""
    cfg = config or ShootConfig()
    params = Params(c, eps)
    return unstable_eta_at_match(params, cfg) - stable_eta_at_match(params, cfg)


def _root(eps: float, cfg: ShootConfig, history: list) -> tuple[float, float, int, bool]:
    def g(c):
        value = gap(c, eps, cfg)
        history.append((c, value))
        return value

    lo, hi = cfg.bracket(eps)
    g_lo, g_hi = g(lo), g(hi)
    if g_lo > 0:
        lo = min(lo, 1.0 - eps)
        g_lo = g(lo)
    while g_hi < 0 and hi < cfg.sigma:
        lo, g_lo = hi, g_hi
        hi = min(cfg.sigma, 1.0 + 2.0 * (hi - 1.0))
        g_hi = g(hi)
    if not (g_lo <= 0 <= g_hi):
        raise BracketError(f"no sign change of the gap in [{lo}, {hi}] at eps={eps}")

    # monotonicity probe on a 5-point grid of the bracket
    grid = np.linspace(lo, hi, 5)
    vals = [g_lo] + [g(c) for c in grid[1:-1]] + [g_hi]
    monotone = bool(np.all(np.diff(vals) > 0))

    it = 0
    while True:
        it += 1
        if abs(g_lo) <= cfg.root_tol:
            return lo, g_lo, it, monotone
        if abs(g_hi) <= cfg.root_tol:
            return hi, g_hi, it, monotone
        width = hi - lo
        if width <= 4 * np.spacing(hi):
            c_best, g_best = (lo, g_lo) if abs(g_lo) < abs(g_hi) else (hi, g_hi)
            log.warning("root stagnated at eps=%s with |gap|=%.3e", eps, abs(g_best))
            return c_best, g_best, it, monotone
        if width > 1e-3:
            c_new = 0.5 * (lo + hi)
        else:
            c_new = hi - g_hi * (hi - lo) / (g_hi - g_lo)
            if not lo < c_new < hi:
                c_new = 0.5 * (lo + hi)
        g_new = g(c_new)
        if g_new < 0:
            lo, g_lo = c_new, g_new
        else:
            hi, g_hi = c_new, g_new
        if it > 200:
            raise ShootingError(f"root stagnation at eps={eps}")


def find_min_speed(eps: float, config: ShootConfig | None = None, refine: bool = True) -> SpeedResult:
    """Minimal wave speed: the root in c of the gap at fixed eps.

    With ``refine`` the root is recomputed with the section moved to
    ``Theta + 4`` and the shift is stored as ``theta_refinement``.
    """
    if not 0 < eps <= 0.1:
        raise DomainError("find_min_speed needs eps in (0, 0.1]")
    cfg = config or ShootConfig()
    history: list[tuple[float, float]] = []
    cbar, g_root, it, monotone = _root(eps, cfg, history)
    result = SpeedResult(cbar, g_root, history, eps, it, monotone)
    if refine:
        cfg2 = replace(cfg, Theta_match=cfg.Theta_match + 4.0,
                       c_bracket=(cbar - 1e-3 * eps, cbar + 1e-3 * eps))
        try:
            c2, _, _, _ = _root(eps, cfg2, [])
            result.theta_refinement = c2 - cbar
        except BracketError:
            c2, _, _, _ = _root(eps, replace(cfg2, c_bracket=None), [])
            result.theta_refinement = c2 - cbar
    return result


# -- profiles -----------------------------------------------------------------

def _slow_segment(theta_land: float, params: Params, theta_min: float = 1e-3, K: int = DEFAULT_ORDER):
    """Sample the reduced flow theta' = h(theta) from theta_min up to theta_land.

    ``z`` is relative to the landing point (non-positive) from trapezoidal
    quadrature of dz = dtheta / h(theta).
    """
    eps = params.eps
    n_uniform = int(math.ceil((theta_land - theta_min) / (eps / 40.0))) + 1
    uniform = np.linspace(theta_min, theta_land, max(n_uniform, 2))
    geometric = np.geomspace(theta_min, max(theta_land, theta_min * 1.0001), 400)
    grid = np.unique(np.concatenate([uniform, geometric]))
    grid = grid[(grid >= theta_min) & (grid <= theta_land)]
    inv_h = np.array([1.0 / slow_flow(t, params, K) for t in grid])
    dz = 0.5 * (inv_h[1:] + inv_h[:-1]) * np.diff(grid)
    z = -np.concatenate([np.cumsum(dz[::-1])[::-1], [0.0]])
    eta = 1.0 / inv_h
    return z, grid, eta


def build_profile(c: float, eps: float, config: ShootConfig | None = None,
                  z_span: tuple[float, float] | None = None, K: int = DEFAULT_ORDER,
                  force: bool = False) -> WaveProfile:
    """Assemble a wave profile (slow, fast and inner pieces) for speed ``c``."""
    cfg = config or ShootConfig()
    params = Params(c, eps)
    notes: list[str] = []
    g = gap(c, eps, cfg)
    if g < -cfg.root_tol and not force:
        raise NoConnectionError(f"gap({c}) = {g:.3e} < 0: no connection within [0, 1]")
    if c < 1.0 + 0.1 and g > 10 * cfg.root_tol:
        notes.append("weak connection with c close to the minimal speed: singular limit not characterised")

    # inner piece: p+ backwards to the section, then reversed so z increases
    inner = stable_trajectory(params, cfg)
    z_in = eps * inner.times[::-1]
    th_in = 1.0 + eps * inner.states[::-1, 0]
    eta_in = inner.states[::-1, 1]
    z_in = z_in - z_in[0]

    # fast piece: backwards from the matched state in the original coordinates
    theta_slow_max = 1.0 - KAPPA_FACTOR * eps
    landing_fac = 1.0 + 1e-3

    def landing(t, y):
        th = y[0]
        if th > theta_slow_max or th < 0.0:
            return 1.0
        h, _ = slow_manifold_eta(th, params, K)
        return y[1] - h * landing_fac

    events = [Event(landing, terminal=True), Event(lambda t, y: y[0] - cfg.delta0, terminal=True)]
    fast_cfg = replace(cfg.integrator, abs_tol=1e-300)
    # long enough to creep along the weak direction of p- when no landing is possible
    lam_weak = linearize_pminus(params).lambda_weak
    z_back = 200.0 / c + 100.0 + (min(12.0 / lam_weak, 1e7) if lam_weak > 0 else 1e7)
    fast = integrate(zfk_rhs(c, eps), [th_in[0], eta_in[0]], (0.0, -z_back), fast_cfg, events)
    z_f = fast.times[::-1]
    th_f = fast.states[::-1, 0]
    eta_f = fast.states[::-1, 1]
    landed = fast.terminated and fast.event_hits[-1][0] == 0
    if not fast.terminated:
        notes.append("fast segment stopped at the integration window before reaching p- or S_eps")

    pieces_z = [z_f[:-1], z_in]
    pieces_th = [th_f[:-1], th_in]
    pieces_eta = [eta_f[:-1], eta_in]
    labels = ["fast"] * (len(z_f) - 1) + ["inner"] * len(z_in)
    if landed and th_f[0] > 1e-3:
        z_s, th_s, eta_s = _slow_segment(th_f[0], params, 1e-3, K)
        z_s = z_s + z_f[0]
        pieces_z.insert(0, z_s[:-1])
        pieces_th.insert(0, th_s[:-1])
        pieces_eta.insert(0, eta_s[:-1])
        labels = ["slow"] * (len(z_s) - 1) + labels
    z = np.concatenate(pieces_z)
    theta = np.concatenate(pieces_th)
    eta = np.concatenate(pieces_eta)

    z_half = float(np.interp(0.5, theta, z))
    z = z - z_half
    truncated = False
    if z_span is not None:
        keep = (z >= z_span[0]) & (z <= z_span[1])
        truncated = not bool(np.all(keep))
        z, theta, eta = z[keep], theta[keep], eta[keep]
        labels = [lab for lab, k in zip(labels, keep) if k]
    return WaveProfile(z, theta, eta, c, eps, tuple(labels), truncated, tuple(notes))


def profile_residual(profile: WaveProfile, config: IntegratorConfig | None = None,
                     include_slow: bool = False) -> np.ndarray:
    """Per-interval defect ``|flow(z_i -> z_{i+1})(x_i) - x_{i+1}|`` of the travelling-wave ODE.

    Works for either sign of ``profile.c``; slow-segment intervals are skipped
    unless ``include_slow``. Returns an (n-1, 2) array, NaN where skipped.
    """
    cfg = config or IntegratorConfig()
    rhs = zfk_rhs(profile.c, profile.eps)
    n = len(profile.z)
    out = np.full((n - 1, 2), np.nan)
    for i in range(n - 1):
        if not include_slow and ("slow" in (profile.segments[i], profile.segments[i + 1])):
            continue
        z0, z1 = profile.z[i], profile.z[i + 1]
        if z0 == z1:
            continue
        x0 = np.array([profile.theta[i], profile.eta[i]])
        x1 = np.array([profile.theta[i + 1], profile.eta[i + 1]])
        traj = integrate(rhs, x0, (z0, z1), replace(cfg, h_init=min(cfg.h_init, abs(z1 - z0))))
        out[i] = np.abs(traj.final - x1)
    return out


# -- singular orbit ------------------------------------------------------------

def singular_orbit(c: float, n: int = 4000) -> np.ndarray:
    """Dense samples of the singular orbit Gamma(c) in the (theta, eta) plane, c >= 1."""
    if c < 1.0:
        raise DomainError("singular orbits exist for c >= 1")
    knee = 1.0 - 1.0 / c
    pts = []
    if knee > 0:
        th0 = np.linspace(0.0, knee, n)
        pts.append(np.column_stack([th0, np.zeros_like(th0)]))
    th1 = np.linspace(knee, 1.0, n)
    pts.append(np.column_stack([th1, c * th1 + 1.0 - c]))
    e2 = np.linspace(0.0, 1.0, n)
    pts.append(np.column_stack([np.ones_like(e2), e2]))
    return np.vstack(pts)


def _point_to_polyline(points: np.ndarray, poly: np.ndarray, chunk: int = 512) -> np.ndarray:
    a = poly[:-1]
    d = poly[1:] - a
    dd = np.einsum("ij,ij->i", d, d)
    dd = np.where(dd == 0.0, 1.0, dd)
    out = np.empty(len(points))
    for s in range(0, len(points), chunk):
        p = points[s:s + chunk, None, :]
        t = np.clip(np.einsum("pij,ij->pi", p - a[None], d) / dd[None], 0.0, 1.0)
        proj = a[None] + t[..., None] * d[None]
        out[s:s + chunk] = np.sqrt(np.min(np.sum((p - proj) ** 2, axis=-1), axis=1))
    return out


def hausdorff_to_singular(profile: WaveProfile, c: float | None = None) -> float:
    """Hausdorff distance between the (theta, eta) trace (as a polyline) and Gamma(c)."""
    c = profile.c if c is None else c
    trace = np.column_stack([profile.theta, profile.eta])
    gamma = singular_orbit(c)
    knee = 1.0 - 1.0 / c
    corners = [np.array([0.0, 0.0]), np.array([knee, 0.0]), np.array([1.0, 1.0]), np.array([1.0, 0.0])]
    gamma_poly = np.vstack([corners[0], corners[1], corners[2], corners[3]]) if knee > 0 else \
        np.vstack([corners[0], corners[2], corners[3]])
    d1 = _point_to_polyline(trace, gamma_poly).max()
    d2 = _point_to_polyline(gamma, trace).max()
    return float(max(d1, d2))


def seed_tangency(c: float, eps: float) -> float:
    """Angle between the perturbed stable eigendirection at p+ and the eps = 0 one."""
    _, lam = k2_saddle_eigenvalues(c, eps)
    v = np.array([1.0, lam]) / math.hypot(1.0, lam)
    v0 = np.array([1.0, -1.0 / math.sqrt(2.0)]) / math.hypot(1.0, 1.0 / math.sqrt(2.0))
    return float(math.acos(min(1.0, abs(float(v @ v0)))))


def separatrix_gap_at_zero(c: float, Theta: float) -> float:
    """Gap on the section at eps = 0 from the closed-form separatrix."""
    return c - separatrix_hs(-Theta)
