"""Method-of-lines check that a computed wave translates at its speed.

The PDE ``theta_t = theta_xx + omega(theta)`` is discretised with central
differences on ``[-L, L]`` and advanced with classical RK4. In the frame
``z = x + c t`` the wave moves towards ``-x``, so tracked positions decrease.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .csvio import write_csv
from .shooting import WaveProfile

CLIP_TOL = 1e-12
BLOWUP_TOL = 1e-6
EDGE_CELLS = 5


class PdeError(RuntimeError):
    pass


class PdeStabilityError(PdeError):
    pass


@dataclass(frozen=True)
class PdeConfig:
    L: float = 10.0
    N: int = 1000
    dt: float | None = None
    T: float = 4.0
    bc: str = "fixed"
    x0: float = 4.0
    n_out: int = 200

    def __post_init__(self):
        if self.N < 400:
            raise ValueError("N must be at least 400")
        if self.bc not in ("fixed", "zero-flux"):
            raise ValueError("bc is 'fixed' or 'zero-flux'")
        if self.dt is not None and self.dt > self.dt_max:
            raise ValueError(f"dt={self.dt} exceeds the stability bound {self.dt_max}")
        if not (self.T > 0 and self.L > 0 and self.n_out >= 4):
            raise ValueError("need T > 0, L > 0 and n_out >= 4")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def dt_max(self) -> float:
        return 0.4 * self.dx ** 2

    @property
    def step(self) -> float:
        return self.dt_max if self.dt is None else self.dt

    def grid(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.N + 1)


@dataclass
class FrontTrack:
    times: np.ndarray
    positions: np.ndarray
    speed_fit: float
    fit_residual: float
    clip_count: int = 0
    truncated: bool = False
    x: np.ndarray | None = None
    final: np.ndarray | None = None
    snapshots: list = field(default_factory=list)


@numba.njit(cache=True)
def _omega(t, log_pref, inv_eps):
    if t <= 0.0 or t >= 1.0:
        return 0.0
    return math.exp(math.log(t * (1.0 - t)) + log_pref - (1.0 - t) * inv_eps)


@numba.njit(cache=True)
def _rhs(u, out, inv_dx2, log_pref, inv_eps, zero_flux):
    n = u.size
    for i in range(1, n - 1):
        out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_dx2 + _omega(u[i], log_pref, inv_eps)
    if zero_flux:
        out[0] = 2.0 * (u[1] - u[0]) * inv_dx2 + _omega(u[0], log_pref, inv_eps)
        out[n - 1] = 2.0 * (u[n - 2] - u[n - 1]) * inv_dx2 + _omega(u[n - 1], log_pref, inv_eps)
    else:
        out[0] = 0.0
        out[n - 1] = 0.0


@numba.njit(cache=True)
def _advance(u, dx, dt, nsteps, eps, zero_flux, clip_tol, blowup_tol):
    """RK4 steps in place; returns (clip events, 0) or (clips, 1) on blow-up."""
    n = u.size
    inv_dx2 = 1.0 / (dx * dx)
    log_pref = -2.0 * math.log(eps) - math.log(2.0)
    inv_eps = 1.0 / eps
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    clips = 0
    for _ in range(nsteps):
        _rhs(u, k1, inv_dx2, log_pref, inv_eps, zero_flux)
        for i in range(n):
            tmp[i] = u[i] + 0.5 * dt * k1[i]
        _rhs(tmp, k2, inv_dx2, log_pref, inv_eps, zero_flux)
        for i in range(n):
            tmp[i] = u[i] + 0.5 * dt * k2[i]
        _rhs(tmp, k3, inv_dx2, log_pref, inv_eps, zero_flux)
        for i in range(n):
            tmp[i] = u[i] + dt * k3[i]
        _rhs(tmp, k4, inv_dx2, log_pref, inv_eps, zero_flux)
        for i in range(n):
            v = u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if v > 1.0 + blowup_tol or v < -blowup_tol or v != v:
                return clips, 1
            if v > 1.0 + clip_tol:
                v = 1.0
                clips += 1
            elif v < -clip_tol:
                v = 0.0
                clips += 1
            u[i] = v
    return clips, 0


def front_position(x: np.ndarray, u: np.ndarray, level: float = 0.5) -> float:
    """First crossing of ``level`` from below, by linear interpolation between nodes."""
    above = np.nonzero((u[:-1] < level) & (u[1:] >= level))[0]
    if above.size == 0:
        return math.nan
    i = above[0]
    return float(x[i] + (x[i + 1] - x[i]) * (level - u[i]) / (u[i + 1] - u[i]))


def profile_initial(profile: WaveProfile, x: np.ndarray, x0: float) -> np.ndarray:
    """Sample a wave profile on the grid with its half-point at ``x0``.

    Below the first sample the exponential tail ``theta0 exp(lambda (z - z0))``
    with ``lambda = eta0 / theta0`` is used; above the last sample theta = 1.
    """
    z = x - x0
    u = np.interp(z, profile.z, profile.theta)
    th0, z0 = profile.theta[0], profile.z[0]
    if th0 > 0:
        lam = profile.eta[0] / th0
        left = z < z0
        u[left] = th0 * np.exp(lam * (z[left] - z0))
    u[z > profile.z[-1]] = 1.0
    return np.clip(u, 0.0, 1.0)


def step_initial(x: np.ndarray, x0: float, width: float | None = None) -> np.ndarray:
    """Step datum (theta = 1 right of ``x0``); with ``width``, a compact hot block."""
    if width is None:
        return (x >= x0).astype(float)
    return ((x >= x0) & (x <= x0 + width)).astype(float)


def _fit(times: np.ndarray, positions: np.ndarray) -> tuple[float, float]:
    ok = np.isfinite(positions)
    t, p = times[ok], positions[ok]
    if t.size < 4:
        return math.nan, math.nan
    h = t.size // 2
    coef = np.polyfit(t[h:], p[h:], 1)
    resid = p[h:] - np.polyval(coef, t[h:])
    return abs(float(coef[0])), float(np.sqrt(np.mean(resid ** 2)))


def pde_run(config: PdeConfig, eps: float, initial, snapshot_every: int = 0) -> FrontTrack:
    """Evolve the PDE from ``initial`` (a WaveProfile, an array on the grid, or ``"step"``)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    x = config.grid()
    if isinstance(initial, WaveProfile):
        u = profile_initial(initial, x, config.x0)
    elif isinstance(initial, str) and initial == "step":
        u = step_initial(x, config.x0)
    else:
        u = np.array(initial, dtype=float)
        if u.shape != x.shape:
            raise ValueError("initial array must match the grid")
    if np.any(u < 0) or np.any(u > 1):
        raise ValueError("initial data must lie in [0, 1]")
    u = u.copy()

    dt = config.step
    nsteps = int(math.ceil(config.T / dt))
    dt = config.T / nsteps
    n_out = min(config.n_out, nsteps)
    blocks = np.diff(np.linspace(0, nsteps, n_out + 1).round().astype(int))
    zero_flux = config.bc == "zero-flux"
    edge = EDGE_CELLS * config.dx

    times, positions, snaps = [], [], []
    if snapshot_every:
        snaps.append((0.0, u.copy()))
    clips, truncated, done = 0, False, 0
    for k, nb in enumerate(blocks):
        c_k, status = _advance(u, config.dx, dt, int(nb), eps, zero_flux, CLIP_TOL, BLOWUP_TOL)
        clips += int(c_k)
        if status:
            raise PdeStabilityError("theta left [0, 1] by more than the blow-up tolerance")
        done += int(nb)
        t = done * dt
        pos = front_position(x, u)
        times.append(t)
        positions.append(pos)
        if snapshot_every and (k + 1) % snapshot_every == 0:
            snaps.append((t, u.copy()))
        if math.isfinite(pos) and (pos < -config.L + edge or pos > config.L - edge):
            truncated = True
            break
    times_a, pos_a = np.array(times), np.array(positions)
    speed, resid = _fit(times_a, pos_a)
    return FrontTrack(times_a, pos_a, speed, resid, clips, truncated, x, u, snaps)


def write_snapshots(track: FrontTrack, out_dir: Path | str, prefix: str = "snapshot") -> list[Path]:
    out_dir = Path(out_dir)
    width = max(4, len(str(len(track.snapshots))))
    files = []
    for i, (_, u) in enumerate(track.snapshots):
        files.append(write_csv(out_dir / f"{prefix}_{i:0{width}d}.csv", ("x", "theta"), zip(track.x, u)))
    return files


def write_track(track: FrontTrack, path: Path | str) -> Path:
    return write_csv(path, ("t", "position"), zip(track.times, track.positions))
