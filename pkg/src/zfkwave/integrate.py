"""Adaptive Dormand-Prince 5(4) integration with event location.

Every dynamic computation in the package goes through :func:`integrate`.
Stiffness is avoided by the choice of coordinates upstream, so only an
explicit embedded pair is provided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

Field = Callable[[float, np.ndarray], np.ndarray]


class IntegrationError(RuntimeError):
    pass


class StepUnderflowError(IntegrationError):
    pass


class MaxStepsError(IntegrationError):
    pass


class NonFiniteStateError(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    h_init: float = 1e-3
    h_min: float = 1e-14
    h_max: float = math.inf
    max_steps: int = 200_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not (0 < self.h_min <= self.h_init <= self.h_max):
            raise ValueError("need 0 < h_min <= h_init <= h_max")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class Event:
    """Scalar event function ``g(t, y)``; a zero crossing is recorded.

    ``direction`` > 0 only reports increasing crossings, < 0 decreasing ones.
    """

    func: Callable[[float, np.ndarray], float]
    terminal: bool = False
    direction: int = 0

    def __call__(self, t, y):
        return self.func(t, y)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    event_hits: list = field(default_factory=list)
    terminated: bool = False

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def hits(self, index: int) -> list:
        return [h for h in self.event_hits if h[0] == index]


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between fifth- and fourth-order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
_A_ROWS = [np.array(row) for row in _A]

_EVENT_TTOL = 1e-12


def _dp_step(f: Field, t: float, y: np.ndarray, h: float, k0: np.ndarray):
    """One Dormand-Prince step; returns (y_new, k_last, error_vector)."""
    k = np.empty((7, y.size))
    k[0] = k0
    for i in range(1, 7):
        yi = y + h * (_A_ROWS[i] @ k[:i])
        k[i] = f(t + _C[i] * h, yi)
    y_new = y + h * (_B @ k)
    # the seventh stage is evaluated at y_new (first-same-as-last)
    err = h * (_E @ k)
    return y_new, k[6], err


def _hermite(t0, y0, f0, t1, y1, f1, t):
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def _as_events(events) -> list[Event]:
    out = []
    for ev in events or ():
        if isinstance(ev, Event):
            out.append(ev)
        else:
            out.append(Event(ev, getattr(ev, "terminal", False), getattr(ev, "direction", 0)))
    return out


def _crossed(g0: float, g1: float, direction: int) -> bool:
    if g0 == 0.0:
        return False
    if direction > 0:
        return g0 < 0.0 <= g1
    if direction < 0:
        return g0 > 0.0 >= g1
    return (g0 < 0.0 <= g1) or (g0 > 0.0 >= g1)


def _locate(f, ev, t0, y0, f0, t1, y1, f1, g0, g1):
    """Locate an event inside an accepted step.

    Bisection on the cubic Hermite interpolant gives a narrow bracket; the
    root is then polished with real sub-steps taken from the step start.
    """
    a, b, ga = t0, t1, g0
    ttol = max(_EVENT_TTOL, 8 * np.spacing(max(abs(t0), abs(t1))))
    for _ in range(200):
        if abs(b - a) <= ttol:
            break
        m = 0.5 * (a + b)
        gm = ev(m, _hermite(t0, y0, f0, t1, y1, f1, m))
        if (gm > 0) == (ga > 0) and gm != 0.0:
            a, ga = m, gm
        else:
            b = m

    def phi(t):
        if t == t0:
            return g0
        if t == t1:
            return g1
        y, _, _ = _dp_step(f, t0, y0, t - t0, f0)
        return ev(t, y)

    # widen the interpolant bracket until it brackets the real-step function
    width = max(abs(b - a), ttol)
    lo, hi = (a, b) if t1 > t0 else (b, a)
    t_lo_lim, t_hi_lim = min(t0, t1), max(t0, t1)
    for _ in range(60):
        lo_c, hi_c = max(lo, t_lo_lim), min(hi, t_hi_lim)
        p_lo, p_hi = phi(lo_c), phi(hi_c)
        if p_lo == 0.0:
            t_hit = lo_c
            break
        if p_hi == 0.0:
            t_hit = hi_c
            break
        if (p_lo > 0) != (p_hi > 0):
            t_hit = brentq(phi, lo_c, hi_c, xtol=ttol, rtol=4 * np.finfo(float).eps, maxiter=200)
            break
        width *= 4.0
        lo, hi = lo - width, hi + width
        if lo_c == t_lo_lim and hi_c == t_hi_lim:
            raise IntegrationError("event sign change lost during localisation")
    else:  # pragma: no cover
        raise IntegrationError("event localisation failed")
    if t_hit == t1:
        return t1, y1.copy()
    y_hit, _, _ = _dp_step(f, t0, y0, t_hit - t0, f0)
    return t_hit, y_hit


def integrate(
    field: Field,
    y0: Sequence[float],
    span: tuple[float, float],
    config: IntegratorConfig | None = None,
    events: Sequence[Event | Callable] | None = None,
) -> Trajectory:
    """Integrate ``dy/dt = field(t, y)`` over ``span`` (backward if t1 < t0).

    Raises :class:`StepUnderflowError` when the controller asks for a step below
    ``h_min``, :class:`MaxStepsError` past ``max_steps`` accepted steps and
    :class:`NonFiniteStateError` when the field is not finite at ``y0``.
    """
    cfg = config or IntegratorConfig()
    t0, t1 = float(span[0]), float(span[1])
    if t0 == t1:
        raise ValueError("degenerate integration span")
    direction = 1.0 if t1 > t0 else -1.0
    y = np.array(y0, dtype=float)
    fy = np.asarray(field(t0, y), dtype=float)
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(fy))):
        raise NonFiniteStateError(f"field not finite at initial state {y}")
    evs = _as_events(events)
    g_prev = [ev(t0, y) for ev in evs]

    times = [t0]
    states = [y.copy()]
    hits: list = []
    t = t0
    h = min(cfg.h_init, abs(t1 - t0))
    steps = 0
    while True:
        if steps >= cfg.max_steps:
            raise MaxStepsError(f"max_steps={cfg.max_steps} exceeded at t={t}")
        h = min(h, abs(t1 - t))
        y_new, f_new, err = _dp_step(field, t, y, direction * h, fy)
        finite = np.all(np.isfinite(y_new)) and np.all(np.isfinite(f_new))
        if finite:
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
        else:
            err_norm = math.inf
        if err_norm > 1.0:
            factor = 0.2 if not math.isfinite(err_norm) else max(0.2, 0.9 * err_norm ** -0.2)
            h *= factor
            if h < cfg.h_min:
                if not finite:
                    raise NonFiniteStateError(f"non-finite state near t={t}")
                raise StepUnderflowError(f"step size {h:.3e} below h_min at t={t}, y={y}")
            continue
        t_new = t + direction * h
        # snap to the end (also catches a rounding overshoot past t1)
        if direction * (t1 - t_new) <= 4 * np.spacing(max(abs(t1), abs(t))):
            t_new = t1
        steps += 1

        stop = False
        pending = []
        for i, ev in enumerate(evs):
            g_new = ev(t_new, y_new)
            if _crossed(g_prev[i], g_new, ev.direction):
                t_hit, y_hit = _locate(field, ev, t, y, fy, t_new, y_new, f_new, g_prev[i], g_new)
                pending.append((i, t_hit, y_hit, ev.terminal))
            g_prev[i] = g_new
        if pending:
            pending.sort(key=lambda p: direction * p[1])
            for i, t_hit, y_hit, terminal in pending:
                hits.append((i, t_hit, y_hit))
                if terminal:
                    times.append(t_hit)
                    states.append(y_hit)
                    stop = True
                    break
        if stop:
            return Trajectory(np.array(times), np.array(states), hits, terminated=True)

        t, y, fy = t_new, y_new, f_new
        times.append(t)
        states.append(y.copy())
        if t == t1:
            return Trajectory(np.array(times), np.array(states), hits, terminated=False)
        grow = 5.0 if err_norm == 0.0 else min(5.0, 0.9 * err_norm ** -0.2)
        h = min(h * grow, cfg.h_max)
