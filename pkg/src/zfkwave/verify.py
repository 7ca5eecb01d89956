"""Acceptance checks with measured values, shared by the ``verify`` command and the tests."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import asymptotics, charts, shooting
from .integrate import Event, IntegratorConfig, integrate
from .model import apply_symmetry, reaction_omega
from .pde import PdeConfig, pde_run
from .poly import BivarPoly

SLOPE = 0.34405


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    measured: str
    seconds: float

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.number:2d} {self.name}: {self.measured} ({self.seconds:.2f} s)"


class Context:
    """Memoises minimal speeds and profiles so criteria can share them."""

    def __init__(self):
        self._speeds: dict[float, float] = {}

    def cbar(self, eps: float) -> float:
        if eps not in self._speeds:
            self._speeds[eps] = shooting.find_min_speed(eps, refine=False).cbar
        return self._speeds[eps]


def richardson(eps_values, slopes) -> float:
    """Quadratic fit of slope(eps) evaluated at eps = 0."""
    return float(np.polyval(np.polyfit(eps_values, slopes, len(eps_values) - 1), 0.0))


def check_tail_integral(ctx):
    value = asymptotics.hs_tail_integral.__wrapped__() - 1.0
    ok = abs(value - SLOPE) <= 1e-4
    return ok, f"I - 1 = {value:.10f}", 1.0


def check_min_speed(ctx):
    cbar = shooting.find_min_speed(0.01, refine=False).cbar
    ctx._speeds.setdefault(0.01, cbar)
    return abs(cbar - 1.0034405) <= 5e-4, f"cbar(0.01) = {cbar:.10f}", 10.0


def check_slope(ctx):
    eps = [0.02, 0.01, 0.005]
    slopes = [(ctx.cbar(e) - 1.0) / e for e in eps]
    extrap = richardson(eps, slopes)
    txt = ", ".join(f"{s:.5f}" for s in slopes)
    return abs(extrap - SLOPE) <= 0.02, f"slopes [{txt}] -> {extrap:.5f}", 60.0


def check_above_one(ctx):
    vals = {e: ctx.cbar(e) for e in (0.05, 0.02, 0.01, 0.005)}
    txt = ", ".join(f"{e}: {v:.8f}" for e, v in vals.items())
    return all(v > 1.0 for v in vals.values()), txt, None


def check_delta_independence(ctx):
    vals = [asymptotics.b_eps_derivative(d) for d in (0.1, 0.2, 0.5)]
    spread = max(vals) - min(vals)
    ok = spread <= 1e-5 and all(abs(v + SLOPE) <= 2e-4 for v in vals)
    return ok, f"values {[round(v, 8) for v in vals]}, spread {spread:.2e}", 1.0


def check_hamiltonian(ctx):
    d = 1e-3
    seed = [-d, d / math.sqrt(2.0)]
    cfg = IntegratorConfig()
    traj = integrate(charts.k2_rhs(1.0, 0.0), seed, (0.0, -200.0), cfg,
                     [Event(lambda t, y: y[0] + 12.0, terminal=True)])
    H = np.array([charts.hamiltonian(charts.K2Point(*s)) for s in traj.states])
    drift = float(np.max(np.abs(H - H[0])))
    sep = np.array([charts.separatrix_hs(s[0]) for s in traj.states])
    dev = float(np.max(np.abs(traj.states[:, 1] - sep)))
    ok = drift <= 1e-8 and dev <= 1e-6 and traj.terminated
    return ok, f"H drift {drift:.2e}, separatrix deviation {dev:.2e}", None


def check_charts(ctx):
    worst = 0.0
    for r1 in (1e-3, 0.1, 0.5, 0.9):
        for e1 in (0.05, 0.1, 0.5, 1.0):
            t2, eps = charts.kappa21(r1, e1)
            r, e = charts.kappa12(t2, eps)
            worst = max(worst, abs(r - r1) / r1, abs(e - e1) / e1)
    f_dev = max(abs(charts.f1(1.0, e) - charts.separatrix_hs(-1.0 / e)) for e in np.linspace(0.05, 1.0, 96))
    ok = worst <= 1e-14 and f_dev <= 1e-12
    return ok, f"roundtrip {worst:.1e}, f1 vs h^s {f_dev:.1e}", None


def check_transition(ctx):
    ratios = []
    for e1 in (0.04, 0.02, 0.01):
        _, y_num, _ = charts.transition_map_numeric(1.0, e1, 1.0)
        _, y_lead, _ = charts.transition_map_leading(1.0, e1, 1.0)
        ratios.append(abs(y_num - y_lead) / e1 ** 2)
    ok = max(ratios) <= 2.0 * min(ratios) and min(ratios) > 0
    return ok, "C(eps1) = " + ", ".join(f"{r:.5f}" for r in ratios), None


def check_series(ctx):
    th, ep, one = BivarPoly.theta(), BivarPoly.eps(), BivarPoly.const(1)
    q = th * (one - th)
    expected = q * (q + ep * (one - th * 2))
    s5 = asymptotics.build_series(1.0, 5)
    exact = s5.terms[1] == expected
    rec = max((max((abs(float(v)) for v in s5.recursion_residual(k).coefficients.values()), default=0.0)
               for k in range(1, 6)))
    worst = 0.0
    c = 2.0
    for eps in (0.05, 0.1):
        for theta in (0.2, 0.5, 0.7):
            for K in (1, 2, 3):
                series = asymptotics.build_series(c, K + 1)
                t = asymptotics.series_terms(theta, eps, series)
                dt = asymptotics.series_terms(theta, eps, series, derivative=True)
                h, hp = math.fsum(t[:K]), math.fsum(dt[:K])
                resid = c * h - reaction_omega(theta, eps) - h * hp
                worst = max(worst, abs(resid) / abs(t[K]))
    ok = exact and rec <= 1e-12 and worst <= 10.0
    return ok, f"F2 exact {exact}, recursion {rec:.1e}, consistency ratio {worst:.2f}", None


def check_profile_convergence(ctx):
    d = {e: shooting.hausdorff_to_singular(shooting.build_profile(1.5, e)) for e in (0.02, 0.01)}
    ok = d[0.02] > d[0.01] and d[0.01] <= 0.03
    return ok, f"d(0.02) = {d[0.02]:.4f}, d(0.01) = {d[0.01]:.4f}", None


def check_pde(ctx):
    cbar = ctx.cbar(0.05)
    prof = shooting.build_profile(cbar, 0.05)
    base = pde_run(PdeConfig(), 0.05, prof)
    fine = pde_run(PdeConfig(N=2 * PdeConfig().N), 0.05, prof)
    err = abs(base.speed_fit - cbar) / cbar
    change = abs(fine.speed_fit - base.speed_fit) / cbar
    ok = err <= 0.02 and change <= 0.02 / 4 and base.fit_residual <= 1e-2 and not base.truncated
    return ok, f"speed {base.speed_fit:.6f} vs {cbar:.6f} (rel {err:.1e}), doubling N moves {change:.1e}", 60.0


def check_symmetry(ctx):
    cfg = IntegratorConfig()
    worst = 0.0
    for c, eps in ((1.5, 0.1), (ctx.cbar(0.05), 0.05)):
        sym = apply_symmetry(shooting.build_profile(c, eps))
        worst = max(worst, float(np.nanmax(shooting.profile_residual(sym, cfg))))
    return worst <= 100 * cfg.rel_tol, f"max residual {worst:.2e}", None


CRITERIA: list[tuple[int, str, Callable]] = [
    (1, "wave-speed slope integral", check_tail_integral),
    (2, "minimal speed at eps = 0.01", check_min_speed),
    (3, "slope convergence", check_slope),
    (4, "cbar above one", check_above_one),
    (5, "delta independence", check_delta_independence),
    (6, "Hamiltonian conservation", check_hamiltonian),
    (7, "chart identities", check_charts),
    (8, "transition-map order", check_transition),
    (9, "series correctness", check_series),
    (10, "profile convergence", check_profile_convergence),
    (11, "PDE translation", check_pde),
    (12, "symmetry", check_symmetry),
]


def run_check(number: int, ctx: Context | None = None) -> CheckResult:
    ctx = ctx or Context()
    num, name, fn = CRITERIA[number - 1]
    t0 = time.perf_counter()
    try:
        ok, measured, limit = fn(ctx)
    except Exception as exc:  # a crash is a failed criterion, reported with its message
        ok, measured, limit = False, f"error: {type(exc).__name__}: {exc}", None
    dt = time.perf_counter() - t0
    if limit is not None and dt > limit:
        ok = False
        measured += f"; runtime {dt:.2f} s over {limit} s"
    return CheckResult(num, name, ok, measured, dt)


def run_all(numbers=None) -> list[CheckResult]:
    ctx = Context()
    return [run_check(n, ctx) for n in (numbers or [c[0] for c in CRITERIA])]
