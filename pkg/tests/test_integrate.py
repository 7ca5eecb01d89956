import math

import numpy as np
import pytest

from zfkwave.charts import K2Point, hamiltonian, k2_rhs
from zfkwave.integrate import (
    Event,
    IntegratorConfig,
    MaxStepsError,
    NonFiniteStateError,
    StepUnderflowError,
    integrate,
)


def decay(t, y):
    return -y


def test_linear_decay():
    cfg = IntegratorConfig()
    traj = integrate(decay, [1.0], (0.0, 1.0), cfg)
    assert abs(traj.final[0] - math.exp(-1)) <= 10 * cfg.rel_tol
    assert traj.times[-1] == 1.0


def test_forward_backward_roundtrip():
    cfg = IntegratorConfig()
    rhs = lambda t, y: np.array([y[1], -y[0]])
    y0 = np.array([1.0, 0.5])
    fwd = integrate(rhs, y0, (0.0, 3.0), cfg)
    back = integrate(rhs, fwd.final, (3.0, 0.0), cfg)
    assert np.linalg.norm(back.final - y0) <= 100 * cfg.rel_tol * np.linalg.norm(y0)


def test_self_convergence():
    rhs = lambda t, y: np.array([y[1], -math.sin(y[0])])
    ref = integrate(rhs, [1.0, 0.0], (0.0, 10.0), IntegratorConfig(rel_tol=1e-13, abs_tol=1e-15)).final
    errs = []
    for tol in (1e-6, 5e-7, 2.5e-7):
        out = integrate(rhs, [1.0, 0.0], (0.0, 10.0), IntegratorConfig(rel_tol=tol, abs_tol=tol * 1e-2)).final
        errs.append(np.linalg.norm(out - ref))
    assert errs[1] <= errs[0] and errs[2] <= errs[1]


def test_hamiltonian_drift_on_inner_field():
    seed = [-1e-3, 1e-3 / math.sqrt(2)]
    traj = integrate(k2_rhs(1.0, 0.0), seed, (0.0, -60.0), IntegratorConfig(),
                     [Event(lambda t, y: y[0] + 12, terminal=True)])
    H = [hamiltonian(K2Point(*s)) for s in traj.states]
    assert max(abs(h - H[0]) for h in H) <= 1e-8


def test_event_localisation():
    seed = [-1e-3, 1e-3 / math.sqrt(2)]
    traj = integrate(k2_rhs(1.0, 0.01), seed, (0.0, -60.0), IntegratorConfig(),
                     [Event(lambda t, y: y[0] + 10, terminal=True)])
    assert traj.terminated
    assert abs(traj.final[0] + 10) <= 1e-9


def test_nonterminal_events_and_direction():
    rhs = lambda t, y: np.array([y[1], -y[0]])
    up = Event(lambda t, y: y[0], direction=1)
    anyd = Event(lambda t, y: y[0])
    traj = integrate(rhs, [0.5, 1.0], (0.0, 4 * math.pi), IntegratorConfig(), [up, anyd])
    assert len(traj.hits(0)) == 2
    assert len(traj.hits(1)) == 4
    for _, t, y in traj.event_hits:
        assert abs(y[0]) <= 1e-9


def test_plain_callable_event():
    def g(t, y):
        return y[0] - 0.5

    g.terminal = True
    traj = integrate(decay, [1.0], (0.0, 5.0), IntegratorConfig(), [g])
    assert traj.terminated and traj.final[0] == pytest.approx(0.5, abs=1e-10)
    assert traj.times[-1] == pytest.approx(math.log(2), abs=1e-10)


def test_errors():
    with pytest.raises(MaxStepsError):
        integrate(decay, [1.0], (0.0, 100.0), IntegratorConfig(max_steps=3, h_init=1e-3, h_max=1e-3))
    with pytest.raises(NonFiniteStateError), np.errstate(invalid="ignore"):
        integrate(lambda t, y: y / 0.0 if y[0] == 0 else y, [0.0], (0.0, 1.0))
    with pytest.raises(StepUnderflowError):
        integrate(lambda t, y: np.array([1.0 / (1.0 - t) ** 2]), [0.0], (0.0, 2.0),
                  IntegratorConfig(h_min=1e-6, h_init=1e-3))
    with pytest.raises(ValueError):
        integrate(decay, [1.0], (1.0, 1.0))
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0.0)


def test_endpoint_near_zero_terminates():
    traj = integrate(decay, [1.0], (-0.001171607453704486, 2.1794042558692446e-16), IntegratorConfig())
    assert traj.times[-1] == 2.1794042558692446e-16
    assert traj.final[0] == pytest.approx(math.exp(-0.001171607453704486 - 2.1794042558692446e-16), rel=1e-12)
