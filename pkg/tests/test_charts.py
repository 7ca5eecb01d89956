import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zfkwave.charts import (
    F1_chart,
    K1Point,
    K2Point,
    blowup_map,
    f1,
    from_k2,
    hamiltonian,
    k1_rhs,
    k1_vector_field,
    k2_saddle_eigenvalues,
    k2_vector_field,
    kappa12,
    kappa21,
    separatrix_hs,
    separatrix_hs_array,
    separatrix_hu,
    to_k2,
    transition_map_leading,
    transition_map_numeric,
    y1_coordinate,
)
from zfkwave.integrate import Event, IntegratorConfig, integrate
from zfkwave.charts import k2_rhs
from zfkwave.model import DomainError, Params, PhasePoint


def test_k2_translation():
    assert to_k2(PhasePoint(1.0, 0.3), 0.1).theta2 == 0.0
    assert to_k2(PhasePoint(0.9, 0.0), 0.01).theta2 == pytest.approx(-10.0, rel=1e-13)


@settings(max_examples=100, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.integers(-10, -1))
def test_k2_roundtrip_power_of_two(theta, eta, k):
    eps = 2.0 ** k
    p = PhasePoint(theta, eta)
    q = from_k2(to_k2(p, eps), eps)
    assert abs(q.theta - p.theta) <= 4 * np.spacing(max(abs(theta), 1.0))
    assert q.eta == p.eta


def test_k2_field_values():
    assert k2_vector_field(K2Point(0.0, 0.0), Params(1.0, 0.1)) == (0.0, 0.0)
    d = k2_vector_field(K2Point(-2.0, 0.0), Params(1.0, 0.0))
    assert d == (0.0, -math.exp(-2.0))
    d = k2_vector_field(K2Point(-1.0, 1.0), Params(1.0, 0.1))
    expected = -0.5 * mp.e ** -1 + mp.mpf("0.1") * (1 + 0.5 * mp.e ** -1)
    assert d[0] == 1.0
    assert d[1] == pytest.approx(float(expected), rel=1e-13)
    assert d[1] == pytest.approx(-0.0655457, abs=5e-8)


def test_hamiltonian_values():
    assert hamiltonian(K2Point(0.0, 0.0)) == 0.5
    assert hamiltonian(K2Point(1.0, 0.0)) == 0.0
    assert hamiltonian(K2Point(0.0, 1.0)) == 1.0


def test_separatrix_values():
    assert separatrix_hs(0.0) == 0.0
    assert separatrix_hs(1.0) == -1.0
    assert separatrix_hs(-1.0) == pytest.approx(float(mp.sqrt(1 - 2 / mp.e)), rel=1e-14)
    assert separatrix_hs(-12.0) == pytest.approx(float(mp.sqrt(1 - 13 * mp.e ** -12)), rel=1e-15)
    assert separatrix_hu(-1.0) == -separatrix_hs(-1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-30, 3))
def test_separatrix_on_level_half(theta2):
    eta = separatrix_hs(theta2)
    assert hamiltonian(K2Point(theta2, eta)) == pytest.approx(0.5, abs=1e-12)
    assert separatrix_hs_array(np.array([theta2]))[0] == pytest.approx(eta, abs=1e-15)


def test_radicand_near_zero_high_precision():
    for x in (-0.09, -1e-3, -1e-7, 1e-5, 0.05):
        with mp.workdps(60):
            ref = 1 + (mp.mpf(x) - 1) * mp.exp(mp.mpf(x))
        assert separatrix_hs(x) == pytest.approx(-math.copysign(1, x) * float(mp.sqrt(ref)), rel=1e-14)


def test_saddle_eigenvalues():
    up, down = k2_saddle_eigenvalues(1.0, 0.0)
    assert abs(up - 1 / math.sqrt(2)) <= 1e-12 and abs(down + 1 / math.sqrt(2)) <= 1e-12


def test_separatrix_oracle_equivalence():
    d = 1e-4
    traj = integrate(k2_rhs(1.0, 0.0), [-d, d / math.sqrt(2)], (0.0, -80.0), IntegratorConfig(),
                     [Event(lambda t, y: y[0] + 8.0, terminal=True)])
    mask = (traj.states[:, 0] <= -0.1)
    dev = [abs(s[1] - separatrix_hs(s[0])) for s in traj.states[mask]]
    assert max(dev) <= 1e-6


def test_chart_changes():
    assert kappa12(-10.0, 0.01) == pytest.approx((0.1, 0.1), rel=1e-15)
    for e1 in (0.1, 0.5, 1.0):
        t2, eps = kappa21(0.3, e1)
        r1, e1b = kappa12(t2, eps)
        assert abs(r1 - 0.3) <= 1e-14 * 0.3 and abs(e1b - e1) <= 1e-14 * e1
    for d in ((1.0, 0.0), (0.0, 1.0), (-0.6, 0.8)):
        assert blowup_map(0.0, *d) == (1.0, 0.0)
    with pytest.raises(DomainError):
        kappa12(0.5, 0.1)
    with pytest.raises(DomainError):
        kappa21(0.1, 0.0)


def test_k1_field_values():
    assert k1_vector_field(K1Point(0.0, 1.0, 0.0), Params(1.0, 0.0)) == (0.0, 0.0, 0.0)
    assert k1_vector_field(K1Point(0.1, 1.0, 0.0), Params(1.0, 0.0)) == (-0.1, 0.1, 0.0)
    with pytest.raises(DomainError):
        K1Point(-0.1, 1.0, 0.1)


def test_eps_conserved_along_k1_orbit():
    traj = integrate(k1_rhs(1.0), [0.1, 0.9, 0.3], (0.0, 1.0), IntegratorConfig())
    prod = traj.states[:, 0] * traj.states[:, 2]
    assert np.max(np.abs(prod - prod[0])) <= 1e-10


def test_f1_matches_separatrix():
    for e1 in (0.2, 0.5, 1.0):
        assert abs(f1(1.0, e1) - separatrix_hs(-1.0 / e1)) <= 1e-12
    assert y1_coordinate(K1Point(0.0, 1.0, 1e-6), 1.0) == pytest.approx(1.0, abs=1e-15)


@settings(max_examples=150, deadline=None)
@given(st.floats(0.5, 1.5), st.floats(0.02, 0.8), st.floats(0.5, 2.0))
def test_y1_f1_roundtrip(eta, eps1, c):
    y1 = y1_coordinate(K1Point(0.0, eta, eps1), c)
    assert f1(y1, eps1) == pytest.approx(eta, abs=1e-12)


def test_F1_frozen():
    fv = math.sqrt(1 - 3 * math.exp(-2))
    expected = 0.5 * 0.5 ** -2 * math.exp(-2) * (fv - 1) / fv
    assert F1_chart(0.0, 1.0, 0.5, 1.0) == pytest.approx(expected, rel=1e-13)
    assert F1_chart(0.0, 1.0, 0.5, 1.0) == pytest.approx(-0.0805257, abs=5e-8)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 0.1), st.floats(0.5, 1.5), st.floats(0.005, 0.09), st.floats(0.9, 1.2))
def test_flatness_probe(r1, y1, eps1, c):
    assert abs(F1_chart(r1, y1, eps1, c)) <= math.exp(-1 / (2 * eps1))


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 0.1), st.floats(0.5, 1.5), st.floats(0.005, 0.2), st.floats(0.9, 1.2))
def test_flat_coefficient_bound(r1, y1, eps1, c):
    # near eps1 = 0.2 the e^{-1/(2 eps1)} probe is exceeded at the corridor edge (ledger)
    assert abs(F1_chart(r1, y1, eps1, c)) <= 2.0 * eps1 ** -2 * math.exp(-1 / eps1)


def test_transition_map_leading_contract():
    assert transition_map_leading(1.0, 0.0, 1.0) == (0.0, 1.0, 0.5)
    r, _, d = transition_map_leading(1.0, 0.02, 1.0, rho=0.1, delta=0.5)
    assert r == pytest.approx(0.1 * 0.02 / 0.5) and d == 0.5


def test_transition_map_order():
    consts = []
    for e1 in (0.04, 0.02, 0.01):
        _, yn, en = transition_map_numeric(1.0, e1, 1.0)
        _, yl, _ = transition_map_leading(1.0, e1, 1.0)
        assert en == pytest.approx(0.5, rel=1e-10)
        consts.append(abs(yn - yl) / e1 ** 2)
    assert max(consts) <= 2 * min(consts)
