import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp

from ioncosmo.errors import DomainError, NegativeFrequencySquared, NonConstantBoundary, NotNormalized
from ioncosmo.modeqn import (EffectiveFrequency, FunctionFrequency, bogoliubov_from_transfer,
                             integrate_mode, squeeze_parameter, sudden_limit, transfer_matrix)
from ioncosmo.ramps import TrapRamp


def test_constant_frequency_creates_nothing():
    ev = integrate_mode(EffectiveFrequency(TrapRamp(1.0, 1.0, 5.0, "tanh", 2.0, 2.0)))
    assert abs(ev.beta) < 1e-12
    assert abs(ev.alpha) == pytest.approx(1.0, abs=1e-12)
    assert ev.n_created < 1e-20


@pytest.mark.parametrize("wi, wf, expected", [(1.0, 4.0, 9 / 16), (0.1, 1.0, 2.025)])
def test_step_matches_sudden_formula(wi, wf, expected):
    ev = integrate_mode(EffectiveFrequency(TrapRamp(wi, wf, 0.0, "step", 1.0, 1.0)))
    assert ev.n_created == pytest.approx(expected, rel=1e-9)


def test_slow_tanh_is_adiabatic():
    ramp = TrapRamp(1.0, 4.0, 100 * 2 * math.pi, "tanh", 1.0, 1.0)
    assert integrate_mode(EffectiveFrequency(ramp)).n_created < 1e-4


def test_adiabatic_suppression_grows_with_rise_time():
    ns = [integrate_mode(EffectiveFrequency(TrapRamp(1.0, 4.0, r, "tanh", 1.0, 1.0))).n_created
          for r in (2.0, 4.0, 8.0)]
    assert ns[0] > 10 * ns[1] > 100 * ns[2]


@pytest.mark.parametrize("wi, wf, rho", [(1.0, 2.0, 1.0), (0.5, 3.0, 0.4), (1.0, 4.0, 3.0)])
def test_tanh_squared_profile_closed_form(wi, wf, rho):
    # Omega^2 = A + B tanh(rho t) has |beta|^2 = sinh^2(pi (wf - wi) / 2 rho)
    #   / (sinh(pi wi / rho) sinh(pi wf / rho))
    a, b = (wi ** 2 + wf ** 2) / 2, (wf ** 2 - wi ** 2) / 2
    half = 40.0 / rho
    freq = FunctionFrequency(lambda t: a + b * math.tanh(rho * (t - half)), 0.0, 2 * half)
    ev = integrate_mode(freq, flat_tol=1e-12)
    exact = (math.sinh(math.pi * (wf - wi) / (2 * rho)) ** 2
             / (math.sinh(math.pi * wi / rho) * math.sinh(math.pi * wf / rho)))
    assert ev.n_created == pytest.approx(exact, rel=1e-7)


def _reference_beta(ramp):
    """|beta| from a direct DOP853 solve of the complex mode equation."""
    w0, w1 = ramp.omega_initial, ramp.omega_final
    chi0 = 1 / math.sqrt(2 * w0)

    def rhs(t, y):
        return [y[1], -ramp.omega(t) ** 2 * y[0]]

    y = np.array([chi0, -1j * w0 * chi0])
    edges = [ramp.t_start, ramp.head_end, ramp.tail_start, ramp.t_end]
    for t0, t1 in zip(edges[:-1], edges[1:]):
        if t1 > t0:
            y = solve_ivp(rhs, (t0, t1), y, method="DOP853", rtol=1e-12, atol=1e-14).y[:, -1]
    return abs(math.sqrt(w1 / 2) * (y[0] - 1j * y[1] / w1))


@pytest.mark.parametrize("shape", ["linear", "tanh", "exponential"])
def test_agrees_with_direct_ode_solve(shape):
    ramp = TrapRamp(0.6, 1.7, 3.0, shape, 0.5, 0.5)
    ev = integrate_mode(EffectiveFrequency(ramp))
    assert abs(ev.beta) == pytest.approx(_reference_beta(ramp), abs=1e-8)


def test_transfer_matrix_route_matches():
    ramp = TrapRamp(0.8, 1.5, 2.0, "tanh", 1.0, 1.0)
    freq = EffectiveFrequency(ramp)
    ev = integrate_mode(freq)
    m = transfer_matrix(freq)
    assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-9)
    _, beta = bogoliubov_from_transfer(m, 0.8, 1.5)
    assert abs(beta) == pytest.approx(abs(ev.beta), abs=1e-9)


@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.floats(0.2, 10.0),
       st.sampled_from(["linear", "tanh", "exponential", "step"]))
def test_normalization_property(wi, wf, rise, shape):
    ev = integrate_mode(EffectiveFrequency(TrapRamp(wi, wf, rise, shape, 0.5, 0.5)))
    assert ev.normalization_error < 1e-8
    assert ev.wronskian_drift < 1e-9
    assert ev.n_created == pytest.approx(math.sinh(abs(ev.xi)) ** 2, rel=1e-9, abs=1e-15)


@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.floats(0.2, 10.0),
       st.sampled_from(["linear", "tanh"]))
def test_reversed_ramp_creates_the_same_number(wi, wf, rise, shape):
    # time reversal maps (alpha, beta) to (alpha*, -beta); |beta| is invariant
    fwd = TrapRamp(wi, wf, rise, shape, 0.5, 0.5)
    rev = TrapRamp(wf, wi, rise, shape, 0.5, 0.5)
    n_f = integrate_mode(EffectiveFrequency(fwd)).n_created
    n_r = integrate_mode(EffectiveFrequency(rev)).n_created
    assert n_f == pytest.approx(n_r, rel=1e-6, abs=1e-12)


@given(st.floats(0.1, 10.0), st.floats(0.1, 10.0))
def test_step_never_exceeds_sudden_bound(wi, wf):
    bound = sudden_limit(wi, wf)[0]
    for rise in (0.3, 1.0):
        n = integrate_mode(EffectiveFrequency(TrapRamp(wi, wf, rise, "linear", 0.2, 0.2))).n_created
        assert n <= bound * (1 + 1e-8) + 1e-14


def test_sudden_limit_values():
    assert sudden_limit(1.0, 1.0) == (0.0, 0.0)
    n, xi = sudden_limit(1.0, 4.0)
    assert n == pytest.approx(0.5625) and xi == pytest.approx(math.log(2.0), abs=1e-15)
    n, xi = sudden_limit(0.1, 1.0)
    assert n == pytest.approx(2.025) and xi == pytest.approx(math.asinh(math.sqrt(2.025)))
    with pytest.raises(DomainError):
        sudden_limit(0.0, 1.0)


def test_squeeze_parameter():
    ev = integrate_mode(EffectiveFrequency(TrapRamp(1.0, 4.0, 0.0, "step", 1.0, 1.0)))
    xi = squeeze_parameter(ev)
    assert abs(xi) == pytest.approx(math.log(2.0), abs=1e-9)
    assert np.angle(xi) == pytest.approx(np.angle(ev.beta))
    flat = integrate_mode(EffectiveFrequency(TrapRamp(1.0, 1.0, 1.0)))
    assert squeeze_parameter(flat) == 0
    ev.alpha = 1.1 * ev.alpha
    with pytest.raises(NotNormalized):
        squeeze_parameter(ev)


def test_negative_frequency_squared_detected():
    freq = FunctionFrequency(lambda t: 1.0 - 2.0 * math.exp(-(t - 5.0) ** 2), 0.0, 10.0)
    with pytest.raises(NegativeFrequencySquared):
        integrate_mode(freq)


def test_breathing_mode_after_sudden_ramp_has_no_out_vacuum():
    ramp = TrapRamp(0.1, 1.0, 0.0, "step", 1.0, 5.0)
    with pytest.raises(NonConstantBoundary):
        integrate_mode(EffectiveFrequency.for_eigenvalue(ramp, 2.0))


def test_com_mode_matches_bare_trap():
    ramp = TrapRamp(1.0, 0.5, 2.0, "tanh", 1.0, 1.0)
    a = integrate_mode(EffectiveFrequency.for_eigenvalue(ramp, 0.0))
    b = integrate_mode(EffectiveFrequency(ramp))
    assert a.beta == b.beta


def test_step_on_the_window_edge_still_counts_as_a_jump():
    ev = integrate_mode(EffectiveFrequency(TrapRamp(1.0, 40.0, 0.0, "step")))
    assert ev.n_created == pytest.approx(39 ** 2 / 160, rel=1e-12)
