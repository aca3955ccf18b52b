import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ioncosmo.chain import ChainConfiguration
from ioncosmo.classical import (classical_mode_projection, integrate_full_chain,
                                integrate_scale_factor)
from ioncosmo.errors import Collapse, DimensionMismatch, IonCollision
from ioncosmo.ramps import TrapRamp


def test_constant_trap_is_a_fixed_point():
    sol = integrate_scale_factor(TrapRamp(1.0, 1.0, 5.0, "tanh", 1.0, 10.0))
    ts = np.linspace(0, sol.solution.t_end, 50)
    assert np.max(np.abs(sol(ts) - 1.0)) < 1e-14
    assert np.max(np.abs(sol.b_dot(ts))) < 1e-14


def test_step_down_oscillates_about_new_minimum():
    ramp = TrapRamp(1.0, 0.1, 0.0, "step", 0.0, 200.0)
    sol = integrate_scale_factor(ramp)
    b_star = 100 ** (1 / 3)
    lo, hi = sol.turning_points()
    assert lo == pytest.approx(1.0, abs=1e-8)
    assert lo < b_star < hi
    # energy balance at the far turning point: w^2 b^2 / 2 + 1 / b = w^2 / 2 + 1
    w2 = 0.01
    assert 0.5 * w2 * hi ** 2 + 1 / hi == pytest.approx(0.5 * w2 + 1.0, rel=1e-9)
    ts = np.linspace(0, ramp.t_end, 4001)
    assert sol(ts).max() == pytest.approx(hi, rel=1e-4)


def test_slow_opening_tracks_instantaneous_minimum():
    ramp = TrapRamp(1.0, 0.1, 100 * 2 * math.pi, "tanh", 1.0, 1.0)
    sol = integrate_scale_factor(ramp)
    ts = np.linspace(ramp.t_start, ramp.t_end, 400)
    adiabatic = ramp.omega(ts) ** (-2 / 3)
    assert np.max(np.abs(sol(ts) / adiabatic - 1.0)) < 0.01


def test_collapse_detected():
    with pytest.raises(Collapse):
        integrate_scale_factor(TrapRamp(1.0, 1.0, 1.0), b0=1.0, b_dot0=-3000.0)


def test_static_two_ion_chain():
    cfg = ChainConfiguration.build(2)
    ramp = TrapRamp(1.0, 1.0, 1.0, "tanh", 1.0, 20.0)
    traj = integrate_full_chain(cfg, ramp)
    assert np.max(np.abs(traj.q - cfg.positions)) < 1e-10


@given(st.floats(0.4, 2.0), st.floats(0.5, 5.0), st.sampled_from(["linear", "tanh", "exponential"]))
def test_scaling_ansatz_holds_for_any_ramp(wf, rise, shape):
    cfg = ChainConfiguration.build(3)
    ramp = TrapRamp(1.0, wf, rise, shape, 1.0, 10.0)
    traj = integrate_full_chain(cfg, ramp)
    sol = integrate_scale_factor(ramp)
    c = classical_mode_projection(traj, cfg, sol)
    assert np.max(np.abs(c)) < 1e-8


def test_kicked_chain_oscillates_at_mode_frequencies():
    cfg = ChainConfiguration.build(3)
    duration = 400.0
    ramp = TrapRamp(1.0, 1.0, 1.0, "tanh", 0.0, duration)
    t = np.linspace(0, ramp.t_end, 2 ** 14, endpoint=False)
    traj = integrate_full_chain(cfg, ramp, initial_displacements=np.array([1e-4, 0, 0]), t_eval=t)
    proj = (traj.q - cfg.positions) @ cfg.mode_vectors
    freqs = 2 * np.pi * np.fft.rfftfreq(t.size, t[1] - t[0])
    for k, expected in enumerate(cfg.trap_frequencies):
        spectrum = np.abs(np.fft.rfft(proj[:, k] * np.hanning(t.size)))
        assert freqs[np.argmax(spectrum)] == pytest.approx(expected, abs=2 * np.pi / t[-1])


def test_breathing_kick_excites_only_breathing_mode():
    cfg = ChainConfiguration.build(4)
    ramp = TrapRamp(1.0, 1.0, 1.0, "tanh", 0.0, 30.0)
    traj = integrate_full_chain(cfg, ramp, initial_displacements=1e-5 * cfg.mode_vectors[:, 1])
    sol = integrate_scale_factor(ramp)
    c = classical_mode_projection(traj, cfg, sol)
    assert np.max(np.abs(c[:, 1])) > 5e-6
    others = np.delete(c, 1, axis=1)
    assert np.max(np.abs(others)) < 1e-3 * np.max(np.abs(c[:, 1]))


def test_projection_dimension_checks():
    cfg = ChainConfiguration.build(3)
    ramp = TrapRamp(1.0, 1.0, 1.0)
    traj = integrate_full_chain(cfg, ramp)
    sol = integrate_scale_factor(ramp)
    assert np.max(np.abs(classical_mode_projection(traj, cfg, sol))) == 0.0
    with pytest.raises(DimensionMismatch):
        classical_mode_projection(traj, ChainConfiguration.build(2), sol)


def test_ion_collision_detected():
    cfg = ChainConfiguration.build(2)
    ramp = TrapRamp(1.0, 1.0, 1.0, "tanh", 0.0, 10.0)
    with pytest.raises(IonCollision):
        integrate_full_chain(cfg, ramp, initial_velocities=np.array([3000.0, -3000.0]))
