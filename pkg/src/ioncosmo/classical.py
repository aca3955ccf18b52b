"""Classical trajectories: the breathing scale factor and the full nonlinear chain.

For a chain starting at rest in equilibrium, the ansatz q_i(t) = b(t) q_i^0
solves the full equations of motion exactly in a harmonic trap, with

    b'' + omega_ax^2(t) b = omega_ax^2(0) / b^2,    b(0) = 1, b'(0) = 0.

Both ODEs are non-stiff and integrated with scipy's DOP853 (8th-order
Dormand-Prince with dense output), one smooth ramp segment at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .chain import GAP_FLOOR, ChainConfiguration
from .errors import Collapse, DimensionMismatch, DomainError, IonCollision, ToleranceNotMet

COLLAPSE_THRESHOLD = 1e-6


def _segments(t0, t1, breakpoints):
    cuts = sorted({t0, t1, *(b for b in breakpoints if t0 < b < t1)})
    return list(zip(cuts[:-1], cuts[1:]))


class _PiecewiseSolution:
    """Dense output stitched together from per-segment ``OdeSolution`` objects."""

    def __init__(self, pieces):
        self.pieces = pieces  # list of (t_a, t_b, OdeSolution)
        self._starts = np.array([p[0] for p in pieces])

    @property
    def t_start(self):
        return self.pieces[0][0]

    @property
    def t_end(self):
        return self.pieces[-1][1]

    def state(self, t):
        """State vector(s) at time(s) ``t`` (clipped to the solved window)."""
        scalar = np.ndim(t) == 0
        ts = np.clip(np.atleast_1d(np.asarray(t, dtype=float)), self.t_start, self.t_end)
        idx = np.clip(np.searchsorted(self._starts, ts, side="right") - 1, 0, len(self.pieces) - 1)
        out = None
        for k in np.unique(idx):
            mask = idx == k
            vals = self.pieces[k][2](ts[mask])
            if out is None:
                out = np.empty((vals.shape[0], ts.size))
            out[:, mask] = vals
        return out[:, 0] if scalar else out


def _solve(rhs, y0, t0, t1, breakpoints, tol, events=None, on_event=None):
    pieces = []
    y = np.asarray(y0, dtype=float)
    for a, b in _segments(t0, t1, breakpoints):
        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=tol, atol=tol * 1e-2,
                        dense_output=True, events=events)
        if sol.status == 1 and on_event is not None:
            on_event(sol)
        if sol.status != 0:
            raise ToleranceNotMet(sol.message)
        pieces.append((a, b, sol.sol))
        y = sol.y[:, -1]
    if not pieces:
        # zero-length window: the state is just the initial condition
        frozen = y.copy()
        pieces.append((t0, t1, lambda ts: np.repeat(frozen[:, None], np.size(ts), axis=1)))
    return _PiecewiseSolution(pieces)


@dataclass
class ScaleFactorSolution:
    """b(t) and b'(t) as dense callables, plus diagnostics."""

    ramp: object
    solution: _PiecewiseSolution
    omega0: float
    energy_drift: float

    def __call__(self, t):
        return self.solution.state(t)[0]

    b = __call__

    def b_dot(self, t):
        return self.solution.state(t)[1]

    def energy(self, t):
        """b'^2/2 + w^2 b^2/2 + w0^2/b; conserved wherever the trap frequency is constant."""
        s = self.solution.state(t)
        w = self.ramp.omega(t)
        return 0.5 * s[1] ** 2 + 0.5 * w ** 2 * s[0] ** 2 + self.omega0 ** 2 / s[0]

    def turning_points(self, t=None):
        """Extent (b_min, b_max) of the oscillation at the trap frequency in force at ``t``."""
        t = self.solution.t_end if t is None else t
        w = float(self.ramp.omega(t))
        w0sq = self.omega0 ** 2
        energy = float(self.energy(t))

        def pot(b):
            return 0.5 * w * w * b * b + w0sq / b

        b_star = (w0sq / (w * w)) ** (1.0 / 3.0)
        excess = energy - pot(b_star)
        if excess <= 1e-13 * pot(b_star):
            amp = math.sqrt(max(excess, 0.0) * 2.0 / (3.0 * w * w))
            return b_star - amp, b_star + amp
        lo = brentq(lambda b: pot(b) - energy, 1e-12 * b_star, b_star, xtol=1e-15, rtol=1e-15)
        hi_edge = 2.0 * b_star
        while pot(hi_edge) < energy:
            hi_edge *= 2.0
        hi = brentq(lambda b: pot(b) - energy, b_star, hi_edge, xtol=1e-15, rtol=1e-15)
        return lo, hi

    def boundary_variation(self):
        """Relative breathing amplitude (b_max - b_min) / b_min on head and tail."""
        head = self.turning_points(self.solution.t_start)
        tail = self.turning_points(self.solution.t_end)
        return ((head[1] - head[0]) / head[0], (tail[1] - tail[0]) / tail[0])


def integrate_scale_factor(ramp, t_span=None, tol: float = 1e-10, b0: float = 1.0,
                           b_dot0: float = 0.0) -> ScaleFactorSolution:
    """Solve b'' + omega_ax^2(t) b = omega_ax^2(0) / b^2 from a static start.

    ``b0`` and ``b_dot0`` default to the static initial condition and are
    exposed for linear-response checks only.

    Raises
    ------
    Collapse
        if b drops below 1e-6.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    t0, t1 = (ramp.t_start, ramp.t_end) if t_span is None else map(float, t_span)
    w0sq = ramp.omega_start ** 2
    omega = ramp._omega_scalar

    def rhs(t, y):
        w = omega(t)
        return (y[1], -w * w * y[0] + w0sq / (y[0] * y[0]))

    def collapse(t, y):
        return y[0] - COLLAPSE_THRESHOLD
    collapse.terminal = True

    def on_event(sol):
        raise Collapse(f"scale factor collapsed at t = {sol.t_events[0][0]:.6g}")

    solution = _solve(rhs, (b0, b_dot0), t0, t1, ramp.breakpoints, tol, [collapse], on_event)
    result = ScaleFactorSolution(ramp, solution, math.sqrt(w0sq), 0.0)
    result.energy_drift = _flat_energy_drift(result, ramp, t0, t1)
    return result


def _flat_energy_drift(result, ramp, t0, t1):
    worst = 0.0
    for a, b in ((t0, min(ramp.head_end, t1)), (max(ramp.tail_start, t0), t1)):
        if b <= a:
            continue
        e = result.energy(np.linspace(a, b, 101))
        worst = max(worst, float(np.max(np.abs(e - e[0])) / abs(e[0])))
    return worst


@dataclass
class ChainTrajectory:
    """Sampled positions and velocities of every ion, shape (samples, ions)."""

    t: np.ndarray
    q: np.ndarray
    q_dot: np.ndarray
    solution: _PiecewiseSolution

    def positions(self, t):
        n = self.q.shape[1]
        return self.solution.state(t)[:n].T


def _chain_rhs(ramp, w0sq):
    omega = ramp._omega_scalar

    def rhs(t, y):
        n = y.size // 2
        q, v = y[:n], y[n:]
        d = q[:, None] - q[None, :]
        np.fill_diagonal(d, np.inf)
        force = np.sum(np.sign(d) / (d * d), axis=1)
        w = omega(t)
        return np.concatenate((v, -w * w * q + w0sq * force))
    return rhs


def integrate_full_chain(config: ChainConfiguration, ramp, initial_displacements=None,
                         t_span=None, tol: float = 1e-10, t_eval=None,
                         initial_velocities=None) -> ChainTrajectory:
    """Integrate the nonlinear axial equations of motion of every ion.

    Positions start at ``config.positions + initial_displacements`` (lengths in
    units of l for the ramp's initial frequency) with ``initial_velocities``
    (default zero).

    Raises
    ------
    IonCollision
        if two neighbours approach closer than the gap floor.
    """
    n = config.n_ions
    disp = np.zeros(n) if initial_displacements is None else np.asarray(initial_displacements, float)
    vel = np.zeros(n) if initial_velocities is None else np.asarray(initial_velocities, float)
    if disp.shape != (n,) or vel.shape != (n,):
        raise DimensionMismatch(f"initial conditions must have length {n}")
    q0 = config.positions + disp
    if n > 1 and np.min(np.diff(q0)) <= GAP_FLOOR:
        raise IonCollision("initial positions are not ordered / too close")
    t0, t1 = (ramp.t_start, ramp.t_end) if t_span is None else map(float, t_span)
    rhs = _chain_rhs(ramp, ramp.omega_start ** 2)

    def gap(t, y):
        return np.min(np.diff(y[:n])) - GAP_FLOOR
    gap.terminal = True

    def on_event(sol):
        raise IonCollision(f"ions collided near t = {sol.t_events[0][0]:.6g}")

    events = [gap] if n > 1 else None
    solution = _solve(rhs, np.concatenate((q0, vel)), t0, t1, ramp.breakpoints, tol,
                      events, on_event)
    t_eval = np.linspace(t0, t1, 1001) if t_eval is None else np.asarray(t_eval, float)
    states = solution.state(t_eval)
    return ChainTrajectory(t_eval, states[:n].T, states[n:].T, solution)


def classical_mode_projection(trajectory: ChainTrajectory, config: ChainConfiguration,
                              scale_solution: ScaleFactorSolution) -> np.ndarray:
    """Normal-mode amplitudes c_kappa(t) = v_kappa . (q(t) - b(t) q^0), shape (samples, modes)."""
    q = np.asarray(trajectory.q)
    if q.ndim != 2 or q.shape[1] != config.n_ions:
        raise DimensionMismatch(
            f"trajectory has shape {q.shape}, expected (samples, {config.n_ions})")
    b = np.atleast_1d(scale_solution(trajectory.t))
    if b.shape[0] != q.shape[0]:
        raise DimensionMismatch("scale factor and trajectory sample counts differ")
    fluct = q - b[:, None] * config.positions[None, :]
    return fluct @ config.mode_vectors
