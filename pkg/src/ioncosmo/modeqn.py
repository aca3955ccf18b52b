"""Time-dependent harmonic-oscillator mode equations and Bogoliubov coefficients.

Every phonon mode of the trap and every Fourier mode of the cosmological
field obeys

    chi'' + Omega^2(t) chi = 0

with an Omega^2(t) that is constant before and after some transition.  We
start ``chi`` in the positive-frequency solution of the initial frequency,
integrate across the transition and project the result onto the
positive/negative-frequency solutions of the final frequency.  The
projection coefficients are the Bogoliubov pair (alpha, beta); the number of
created quanta is ``|beta|^2``.

Integration uses a fourth-order Magnus method (two Gauss points, one
commutator) with step-doubling error control.  Each step applies the exact
exponential of a traceless 2x2 matrix, so the propagator has unit
determinant and the Wronskian ``i (chi* chi' - chi chi'*)`` is conserved up
to roundoff regardless of the step size.  On flat segments the method is
exact, so holds cost almost nothing.

The trap mode is a single standing mode, and ``xi`` here is the parameter of
a one-mode squeezer ``exp((xi a^dag^2 - xi* a^2) / 2)``.  The cosmological
field pairs ``k`` with ``-k`` (two-mode squeezing); the per-mode occupation
``sinh^2|xi|`` is the same in both readings, nothing else is shared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (DomainError, NegativeFrequencySquared, NonConstantBoundary,
                     NotNormalized, ToleranceNotMet)

DEFAULT_TOL = 1e-10
DEFAULT_FLAT_TOL = 1e-6
MAX_STEPS = 5_000_000
_GAUSS = math.sqrt(3.0) / 6.0
_COMM = math.sqrt(3.0) / 12.0
_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# frequency profiles
# ---------------------------------------------------------------------------

class FrequencyProfile:
    """Omega^2(t) together with the geometry of its flat head and tail.

    Subclasses provide ``omega_sq(t)`` for scalar ``t`` and the attributes
    ``t_start``, ``t_end``, ``head_end``, ``tail_start`` and ``breakpoints``
    (times where Omega^2 or its derivatives jump; the integrator never
    steps across them).
    """

    t_start: float
    t_end: float
    head_end: float
    tail_start: float
    breakpoints: tuple = ()

    def omega_sq(self, t: float) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def edge_omega_sq(self) -> tuple:
        """Omega^2 on the head and on the tail.

        Differs from sampling at ``t_start``/``t_end`` only when a jump sits
        exactly on the window edge (a step with no hold).
        """
        return self.omega_sq(self.t_start), self.omega_sq(self.t_end)

    def boundary_variation(self) -> float:
        """Largest relative variation of Omega^2 over the head and the tail."""
        worst = 0.0
        # breakpoints themselves are excluded: a step sits exactly on head_end
        head = np.linspace(self.t_start, self.head_end, 65)[:-1]
        tail = np.linspace(self.tail_start, self.t_end, 65)[1:]
        for ts, ref_t in ((head, self.t_start), (tail, self.t_end)):
            if ts.size == 0 or ts[-1] <= ts[0]:
                continue
            ref = abs(self.omega_sq(ref_t))
            vals = np.array([self.omega_sq(x) for x in ts])
            worst = max(worst, float(np.max(np.abs(vals - ref))) / ref)
        return worst


class FunctionFrequency(FrequencyProfile):
    """Wrap an arbitrary callable ``omega_sq(t)``.

    ``edges`` optionally gives Omega^2 on the head and tail explicitly.
    """

    def __init__(self, omega_sq: Callable[[float], float], t_start: float, t_end: float,
                 head_end: Optional[float] = None, tail_start: Optional[float] = None,
                 breakpoints=(), edges: Optional[tuple] = None):
        self._fn = omega_sq
        self.t_start = float(t_start)
        self.t_end = float(t_end)
        self.head_end = self.t_start if head_end is None else float(head_end)
        self.tail_start = self.t_end if tail_start is None else float(tail_start)
        self.breakpoints = tuple(breakpoints)
        self.edges = None if edges is None else tuple(float(x) for x in edges)

    def omega_sq(self, t):
        return float(self._fn(t))

    def edge_omega_sq(self) -> tuple:
        return super().edge_omega_sq() if self.edges is None else self.edges


class EffectiveFrequency(FrequencyProfile):
    """Omega^2(t) = omega_ax^2(t) + omega_kappa^2 / b^3(t) of one trap phonon mode.

    Parameters
    ----------
    ramp : TrapRamp or RampSequence
        The axial trap frequency.
    omega_kappa_sq : float
        Squared Coulomb frequency of the mode in absolute units, i.e. the
        Hessian eigenvalue times ``ramp.omega_start ** 2``.  Zero for the
        centre-of-mass mode.
    scale_factor : callable, optional
        b(t).  Only consulted when ``omega_kappa_sq > 0``; computed from the
        ramp with :func:`ioncosmo.classical.integrate_scale_factor` when
        omitted.
    """

    def __init__(self, ramp, omega_kappa_sq: float = 0.0, scale_factor=None, tol=DEFAULT_TOL):
        if omega_kappa_sq < 0:
            raise DomainError("omega_kappa_sq must be >= 0")
        self.ramp = ramp
        self.omega_kappa_sq = float(omega_kappa_sq)
        if self.omega_kappa_sq > 0 and scale_factor is None:
            from .classical import integrate_scale_factor
            scale_factor = integrate_scale_factor(ramp, tol=tol)
        self.scale_factor = scale_factor
        self.t_start = ramp.t_start
        self.t_end = ramp.t_end
        self.head_end = ramp.head_end
        self.tail_start = ramp.tail_start
        self.breakpoints = tuple(ramp.breakpoints)

    @classmethod
    def for_eigenvalue(cls, ramp, eigenvalue: float, scale_factor=None, tol=DEFAULT_TOL):
        """Build from a dimensionless Hessian eigenvalue (units of omega_ax(0)^2)."""
        return cls(ramp, eigenvalue * ramp.omega_start ** 2, scale_factor, tol)

    def omega_sq(self, t):
        w = self.ramp._omega_scalar(t)
        if self.omega_kappa_sq == 0.0:
            return w * w
        b = float(self.scale_factor(t))
        return w * w + self.omega_kappa_sq / (b * b * b)

    def edge_omega_sq(self) -> tuple:
        out = []
        for w, t in ((self.ramp.omega_start, self.t_start), (self.ramp.omega_end, self.t_end)):
            if self.omega_kappa_sq > 0.0:
                out.append(w * w + self.omega_kappa_sq / float(self.scale_factor(t)) ** 3)
            else:
                out.append(w * w)
        return tuple(out)

    def boundary_variation(self) -> float:
        if self.omega_kappa_sq == 0.0:
            return 0.0  # the ramp itself is exactly flat on its holds
        rel_b = getattr(self.scale_factor, "boundary_variation", None)
        if rel_b is None:
            return super().boundary_variation()
        head_b, tail_b = rel_b()
        worst = 0.0
        for t, rel in ((self.t_start, head_b), (self.t_end, tail_b)):
            b = float(self.scale_factor(t))
            coulomb = self.omega_kappa_sq / b ** 3
            worst = max(worst, 3.0 * rel * coulomb / self.omega_sq(t))
        return worst


# ---------------------------------------------------------------------------
# Magnus stepper
# ---------------------------------------------------------------------------

def _expm_traceless(a: float, b: float, c: float):
    """exp([[a, b], [c, -a]]) in closed form."""
    s2 = a * a + b * c
    if s2 > 0.0:
        s = math.sqrt(s2)
        ch, sh = math.cosh(s), math.sinh(s) / s
    elif s2 < 0.0:
        s = math.sqrt(-s2)
        ch, sh = math.cos(s), math.sin(s) / s
    else:
        ch, sh = 1.0, 1.0
    return ch + a * sh, b * sh, c * sh, ch - a * sh


def _magnus4(omega_sq, t: float, h: float):
    w1 = omega_sq(t + h * (0.5 - _GAUSS))
    w2 = omega_sq(t + h * (0.5 + _GAUSS))
    if w1 <= 0.0 or w2 <= 0.0:
        raise NegativeFrequencySquared(
            f"Omega^2 <= 0 near t = {t + 0.5 * h:.6g} ({min(w1, w2):.3g})")
    k = _COMM * h * h * (w2 - w1)
    return _expm_traceless(k, h, -0.5 * h * (w1 + w2))


def _apply(m, y0, y1):
    return m[0] * y0 + m[1] * y1, m[2] * y0 + m[3] * y1


@dataclass
class _Stepper:
    omega_sq: Callable[[float], float]
    tol: float
    h: float
    steps: int = 0
    error: float = 0.0

    def advance(self, t: float, t_target: float, y0, y1):
        """Integrate from ``t`` to exactly ``t_target`` (no breakpoints in between)."""
        while t < t_target:
            h = min(self.h, t_target - t)
            last = h == t_target - t
            mb = _magnus4(self.omega_sq, t, h)
            m1 = _magnus4(self.omega_sq, t, 0.5 * h)
            m2 = _magnus4(self.omega_sq, t + 0.5 * h, 0.5 * h)
            b0, b1 = _apply(mb, y0, y1)
            s0, s1 = _apply(m1, y0, y1)
            s0, s1 = _apply(m2, s0, s1)
            err = max(abs(b0 - s0) / max(abs(s0), 1e-300),
                      abs(b1 - s1) / max(abs(s1), 1e-300)) / 15.0
            if err <= self.tol:
                y0, y1 = s0, s1
                t = t_target if last else t + h
                self.steps += 1
                self.error += err
                if self.steps > MAX_STEPS:
                    raise ToleranceNotMet(f"more than {MAX_STEPS} steps")
                factor = 4.0 if err == 0.0 else min(4.0, max(0.2, 0.9 * (self.tol / err) ** 0.2))
                if not last or factor < 1.0:
                    self.h = h * factor
            else:
                self.h = h * max(0.2, 0.9 * (self.tol / err) ** 0.2)
            if self.h < 1e-13 * max(1.0, abs(t)):
                raise ToleranceNotMet(f"step size underflow at t = {t:.6g}")
        return y0, y1


def _segments(t0: float, t1: float, breakpoints) -> list:
    cuts = sorted({t0, t1, *(b for b in breakpoints if t0 < b < t1)})
    return list(zip(cuts[:-1], cuts[1:]))


def solve_mode_equation(freq: FrequencyProfile, y0, t_span=None, tol: float = DEFAULT_TOL,
                        t_eval=None):
    """Propagate ``(chi, chi')`` through ``chi'' + Omega^2 chi = 0``.

    Returns ``(t, chi, chi_dot, info)`` where ``info`` holds the step count and
    the accumulated local error estimate.  ``y0`` may be real or complex.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    t0, t1 = (freq.t_start, freq.t_end) if t_span is None else map(float, t_span)
    if t1 < t0:
        raise DomainError("t_span must be increasing")
    t_eval = np.linspace(t0, t1, 201) if t_eval is None else np.asarray(t_eval, dtype=float)
    if t_eval.size and (t_eval[0] < t0 or t_eval[-1] > t1 or np.any(np.diff(t_eval) < 0)):
        raise DomainError("t_eval must be sorted and lie inside t_span")

    w0 = freq.omega_sq(t0)
    stepper = _Stepper(freq.omega_sq, tol, h=0.05 / math.sqrt(max(w0, 1e-300)))
    a, b = complex(y0[0]), complex(y0[1])
    chi = np.empty(t_eval.size, dtype=complex)
    chi_dot = np.empty(t_eval.size, dtype=complex)
    stops = sorted(set(freq.breakpoints) | set(t_eval.tolist()) | {t0, t1})
    stops = [s for s in stops if t0 <= s <= t1]
    t = t0
    out = 0
    while out < t_eval.size and t_eval[out] == t0:
        chi[out], chi_dot[out] = a, b
        out += 1
    for target in stops:
        if target <= t:
            continue
        a, b = stepper.advance(t, target, a, b)
        t = target
        while out < t_eval.size and t_eval[out] == t:
            chi[out], chi_dot[out] = a, b
            out += 1
    info = {"steps": stepper.steps, "error": stepper.error, "chi_end": a, "chi_dot_end": b}
    return t_eval, chi, chi_dot, info


# ---------------------------------------------------------------------------
# Bogoliubov extraction
# ---------------------------------------------------------------------------

def wronskian(chi, chi_dot):
    """i (chi* chi' - chi chi'*), equal to 1 for a normalised positive-frequency solution."""
    chi = np.asarray(chi)
    chi_dot = np.asarray(chi_dot)
    return (-2.0 * np.imag(np.conj(chi) * chi_dot))


def bogoliubov_coefficients(chi: complex, chi_dot: complex, omega: float):
    """Project ``(chi, chi')`` onto the out-modes of a constant frequency ``omega``.

    With u(t) = exp(-i omega (t - T)) / sqrt(2 omega) referenced to the
    extraction time T, ``chi = A u + B u*`` and the out-operator is
    ``a_out = A a_in + conj(B) a_in^dag``.  We report the coefficients of
    ``a_out = alpha a_in + beta a_in^dag`` after a global phase rotation of
    ``a_out`` that makes ``alpha`` real and non-negative; the phase of
    ``beta`` then fixes the squeezing phase (see :func:`squeeze_parameter`).
    """
    root = math.sqrt(omega / 2.0)
    big_a = root * (chi + 1j * chi_dot / omega)
    big_b = root * (chi - 1j * chi_dot / omega)
    phase = np.exp(-1j * np.angle(big_a)) if big_a != 0 else 1.0
    alpha = abs(big_a)
    beta = np.conj(big_b) * phase
    return complex(alpha), complex(beta)


@dataclass
class ModeEvolution:
    """Result of :func:`integrate_mode`."""

    t: np.ndarray
    chi: np.ndarray
    chi_dot: np.ndarray
    alpha: complex
    beta: complex
    xi: complex
    n_created: float
    wronskian_drift: float
    error_estimate: float
    omega_initial: float
    omega_final: float
    steps: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def normalization_error(self) -> float:
        return abs(abs(self.alpha) ** 2 - abs(self.beta) ** 2 - 1.0)

    def omega_sq_samples(self, freq: FrequencyProfile) -> np.ndarray:
        return np.array([freq.omega_sq(x) for x in self.t])


def _vacuum(omega: float):
    chi0 = 1.0 / math.sqrt(2.0 * omega)
    return complex(chi0), complex(-1j * omega * chi0)


def integrate_mode(freq: FrequencyProfile, t_span=None, tol: float = DEFAULT_TOL,
                   n_samples: int = 201, t_eval=None,
                   flat_tol: float = DEFAULT_FLAT_TOL) -> ModeEvolution:
    """Evolve the in-vacuum mode function through ``freq`` and extract (alpha, beta).

    Parameters
    ----------
    freq : FrequencyProfile
        Omega^2(t) with flat head and tail.
    t_span : (float, float), optional
        Window; defaults to the profile's own.  It must start on the head and
        end on the tail.
    tol : float
        Local relative tolerance of the Magnus stepper.
    n_samples, t_eval
        Output sampling (``t_eval`` wins when given).
    flat_tol : float
        Allowed relative variation of Omega^2 on head and tail.

    Raises
    ------
    NonConstantBoundary, NegativeFrequencySquared, ToleranceNotMet
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    t0, t1 = (freq.t_start, freq.t_end) if t_span is None else map(float, t_span)
    if t0 > freq.head_end + 1e-12 or t1 < freq.tail_start - 1e-12:
        raise NonConstantBoundary("t_span must start on the flat head and end on the flat tail")
    variation = freq.boundary_variation()
    if variation > flat_tol:
        raise NonConstantBoundary(
            f"Omega^2 varies by {variation:.3g} (relative) on head/tail, limit {flat_tol:.3g}")
    edge_in, edge_out = freq.edge_omega_sq()
    w_in = edge_in if t0 == freq.t_start else freq.omega_sq(t0)
    w_out = edge_out if t1 == freq.t_end else freq.omega_sq(t1)
    for w, where in ((w_in, t0), (w_out, t1)):
        if w <= 0:
            raise NegativeFrequencySquared(f"Omega^2 = {w:.3g} at t = {where:.6g}")
    omega_i, omega_f = math.sqrt(w_in), math.sqrt(w_out)
    if t_eval is None:
        t_eval = np.linspace(t0, t1, max(int(n_samples), 2))
    t, chi, chi_dot, info = solve_mode_equation(freq, _vacuum(omega_i), (t0, t1), tol, t_eval)

    alpha, beta = bogoliubov_coefficients(info["chi_end"], info["chi_dot_end"], omega_f)
    n_created = abs(beta) ** 2
    drift = float(np.max(np.abs(wronskian(chi, chi_dot) - 1.0))) if t.size else 0.0
    drift = max(drift, abs(abs(alpha) ** 2 - n_created - 1.0))
    err = info["error"]
    scale = abs(alpha) + abs(beta)
    n_error = 2.0 * err * scale * (abs(beta) + err * scale) + info["steps"] * _EPS * (1.0 + 2.0 * n_created)
    xi = _xi_from_beta(beta)
    return ModeEvolution(t=t, chi=chi, chi_dot=chi_dot, alpha=alpha, beta=beta, xi=xi,
                         n_created=n_created, wronskian_drift=drift, error_estimate=n_error,
                         omega_initial=omega_i, omega_final=omega_f, steps=info["steps"])


def _xi_from_beta(beta: complex) -> complex:
    # one-mode squeezer S(xi) = exp((xi a^dag^2 - xi* a^2)/2) gives
    # S^dag a S = cosh|xi| a + e^{i arg xi} sinh|xi| a^dag, so with alpha real
    # the squeezing phase equals the phase of beta
    r = math.asinh(abs(beta))
    if r == 0.0:
        return 0j
    return complex(r * beta / abs(beta))


def squeeze_parameter(ev: ModeEvolution, tol: float = 1e-8) -> complex:
    """Complex squeezing parameter with ``|xi| = asinh|beta|`` and ``arg xi = arg beta``."""
    if ev.normalization_error > tol:
        raise NotNormalized(
            f"| |alpha|^2 - |beta|^2 - 1 | = {ev.normalization_error:.3g} exceeds {tol:.3g}")
    return _xi_from_beta(ev.beta)


def sudden_limit(omega_i: float, omega_f: float):
    """Particle number and ``|xi|`` for an instantaneous jump ``omega_i -> omega_f``.

    Matching chi and chi' at the jump gives
    ``|beta| = |omega_f - omega_i| / (2 sqrt(omega_i omega_f))``.
    """
    if not (omega_i > 0 and omega_f > 0):
        raise DomainError("frequencies must be positive")
    beta = abs(omega_f - omega_i) / (2.0 * math.sqrt(omega_i * omega_f))
    return beta * beta, math.asinh(beta)


def transfer_matrix(freq: FrequencyProfile, t_span=None, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Real 2x2 map ``(chi(t0), chi'(t0)) -> (chi(t1), chi'(t1))``."""
    t0, t1 = (freq.t_start, freq.t_end) if t_span is None else t_span
    cols = []
    for y0 in ((1.0, 0.0), (0.0, 1.0)):
        _, _, _, info = solve_mode_equation(freq, y0, (t0, t1), tol, t_eval=np.array([]))
        cols.append([info["chi_end"].real, info["chi_dot_end"].real])
    return np.array(cols).T


def bogoliubov_from_transfer(m: np.ndarray, omega_i: float, omega_f: float):
    """(alpha, beta) of a transfer matrix between constant-frequency regions."""
    chi0, dchi0 = _vacuum(omega_i)
    chi = m[0, 0] * chi0 + m[0, 1] * dchi0
    dchi = m[1, 0] * chi0 + m[1, 1] * dchi0
    return bogoliubov_coefficients(chi, dchi, omega_f)
