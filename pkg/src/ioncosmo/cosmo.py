"""Scalar-field modes in a flat FRW universe and the trap/cosmology dictionary.

The time coordinate t is related to proper time by d tau = a^3 dt.  In it the
Fourier modes of a scalar field with curvature coupling zeta obey

    chi_k'' + (a^4 k^2 + zeta a^6 R) chi_k = 0,

which is the trap mode equation with a different Omega^2(t).  Everything
below builds that Omega^2(t) and hands it to :func:`ioncosmo.modeqn.integrate_mode`.

Ricci scalar
------------
In proper time the flat-FRW scalar is R = 6 (a_tt / a + (a_t / a)^2), with
subscripts denoting tau-derivatives.  With a_t = a' / a^3 and
a_tt = a'' / a^6 - 3 a'^2 / a^7 (primes are t-derivatives) this becomes

    R = 6 (a'' / a^7 - 2 a'^2 / a^8).

:func:`ricci_from_scale_factor` differences a in proper time; histories
given in t are first resampled on a uniform proper-time grid
(:func:`proper_time_samples`).  Exponential expansion a = exp(H tau) reads
a(t) = (1 - 3 H t)^(-1/3) in this coordinate and has R = 12 H^2.

Each cosmological mode k pairs with -k, so the squeezing on this side is
two-mode; the occupation per mode is still sinh^2|xi_k|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp, trapezoid
from scipy.interpolate import CubicSpline

from .errors import DomainError, InsufficientSamples, NegativeFrequencySquared
from .modeqn import DEFAULT_TOL, FunctionFrequency, integrate_mode
from .ramps import SHAPES, interpolate, transition_window

HISTORY_SHAPES = SHAPES + ("de_sitter",)
RICCI_GRID = 4097
POSITIVITY_GRID = 2001
ANALOGY_NOTE = (
    "k^2 <-> omega_kappa^2 and a^4(t) <-> 1/b^3(t) pair the mode-dependent terms; "
    "zeta a^6 R(t) <-> omega_ax^2(t) pairs the mode-independent terms. "
    "The exponents of a and b differ (a = b^(-3/4)): the correspondence holds for "
    "the coefficient functions in Omega^2, not for the scale factors themselves. "
    "An expanding universe (a increasing) corresponds to a contracting ion cloud (b decreasing)."
)


def default_k_grid(k_min: float = 0.1, k_max: float = 10.0, per_decade: int = 16) -> np.ndarray:
    """Log-spaced wavenumbers with ``per_decade`` intervals per decade, ends included."""
    if not (0 < k_min < k_max):
        raise DomainError("need 0 < k_min < k_max")
    count = int(round(per_decade * math.log10(k_max / k_min))) + 1
    return np.geomspace(k_min, k_max, max(count, 2))


class ScaleFactorHistory:
    """a(t) > 0, constant on a head and a tail segment.

    Use :meth:`shaped` for the hold / transition / hold family or
    :meth:`from_callable` for anything else.
    """

    def __init__(self, fn: Callable[[float], float], t_start: float, t_end: float,
                 head_end: float, tail_start: float, breakpoints=(),
                 ricci_exact: Optional[Callable[[float], float]] = None, label: str = "custom",
                 edges: Optional[tuple] = None):
        if not (t_start <= head_end <= tail_start <= t_end):
            raise DomainError("need t_start <= head_end <= tail_start <= t_end")
        self._fn = fn
        self.t_start, self.t_end = float(t_start), float(t_end)
        self.head_end, self.tail_start = float(head_end), float(tail_start)
        self.breakpoints = tuple(sorted(set(float(b) for b in breakpoints)))
        self.ricci_exact = ricci_exact
        self.label = label
        # a on the head and on the tail; needed when a jump sits on a window edge
        self.edges = (fn(self.t_start), fn(self.t_end)) if edges is None else tuple(edges)

    @classmethod
    def from_callable(cls, fn, t_start, t_end, head_end=None, tail_start=None, breakpoints=()):
        head_end = t_start if head_end is None else head_end
        tail_start = t_end if tail_start is None else tail_start
        return cls(fn, t_start, t_end, head_end, tail_start, breakpoints)

    @classmethod
    def shaped(cls, a_initial: float, a_final: float, duration: float, shape: str = "tanh",
               head_hold: float = 0.0, tail_hold: float = 0.0) -> "ScaleFactorHistory":
        """a moves from ``a_initial`` to ``a_final`` with one of the ramp shapes.

        ``shape="de_sitter"`` gives exponential expansion in proper time over
        exactly ``duration`` (constant Hubble rate H, reported as ``hubble``).
        For the other shapes ``duration`` is the rise time as defined in
        :mod:`ioncosmo.ramps`.
        """
        for name, v in (("a_initial", a_initial), ("a_final", a_final)):
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be finite and positive")
        if shape not in HISTORY_SHAPES:
            raise DomainError(f"unknown shape {shape!r}; expected one of {HISTORY_SHAPES}")
        if head_hold < 0 or tail_hold < 0:
            raise DomainError("hold durations must be non-negative")
        if shape != "step" and not duration > 0:
            raise DomainError("duration must be positive")
        t0 = float(head_hold)
        window = duration if shape == "de_sitter" else transition_window(shape, duration)
        t1 = t0 + window
        end = t1 + tail_hold
        bps = (t0,) if shape == "step" else (t0, t1)

        if shape == "de_sitter":
            hubble = (1.0 - (a_initial / a_final) ** 3) / (3.0 * a_initial ** 3 * duration)

            def fn(t):
                if t <= t0:
                    return a_initial
                if t >= t1:
                    return a_final
                return a_initial * (1.0 - 3.0 * hubble * a_initial ** 3 * (t - t0)) ** (-1.0 / 3.0)

            def ricci(t):
                return 12.0 * hubble * hubble if t0 < t < t1 else 0.0

            hist = cls(fn, 0.0, end, t0, t1, bps, ricci, "de_sitter", (a_initial, a_final))
            hist.hubble = hubble
            return hist

        def fn(t):
            if shape == "step":
                return a_initial if t < t0 else a_final
            if t <= t0:
                return a_initial
            if t >= t1:
                return a_final
            return interpolate(shape, a_initial, a_final, (t - t0) / window)

        return cls(fn, 0.0, end, t0, t1, bps, None, shape, (a_initial, a_final))

    def a(self, t):
        if np.ndim(t) == 0:
            return float(self._fn(float(t)))
        t = np.asarray(t, dtype=float)
        return np.array([self._fn(x) for x in t.ravel()]).reshape(t.shape)

    __call__ = a


def ricci_from_scale_factor(a, tau) -> np.ndarray:
    """Ricci scalar R = 6 (a_tt / a + (a_t / a)^2) from a sampled on a uniform proper-time grid.

    Derivatives are second-order finite differences in proper time:
    central in the interior, one-sided (three- and four-point) at the ends.

    Parameters
    ----------
    a : array_like
        Scale factor samples, all positive.
    tau : array_like or float
        Uniformly spaced proper times of the samples, or the spacing itself.
        :func:`proper_time_samples` produces such a grid from a(t).

    Raises
    ------
    InsufficientSamples
        with fewer than four samples.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size < 4:
        raise InsufficientSamples("need at least 4 samples of a")
    if np.any(~np.isfinite(a)) or np.any(a <= 0):
        raise DomainError("a must be finite and positive")
    if np.ndim(tau) == 0:
        h = float(tau)
    else:
        tau = np.asarray(tau, dtype=float)
        if tau.shape != a.shape:
            raise DomainError("tau and a must have the same length")
        steps = np.diff(tau)
        h = float(steps.mean())
        if np.max(np.abs(steps - h)) > 1e-9 * abs(h):
            raise DomainError("proper-time samples must be uniformly spaced")
    if not h > 0:
        raise DomainError("sample spacing must be positive")

    da = np.gradient(a, h, edge_order=2)
    d2a = np.empty_like(a)
    d2a[1:-1] = (a[2:] - 2.0 * a[1:-1] + a[:-2]) / (h * h)
    d2a[0] = (2.0 * a[0] - 5.0 * a[1] + 4.0 * a[2] - a[3]) / (h * h)
    d2a[-1] = (2.0 * a[-1] - 5.0 * a[-2] + 4.0 * a[-3] - a[-4]) / (h * h)
    return 6.0 * (d2a / a + (da / a) ** 2)


def proper_time_samples(history, t0: float, t1: float, count: int, tol: float = 1e-12):
    """Sample a(t) on ``count`` points uniformly spaced in proper time between ``t0`` and ``t1``.

    Integrates dt/d tau = a(t)^-3 with DOP853.  Returns ``(t, tau, a)``
    with tau measured from ``t0``.
    """
    if count < 4:
        raise InsufficientSamples("need at least 4 samples")
    ts = np.linspace(t0, t1, 257)
    tau_total = float(trapezoid(history.a(ts) ** 3, ts))
    # overshoot, then stop exactly at t1 with an event
    span = 1.5 * tau_total + 1e-12

    def rhs(_, y):
        return [history.a(min(y[0], t1)) ** -3]

    def reach(_, y):
        return y[0] - t1
    reach.terminal = True
    sol = solve_ivp(rhs, (0.0, span), [t0], method="DOP853", rtol=tol, atol=tol * max(t1, 1.0),
                    dense_output=True, events=reach)
    tau_end = float(sol.t_events[0][0]) if sol.t_events[0].size else float(sol.t[-1])
    tau = np.linspace(0.0, tau_end, count)
    t = np.clip(sol.sol(tau)[0], t0, t1)
    t[-1] = t1
    return t, tau, history.a(t)


@dataclass
class CosmologyScenario:
    """A scale-factor history, a curvature coupling and the wavenumbers to evolve.

    ``ricci`` may be a callable R(t); when omitted it is finite-differenced
    from a(t) on the transition window (R vanishes on the flat head and
    tail).  Derivative jumps of a(t) at the window edges are not resolved:
    the finite differences only see the smooth interior.
    """

    history: ScaleFactorHistory
    zeta: float = 0.0
    k_grid: np.ndarray = field(default_factory=default_k_grid)
    ricci: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        self.k_grid = np.atleast_1d(np.asarray(self.k_grid, dtype=float))
        if self.k_grid.size == 0 or np.any(~np.isfinite(self.k_grid)) or np.any(self.k_grid < 0):
            raise DomainError("k_grid must be a non-empty list of finite wavenumbers >= 0")
        if not math.isfinite(self.zeta):
            raise DomainError("zeta must be finite")
        if self.ricci is None and self.zeta != 0.0:
            self.ricci = self._finite_difference_ricci()

    def _finite_difference_ricci(self):
        h = self.history
        t0, t1 = h.head_end, h.tail_start
        if t1 <= t0:
            return lambda t: 0.0
        t, tau, a = proper_time_samples(h, t0, t1, RICCI_GRID)
        keep = np.concatenate(([True], np.diff(t) > 0))
        spline = CubicSpline(t[keep], ricci_from_scale_factor(a, tau)[keep])
        return lambda t: float(spline(t)) if t0 < t < t1 else 0.0

    def ricci_at(self, t) -> float:
        return 0.0 if self.ricci is None else float(self.ricci(t))

    def omega_sq_fn(self, k: float) -> Callable[[float], float]:
        a_fn, zeta, k2 = self.history._fn, self.zeta, float(k) ** 2

        if zeta == 0.0:
            def omega_sq(t):
                a = a_fn(t)
                return a ** 4 * k2
        else:
            ricci = self.ricci

            def omega_sq(t):
                a = a_fn(t)
                return a ** 4 * k2 + zeta * a ** 6 * ricci(t)
        return omega_sq

    def frequency(self, k: float) -> FunctionFrequency:
        """Omega_k^2(t) = a^4 k^2 + zeta a^6 R as a profile for the mode solver.

        Raises
        ------
        NegativeFrequencySquared
            if Omega_k^2 <= 0 anywhere on a dense check grid.
        """
        h = self.history
        fn = self.omega_sq_fn(k)
        grid = np.unique(np.concatenate((np.linspace(h.t_start, h.t_end, POSITIVITY_GRID),
                                         [h.t_start, h.t_end])))
        values = np.array([fn(x) for x in grid])
        if np.min(values) <= 0:
            where = grid[int(np.argmin(values))]
            raise NegativeFrequencySquared(
                f"Omega_k^2 = {np.min(values):.3g} <= 0 for k = {k:g} at t = {where:.6g}")
        edges = tuple(a ** 4 * float(k) ** 2 + self.zeta * a ** 6 * self.ricci_at(t)
                      for a, t in zip(h.edges, (h.t_start, h.t_end)))
        return FunctionFrequency(fn, h.t_start, h.t_end, h.head_end, h.tail_start, h.breakpoints,
                                 edges)


@dataclass(frozen=True)
class SpectrumRecord:
    k: float
    xi: complex
    n_created: float
    alpha: complex
    beta: complex
    error_estimate: float
    wronskian_drift: float

    @property
    def xi_magnitude(self) -> float:
        return abs(self.xi)


def cosmological_spectrum(scenario: CosmologyScenario, tol: float = DEFAULT_TOL) -> list:
    """Created-particle spectrum: one :class:`SpectrumRecord` per wavenumber."""
    records = []
    for k in scenario.k_grid:
        ev = integrate_mode(scenario.frequency(k), tol=tol, n_samples=2)
        records.append(SpectrumRecord(float(k), ev.xi, ev.n_created, ev.alpha, ev.beta,
                                      ev.error_estimate, ev.wronskian_drift))
    return records


@dataclass
class AnalogyMap:
    """Trap-side coefficient functions rewritten as cosmological ones.

    Attributes
    ----------
    k_sq : float
        Squared wavenumber, equal to the mode's Coulomb eigenvalue omega_kappa^2.
    a4 : callable
        a^4(t) = 1 / b^3(t).
    curvature_term : callable
        zeta a^6 R (t) = omega_ax^2(t).
    note : str
        Dictionary text; the exponent mismatch is spelled out here.
    """

    k_sq: float
    a4: Callable[[float], float]
    curvature_term: Callable[[float], float]
    scale_factor: Callable[[float], float]
    dictionary: dict
    note: str = ANALOGY_NOTE

    def omega_sq(self, t) -> float:
        return self.a4(t) * self.k_sq + self.curvature_term(t)

    def to_scenario(self, ramp, zeta: float = 1.0) -> CosmologyScenario:
        """Cosmological scenario whose single mode sees the trap mode's Omega^2(t).

        The Ricci scalar is supplied as R = omega_ax^2 / (zeta a^6).
        """
        if zeta == 0:
            raise DomainError("zeta must be nonzero to carry the trap term")
        a_fn = self.scale_factor
        history = ScaleFactorHistory(a_fn, ramp.t_start, ramp.t_end, ramp.head_end,
                                     ramp.tail_start, ramp.breakpoints)

        def ricci(t):
            return self.curvature_term(t) / (zeta * a_fn(t) ** 6)

        return CosmologyScenario(history, zeta, [math.sqrt(self.k_sq)], ricci)


def analogy_map(ramp, omega_kappa_sq: float = 0.0, scale_factor=None) -> AnalogyMap:
    """Express one trap phonon mode in cosmological variables.

    Parameters
    ----------
    ramp : TrapRamp or RampSequence
    omega_kappa_sq : float
        Coulomb eigenvalue of the mode in absolute units (see
        :class:`ioncosmo.modeqn.EffectiveFrequency`).
    scale_factor : callable, optional
        b(t); taken as 1 when omitted.
    """
    if omega_kappa_sq < 0:
        raise DomainError("omega_kappa_sq must be >= 0")
    b_fn = (lambda t: 1.0) if scale_factor is None else (lambda t: float(scale_factor(t)))
    omega = ramp._omega_scalar

    def a4(t):
        return 1.0 / b_fn(t) ** 3

    def curvature_term(t):
        return omega(t) ** 2

    def a(t):
        return b_fn(t) ** -0.75

    dictionary = {
        "k^2": "omega_kappa^2",
        "a^4(t)": "1/b^3(t)",
        "zeta a^6 R(t)": "omega_ax^2(t)",
        "expanding universe": "contracting ion cloud",
    }
    return AnalogyMap(float(omega_kappa_sq), a4, curvature_term, a, dictionary)
