"""Time-dependent axial trap-frequency profiles.

A :class:`TrapRamp` is the hold / transition / hold protocol used throughout
the package: the frequency sits at ``omega_initial`` for ``head_hold``, moves
to ``omega_final`` with one of four shapes, then sits at ``omega_final`` for
``tail_hold``.  Time zero is the start of the head hold.  The profile is
exactly constant outside the transition window, which is what makes the in-
and out-vacua of the mode equation unambiguous.

All quantities are dimensionless: frequencies in units of a reference trap
frequency and times in units of its inverse.

The shape is applied to the frequency itself (not its square):

``linear``
    straight line over ``rise_time``.
``exponential``
    geometric interpolation, ``w_i * (w_f / w_i) ** s`` over ``rise_time``.
``tanh``
    hyperbolic tangent whose 10 %-90 % transit takes exactly ``rise_time``.
    The tangent is cut at ``+-TANH_HALF_WIDTH`` widths and rescaled so it
    reaches both end values exactly; the transition window is therefore
    ``TANH_WINDOW_RATIO * rise_time`` long.
``step``
    instantaneous jump at ``t = head_hold``; ``rise_time`` is ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError

SHAPES = ("linear", "tanh", "exponential", "step")

TANH_HALF_WIDTH = 8.0
# width w such that 2 w atanh(0.8 tanh K) == rise_time
_TANH_WIDTH_PER_RISE = 1.0 / (2.0 * math.atanh(0.8 * math.tanh(TANH_HALF_WIDTH)))
TANH_WINDOW_RATIO = 2.0 * TANH_HALF_WIDTH * _TANH_WIDTH_PER_RISE
_TANH_NORM = math.tanh(TANH_HALF_WIDTH)


def transition_fraction(shape: str, s: float) -> float:
    """Fraction of the way from start to end value at window position ``s`` in [0, 1].

    ``exponential`` is not a fraction of the difference and is handled by
    :func:`interpolate`; here it is treated like ``linear``.
    """
    if s <= 0.0:
        return 0.0
    if s >= 1.0:
        return 1.0
    if shape == "tanh":
        return 0.5 * (1.0 + math.tanh((2.0 * s - 1.0) * TANH_HALF_WIDTH) / _TANH_NORM)
    if shape == "step":
        return 1.0
    return s


def interpolate(shape: str, start: float, end: float, s: float) -> float:
    """Value of a shaped transition from ``start`` to ``end`` at position ``s``."""
    if shape == "exponential":
        s = min(max(s, 0.0), 1.0)
        return start * (end / start) ** s
    return start + (end - start) * transition_fraction(shape, s)


def transition_window(shape: str, rise_time: float) -> float:
    """Duration of the non-flat part of a transition with the given rise time."""
    if shape == "step":
        return 0.0
    if shape == "tanh":
        return TANH_WINDOW_RATIO * rise_time
    return rise_time


@dataclass(frozen=True)
class TrapRamp:
    """Hold, shaped transition, hold.

    Parameters
    ----------
    omega_initial, omega_final : float
        Trap frequencies before and after the transition (> 0).
    rise_time : float
        Transition time; see module docstring for the per-shape meaning.
    shape : str
        One of ``linear``, ``tanh``, ``exponential``, ``step``.
    head_hold, tail_hold : float
        Durations of the flat segments (>= 0).
    """

    omega_initial: float
    omega_final: float
    rise_time: float = 1.0
    shape: str = "tanh"
    head_hold: float = 0.0
    tail_hold: float = 0.0

    def __post_init__(self):
        for name in ("omega_initial", "omega_final"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and positive, got {value!r}")
        if self.shape not in SHAPES:
            raise DomainError(f"unknown ramp shape {self.shape!r}; expected one of {SHAPES}")
        if self.shape != "step" and not (self.rise_time > 0 and math.isfinite(self.rise_time)):
            raise DomainError(f"rise_time must be positive for shape {self.shape!r}")
        if self.shape == "step" and self.rise_time < 0:
            raise DomainError("rise_time must be non-negative")
        if self.head_hold < 0 or self.tail_hold < 0:
            raise DomainError("hold durations must be non-negative")

    # -- geometry ---------------------------------------------------------
    @property
    def t_start(self) -> float:
        return 0.0

    @property
    def transition_time(self) -> float:
        return transition_window(self.shape, self.rise_time)

    @property
    def head_end(self) -> float:
        return self.head_hold

    @property
    def tail_start(self) -> float:
        return self.head_hold + self.transition_time

    @property
    def duration(self) -> float:
        return self.tail_start + self.tail_hold

    @property
    def t_end(self) -> float:
        return self.duration

    @property
    def omega_start(self) -> float:
        return self.omega_initial

    @property
    def omega_end(self) -> float:
        return self.omega_final

    @property
    def breakpoints(self) -> tuple:
        if self.shape == "step":
            return (self.head_end,)
        return (self.head_end, self.tail_start)

    # -- evaluation -------------------------------------------------------
    def _omega_scalar(self, t: float) -> float:
        if self.shape == "step":
            return self.omega_initial if t < self.head_end else self.omega_final
        if t <= self.head_end:
            return self.omega_initial
        if t >= self.tail_start:
            return self.omega_final
        s = (t - self.head_end) / self.transition_time
        return interpolate(self.shape, self.omega_initial, self.omega_final, s)

    def omega(self, t):
        """Trap frequency at time(s) ``t``; constant extension outside [0, duration]."""
        if np.ndim(t) == 0:
            return self._omega_scalar(float(t))
        t = np.asarray(t, dtype=float)
        return np.array([self._omega_scalar(x) for x in t.ravel()]).reshape(t.shape)

    def omega_sq(self, t):
        w = self.omega(t)
        return w * w

    __call__ = omega

    def reversed(self) -> "TrapRamp":
        """Time-mirrored ramp: ``reversed().omega(t) == omega(duration - t)``.

        Only exact for the symmetric shapes (linear, tanh, exponential, step).
        """
        return TrapRamp(self.omega_final, self.omega_initial, self.rise_time,
                        self.shape, self.tail_hold, self.head_hold)


class RampSequence:
    """Several :class:`TrapRamp` segments played back to back.

    Each segment must start at the frequency the previous one ended on.
    Used for the preparation/restoration protocol: an adiabatic lowering of
    the trap followed by a fast return.
    """

    def __init__(self, segments: Sequence[TrapRamp]):
        segments = tuple(segments)
        if not segments:
            raise DomainError("RampSequence needs at least one segment")
        for prev, nxt in zip(segments, segments[1:]):
            if not math.isclose(prev.omega_final, nxt.omega_initial, rel_tol=1e-12):
                raise DomainError("consecutive segments must join at the same frequency")
        self.segments = segments
        offsets = [0.0]
        for seg in segments[:-1]:
            offsets.append(offsets[-1] + seg.duration)
        self.offsets = tuple(offsets)

    t_start = 0.0

    @property
    def duration(self) -> float:
        return self.offsets[-1] + self.segments[-1].duration

    t_end = duration

    @property
    def head_end(self) -> float:
        return self.segments[0].head_end

    @property
    def tail_start(self) -> float:
        return self.offsets[-1] + self.segments[-1].tail_start

    @property
    def omega_start(self) -> float:
        return self.segments[0].omega_initial

    @property
    def omega_end(self) -> float:
        return self.segments[-1].omega_final

    @property
    def breakpoints(self) -> tuple:
        points = set()
        for off, seg in zip(self.offsets, self.segments):
            points.update(off + b for b in seg.breakpoints)
        return tuple(sorted(points))

    def _omega_scalar(self, t: float) -> float:
        for off, seg in zip(reversed(self.offsets), reversed(self.segments)):
            if t >= off:
                return seg._omega_scalar(t - off)
        return self.omega_start

    def omega(self, t):
        if np.ndim(t) == 0:
            return self._omega_scalar(float(t))
        t = np.asarray(t, dtype=float)
        return np.array([self._omega_scalar(x) for x in t.ravel()]).reshape(t.shape)

    def omega_sq(self, t):
        w = self.omega(t)
        return w * w

    __call__ = omega

    def reversed(self) -> "RampSequence":
        return RampSequence([seg.reversed() for seg in reversed(self.segments)])

    def __repr__(self):
        return f"RampSequence({list(self.segments)!r})"


def preparation_protocol(omega_start: float, omega_low: float, omega_end: float,
                         prep_time: float, rise_time: float, *, prep_shape="tanh",
                         shape="tanh", head_hold=0.0, low_hold=0.0,
                         tail_hold=0.0) -> RampSequence:
    """Slow lowering from ``omega_start`` to ``omega_low``, then a fast return to ``omega_end``."""
    return RampSequence([
        TrapRamp(omega_start, omega_low, prep_time, prep_shape, head_hold, low_hold),
        TrapRamp(omega_low, omega_end, rise_time, shape, 0.0, tail_hold),
    ])
