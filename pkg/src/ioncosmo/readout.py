"""Sideband/carrier readout of a motional distribution.

The ion starts in the bright internal state |down> with phonon populations
P(n).  A red sideband of order m couples |down, n> to |up, n - m>; the carrier
(m = 0) couples |down, n> to |up, n>.  After the pulses the fluorescence
detection step reports the probability of |down>.

Two pulse models are available:

``ideal_pi``
    Each sideband swaps exactly its designated pair (|down, m> <-> |up, 0>)
    and leaves every other level alone.  The carrier swaps |down, n> and
    |up, n> for every n.  The sequence (rsb2, carrier) then leaves exactly
    P(2) bright and (rsb1, carrier) exactly P(1).
``rabi_dynamics``
    Resonant two-level rotations for every coupled pair, with Rabi
    frequencies scaled by :func:`rabi_coupling`.  Pulse durations are in
    units of the bare Rabi period, so a pair with relative coupling c
    transfers sin^2(pi c duration).

Only populations are tracked between initial Fock states: the input is a
diagonal density matrix and every pulse conserves n - (spin flips), so
different initial n never interfere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import constants

from .errors import DomainError, UnknownPulse
from .fockstate import FockDistribution

PULSE_KINDS = {"carrier": 0, "rsb1": 1, "rsb2": 2}
PULSE_MODELS = ("ideal_pi", "rabi_dynamics")
LAMB_DICKE = 0.3
SEQUENCES = {"acd": ("rsb2", "carrier"), "bcd": ("rsb1", "carrier")}


def lamb_dicke_parameter(wavelength: float = 280e-9, trap_frequency: float = 2e6,
                         mass_amu: float = 24.98583696, beam_factor: float = math.sqrt(2.0)) -> float:
    """eta = dk sqrt(hbar / (2 m omega)) for Raman beams with dk = beam_factor 2 pi / wavelength.

    Defaults describe 25Mg+ at a 2 MHz axial frequency and 280 nm beams at
    90 degrees, which gives eta = 0.319; :data:`LAMB_DICKE` rounds this.
    """
    dk = beam_factor * 2.0 * math.pi / wavelength
    mass = mass_amu * constants.atomic_mass
    omega = 2.0 * math.pi * trap_frequency
    return dk * math.sqrt(constants.hbar / (2.0 * mass * omega))


def _check_eta(eta):
    if not (0.0 <= eta < 1.0):
        raise DomainError(f"Lamb-Dicke parameter must lie in [0, 1), got {eta!r}")


def rabi_coupling(n: int, m: int, eta: float) -> float:
    """|<n - m| exp(i eta (a + a^dag)) |n>|, the sideband coupling relative to the bare carrier.

    Equals e^(-eta^2/2) eta^m sqrt((n-m)!/n!) |L_(n-m)^(m)(eta^2)|; the
    Laguerre polynomial comes from its three-term recurrence.
    """
    _check_eta(eta)
    if not (isinstance(n, (int, np.integer)) and isinstance(m, (int, np.integer))) or not 0 <= m <= n:
        raise DomainError(f"need integers n >= m >= 0, got n={n!r}, m={m!r}")
    if m > 0 and eta == 0.0:
        return 0.0
    k = n - m
    x = eta * eta
    lag_prev, lag = 0.0, 1.0
    for j in range(k):
        lag_prev, lag = lag, ((2 * j + 1 + m - x) * lag - (j + m) * lag_prev) / (j + 1)
    log_pref = -0.5 * x + 0.5 * (math.lgamma(k + 1) - math.lgamma(n + 1))
    if m > 0:
        log_pref += m * math.log(eta)
    return math.exp(log_pref) * abs(lag)


@dataclass(frozen=True)
class PulseSpec:
    """One Raman pulse.

    ``duration`` is in units of the bare Rabi period; ``None`` selects the
    pi time of the designated transition (|down, m> -> |up, 0> for a
    sideband of order m, |down, 0> -> |up, 0> for the carrier).
    """

    kind: str
    duration: Optional[float] = None
    lamb_dicke: float = LAMB_DICKE

    def __post_init__(self):
        if self.kind not in PULSE_KINDS:
            raise UnknownPulse(f"unknown pulse {self.kind!r}; expected one of {tuple(PULSE_KINDS)}")
        _check_eta(self.lamb_dicke)
        if self.duration is not None and not (self.duration >= 0 and math.isfinite(self.duration)):
            raise DomainError("duration must be finite and >= 0")

    @property
    def order(self) -> int:
        return PULSE_KINDS[self.kind]

    def pi_time(self) -> float:
        c = rabi_coupling(self.order, self.order, self.lamb_dicke)
        if c == 0.0:
            raise DomainError(f"{self.kind} does not couple at eta = {self.lamb_dicke}")
        return 0.5 / c

    @property
    def effective_duration(self) -> float:
        return self.pi_time() if self.duration is None else self.duration


def named_sequence(name: str, lamb_dicke: float = LAMB_DICKE, durations=None) -> list:
    """Pulses of sequence ``"acd"`` or ``"bcd"`` (detection is implicit)."""
    if name not in SEQUENCES:
        raise UnknownPulse(f"unknown sequence {name!r}; expected one of {tuple(SEQUENCES)}")
    kinds = SEQUENCES[name]
    durations = (None,) * len(kinds) if durations is None else tuple(durations)
    return [PulseSpec(k, d, lamb_dicke) for k, d in zip(kinds, durations)]


@dataclass
class ReadoutOutcome:
    """Bright probability after a sequence, resolved by initial phonon number."""

    bright_probability: float
    per_n_transfer: np.ndarray
    total_probability: float
    sequence: tuple = ()
    model: str = "ideal_pi"
    sampled_counts: Optional[tuple] = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if not -1e-12 <= self.bright_probability <= 1 + 1e-12:
            raise DomainError("bright_probability outside [0, 1]")
        self.bright_probability = min(max(self.bright_probability, 0.0), 1.0)


def _ideal(pulses, n_levels):
    # populations of |down, n> (row 0) and |up, n> (row 1) for one initial n
    out = np.zeros(n_levels)
    for n0 in range(n_levels):
        pops = np.zeros((2, n_levels))
        pops[0, n0] = 1.0
        for p in pulses:
            m = p.order
            if m == 0:
                pops = pops[::-1].copy()
            elif m < n_levels:
                pops[0, m], pops[1, 0] = pops[1, 0], pops[0, m]
        out[n0] = pops[0].sum()
    return out


def _rabi(pulses, n_levels):
    out = np.zeros(n_levels)
    for n0 in range(n_levels):
        amp = np.zeros((2, n_levels), dtype=complex)
        amp[0, n0] = 1.0
        for p in pulses:
            m, d, eta = p.order, p.effective_duration, p.lamb_dicke
            for n in range(m, n_levels):
                down, up = amp[0, n], amp[1, n - m]
                if down == 0 and up == 0:
                    continue
                half = math.pi * rabi_coupling(n, m, eta) * d
                c, s = math.cos(half), math.sin(half)
                amp[0, n] = c * down - 1j * s * up
                amp[1, n - m] = -1j * s * down + c * up
        out[n0] = float(np.sum(np.abs(amp[0]) ** 2))
    return out


def apply_sequence(dist: FockDistribution, sequence, mode: str = "ideal_pi") -> ReadoutOutcome:
    """Bright-state probability after ``sequence`` acting on ``dist``.

    Parameters
    ----------
    dist : FockDistribution
    sequence : str or sequence of PulseSpec or str
        A named sequence (``"acd"``, ``"bcd"``) or explicit pulses; bare
        strings inside a list are pulse kinds at their pi times.
    mode : {"ideal_pi", "rabi_dynamics"}
    """
    if mode not in PULSE_MODELS:
        raise UnknownPulse(f"unknown pulse model {mode!r}; expected one of {PULSE_MODELS}")
    if isinstance(sequence, str):
        pulses = named_sequence(sequence)
    else:
        pulses = [p if isinstance(p, PulseSpec) else PulseSpec(p) for p in sequence]
    if not pulses:
        raise DomainError("sequence must contain at least one pulse")
    n_levels = dist.n_max + 1
    per_n = (_ideal if mode == "ideal_pi" else _rabi)(pulses, n_levels)
    weights = dist.populations
    bright = math.fsum(per_n * weights)
    total = math.fsum(weights)
    return ReadoutOutcome(bright, per_n, total, tuple(p.kind for p in pulses), mode)


def sample_detection(outcome: ReadoutOutcome, trials: int, seed: int,
                     efficiency: float = 1.0) -> tuple:
    """Binomial bright counts; returns ``(trials, brights, seed)`` and stores it on ``outcome``.

    A bright ion is registered with probability ``efficiency``.
    """
    if not isinstance(trials, (int, np.integer)) or trials < 1:
        raise DomainError("trials must be a positive integer")
    if not 0.0 < efficiency <= 1.0:
        raise DomainError("efficiency must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    brights = int(rng.binomial(int(trials), efficiency * outcome.bright_probability))
    outcome.sampled_counts = (int(trials), brights, seed)
    return outcome.sampled_counts
