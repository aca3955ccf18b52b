"""Fock-space population distributions of a single oscillator mode.

Two independent routes lead to the final phonon statistics:

* the Bogoliubov route: the mode solver gives ``|xi|`` and the populations
  follow from the squeezed vacuum / squeezed thermal state built here;
* the oracle route (:func:`evolve_fock_oracle`): brute-force Schrodinger
  evolution of H(t) = p^2/2 + Omega^2(t) x^2/2 in a truncated number basis.

Populations never depend on the phase of ``xi``; only ``|xi|`` is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import DomainError, ToleranceNotMet, TruncationTooSmall

DEFAULT_N_MAX = 128
MAX_N_MAX = 1024
TAIL_LIMIT = 1e-6
ORACLE_TAIL_LIMIT = 1e-4


@dataclass
class FockDistribution:
    """Truncated phonon-number distribution P(0..n_max)."""

    populations: np.ndarray
    n_max: int
    tail_bound: float
    mean_n: float
    label: str = "custom"
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.populations = np.asarray(self.populations, dtype=float)
        if self.populations.shape != (self.n_max + 1,):
            raise DomainError("populations must have length n_max + 1")
        if np.any(self.populations < -1e-15) or np.any(self.populations > 1 + 1e-12):
            raise DomainError("populations must lie in [0, 1]")
        self.populations = np.clip(self.populations, 0.0, 1.0)

    def p(self, n: int) -> float:
        return float(self.populations[n]) if 0 <= n <= self.n_max else 0.0

    @property
    def total(self) -> float:
        return math.fsum(self.populations)

    @property
    def truncated_mean(self) -> float:
        return float(np.dot(np.arange(self.n_max + 1), self.populations))

    def total_variation(self, other: "FockDistribution") -> float:
        n = max(self.n_max, other.n_max) + 1
        a = np.zeros(n)
        b = np.zeros(n)
        a[: self.n_max + 1] = self.populations
        b[: other.n_max + 1] = other.populations
        return 0.5 * float(np.sum(np.abs(a - b)))

    @classmethod
    def from_populations(cls, populations, label="custom") -> "FockDistribution":
        pops = np.asarray(populations, dtype=float)
        tail = max(0.0, 1.0 - math.fsum(pops))
        mean = float(np.dot(np.arange(pops.size), pops))
        return cls(pops, pops.size - 1, tail, mean, label)


def _tail(pops) -> float:
    return max(0.0, 1.0 - math.fsum(pops))


def _auto(builder, n_max, limit=TAIL_LIMIT):
    """Call ``builder(n)`` with doubling truncation until the tail is below ``limit``."""
    if n_max is not None:
        dist = builder(int(n_max))
        if dist.tail_bound > limit:
            raise TruncationTooSmall(
                f"tail mass {dist.tail_bound:.3g} above n_max = {n_max} exceeds {limit:g}")
        return dist
    n = DEFAULT_N_MAX
    while True:
        dist = builder(n)
        if dist.tail_bound <= limit:
            return dist
        if n >= MAX_N_MAX:
            raise TruncationTooSmall(
                f"tail mass {dist.tail_bound:.3g} still above {limit:g} at n_max = {MAX_N_MAX}")
        n = min(2 * n, MAX_N_MAX)


def thermal_distribution(mean_n: float, n_max: int | None = None) -> FockDistribution:
    """Geometric law P(n) = nbar^n / (nbar + 1)^(n + 1).

    The tail above ``n_max`` is known exactly, ``(nbar / (nbar + 1))^(n_max + 1)``,
    so an explicit ``n_max`` is accepted whatever the tail.
    """
    if not (mean_n >= 0 and math.isfinite(mean_n)):
        raise DomainError("mean_n must be finite and >= 0")

    def build(n):
        ratio = mean_n / (mean_n + 1.0)
        pops = ratio ** np.arange(n + 1) / (mean_n + 1.0)
        return FockDistribution(pops, n, ratio ** (n + 1), mean_n, "thermal")

    if n_max is not None:
        return build(int(n_max))
    return _auto(build, None)


def squeezed_vacuum_distribution(xi_magnitude: float, n_max: int | None = None) -> FockDistribution:
    """P(2m) = (2m)! / (4^m (m!)^2) tanh^(2m) r / cosh r, zero on odd levels."""
    r = float(abs(xi_magnitude))
    if not math.isfinite(r):
        raise DomainError("xi_magnitude must be finite")

    def build(n):
        pops = np.zeros(n + 1)
        t2 = math.tanh(r) ** 2
        term = 1.0 / math.cosh(r)
        for m in range(n // 2 + 1):
            pops[2 * m] = term
            term *= (2 * m + 1) / (2 * m + 2) * t2
        return FockDistribution(pops, n, _tail(pops), math.sinh(r) ** 2, "squeezed_vacuum")

    return _auto(build, n_max)


# ---------------------------------------------------------------------------
# operator construction
# ---------------------------------------------------------------------------

def _pair_offdiag(dim: int) -> np.ndarray:
    """sqrt((n+1)(n+2)) = <n+2| a^dag^2 |n> for n = 0..dim-3."""
    n = np.arange(dim - 2, dtype=float)
    return np.sqrt((n + 1.0) * (n + 2.0))


def _parity_blocks(dim: int):
    return np.arange(0, dim, 2), np.arange(1, dim, 2)


def squeeze_operator_blocks(r: float, dim: int):
    """Even/odd blocks of S(r) = exp(r (a^dag^2 - a^2) / 2) in a ``dim``-level basis.

    The generator only couples n to n +- 2, so each parity block is a
    tridiagonal antisymmetric matrix; scipy's Pade scaling-and-squaring
    ``expm`` exponentiates it.
    """
    off = _pair_offdiag(dim)
    blocks = []
    for idx in _parity_blocks(dim):
        k = idx.size
        g = np.zeros((k, k))
        vals = 0.5 * r * off[idx[:-1]] if k > 1 else np.zeros(0)
        g[np.arange(1, k), np.arange(k - 1)] = vals   # a^dag^2 raises n by 2
        g[np.arange(k - 1), np.arange(1, k)] = -vals
        blocks.append((idx, expm(g)))
    return blocks


def squeezed_thermal_distribution(xi_magnitude: float, thermal_mean_n: float,
                                  n_max: int | None = None) -> FockDistribution:
    """Diagonal of S rho_th S^dag with S the one-mode squeezer of strength ``|xi|``.

    The thermal density matrix and S are built in a working basis about
    twice as large as the requested truncation so that truncation of the
    operator does not reach the reported levels.
    """
    r = float(abs(xi_magnitude))
    if not (thermal_mean_n >= 0 and math.isfinite(thermal_mean_n) and math.isfinite(r)):
        raise DomainError("inputs must be finite and >= 0")
    nbar = float(thermal_mean_n)
    mean = (nbar + 0.5) * math.cosh(2.0 * r) - 0.5

    def build(n):
        dim = 2 * (n + 1) + 64
        ratio = nbar / (nbar + 1.0)
        p_th = ratio ** np.arange(dim) / (nbar + 1.0)
        pops = np.zeros(dim)
        unitarity = 0.0
        for idx, s in squeeze_operator_blocks(r, dim):
            weights = p_th[idx]
            keep = weights > 1e-18 * weights[0] if weights.size else weights > 0
            cols = s[:, keep]
            pops[idx] += (cols ** 2) @ weights[keep]
            unitarity = max(unitarity, float(np.max(np.abs(s.T @ s - np.eye(s.shape[0])))))
        head = pops[: n + 1]
        dist = FockDistribution(head, n, _tail(head), mean, "squeezed_thermal")
        dist.info["unitarity_error"] = unitarity
        return dist

    return _auto(build, n_max)


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

def _oracle_profile(freq):
    if hasattr(freq, "omega_sq") and hasattr(freq, "tail_start") and not hasattr(freq, "omega"):
        return freq
    from .modeqn import EffectiveFrequency
    return EffectiveFrequency(freq)


def evolve_fock_oracle(freq, initial: FockDistribution, n_max: int = DEFAULT_N_MAX,
                       tol: float = 1e-9, basis_omega: float | None = None) -> FockDistribution:
    """Evolve a diagonal initial state through H(t) = p^2/2 + Omega^2(t) x^2/2 by brute force.

    The Hamiltonian is written in the number basis of a reference
    frequency w (the initial frequency unless ``basis_omega`` is given),
    truncated to ``n_max + 1`` levels:

        H = (w^2 + Omega^2) / (4 w) (2n + 1) + (Omega^2 - w^2) / (4 w) (a^2 + a^dag^2).

    Each initial number state is propagated with DOP853 across the
    non-flat part of the profile; final populations are read off in the
    eigenbasis of the truncated final Hamiltonian, whose low-lying
    eigenvectors are the number states of the final frequency.  With a
    reference other than the initial frequency, the initial number states
    are likewise taken from the eigenbasis of the initial Hamiltonian.  A
    reference between the two end frequencies, such as their geometric
    mean, keeps large frequency ratios inside a modest truncation.

    Parameters
    ----------
    freq : FrequencyProfile or TrapRamp
    initial : FockDistribution
        Populations in the initial-frequency basis (coherences are taken as zero).
    n_max : int
        Basis truncation, at least 32.
    tol : float
        Relative tolerance of the time integration.
    basis_omega : float, optional
        Reference frequency of the number basis.
    """
    if n_max < 32:
        raise DomainError("n_max must be at least 32")
    if tol <= 0:
        raise DomainError("tol must be positive")
    prof = _oracle_profile(freq)
    dim = n_max + 1
    om_i = math.sqrt(prof.omega_sq(prof.t_start))
    om_b = om_i if basis_omega is None else float(basis_omega)
    if not (om_b > 0 and math.isfinite(om_b)):
        raise DomainError("basis_omega must be finite and positive")
    w_b = om_b * om_b

    n_levels = np.arange(dim, dtype=float)
    p_init = np.zeros(dim)
    m = min(initial.n_max, n_max) + 1
    p_init[:m] = initial.populations[:m]
    active = np.flatnonzero(p_init > 1e-15 * max(p_init.max(), 1e-300))

    off = _pair_offdiag(dim)
    blocks = []
    for idx in _parity_blocks(dim):
        k = idx.size
        x = np.zeros((k, k))
        x[np.arange(1, k), np.arange(k - 1)] = off[idx[:-1]]
        x = x + x.T
        diag = 2.0 * n_levels[idx] + 1.0
        starts = [j for j, level in enumerate(idx) if level in set(active.tolist())]
        blocks.append((idx, diag, x, starts))

    def hamiltonian(w, diag, x):
        return (w_b + w) / (4.0 * om_b) * np.diag(diag) + (w - w_b) / (4.0 * om_b) * x

    window_end = prof.t_end if prof.boundary_variation() > 0 else prof.tail_start
    t0, t1 = prof.head_end, max(prof.head_end, window_end)
    cuts = sorted({t0, t1, *(b for b in prof.breakpoints if t0 < b < t1)})

    w_f = prof.omega_sq(prof.t_end)
    pops = np.zeros(dim)
    norm_drift = 0.0
    edge_mass = 0.0
    edge = (3 * dim) // 4
    for idx, diag, x, starts in blocks:
        if not starts:
            continue
        k = idx.size
        if basis_omega is None:
            psi = np.zeros((k, len(starts)), dtype=complex)
            psi[starts, np.arange(len(starts))] = 1.0
        else:
            # eigenvector j of the even (odd) block is level 2j (2j + 1)
            psi = np.linalg.eigh(hamiltonian(om_i * om_i, diag, x))[1][:, starts].astype(complex)

        def rhs(t, y, diag=diag, x=x, k=k):
            w = prof.omega_sq(t)
            c1 = (w_b + w) / (4.0 * om_b)
            c2 = (w - w_b) / (4.0 * om_b)
            y = y.reshape(k, -1)
            return (-1j * (c1 * diag[:, None] * y + c2 * (x @ y))).ravel()

        y = psi.ravel()
        for a, b in zip(cuts[:-1], cuts[1:]):
            sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=tol, atol=tol * 1e-3)
            if sol.status != 0:
                raise ToleranceNotMet(sol.message)
            y = sol.y[:, -1]
        psi = y.reshape(k, -1)

        energies, vecs = np.linalg.eigh(hamiltonian(w_f, diag, x))
        amp = vecs.T.conj() @ psi
        weights = p_init[idx[starts]]
        pops[idx] += (np.abs(amp) ** 2) @ weights
        norms = np.sum(np.abs(psi) ** 2, axis=0)
        norm_drift = max(norm_drift, float(np.max(np.abs(norms - 1.0))))
        upper = idx >= edge
        edge_mass += float(np.sum(np.abs(psi[upper]) ** 2, axis=0) @ weights)

    if edge_mass > ORACLE_TAIL_LIMIT:
        raise TruncationTooSmall(
            f"{edge_mass:.3g} of the evolved state sits in the top quarter of the basis")
    total = initial.total
    dist = FockDistribution(pops, n_max, _tail(pops), float(n_levels @ pops) / max(total, 1e-300),
                            "oracle")
    dist.info.update(unitarity_drift=norm_drift, edge_mass=edge_mass,
                     omega_initial=om_i, basis_omega=om_b, omega_final=math.sqrt(w_f))
    return dist


@dataclass(frozen=True)
class DiscriminatorRecord:
    p1: float
    p2: float
    ratio: float
    verdict: str


NONCLASSICAL = "nonclassical-signature"
CLASSICAL = "classical-compatible"


def compare_p2_p1(dist: FockDistribution) -> DiscriminatorRecord:
    """Squeezing signature: strictly more population in |2> than in |1>."""
    p1, p2 = dist.p(1), dist.p(2)
    ratio = p2 / p1 if p1 > 0 else (math.inf if p2 > 0 else math.nan)
    return DiscriminatorRecord(p1, p2, ratio, NONCLASSICAL if p2 > p1 else CLASSICAL)
