"""Equilibrium positions and axial normal modes of a linear ion chain.

Lengths are measured in l = (gamma / omega_ax(0)^2)^(1/3), which removes the
Coulomb strength gamma from every formula.  In these units the static
force balance reads

    u_i = sum_{j != i} sign(i - j) / (u_i - u_j)^2,

and the chain is the minimum of the convex energy

    E(u) = sum_i u_i^2 / 2 + sum_{i < j} 1 / |u_i - u_j|.

Linearisation
-------------
Write q_i = b q_i^0 + dq_i.  The Coulomb force on ion i is
gamma sum_j sign(i-j) (q_i - q_j)^-2; for an ordered chain
sign(i-j) (q_i - q_j)^-2 = (q_i - q_j) / |q_i - q_j|^3, whose derivative with
respect to q_i is -2 / |q_i - q_j|^3 and with respect to q_j is
+2 / |q_i - q_j|^3.  Evaluated on the scaled chain b u every distance picks
up a factor b, so the Coulomb force linearises to

    -(1 / b^3) sum_j A_ij dq_j,
    A_ij = -2 / |u_i - u_j|^3   (i != j),
    A_ii = +2 sum_{k != i} |u_i - u_k|^-3,

in units of omega_ax(0)^2.  The fluctuation equation is therefore
dq'' + omega_ax^2(t) dq + A dq / b^3 = 0; the matrix M of the linearised
equation of motion is -A, and the eigenvalues of A are the omega_kappa^2 of
the phonon modes.  A has zero row sums (a rigid shift costs no Coulomb
energy, so the centre-of-mass eigenvalue is 0), and A u = 2 u because the
Coulomb force is homogeneous of degree -2 in the positions; this is the
breathing mode with omega_kappa^2 = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (DegeneratePositions, DomainError, NegativeEigenvalue, NoConvergence,
                     NotSymmetric)

MAX_IONS = 64
GAP_FLOOR = 1e-6
JACOBI_THRESHOLD = 1e-14
EIGEN_CLAMP = 1e-9


def force_residual(u: np.ndarray) -> np.ndarray:
    """u_i - sum_{j != i} sign(i - j) / (u_i - u_j)^2 for an ordered chain."""
    u = np.asarray(u, dtype=float)
    d = u[:, None] - u[None, :]
    inv = np.divide(np.sign(d), d * d, out=np.zeros_like(d), where=d != 0.0)
    return u - inv.sum(axis=1)


def potential_energy(u: np.ndarray) -> float:
    u = np.asarray(u, dtype=float)
    iu = np.triu_indices(u.size, 1)
    gaps = np.abs(u[:, None] - u[None, :])[iu]
    return 0.5 * float(u @ u) + float(np.sum(1.0 / gaps))


def solve_equilibrium(n_ions: int, tol: float = 1e-12, max_iter: int = 200,
                      restarts: int = 3) -> np.ndarray:
    """Equilibrium positions by damped Newton iteration on the force balance.

    Starts from uniform spacing 2 and halves the step whenever the residual
    grows or the ordering would break; restarts with a tighter initial
    spacing if that fails.  Antisymmetry about the centre is imposed after
    every step.
    """
    if not isinstance(n_ions, (int, np.integer)) or not 1 <= n_ions <= MAX_IONS:
        raise DomainError(f"n_ions must be an integer in 1..{MAX_IONS}, got {n_ions!r}")
    if tol <= 0:
        raise DomainError("tol must be positive")
    if n_ions == 1:
        return np.zeros(1)

    spacing = 2.0
    for _ in range(restarts + 1):
        u = spacing * (np.arange(n_ions) - 0.5 * (n_ions - 1))
        u = _newton(u, tol, max_iter)
        if u is not None:
            return u
        spacing *= 0.5
    raise NoConvergence(f"equilibrium for N = {n_ions} did not converge")


def _newton(u, tol, max_iter):
    res = force_residual(u)
    norm = np.max(np.abs(res))
    for _ in range(max_iter):
        if norm <= tol:
            return u
        jac = np.eye(u.size) + coulomb_hessian(u)
        step = -np.linalg.solve(jac, res)
        lam = 1.0
        for _ in range(60):
            trial = u + lam * step
            trial = 0.5 * (trial - trial[::-1])
            if np.all(np.diff(trial) > 0):
                tres = force_residual(trial)
                tnorm = np.max(np.abs(tres))
                if tnorm < norm or tnorm <= tol:
                    break
            lam *= 0.5
        else:
            return None
        u, res, norm = trial, tres, tnorm
    return u if norm <= tol else None


def coulomb_hessian(positions) -> np.ndarray:
    """Coulomb part A of the linearised equations of motion (see module docs)."""
    u = np.asarray(positions, dtype=float)
    if u.ndim != 1:
        raise DomainError("positions must be a 1-d array")
    n = u.size
    if n == 1:
        return np.zeros((1, 1))
    d = np.abs(u[:, None] - u[None, :])
    off = ~np.eye(n, dtype=bool)
    if np.min(d[off]) < GAP_FLOOR:
        raise DegeneratePositions(f"ion gap below {GAP_FLOOR}")
    inv3 = np.zeros_like(d)
    inv3[off] = 1.0 / d[off] ** 3
    a = -2.0 * inv3
    a[np.diag_indices(n)] = 2.0 * inv3.sum(axis=1)
    return a


def jacobi_eigh(a: np.ndarray, threshold: float = JACOBI_THRESHOLD, max_sweeps: int = 100):
    """Cyclic Jacobi diagonalisation of a small dense symmetric matrix.

    Returns unsorted ``(eigenvalues, eigenvectors)`` with eigenvectors in the
    columns.  Sweeps stop once the off-diagonal Frobenius norm drops below
    ``threshold`` times the Frobenius norm of the input.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(np.linalg.norm(a), 1.0)
    for _ in range(max_sweeps):
        off = math.sqrt(np.sum(a * a, where=~np.eye(n, dtype=bool)))
        if off <= threshold * scale:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * (abs(a[p, p]) + abs(a[q, q])):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    raise NoConvergence("Jacobi sweeps did not converge")


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    mags = np.abs(vec)
    # ties go to the highest index
    k = int(np.flatnonzero(mags >= mags.max() * (1.0 - 1e-9))[-1])
    return -vec if vec[k] < 0 else vec


def normal_modes(hessian, clamp: float = EIGEN_CLAMP):
    """Ascending eigenvalues and orthonormal eigenvectors (columns) of the Hessian.

    Eigenvalues in ``[-clamp, 0)`` are set to zero; anything more negative
    raises :class:`NegativeEigenvalue`.  Each eigenvector is signed so that
    its largest-magnitude component is positive.
    """
    a = np.asarray(hessian, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetric("hessian must be square")
    if np.max(np.abs(a - a.T), initial=0.0) > 1e-12 * max(np.max(np.abs(a), initial=0.0), 1.0):
        raise NotSymmetric("hessian is not symmetric")
    w, v = jacobi_eigh(a)
    order = np.argsort(w, kind="stable")
    w, v = w[order], v[:, order]
    if w.size and w[0] < -clamp:
        raise NegativeEigenvalue(f"eigenvalue {w[0]:.3g} < -{clamp:g}")
    w = np.where(w < 0.0, 0.0, w)
    v = np.column_stack([_fix_sign(v[:, k]) for k in range(v.shape[1])])
    return w, v


@dataclass(frozen=True)
class ChainConfiguration:
    """Equilibrium chain together with its Coulomb Hessian and phonon spectrum."""

    n_ions: int
    positions: np.ndarray
    hessian: np.ndarray
    mode_freqs_sq: np.ndarray
    mode_vectors: np.ndarray

    @classmethod
    def build(cls, n_ions: int, tol: float = 1e-12) -> "ChainConfiguration":
        u = solve_equilibrium(n_ions, tol)
        a = coulomb_hessian(u)
        w, v = normal_modes(a)
        return cls(n_ions, u, a, w, v)

    @property
    def trap_frequencies(self) -> np.ndarray:
        """Small-oscillation frequencies sqrt(1 + omega_kappa^2) of the static chain."""
        return np.sqrt(1.0 + self.mode_freqs_sq)
