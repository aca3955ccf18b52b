"""Self-check suite behind ``ioncosmo validate``.

Each check recomputes a quantity with a known answer and compares it with a
threshold; thresholds that describe integration accuracy scale with the
requested tolerance.  ``fault="hessian_sign"`` flips the sign of the Coulomb
Hessian everywhere in the suite as a negative control.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .chain import ChainConfiguration, coulomb_hessian, force_residual, normal_modes, solve_equilibrium
from .classical import integrate_full_chain, integrate_scale_factor
from .cosmo import (CosmologyScenario, ScaleFactorHistory, analogy_map, cosmological_spectrum,
                    ricci_from_scale_factor)
from .errors import SimulationError
from .fockstate import (FockDistribution, evolve_fock_oracle, squeezed_thermal_distribution,
                        squeezed_vacuum_distribution, thermal_distribution)
from .modeqn import DEFAULT_TOL, EffectiveFrequency, integrate_mode
from .ramps import TrapRamp
from .readout import apply_sequence

FAULTS = ("hessian_sign",)


@dataclass
class CheckResult:
    name: str
    observed: float
    threshold: float
    margin: float
    passed: bool
    detail: str = ""
    seconds: float = 0.0


class _Suite:
    def __init__(self, tol, fault):
        if fault is not None and fault not in FAULTS:
            raise ValueError(f"unknown fault {fault!r}; expected one of {FAULTS}")
        self.tol = tol
        self.fault = fault

    # chain helpers honour the injected fault
    def hessian(self, u):
        a = coulomb_hessian(u)
        return -a if self.fault == "hessian_sign" else a

    def spectrum(self, n):
        u = solve_equilibrium(n)
        a = self.hessian(u)
        w, v = normal_modes(a)
        return u, a, w, v

    # each check returns (observed, threshold[, detail]); "at least" checks
    # are written as negative quantities so that smaller is always better
    def chain_com_zero(self):
        return max(abs(self.spectrum(n)[2][0]) for n in range(2, 9)), 1e-10

    def chain_breathing_eigenvalue(self):
        return max(abs(self.spectrum(n)[2][1] - 2.0) for n in range(2, 9)), 1e-10

    def chain_third_eigenvalue_n3(self):
        return abs(self.spectrum(3)[2][2] - 4.8), 1e-10

    def chain_breathing_vector(self):
        worst = 0.0
        for n in range(2, 11):
            u = solve_equilibrium(n)
            worst = max(worst, float(np.max(np.abs(self.hessian(u) @ u - 2.0 * u))))
        return worst, 1e-8

    def chain_orthogonality(self):
        worst = 0.0
        for n in range(2, 11):
            v = self.spectrum(n)[3]
            worst = max(worst, float(np.max(np.abs(v.T @ v - np.eye(n)))))
        return worst, 1e-12

    def chain_force_balance(self):
        return max(float(np.max(np.abs(force_residual(solve_equilibrium(n))))) for n in range(1, 65)), 1e-12

    def scaling_ansatz(self):
        u, a, w, v = self.spectrum(3)
        config = ChainConfiguration(3, u, a, w, v)
        # 50 periods of the initial trap frequency in total
        window = TrapRamp(1.0, 0.7, 10.0, "tanh", 5.0).tail_start
        ramp = TrapRamp(1.0, 0.7, 10.0, "tanh", 5.0, 2 * math.pi * 50 - window)
        traj = integrate_full_chain(config, ramp, tol=self.tol)
        b = integrate_scale_factor(ramp, tol=self.tol)
        dev = traj.q - np.atleast_1d(b(traj.t))[:, None] * u[None, :]
        return float(np.max(np.abs(dev))), 100.0 * self.tol

    def wronskian_sweep(self):
        rng = np.random.default_rng(20240611)
        worst = 0.0
        shapes = ("linear", "tanh", "exponential", "step")
        for i in range(20):
            ramp = TrapRamp(float(rng.uniform(0.2, 2.0)), float(rng.uniform(0.2, 2.0)),
                            float(rng.uniform(0.5, 20.0)), shapes[i % 4], 1.0, 1.0)
            ev = integrate_mode(EffectiveFrequency(ramp), tol=self.tol)
            worst = max(worst, ev.wronskian_drift)
        return worst, 10.0 * self.tol

    def sudden_limit_step(self):
        ev = integrate_mode(EffectiveFrequency(TrapRamp(0.1, 1.0, 0.0, "step", 1.0, 1.0)), tol=self.tol)
        return abs(ev.n_created - 2.025) / 2.025, 1e-2

    def adiabatic_limit(self):
        slow_period = 2 * math.pi / 1.0
        ramp = TrapRamp(1.0, 4.0, 100 * slow_period, "tanh", 1.0, 1.0)
        return integrate_mode(EffectiveFrequency(ramp), tol=self.tol).n_created, 1e-4

    def thermal_closed_form(self):
        d = thermal_distribution(0.05)
        want = np.array([1 / 1.05, 0.05 / 1.05 ** 2, 0.05 ** 2 / 1.05 ** 3])
        return float(np.max(np.abs(d.populations[:3] - want))), 1e-15

    def squeezed_vacuum_p2(self):
        d = squeezed_vacuum_distribution(math.asinh(1.0))
        return abs(d.p(2) - 0.1768), 1e-3

    def squeezed_thermal_mean(self):
        r = 0.6
        d = squeezed_thermal_distribution(r, 0.05)
        return abs(d.truncated_mean - (0.55 * math.cosh(2 * r) - 0.5)), 1e-6

    def oracle_equivalence(self):
        worst = 0.0
        for ramp in (TrapRamp(1.0, 4.0, 0.0, "step", 0.5, 0.5),
                     TrapRamp(1.0, 2.5, 2.0, "linear", 1.0, 1.0),
                     TrapRamp(1.0, 0.4, 1.5, "tanh", 1.0, 1.0)):
            ev = integrate_mode(EffectiveFrequency(ramp), tol=self.tol)
            init = thermal_distribution(0.05)
            oracle = evolve_fock_oracle(ramp, init, 128)
            bog = squeezed_thermal_distribution(abs(ev.xi), 0.05)
            worst = max(worst, oracle.total_variation(bog))
        return worst, 2e-3

    def cosmology_route(self):
        ramp = TrapRamp(1.0, 2.0, 3.0, "tanh", 1.0, 1.0)
        trap = integrate_mode(EffectiveFrequency(ramp), tol=self.tol)
        k = 1.0

        def a_fn(t):
            return math.sqrt(ramp._omega_scalar(t) / k)

        hist = ScaleFactorHistory.from_callable(a_fn, ramp.t_start, ramp.t_end, ramp.head_end,
                                                ramp.tail_start, ramp.breakpoints)
        rec = cosmological_spectrum(CosmologyScenario(hist, 0.0, [k]), self.tol)[0]
        return abs(abs(trap.beta) - abs(rec.beta)), 10.0 * self.tol

    def analogy_round_trip(self):
        ramp = TrapRamp(1.0, 0.8, 20.0, "tanh", 1.0, 1.0)
        b = integrate_scale_factor(ramp, tol=self.tol)
        freq = EffectiveFrequency.for_eigenvalue(ramp, 2.0, b)
        amap = analogy_map(ramp, 2.0, b)
        ts = np.linspace(ramp.t_start, ramp.t_end, 101)
        return max(abs(freq.omega_sq(t) - amap.omega_sq(t)) for t in ts), 1e-12

    def ricci_de_sitter_order(self):
        errors = []
        for n in (41, 81):
            tau = np.linspace(0.0, 1.0, n)
            errors.append(float(np.max(np.abs(ricci_from_scale_factor(np.exp(tau), tau) - 12.0))))
        # reduction factor must be >= 4; reported as 4 - ratio <= 0
        return 4.0 - errors[0] / errors[1], 0.0

    def readout_ideal_exact(self):
        d = FockDistribution.from_populations([0.6, 0.15, 0.25])
        err = max(abs(apply_sequence(d, "acd").bright_probability - 0.25),
                  abs(apply_sequence(d, "bcd").bright_probability - 0.15))
        return err, 1e-15


CHECKS = [name for name in vars(_Suite) if not name.startswith("_") and name not in ("hessian", "spectrum")]


def run_validation(tol: float = DEFAULT_TOL, fault=None, only=None) -> list:
    """Run every check; returns a list of :class:`CheckResult`."""
    suite = _Suite(tol, fault)
    results = []
    for name in CHECKS:
        if only is not None and name not in only:
            continue
        start = time.perf_counter()
        try:
            out = getattr(suite, name)()
            observed, threshold = float(out[0]), float(out[1])
            passed = bool(observed <= threshold)
            detail = ""
        except SimulationError as exc:
            observed, threshold, passed = math.nan, math.nan, False
            detail = f"{type(exc).__name__}: {exc}"
        margin = threshold - observed
        results.append(CheckResult(name, observed, threshold, margin, passed, detail,
                                   time.perf_counter() - start))
    return results


def report(results, tol, fault=None) -> dict:
    return {
        "tol": tol,
        "fault": fault,
        "passed": all(r.passed for r in results),
        "checks": [asdict(r) for r in results],
    }
