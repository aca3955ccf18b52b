"""Scenario orchestration: configuration in, tables out.

Every table is a :class:`Table` of plain Python numbers and strings;
:func:`write_outputs` serialises them (floats with 17 significant digits,
``\\n`` line endings) together with a key = value manifest.  Nothing written
depends on wall-clock time or on the order in which parallel sweep points
finish, so identical (config, seed) pairs give byte-identical CSVs.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .chain import ChainConfiguration
from .classical import integrate_scale_factor
from .config import ScenarioConfig
from .cosmo import CosmologyScenario, cosmological_spectrum
from .errors import NegativeFrequencySquared, NonConstantBoundary, SimulationError
from .fockstate import compare_p2_p1, squeezed_thermal_distribution, thermal_distribution
from .modeqn import DEFAULT_TOL, EffectiveFrequency, integrate_mode
from .readout import apply_sequence, named_sequence, sample_detection

SEQUENCE_LEVEL = {"acd": 2, "bcd": 1}


class ScenarioError(SimulationError):
    """A module error raised while running a scenario, with the stage it came from."""

    def __init__(self, kind, stage, cause):
        self.kind, self.stage, self.cause = kind, stage, cause
        super().__init__(f"{kind} scenario, {stage}: {type(cause).__name__}: {cause}")


@dataclass
class Table:
    name: str
    header: list
    rows: list = field(default_factory=list)

    def column(self, name):
        i = self.header.index(name)
        return [row[i] for row in self.rows]


@dataclass
class RunResult:
    config: ScenarioConfig
    tables: dict
    summary: dict
    data: dict = field(default_factory=dict)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return "" if x is None else str(x)


class _Stage:
    """Context manager that re-raises module errors as :class:`ScenarioError`."""

    def __init__(self, kind, stage):
        self.kind, self.stage = kind, stage

    def __enter__(self):
        return self

    def __exit__(self, typ, exc, tb):
        if exc is not None and isinstance(exc, SimulationError) and not isinstance(exc, ScenarioError):
            raise ScenarioError(self.kind, self.stage, exc) from exc
        return False


# ---------------------------------------------------------------------------
# trap scenarios
# ---------------------------------------------------------------------------

def modes_table(chain: ChainConfiguration) -> Table:
    n = chain.n_ions
    table = Table("modes", ["kappa", "omega_kappa_sq", "frequency"] + [f"v{i}" for i in range(n)])
    freqs = chain.trap_frequencies
    for k in range(n):
        table.rows.append([k, float(chain.mode_freqs_sq[k]), float(freqs[k])]
                          + [float(x) for x in chain.mode_vectors[:, k]])
    return table


def _time_grid(ramp, samples):
    grid = np.linspace(ramp.t_start, ramp.t_end, samples)
    # resolve the last transition even when a long preparation precedes it
    last = getattr(ramp, "segments", None)
    if last is not None:
        off = ramp.offsets[-1]
        seg = ramp.segments[-1]
        a = off + seg.head_end - 0.25 * seg.transition_time
        grid = np.concatenate((grid, np.linspace(max(a, ramp.t_start), ramp.t_end, samples)))
    return np.unique(grid)


def _selected_modes(config, n):
    modes = config.values["chain"]["modes"]
    chosen = list(range(n)) if modes == "all" else list(modes)
    target = config.values["readout"]["target_mode"]
    if target not in chosen:
        chosen.append(target)
    return sorted(chosen)


def _initial_distribution(config):
    st = config.values["state"]
    mean = 0.0 if st["initial"] == "vacuum" else st["mean_n"]
    return thermal_distribution(mean, st["n_max"])


def _trap_core(config, tol, t_eval=None):
    kind = config.kind
    with _Stage(kind, "ramp"):
        ramp = config.build_ramp()
    with _Stage(kind, "chain"):
        chain = ChainConfiguration.build(config.values["chain"]["n_ions"])
    with _Stage(kind, "scale factor"):
        scale = integrate_scale_factor(ramp, tol=tol)
    evolutions = {}
    status = {}
    for k in _selected_modes(config, chain.n_ions):
        freq = EffectiveFrequency.for_eigenvalue(ramp, float(chain.mode_freqs_sq[k]), scale)
        try:
            evolutions[k] = integrate_mode(freq, tol=tol, t_eval=t_eval if t_eval is not None
                                           else np.array([ramp.t_start, ramp.t_end]))
            status[k] = "ok"
        except (NonConstantBoundary, NegativeFrequencySquared) as exc:
            # modes whose Coulomb term keeps breathing after the ramp have no
            # well-defined out-vacuum; report and carry on with the others
            evolutions[k] = None
            status[k] = type(exc).__name__
        except SimulationError as exc:
            raise ScenarioError(kind, f"mode {k}", exc) from exc
    target = config.values["readout"]["target_mode"]
    if evolutions[target] is None:
        raise ScenarioError(kind, f"target mode {target}",
                            SimulationError(f"mode {target} failed: {status[target]}"))
    ev = evolutions[target]
    with _Stage(kind, "populations"):
        initial = _initial_distribution(config)
        final = squeezed_thermal_distribution(abs(ev.xi), initial.mean_n,
                                              config.values["state"]["n_max"])
    ro = config.values["readout"]
    outcomes = {}
    with _Stage(kind, "readout"):
        for i, seq in enumerate(ro["sequences"]):
            outcome = apply_sequence(final, named_sequence(seq, ro["lamb_dicke"]), ro["pulse_model"])
            if ro["trials"] > 0:
                sample_detection(outcome, ro["trials"], config.seed + i, ro["efficiency"])
            outcomes[seq] = outcome
    return dict(ramp=ramp, chain=chain, scale=scale, evolutions=evolutions, status=status,
                target=target, initial=initial, final=final, outcomes=outcomes)


def run_trap(config: ScenarioConfig, tol: float = DEFAULT_TOL) -> RunResult:
    samples = config.values["output"]["samples"]
    with _Stage(config.kind, "ramp"):
        ramp = config.build_ramp()
    grid = _time_grid(ramp, samples)
    core = _trap_core(config, tol, grid)
    chain, scale, evolutions = core["chain"], core["scale"], core["evolutions"]
    tables = {"modes": modes_table(chain)}

    unit = config.units.get("time_unit_s")
    header = ["t"] + (["t_us"] if unit else []) + ["omega_ax", "b"]
    modes = sorted(evolutions)
    for k in modes:
        header += [f"omega_{k}", f"abs_chi_{k}"]
    evo = Table("evolution", header)
    b_vals = np.atleast_1d(scale(grid))
    w_vals = ramp.omega(grid)
    for i, t in enumerate(grid):
        row = [float(t)] + ([float(t) * unit * 1e6] if unit else []) + [float(w_vals[i]), float(b_vals[i])]
        for k in modes:
            ev = evolutions[k]
            if ev is None:
                row += [math.nan, math.nan]
            else:
                w2 = float(w_vals[i]) ** 2 + float(chain.mode_freqs_sq[k]) * ramp.omega_start ** 2 / float(b_vals[i]) ** 3
                row += [math.sqrt(w2), float(abs(ev.chi[i]))]
        evo.rows.append(row)
    tables["evolution"] = evo

    bog = Table("bogoliubov", ["mode", "omega_kappa_sq", "abs_alpha", "abs_beta", "n_created",
                               "abs_xi", "arg_xi", "wronskian_drift", "error_estimate", "status"])
    for k in modes:
        ev = evolutions[k]
        if ev is None:
            bog.rows.append([k, float(chain.mode_freqs_sq[k])] + [math.nan] * 7 + [core["status"][k]])
        else:
            bog.rows.append([k, float(chain.mode_freqs_sq[k]), abs(ev.alpha), abs(ev.beta), ev.n_created,
                             abs(ev.xi), float(np.angle(ev.xi)), ev.wronskian_drift,
                             ev.error_estimate, "ok"])
    tables["bogoliubov"] = bog

    initial, final = core["initial"], core["final"]
    pops = Table("populations", ["n", "p_initial", "p_final"])
    for n in range(final.n_max + 1):
        pops.rows.append([n, initial.p(n), final.p(n)])
    tables["populations"] = pops

    ro = config.values["readout"]
    rd = Table("readout", ["sequence", "level", "pulse_model", "bright_probability", "population",
                           "trials", "brights", "seed"])
    for seq, outcome in core["outcomes"].items():
        level = SEQUENCE_LEVEL[seq]
        trials, brights, seed = outcome.sampled_counts or (None, None, None)
        rd.rows.append([seq, level, ro["pulse_model"], outcome.bright_probability, final.p(level),
                        trials, brights, seed])
    tables["readout"] = rd

    disc = compare_p2_p1(final)
    ev = evolutions[core["target"]]
    summary = {"target_mode": core["target"], "n_created": ev.n_created, "abs_xi": abs(ev.xi),
               "p1": disc.p1, "p2": disc.p2, "verdict": disc.verdict}
    data = dict(ramp=ramp, chain=chain, grid=grid, **{k: core[k] for k in ("initial", "final")})
    return RunResult(config, tables, summary, data)


# ---------------------------------------------------------------------------
# cosmology
# ---------------------------------------------------------------------------

def _cosmo_scenario(config):
    c = config.values["cosmology"]
    return CosmologyScenario(config.build_history(), c["zeta"], config.k_grid())


def run_cosmology(config: ScenarioConfig, tol: float = DEFAULT_TOL) -> RunResult:
    kind = config.kind
    with _Stage(kind, "scale factor"):
        scenario = _cosmo_scenario(config)
    with _Stage(kind, "spectrum"):
        records = cosmological_spectrum(scenario, tol)
    spec = Table("cosmo_spectrum", ["k", "abs_xi", "n_created", "abs_beta", "wronskian_drift",
                                    "error_estimate"])
    for r in records:
        spec.rows.append([r.k, r.xi_magnitude, r.n_created, abs(r.beta), r.wronskian_drift,
                          r.error_estimate])
    h = scenario.history
    grid = np.linspace(h.t_start, h.t_end, config.values["output"]["samples"])
    evo = Table("evolution", ["t", "a", "ricci"])
    for t in grid:
        evo.rows.append([float(t), h.a(float(t)), scenario.ricci_at(float(t))])
    summary = {"k_count": len(records), "n_max_k": max(r.n_created for r in records)}
    return RunResult(config, {"cosmo_spectrum": spec, "evolution": evo}, summary,
                     dict(history=h, records=records))


def run_scenario(config: ScenarioConfig, tol: float = DEFAULT_TOL) -> RunResult:
    """Run one scenario and return its tables (see module docs for the files)."""
    if config.kind == "cosmology":
        return run_cosmology(config, tol)
    return run_trap(config, tol)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def sweep_values(config: ScenarioConfig) -> np.ndarray:
    sw = config.values["sweep"]
    if sw["count"] == 1:
        return np.array([sw["start"]])
    if sw["spacing"] == "log":
        return np.geomspace(sw["start"], sw["stop"], sw["count"])
    return np.linspace(sw["start"], sw["stop"], sw["count"])


def _sweep_point(args):
    config, value, tol = args
    point = config.with_value(config.values["sweep"]["parameter"], float(value))
    try:
        if config.kind == "cosmology":
            records = cosmological_spectrum(_cosmo_scenario(point), tol)
            return [[float(value), r.k, r.xi_magnitude, r.n_created, "ok"] for r in records]
        core = _trap_core(point, tol)
    except SimulationError as exc:
        cause = getattr(exc, "cause", exc)
        width = 3 if config.kind == "cosmology" else 7
        return [[float(value)] + [math.nan] * width + [type(cause).__name__]]
    ev = core["evolutions"][core["target"]]
    final = core["final"]
    brights = [core["outcomes"][s].bright_probability if s in core["outcomes"] else math.nan
               for s in ("acd", "bcd")]
    return [[float(value), ev.n_created, abs(ev.xi), final.p(0), final.p(1), final.p(2)]
            + brights + [compare_p2_p1(final).verdict]]


def _physical_factor(config):
    """Multiplier from dimensionless sweep values to SI, or None."""
    name = config.values["sweep"]["parameter"]
    section, key = name.split(".", 1)
    from .config import SCHEMA

    typ = SCHEMA[section][key][0]
    nu = config.units.get("nu_ref_hz")
    if nu is None or typ not in ("frequency", "time"):
        return None
    return nu if typ == "frequency" else config.units["time_unit_s"]


def run_sweep(config: ScenarioConfig, tol: float = DEFAULT_TOL, workers: int = 1) -> Table:
    """Evaluate every sweep point; results are collected in sweep order."""
    if "sweep" not in config.values:
        raise ScenarioError(config.kind, "sweep", SimulationError("config has no [sweep] section"))
    values = sweep_values(config)
    jobs = [(config, v, tol) for v in values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]

    name = config.values["sweep"]["parameter"]
    factor = _physical_factor(config)
    lead = [name] + ([f"{name}_si"] if factor else [])
    if config.kind == "cosmology":
        table = Table("sweep", lead + ["k", "abs_xi", "n_created", "status"])
    else:
        table = Table("sweep", lead + ["n_created", "abs_xi", "p0", "p1", "p2", "bright_acd",
                                       "bright_bcd", "verdict"])
    for rows in results:
        for row in rows:
            table.rows.append(row[:1] + ([row[0] * factor] if factor else []) + row[1:])
    return table


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def write_table(table: Table, directory) -> str:
    path = os.path.join(directory, f"{table.name}.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([_fmt(x) for x in row])
    return path


def write_manifest(directory, config: ScenarioConfig, command: str, tol: float, files) -> str:
    entries = [("tool", "ioncosmo"), ("version", __version__), ("command", command),
               ("kind", config.kind), ("config_sha256", config.sha256), ("seed", config.seed),
               ("tol", _fmt(float(tol)))]
    nu = config.units.get("nu_ref_hz")
    if nu is not None:
        entries += [("reference_key", config.units["reference_key"]),
                    ("nu_ref_hz", _fmt(nu)),
                    ("frequency_unit", "nu_ref (dimensionless frequency 1 = nu_ref)"),
                    ("time_unit_s", _fmt(config.units["time_unit_s"])),
                    ("time_unit", "1 / (2 pi nu_ref)")]
    else:
        entries.append(("units", "dimensionless"))
    entries.append(("outputs", ",".join(sorted(os.path.basename(f) for f in files))))
    path = os.path.join(directory, "manifest.txt")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for key, value in entries:
            fh.write(f"{key} = {value}\n")
    return path


def write_outputs(tables, directory, config: ScenarioConfig, command: str,
                  tol: float = DEFAULT_TOL) -> list:
    os.makedirs(directory, exist_ok=True)
    files = [write_table(t, directory) for t in tables]
    files.append(write_manifest(directory, config, command, tol, files))
    return files
