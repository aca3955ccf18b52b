"""Scenario configuration files.

The format is INI-like: ``[section]`` headers, ``key = value`` lines and ``#``
comments.  Every key is checked against :data:`SCHEMA`; unknown sections or
keys are errors.

Frequencies and times may carry units (``Hz``, ``kHz``, ``MHz``, ``s``, ``ms``,
``us``/``µs``, ``ns``).  Physical values are converted to the dimensionless
units used internally: frequencies are divided by the reference frequency
nu_ref (the trap frequency at t = 0) and times are multiplied by
2 pi nu_ref, so that one time unit is one radian of the initial oscillation.
Values without units are taken as already dimensionless.
"""

from __future__ import annotations

import configparser
import copy
import hashlib
import math
import re
from dataclasses import dataclass, field

from .errors import ParseError, ValidationError
from .ramps import SHAPES

KINDS = ("trap_single_ion", "trap_chain", "cosmology")
REQUIRED = object()

FREQUENCY_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "μs": 1e-6, "ns": 1e-9}

# section -> key -> (type, default)
SCHEMA = {
    "scenario": {"kind": (("choice",) + KINDS, REQUIRED), "seed": ("int", 0)},
    "ramp": {
        "omega_initial": ("frequency", REQUIRED),
        "omega_final": ("frequency", REQUIRED),
        "rise_time": ("time", REQUIRED),
        "shape": (("choice",) + SHAPES, "tanh"),
        "head_hold": ("time", 0.0),
        "tail_hold": ("time", 0.0),
    },
    "prepare": {
        "omega_start": ("frequency", REQUIRED),
        "ramp_time": ("time", REQUIRED),
        "shape": (("choice",) + SHAPES, "tanh"),
        "hold": ("time", 0.0),
    },
    "chain": {"n_ions": ("int", 1), "modes": ("modes", "all")},
    "state": {
        "initial": (("choice", "thermal", "vacuum"), "thermal"),
        "mean_n": ("float", 0.0),
        "n_max": ("int", 128),
    },
    "readout": {
        "sequences": ("sequences", ("acd", "bcd")),
        "pulse_model": (("choice", "ideal_pi", "rabi_dynamics"), "ideal_pi"),
        "lamb_dicke": ("float", 0.3),
        "trials": ("int", 0),
        "efficiency": ("float", 1.0),
        "target_mode": ("int", 0),
    },
    "sweep": {
        "parameter": ("str", REQUIRED),
        "start": ("raw", REQUIRED),
        "stop": ("raw", REQUIRED),
        "count": ("int", REQUIRED),
        "spacing": (("choice", "linear", "log"), "linear"),
    },
    "cosmology": {
        "a_initial": ("float", 1.0),
        "a_final": ("float", REQUIRED),
        "duration": ("float", REQUIRED),
        "shape": (("choice", "de_sitter") + SHAPES, "de_sitter"),
        "head_hold": ("float", 0.0),
        "tail_hold": ("float", 0.0),
        "zeta": ("float", 0.0),
        "k_min": ("float", 0.1),
        "k_max": ("float", 10.0),
        "k_count": ("int", 0),
    },
    "output": {"directory": ("str", "out"), "samples": ("int", 201)},
}

SECTIONS_BY_KIND = {
    "trap_single_ion": {"scenario", "ramp", "prepare", "chain", "state", "readout", "sweep", "output"},
    "trap_chain": {"scenario", "ramp", "prepare", "chain", "state", "readout", "sweep", "output"},
    "cosmology": {"scenario", "cosmology", "sweep", "output"},
}

_KEY_RE = re.compile(r"^[a-z][a-z0-9_]*$")
_NUM_UNIT_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-zµμ]*)\s*$")


@dataclass
class Quantity:
    value: float
    physical: bool  # True if a unit was given (value in Hz or s)


def _parse_number(key, text):
    m = _NUM_UNIT_RE.match(text)
    if not m:
        raise ValidationError(key, f"expected a number, got {text!r}")
    return float(m.group(1)), m.group(2)


def parse_quantity(key: str, text: str, dimension: str) -> Quantity:
    """Parse ``"2 MHz"``, ``"1 us"`` or a bare number."""
    value, unit = _parse_number(key, text)
    if not math.isfinite(value):
        raise ValidationError(key, "value must be finite")
    if not unit:
        return Quantity(value, False)
    table = FREQUENCY_UNITS if dimension == "frequency" else TIME_UNITS
    factor = table.get(unit.lower() if dimension == "frequency" else unit)
    if factor is None:
        raise ValidationError(key, f"unit {unit!r} is not a {dimension} unit ({', '.join(table)})")
    return Quantity(value * factor, True)


def _convert(key, raw, kind):
    text = raw.strip()
    if kind in ("frequency", "time"):
        return parse_quantity(key, text, kind)
    if kind == "float":
        value, unit = _parse_number(key, text)
        if unit:
            raise ValidationError(key, "this key takes a plain number")
        if not math.isfinite(value):
            raise ValidationError(key, "value must be finite")
        return value
    if kind == "int":
        try:
            return int(text)
        except ValueError:
            raise ValidationError(key, f"expected an integer, got {text!r}") from None
    if kind == "modes":
        if text == "all":
            return "all"
        try:
            modes = tuple(int(x) for x in text.split(","))
        except ValueError:
            raise ValidationError(key, "expected 'all' or a comma-separated list of indices") from None
        if not modes or min(modes) < 0 or len(set(modes)) != len(modes):
            raise ValidationError(key, "mode indices must be distinct and >= 0")
        return modes
    if kind == "sequences":
        seqs = tuple(s.strip() for s in text.split(",") if s.strip())
        bad = [s for s in seqs if s not in ("acd", "bcd")]
        if bad or not seqs:
            raise ValidationError(key, f"sequences must be drawn from acd, bcd; got {text!r}")
        return seqs
    if kind in ("str", "raw"):
        if not text:
            raise ValidationError(key, "value must not be empty")
        return text
    if isinstance(kind, tuple) and kind[0] == "choice":
        if text not in kind[1:]:
            raise ValidationError(key, f"expected one of {', '.join(kind[1:])}; got {text!r}")
        return text
    raise AssertionError(kind)


@dataclass
class ScenarioConfig:
    """Validated scenario with all lengths, times and frequencies dimensionless.

    ``values`` maps section -> key -> converted value (absent optional
    sections are missing).  ``units`` records the physical reference, if
    any: ``nu_ref_hz`` and ``time_unit_s`` (seconds per time unit).
    """

    kind: str
    values: dict
    text: str = ""
    units: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return self.values["scenario"]["seed"]

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

    def section(self, name):
        return self.values.get(name)

    def has(self, name) -> bool:
        return name in self.values

    def with_value(self, dotted: str, value) -> "ScenarioConfig":
        """Copy with ``section.key`` replaced by a dimensionless ``value``."""
        section, key = dotted.split(".", 1)
        clone = copy.deepcopy(self)
        clone.values.setdefault(section, {})[key] = value
        return clone

    # builders ---------------------------------------------------------
    def build_ramp(self):
        from .ramps import TrapRamp, preparation_protocol

        r = self.values["ramp"]
        main = dict(omega_initial=r["omega_initial"], omega_final=r["omega_final"],
                    rise_time=r["rise_time"], shape=r["shape"])
        prep = self.values.get("prepare")
        if prep is None:
            return TrapRamp(head_hold=r["head_hold"], tail_hold=r["tail_hold"], **main)
        return preparation_protocol(prep["omega_start"], r["omega_initial"], r["omega_final"],
                                   prep["ramp_time"], r["rise_time"], prep_shape=prep["shape"],
                                   shape=r["shape"], head_hold=r["head_hold"],
                                   low_hold=prep["hold"], tail_hold=r["tail_hold"])

    def build_history(self):
        from .cosmo import ScaleFactorHistory

        c = self.values["cosmology"]
        return ScaleFactorHistory.shaped(c["a_initial"], c["a_final"], c["duration"], c["shape"],
                                         c["head_hold"], c["tail_hold"])

    def k_grid(self):
        import numpy as np

        from .cosmo import default_k_grid

        c = self.values["cosmology"]
        if c["k_count"] > 0:
            return np.geomspace(c["k_min"], c["k_max"], c["k_count"])
        return default_k_grid(c["k_min"], c["k_max"])


def _read(text):
    parser = configparser.ConfigParser(interpolation=None, strict=True, default_section="\0none",
                                       inline_comment_prefixes=("#",), comment_prefixes=("#",),
                                       empty_lines_in_values=False)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("expected a [section] header before the first key", exc.lineno) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ParseError(exc.message.split(": ", 1)[-1] if hasattr(exc, "message") else str(exc),
                         exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0]
        raise ParseError("expected 'key = value'", lineno) from None
    except configparser.Error as exc:
        raise ParseError(str(exc)) from None
    return parser


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate configuration text.

    Raises
    ------
    ParseError
        for malformed lines (with the line number).
    ValidationError
        for unknown, missing or invalid keys (naming the key).
    """
    parser = _read(text)
    raw = {s: dict(parser.items(s)) for s in parser.sections()}

    for section, items in raw.items():
        if section not in SCHEMA:
            raise ValidationError(section, "unknown section")
        for key in items:
            if not _KEY_RE.match(key):
                raise ValidationError(f"{section}.{key}", "keys must be lowercase snake_case")
            if key not in SCHEMA[section]:
                raise ValidationError(f"{section}.{key}", "unknown key")

    if "scenario" not in raw or "kind" not in raw["scenario"]:
        raise ValidationError("scenario.kind", "missing required key")
    kind = _convert("scenario.kind", raw["scenario"]["kind"], SCHEMA["scenario"]["kind"][0])
    allowed = SECTIONS_BY_KIND[kind]
    for section in raw:
        if section not in allowed:
            raise ValidationError(section, f"section not used by kind {kind}")
    needed = {"trap_single_ion": ("ramp",), "trap_chain": ("ramp", "chain"),
              "cosmology": ("cosmology",)}[kind]
    for section in needed:
        raw.setdefault(section, {})
    raw.setdefault("output", {})

    values = {}
    for section, items in raw.items():
        out = {}
        for key, (typ, default) in SCHEMA[section].items():
            dotted = f"{section}.{key}"
            if key in items:
                out[key] = _convert(dotted, items[key], typ)
            elif default is REQUIRED:
                raise ValidationError(dotted, "missing required key")
            else:
                out[key] = default
        values[section] = out
    for section in SECTIONS_BY_KIND[kind] & {"scenario", "state", "readout", "chain"}:
        values.setdefault(section, {k: d for k, (_, d) in SCHEMA[section].items()})

    config = ScenarioConfig(kind, values, text)
    _apply_units(config)
    _validate(config)
    return config


def _reference(config):
    v = config.values
    if config.kind == "cosmology":
        return None
    if "prepare" in v:
        return "prepare.omega_start", v["prepare"]["omega_start"]
    return "ramp.omega_initial", v["ramp"]["omega_initial"]


def _apply_units(config):
    ref = _reference(config)
    nu_ref = None
    if ref is not None:
        ref_key, ref_q = ref
        if ref_q.physical:
            nu_ref = ref_q.value
            if not nu_ref > 0:
                raise ValidationError(ref_key, "reference frequency must be positive")
            config.units = {"nu_ref_hz": nu_ref, "time_unit_s": 1.0 / (2.0 * math.pi * nu_ref),
                            "reference_key": ref_key}
        else:
            config.units = {"reference_key": ref_key}

    def convert(dotted, q, dim):
        if not isinstance(q, Quantity):
            return q
        if not q.physical:
            return q.value
        if nu_ref is None:
            raise ValidationError(dotted, "physical units need a physical reference frequency "
                                          f"({ref[0] if ref else 'none for this kind'})")
        return q.value / nu_ref if dim == "frequency" else q.value * 2.0 * math.pi * nu_ref

    for section, items in config.values.items():
        for key, typ in ((k, SCHEMA[section][k][0]) for k in list(items)):
            if typ in ("frequency", "time"):
                items[key] = convert(f"{section}.{key}", items[key], typ)

    sweep = config.values.get("sweep")
    if sweep is not None:
        name = sweep["parameter"]
        if "." not in name:
            raise ValidationError("sweep.parameter", "expected section.key")
        section, key = name.split(".", 1)
        spec = SCHEMA.get(section, {}).get(key)
        if spec is None or section not in SECTIONS_BY_KIND[config.kind]:
            raise ValidationError("sweep.parameter", f"{name!r} is not a parameter of this kind")
        typ = spec[0]
        if typ not in ("frequency", "time", "float"):
            raise ValidationError("sweep.parameter", f"{name!r} is not a continuous parameter")
        if section not in config.values:
            raise ValidationError("sweep.parameter", f"section [{section}] is not present")
        for end in ("start", "stop"):
            dotted = f"sweep.{end}"
            q = parse_quantity(dotted, sweep[end], typ) if typ != "float" else _convert(dotted, sweep[end], "float")
            sweep[end] = convert(dotted, q, typ)


def _positive(config, dotted, allow_zero=False):
    section, key = dotted.split(".")
    value = config.values[section][key]
    ok = value >= 0 if allow_zero else value > 0
    if not ok:
        raise ValidationError(dotted, f"must be {'>= 0' if allow_zero else '> 0'}, got {value!r}")


def _validate(config):
    v = config.values
    if config.kind != "cosmology":
        for key in ("ramp.omega_initial", "ramp.omega_final"):
            _positive(config, key)
        if v["ramp"]["shape"] != "step":
            _positive(config, "ramp.rise_time")
        for key in ("ramp.rise_time", "ramp.head_hold", "ramp.tail_hold"):
            _positive(config, key, allow_zero=True)
        if "prepare" in v:
            _positive(config, "prepare.omega_start")
            _positive(config, "prepare.ramp_time")
            _positive(config, "prepare.hold", allow_zero=True)
        n = v["chain"]["n_ions"]
        if not 1 <= n <= 64:
            raise ValidationError("chain.n_ions", "must lie in 1..64")
        if config.kind == "trap_single_ion" and n != 1:
            raise ValidationError("chain.n_ions", "trap_single_ion has exactly one ion")
        modes = v["chain"]["modes"]
        if modes != "all" and max(modes) >= n:
            raise ValidationError("chain.modes", f"mode index out of range for {n} ions")
        st = v["state"]
        _positive(config, "state.mean_n", allow_zero=True)
        if st["initial"] == "vacuum" and st["mean_n"] != 0:
            raise ValidationError("state.mean_n", "vacuum initial state has mean_n = 0")
        if not 32 <= st["n_max"] <= 1024:
            raise ValidationError("state.n_max", "must lie in 32..1024")
        ro = v["readout"]
        if not 0 <= ro["lamb_dicke"] < 1:
            raise ValidationError("readout.lamb_dicke", "must lie in [0, 1)")
        if ro["trials"] < 0:
            raise ValidationError("readout.trials", "must be >= 0 (0 disables sampling)")
        if not 0 < ro["efficiency"] <= 1:
            raise ValidationError("readout.efficiency", "must lie in (0, 1]")
        if not 0 <= ro["target_mode"] < n:
            raise ValidationError("readout.target_mode", f"must lie in 0..{n - 1}")
    else:
        c = v["cosmology"]
        for key in ("cosmology.a_initial", "cosmology.a_final", "cosmology.k_min"):
            _positive(config, key)
        if c["shape"] != "step":
            _positive(config, "cosmology.duration")
        for key in ("cosmology.head_hold", "cosmology.tail_hold"):
            _positive(config, key, allow_zero=True)
        if not c["k_max"] > c["k_min"]:
            raise ValidationError("cosmology.k_max", "must exceed k_min")
        if c["k_count"] < 0:
            raise ValidationError("cosmology.k_count", "must be >= 0 (0 selects the default grid)")
    if v["output"]["samples"] < 2:
        raise ValidationError("output.samples", "must be >= 2")
    sweep = v.get("sweep")
    if sweep is not None:
        if sweep["count"] < 1:
            raise ValidationError("sweep.count", "must be >= 1")
        if sweep["spacing"] == "log" and not (sweep["start"] > 0 and sweep["stop"] > 0):
            raise ValidationError("sweep.start", "log spacing needs positive end points")


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
