import math

import pytest

from ioncosmo.config import load_config, parse_config, parse_quantity
from ioncosmo.errors import ParseError, ValidationError

MINIMAL = """
[scenario]
kind = trap_single_ion

[ramp]
omega_initial = 0.5
omega_final = 1.0
rise_time = 2.0
"""


def test_minimal_config_gets_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.kind == "trap_single_ion"
    assert cfg.values["ramp"]["shape"] == "tanh"
    assert cfg.values["state"] == {"initial": "thermal", "mean_n": 0.0, "n_max": 128}
    assert cfg.values["chain"]["n_ions"] == 1
    assert cfg.values["readout"]["pulse_model"] == "ideal_pi"
    assert cfg.seed == 0
    assert "nu_ref_hz" not in cfg.units


def test_unknown_key_names_the_key():
    with pytest.raises(ValidationError) as err:
        parse_config(MINIMAL + "omega_axial = 3\n")
    assert err.value.key == "ramp.omega_axial"
    assert "omega_axial" in str(err.value)


def test_unknown_section_and_missing_key():
    with pytest.raises(ValidationError):
        parse_config(MINIMAL + "[laser]\npower = 1\n")
    with pytest.raises(ValidationError) as err:
        parse_config("[scenario]\nkind = trap_single_ion\n[ramp]\nomega_initial = 1\nomega_final = 2\n")
    assert err.value.key == "ramp.rise_time"


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError) as err:
        parse_config("kind = trap_single_ion\n")
    assert err.value.line == 1
    with pytest.raises(ParseError) as err:
        parse_config("[scenario]\nkind = trap_single_ion\nthis line is junk\n")
    assert err.value.line == 3
    with pytest.raises(ParseError):
        parse_config(MINIMAL + "[ramp]\nshape = linear\n")


@pytest.mark.parametrize("line, key", [("Omega_final = 1", "ramp.Omega_final"),
                                       ("rise_time = fast", "ramp.rise_time"),
                                       ("shape = cubic", "ramp.shape")])
def test_bad_values(line, key):
    text = MINIMAL.replace("rise_time = 2.0", "rise_time = 2.0\n" + line) if "rise_time" not in line \
        else MINIMAL.replace("rise_time = 2.0", line)
    with pytest.raises(ValidationError) as err:
        parse_config(text)
    assert err.value.key == key


def test_range_checks():
    with pytest.raises(ValidationError) as err:
        parse_config(MINIMAL + "[state]\nn_max = 8\n")
    assert err.value.key == "state.n_max"
    with pytest.raises(ValidationError) as err:
        parse_config(MINIMAL + "[chain]\nn_ions = 3\n")
    assert err.value.key == "chain.n_ions"
    with pytest.raises(ValidationError) as err:
        parse_config(MINIMAL + "[sweep]\nparameter = ramp.rise_time\nstart = 1\nstop = 2\ncount = 0\n")
    assert err.value.key == "sweep.count"


def test_sections_must_suit_the_kind():
    with pytest.raises(ValidationError):
        parse_config("[scenario]\nkind = cosmology\n[cosmology]\na_final = 2\nduration = 1\n"
                     "[ramp]\nomega_initial = 1\nomega_final = 1\nrise_time = 1\n")


def test_quantities():
    assert parse_quantity("x", "200 kHz", "frequency").value == pytest.approx(2e5)
    assert parse_quantity("x", "0.3us", "time").value == pytest.approx(3e-7)
    assert parse_quantity("x", "1 µs", "time").value == pytest.approx(1e-6)
    with pytest.raises(ValidationError):
        parse_quantity("x", "3 furlongs", "time")


def test_physical_units_are_converted():
    cfg = parse_config("""
[scenario]
kind = trap_single_ion
[prepare]
omega_start = 2 MHz
ramp_time = 200 us
[ramp]
omega_initial = 200 kHz
omega_final = 2 MHz
rise_time = 0.3 us   # trailing comment
""")
    assert cfg.values["ramp"]["omega_initial"] == pytest.approx(0.1)
    assert cfg.values["ramp"]["omega_final"] == pytest.approx(1.0)
    assert cfg.values["ramp"]["rise_time"] == pytest.approx(2 * math.pi * 2e6 * 0.3e-6)
    assert cfg.units["nu_ref_hz"] == 2e6
    assert cfg.units["reference_key"] == "prepare.omega_start"


def test_sweep_bounds_use_the_parameter_units():
    cfg = parse_config(MINIMAL.replace("omega_initial = 0.5", "omega_initial = 1 MHz")
                       .replace("omega_final = 1.0", "omega_final = 2 MHz")
                       .replace("rise_time = 2.0", "rise_time = 1 us")
                       + "[sweep]\nparameter = ramp.rise_time\nstart = 0.5 us\nstop = 2 us\ncount = 4\n")
    assert cfg.values["sweep"]["start"] == pytest.approx(2 * math.pi * 1e6 * 0.5e-6)


def test_hash_and_override():
    cfg = parse_config(MINIMAL)
    assert cfg.sha256 == parse_config(MINIMAL).sha256
    assert cfg.sha256 != parse_config(MINIMAL + "\n# note\n").sha256
    other = cfg.with_value("scenario.seed", 9)
    assert other.seed == 9 and cfg.seed == 0


def test_shipped_configs_load(configs_dir):
    names = sorted(p.name for p in configs_dir.glob("*.cfg"))
    assert "paper_envisioned.cfg" in names
    for name in names:
        load_config(configs_dir / name)


def test_paper_config_protocol(configs_dir):
    cfg = load_config(configs_dir / "paper_envisioned.cfg")
    ramp = cfg.build_ramp()
    assert ramp.omega_start == pytest.approx(1.0)
    assert min(ramp.omega(t) for t in ramp.breakpoints) == pytest.approx(0.1)
    assert ramp.omega_end == pytest.approx(1.0)
    assert cfg.values["state"]["mean_n"] == 0.05
