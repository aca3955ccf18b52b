import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import eval_genlaguerre, gammaln

from ioncosmo.errors import DomainError, UnknownPulse
from ioncosmo.fockstate import (FockDistribution, squeezed_thermal_distribution,
                                squeezed_vacuum_distribution, thermal_distribution)
from ioncosmo.readout import (LAMB_DICKE, PulseSpec, ReadoutOutcome, apply_sequence,
                              lamb_dicke_parameter, named_sequence, rabi_coupling,
                              sample_detection)


def test_coupling_special_values():
    assert all(rabi_coupling(n, 0, 0.0) == 1.0 for n in range(10))
    assert rabi_coupling(3, 1, 0.0) == 0.0
    expected = math.exp(-0.045) * 0.09 / math.sqrt(2.0)
    assert rabi_coupling(2, 2, 0.3) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(DomainError):
        rabi_coupling(1, 2, 0.3)
    with pytest.raises(DomainError):
        rabi_coupling(2, 1, 1.5)


@given(st.integers(0, 60), st.integers(0, 3), st.floats(0.01, 0.9))
def test_coupling_matches_scipy_laguerre(n, m, eta):
    if m > n:
        return
    x = eta * eta
    ref = math.exp(-x / 2 + m * math.log(eta) + 0.5 * (gammaln(n - m + 1) - gammaln(n + 1)))
    ref *= abs(eval_genlaguerre(n - m, m, x))
    assert rabi_coupling(n, m, eta) == pytest.approx(ref, rel=1e-9, abs=1e-300)


def test_lamb_dicke_estimate():
    assert lamb_dicke_parameter() == pytest.approx(0.319, abs=1e-3)
    assert LAMB_DICKE == 0.3


def test_pulse_specs():
    p = PulseSpec("rsb2")
    assert p.order == 2
    assert p.effective_duration == pytest.approx(0.5 / rabi_coupling(2, 2, LAMB_DICKE))
    assert PulseSpec("carrier", 0.25).effective_duration == 0.25
    with pytest.raises(UnknownPulse):
        PulseSpec("bsb1")
    with pytest.raises(UnknownPulse):
        named_sequence("xyz")
    assert [q.kind for q in named_sequence("acd")] == ["rsb2", "carrier"]
    assert [q.kind for q in named_sequence("bcd")] == ["rsb1", "carrier"]


def test_ideal_sequences_on_ground_state():
    d = FockDistribution.from_populations([1.0, 0.0, 0.0])
    out = apply_sequence(d, "acd")
    assert out.bright_probability == 0.0
    assert out.per_n_transfer[0] == 0.0


def test_ideal_sequences_pick_out_single_levels():
    d = FockDistribution.from_populations([0.6, 0.15, 0.25])
    assert apply_sequence(d, "acd").bright_probability == pytest.approx(0.25, abs=1e-15)
    assert apply_sequence(d, "bcd").bright_probability == pytest.approx(0.15, abs=1e-15)


def test_ideal_bias_bounded_by_upper_levels():
    d = thermal_distribution(0.8)
    upper = 1.0 - d.populations[:3].sum()
    for seq, level in (("acd", 2), ("bcd", 1)):
        est = apply_sequence(d, seq).bright_probability
        assert abs(est - d.p(level)) <= upper + 1e-15


def test_squeezed_vacuum_readout():
    d = squeezed_vacuum_distribution(math.asinh(1.0))
    assert apply_sequence(d, "acd").bright_probability == pytest.approx(0.1768, abs=1e-4)
    assert apply_sequence(d, "bcd").bright_probability == 0.0


def test_discriminator_through_readout():
    nbar = 0.05
    d = squeezed_thermal_distribution(0.5 * math.acosh(1.5 / (nbar + 0.5)), nbar)
    a = apply_sequence(d, "acd").bright_probability
    b = apply_sequence(d, "bcd").bright_probability
    assert a > 2 * b and a == pytest.approx(d.p(2)) and b == pytest.approx(d.p(1))


def test_rabi_sideband_pi_pulse_transfers_its_pair():
    d = FockDistribution.from_populations([0.0, 0.0, 1.0])
    out = apply_sequence(d, ["rsb2"], "rabi_dynamics")
    assert out.bright_probability == pytest.approx(0.0, abs=1e-14)


@given(st.lists(st.floats(0, 1), min_size=3, max_size=12), st.sampled_from(["acd", "bcd"]),
       st.sampled_from(["ideal_pi", "rabi_dynamics"]))
def test_outcome_is_a_probability(weights, seq, model):
    w = np.array(weights)
    if w.sum() == 0:
        return
    out = apply_sequence(FockDistribution.from_populations(w / w.sum()), seq, model)
    assert 0.0 <= out.bright_probability <= 1.0
    assert np.all((out.per_n_transfer >= -1e-12) & (out.per_n_transfer <= 1 + 1e-12))


def test_unknown_model_and_empty_sequence():
    d = thermal_distribution(0.1)
    with pytest.raises(UnknownPulse):
        apply_sequence(d, "acd", "master_equation")
    with pytest.raises(DomainError):
        apply_sequence(d, [])


def _outcome(p):
    return ReadoutOutcome(p, np.zeros(1), 1.0)


def test_sampling_edges_and_reproducibility():
    assert sample_detection(_outcome(0.0), 50, seed=1)[1] == 0
    assert sample_detection(_outcome(1.0), 100, seed=1)[1] == 100
    first = sample_detection(_outcome(0.18), 10_000, seed=42)
    again = sample_detection(_outcome(0.18), 10_000, seed=42)
    assert first == again
    sigma = math.sqrt(10_000 * 0.18 * 0.82)
    assert abs(first[1] - 1800) < 5 * sigma
    with pytest.raises(DomainError):
        sample_detection(_outcome(0.5), 0, seed=1)
