from __future__ import annotations

import math

import pytest

from qamp import oracle
from qamp.model import ParameterError


def test_source_ensemble_weights():
    ens = oracle.build_source_ensemble(1e-2, 0.8)
    assert ens.total_weight == pytest.approx(1.0)
    two_pairs = ens.population(lambda occ: occ[0] + occ[1] == 2)
    assert two_pairs == pytest.approx(0.75e-4)


def test_source_rejects_large_pair_probability():
    with pytest.raises(ParameterError):
        oracle.build_source_ensemble(0.9, 1.0)


@pytest.mark.parametrize(
    "pattern,pairing",
    [
        (("d+", "dt-"), {"H": "H", "V": "V"}),
        (("d-", "dt+"), {"H": "H", "V": "V"}),
        (("d+", "dt+"), {"H": "V", "V": "H"}),
        (("d-", "dt-"), {"H": "V", "V": "H"}),
    ],
)
def test_heralded_state_is_polarization_entangled(pattern, pairing):
    ens, P = oracle.simulate_amplifier(1e-5, 1.0, 0.2, 1.0, pattern)
    assert P > 0.0
    reg = ens.register
    target = {}
    for g_pol, out_pol in pairing.items():
        occ = [0] * len(reg)
        occ[reg.index(f"g_{g_pol}")] = 1
        occ[reg.index(f"out_{out_pol}")] = 1
        target[tuple(occ)] = 1.0 / math.sqrt(2.0)
    assert ens.overlap(target) > 0.999


def test_amplifier_checks_agree_at_first_order():
    rep = oracle.verify_amplifier(1e-5, 0.999, 0.2, 0.9)
    for name in ("herald_probability", "bell_population", "single_excitation_population"):
        c = rep.comparison(name)
        assert c.deviation < 1e-4, name
        assert rep.scaling[name] == pytest.approx(1.0, abs=0.05)
    assert rep.extras["pattern_relative_spread"] < 1e-10


def test_link_matches_exactly_with_perfect_detectors():
    rep = oracle.verify_link_and_swaps(1e-5, 0.999, 0.2, 1.0, 0.9, 0.24, levels=0)
    for name in oracle.LINK_CHECKED:
        assert rep.comparison(name).deviation < 1e-8, name


def test_link_probability_and_bell_population_with_lossy_detectors():
    rep = oracle.verify_link_and_swaps(1e-5, 0.999, 0.2, 0.9, 0.9, 0.24, levels=0)
    assert rep.comparison("link_probability").deviation < 1e-6
    assert rep.comparison("link_bell_population").deviation < 1e-4


def test_printed_coefficient_is_rejected_by_the_simulation():
    rep = oracle.verify_link_and_swaps(1e-5, 1.0, 0.2, 1.0, 0.9, 0.24, levels=0, as_printed=True)
    assert rep.comparison("link_error_population").deviation > 0.5


def test_levels_are_bounded():
    with pytest.raises(ParameterError):
        oracle.verify_link_and_swaps(1e-5, 1.0, 0.2, 0.9, 0.9, 0.24, levels=3)


def test_report_serializes_to_plain_types():
    import json

    rep = oracle.verify_amplifier(1e-5, 0.999, 0.2, 0.9, scaling=False)
    json.dumps(rep.to_dict())
