from __future__ import annotations

import math

import numpy as np
import pytest

from qamp import oracle
from qamp.fock import (
    FockEnsemble,
    HeraldPattern,
    LinearMap,
    ModeError,
    ModeRegister,
    TruncationError,
    add_vacuum_modes,
    apply_loss,
    apply_map,
    balanced_splitter,
    beam_splitter,
    click_distribution,
    click_probability,
    detect,
    number_state,
    trace_out,
)


def pure(register, occupations, weight=1.0):
    return FockEnsemble(register, [(weight, number_state(register, occupations))])


def rho(ens):
    basis, m = ens.density_matrix()
    return {(a, b): m[i, j] for i, a in enumerate(basis) for j, b in enumerate(basis) if abs(m[i, j]) > 1e-14}


def assert_same_state(e1, e2, tol=1e-12):
    r1, r2 = rho(e1), rho(e2)
    for key in set(r1) | set(r2):
        assert abs(r1.get(key, 0.0) - r2.get(key, 0.0)) < tol, key


def test_hong_ou_mandel_dip():
    reg = ModeRegister(("a", "b"))
    out = apply_map(pure(reg, {"a": 1, "b": 1}), balanced_splitter(("a", "b"), ("c", "d")))
    assert out.register.labels == ("c", "d")
    state = out.components[0][1]
    assert abs(state.get((1, 1), 0.0)) < 1e-15
    assert abs(state[(2, 0)]) ** 2 == pytest.approx(0.5)
    assert abs(state[(0, 2)]) ** 2 == pytest.approx(0.5)


def test_beam_splitter_amplitudes():
    reg = ModeRegister(("a", "v"))
    out = apply_map(pure(reg, {"a": 1}), beam_splitter(("a", "v"), ("c", "o"), 0.2))
    s = out.components[0][1]
    assert s[(1, 0)] == pytest.approx(math.sqrt(0.2))
    assert s[(0, 1)] == pytest.approx(math.sqrt(0.8))


def test_map_rejects_non_unitary_and_clashing_labels():
    with pytest.raises(ValueError, match="unitary"):
        LinearMap(("a", "b"), ("c", "d"), np.array([[1.0, 0.1], [0.0, 1.0]]))
    reg = ModeRegister(("a", "b", "c"))
    with pytest.raises(ModeError):
        apply_map(pure(reg, {"a": 1}), balanced_splitter(("a", "b"), ("c", "x")))


def test_truncation_is_an_error_not_a_clip():
    reg = ModeRegister(("a", "b"), total_cap=2, mode_cap=1)
    with pytest.raises(TruncationError):
        apply_map(pure(reg, {"a": 1, "b": 1}), balanced_splitter(("a", "b"), ("c", "d")))
    with pytest.raises(TruncationError):
        number_state(reg, {"a": 2})


def test_click_model_examples():
    reg = ModeRegister(("d", "m"))
    _, p1 = detect(pure(reg, {"d": 1}), ["d"], 0.9, HeraldPattern({"d": 1}))
    assert p1 == pytest.approx(0.9)
    _, p2 = detect(pure(reg, {"d": 2}), ["d"], 0.9, HeraldPattern({"d": 1}))
    assert p2 == pytest.approx(2 * 0.9 * 0.1)
    assert click_probability(1, 2, 0.9) == 0.0


def test_unnamed_detectors_must_stay_dark():
    reg = ModeRegister(("d1", "d2"))
    ens = pure(reg, {"d1": 1, "d2": 1})
    _, p = detect(ens, ["d1", "d2"], 0.8, HeraldPattern({"d1": 1}))
    assert p == pytest.approx(0.8 * 0.2)


def test_pattern_must_name_detectors():
    reg = ModeRegister(("d", "m"))
    with pytest.raises(ModeError):
        detect(pure(reg, {"d": 1}), ["d"], 0.9, HeraldPattern({"m": 1}))


def test_bunched_auxiliary_pair_never_gives_cross_coincidence():
    reg = ModeRegister(("c_H", "c_V", "in_H", "in_V"))
    ens = apply_map(pure(reg, {"c_H": 1, "c_V": 1}), oracle.amplifier_bell_network())
    for first in ("d+", "d-"):
        for second in ("dt+", "dt-"):
            _, p = detect(ens, oracle.AMPLIFIER_DETECTORS, 1.0, HeraldPattern.coincidence(first, second))
            assert p == 0.0


def test_probability_conservation_over_complete_click_records():
    ens = oracle.amplifier_before_detection(1e-2, 0.8, 0.3)
    dist = click_distribution(ens, oracle.AMPLIFIER_DETECTORS, 0.7)
    assert math.fsum(dist.values()) == pytest.approx(1.0, abs=1e-10)
    total = 0.0
    for record in dist:
        pattern = HeraldPattern(dict(zip(oracle.AMPLIFIER_DETECTORS, record)))
        total += detect(ens, oracle.AMPLIFIER_DETECTORS, 0.7, pattern)[1]
    assert total == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("occupations", [{"a": 1}, {"a": 2}, {"a": 1, "b": 1}])
@pytest.mark.parametrize("eta", [0.0, 0.37, 0.9, 1.0])
def test_loss_equals_splitter_to_traced_out_mode(occupations, eta):
    reg = ModeRegister(("a", "b"))
    # Superposition so that coherences between photon numbers are tested too.
    state = {}
    for occ, amp in ((number_state(reg, occupations), 0.8), (number_state(reg, {}), 0.6)):
        for k in occ:
            state[k] = amp
    ens = FockEnsemble(reg, [(1.0, state)])
    direct = apply_loss(ens, "a", eta)
    explicit = add_vacuum_modes(ens, ("loss",))
    explicit = apply_map(explicit, beam_splitter(("a", "loss"), ("a", "lost"), eta))
    explicit = trace_out(explicit, ["lost"])
    assert_same_state(direct, explicit)
    assert direct.total_weight == pytest.approx(1.0)


def test_compress_preserves_density_matrix():
    ens = oracle.amplifier_before_detection(1e-2, 0.8, 0.3)
    cond, _ = detect(ens, oracle.AMPLIFIER_DETECTORS, 0.8, HeraldPattern.coincidence("d+", "dt-"))
    small = cond.compress()
    assert len(small.components) <= len(cond.components)
    assert_same_state(cond, small)


def test_relabel_keeps_amplitudes():
    reg = ModeRegister(("a", "b"))
    ens = pure(reg, {"a": 1}).relabel({"a": "x"})
    assert ens.register.labels == ("x", "b")
    assert ens.population(lambda occ: occ[0] == 1) == 1.0
