from __future__ import annotations

import warnings

import pytest

from qamp import amplifier
from qamp.model import RegimeError, RepeaterParams

from conftest import ROW1


def coeffs(**kw):
    return amplifier.amplifier_coefficients(RepeaterParams(**dict(ROW1, **kw)), warn=False)


def test_weights_at_reference_point():
    c = coeffs()
    assert c.alpha0s == pytest.approx(0.25 * 0.81 * 6e-4 * 0.12 * 0.88)
    assert c.beta0s == pytest.approx(0.125 * 0.81 * 6e-4 * 0.12 * (0.1 * 0.12))
    assert c.gamma0s == pytest.approx((0.9 / 8) ** 2 * (6e-4 * 0.88) ** 2)
    assert c.delta0s == 0.0


def test_ideal_source_reduces_to_pRT_at_leading_order():
    c = coeffs(eta_d=1.0, p=1e-6, R=0.3)
    assert c.beta0s == 0.0 and c.delta0s == 0.0
    P = amplifier.herald_probability(c)
    assert P == pytest.approx(amplifier.ideal_herald_probability(1e-6, 0.3), rel=1e-5)


def test_source_loss_feeds_delta():
    assert coeffs(q=0.66).delta0s > 0.0


def test_regime_flags_and_warning():
    assert amplifier.regime_flags(6e-4, 1.0, 0.12) == []
    assert amplifier.regime_flags(0.05, 0.3, 0.1) == ["p/R > 0.1", "1-q > 0.5"]
    with pytest.warns(amplifier.RegimeWarning):
        amplifier.amplifier_coefficients(RepeaterParams(**dict(ROW1, p=0.05, R=0.1)))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        amplifier.amplifier_coefficients(RepeaterParams(**ROW1))


def test_herald_probability_above_one_is_an_error():
    with pytest.raises(RegimeError):
        amplifier.herald_probability(amplifier.AmplifierCoeffs(0.3, 0.0, 0.0, 0.0))


def test_preparation_and_breakeven():
    assert amplifier.preparation_time(1e-4, 1e6) == pytest.approx(0.01)
    # Break-even makes preparation time equal to L0/c.
    P0s, L0, c = 5e-5, 62.5, 2e5
    g = amplifier.breakeven_repetition_rate(P0s, L0, c)
    assert amplifier.preparation_time(P0s, g) == pytest.approx(L0 / c)


def test_weights_scale_as_powers_of_p():
    hi, lo = coeffs(q=0.8, p=1e-3), coeffs(q=0.8, p=5e-4)
    assert hi.alpha0s / lo.alpha0s == pytest.approx(2.0, rel=1e-14)
    assert hi.beta0s / lo.beta0s == pytest.approx(2.0, rel=1e-14)
    assert hi.gamma0s / lo.gamma0s == pytest.approx(4.0, rel=1e-14)
    assert hi.delta0s / lo.delta0s == pytest.approx(4.0, rel=1e-14)


def test_bell_weight_increases_with_source_efficiency():
    values = [coeffs(q=q).alpha0s for q in (0.2, 0.4, 0.6, 0.8, 1.0)]
    assert all(b > a for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("q,eta_d", [(1.0, 0.9), (0.6, 0.5), (1.0, 1.0)])
def test_herald_probability_bounds_bell_weight(q, eta_d):
    c = coeffs(q=q, eta_d=eta_d)
    assert amplifier.herald_probability(c) >= 4.0 * c.alpha0s
    if q == 1.0 and eta_d == 1.0:
        assert c.beta0s == 0.0 and c.delta0s == 0.0


def test_breakeven_unit_case():
    assert amplifier.breakeven_repetition_rate(1.0, 2e5, 2e5) == pytest.approx(1.0)
