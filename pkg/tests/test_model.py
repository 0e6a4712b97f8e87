from __future__ import annotations

import math

import pytest

from qamp.model import AmplifierCoeffs, LinkState, ParameterError, RepeaterParams, channel_transmission

from conftest import ROW1


def test_derived_quantities(row1):
    assert row1.T == pytest.approx(0.88)
    assert row1.link_length_km == 62.5
    assert row1.eta_t == pytest.approx(math.exp(-62.5 / 44.0))
    assert row1.communication_time_s == pytest.approx(62.5 / 2e5)


@pytest.mark.parametrize("field,value", [("p", -0.1), ("q", 1.5), ("R", float("nan")), ("eta_d", 2.0)])
def test_probability_domain(field, value):
    with pytest.raises(ParameterError) as err:
        RepeaterParams(**dict(ROW1, **{field: value}))
    assert err.value.field == field


@pytest.mark.parametrize("value", [-1, 1.5, True])
def test_nesting_levels_must_be_integer(value):
    with pytest.raises(ParameterError, match="nesting_levels"):
        RepeaterParams(**dict(ROW1, nesting_levels=value))


def test_rate_domain_rejects_edge_reflectivity():
    for R in (0.0, 1.0):
        with pytest.raises(ParameterError) as err:
            RepeaterParams(**dict(ROW1, R=R)).require_rate_domain()
        assert err.value.field == "R"


def test_dict_round_trip(row1):
    data = {**row1.to_dict(), "T_tot_s": 3.0, "nesting_levels": 4.0}
    assert RepeaterParams.from_dict(data) == row1


def test_from_dict_reports_missing_field():
    data = dict(ROW1)
    del data["eta_m"]
    with pytest.raises(ParameterError) as err:
        RepeaterParams.from_dict(data)
    assert err.value.field == "eta_m"


def test_channel_transmission():
    assert channel_transmission(0.0, 22.0) == 1.0
    assert channel_transmission(44.0, 22.0) == pytest.approx(math.exp(-1.0))
    with pytest.raises(ParameterError):
        channel_transmission(-1.0, 22.0)


def test_state_traces():
    assert AmplifierCoeffs(1.0, 1.0, 1.0, 1.0).trace == 15.0
    assert LinkState(1.0, 1.0).trace == 17.0
    assert LinkState(1.0, 1.0, 1.0, level=2).trace == 21.0
    with pytest.raises(ParameterError):
        LinkState(1.0, 0.0, 0.1, level=0)
    with pytest.raises(ParameterError):
        AmplifierCoeffs(1.0, -1e-3, 0.0, 0.0)
