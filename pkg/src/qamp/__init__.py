"""Rate and fidelity calculator for repeaters built from heralded qubit amplifiers."""

from qamp.model import (
    AmplifierCoeffs,
    DegenerateStateError,
    LinkState,
    ParameterError,
    RegimeError,
    RepeaterParams,
    channel_transmission,
)
from qamp.amplifier import (
    amplifier_coefficients,
    breakeven_repetition_rate,
    herald_probability,
    ideal_herald_probability,
    preparation_time,
)
from qamp.chain import (
    ChainResult,
    elementary_link,
    fidelity,
    ideal_total_time,
    swap,
    total_time,
)

__version__ = "0.1.0"

__all__ = [
    "AmplifierCoeffs",
    "ChainResult",
    "DegenerateStateError",
    "LinkState",
    "ParameterError",
    "RegimeError",
    "RepeaterParams",
    "amplifier_coefficients",
    "breakeven_repetition_rate",
    "channel_transmission",
    "elementary_link",
    "fidelity",
    "herald_probability",
    "ideal_herald_probability",
    "ideal_total_time",
    "preparation_time",
    "swap",
    "total_time",
]
