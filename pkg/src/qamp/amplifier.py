"""Heralded entangled-pair source built from a qubit amplifier."""

from __future__ import annotations

import math
import warnings

from qamp.model import (
    AmplifierCoeffs,
    ParameterError,
    RegimeError,
    RepeaterParams,
    _check_positive,
    _check_probability,
)

# Thresholds for the small-p / near-unit-q regime the coefficients assume.
MAX_P_OVER_R = 0.1
MAX_SOURCE_LOSS = 0.5


class RegimeWarning(UserWarning):
    """Parameters sit outside the regime where the source weights are accurate."""


def regime_flags(p: float, q: float, R: float) -> list[str]:
    flags = []
    if R <= 0.0 or p / R > MAX_P_OVER_R:
        flags.append(f"p/R > {MAX_P_OVER_R}")
    if 1.0 - q > MAX_SOURCE_LOSS:
        flags.append(f"1-q > {MAX_SOURCE_LOSS}")
    return flags


def amplifier_coefficients(params: RepeaterParams, warn: bool = True) -> AmplifierCoeffs:
    """Weights of the conditional source state for one herald pattern.

    The four-fold pattern multiplicity is not included here; see
    :func:`herald_probability`.
    """
    p, q, R, eta = params.p, params.q, params.R, params.eta_d
    T = 1.0 - R
    if warn:
        flags = regime_flags(p, q, R)
        if flags:
            warnings.warn("outside validity regime: " + ", ".join(flags), RegimeWarning, stacklevel=2)
    alpha = 0.25 * eta**2 * p * R * T * q**2
    beta = 0.125 * eta**2 * p * R * q * (1.0 - q + (1.0 - eta) * R * q)
    gamma = (eta / 8.0) ** 2 * (p * T * q) ** 2
    delta = (eta / 8.0) ** 2 * p**2 * T * q * (1.0 - q)
    return AmplifierCoeffs(alpha, beta, gamma, delta)


def herald_probability(coeffs: AmplifierCoeffs) -> float:
    """Success probability of the source, summed over the four equivalent patterns."""
    P = 4.0 * coeffs.trace
    if P > 1.0:
        raise RegimeError(f"herald probability {P:.6g} exceeds 1; parameters are non-perturbative")
    return P


def ideal_herald_probability(p: float, R: float) -> float:
    """Herald probability with lossless detectors and deterministic photon sources."""
    _check_probability("p", p)
    _check_probability("R", R)
    return p * R * (1.0 - R)


def preparation_time(P0s: float, gamma_rep_hz: float) -> float:
    """Mean waiting time for one heralded pair, in seconds."""
    _check_positive("P0s", P0s)
    _check_positive("gamma_rep_hz", gamma_rep_hz)
    return 1.0 / (gamma_rep_hz * P0s)


def breakeven_repetition_rate(P0s: float, link_length_km: float, fiber_speed: float) -> float:
    """Source repetition rate at which preparation time equals the link communication time."""
    _check_positive("P0s", P0s)
    _check_positive("link_length_km", link_length_km)
    _check_positive("fiber_speed", fiber_speed)
    if P0s > 1.0:
        raise ParameterError("P0s", f"must be a probability, got {P0s}")
    return fiber_speed / (link_length_km * P0s)


def source_summary(params: RepeaterParams) -> dict:
    coeffs = amplifier_coefficients(params, warn=False)
    P0s = herald_probability(coeffs)
    out = {
        "alpha0s": coeffs.alpha0s,
        "beta0s": coeffs.beta0s,
        "gamma0s": coeffs.gamma0s,
        "delta0s": coeffs.delta0s,
        "P0s": P0s,
        "regime_flags": regime_flags(params.p, params.q, params.R),
    }
    if P0s > 0.0:
        out["breakeven_gamma_rep_hz"] = breakeven_repetition_rate(
            P0s, params.link_length_km, params.fiber_speed_km_per_s
        )
    else:
        out["breakeven_gamma_rep_hz"] = math.inf
    return out
