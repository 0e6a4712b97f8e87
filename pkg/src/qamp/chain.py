"""Elementary-link creation, the swap recursion and the distribution time."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from qamp import amplifier
from qamp.model import (
    AmplifierCoeffs,
    DegenerateStateError,
    LinkState,
    RepeaterParams,
    _check_positive,
    ParameterError,
    _check_probability,
    channel_transmission,
)


def _check_efficiency(name: str, value: float) -> None:
    _check_probability(name, value)
    _check_positive(name, value)


def elementary_link(
    coeffs: AmplifierCoeffs,
    eta_d: float,
    eta_m: float,
    eta_t: float,
    as_printed: bool = False,
) -> tuple[LinkState, float]:
    """State stored in the two memories after the link Bell measurement succeeds.

    Returns the level-0 state and the link success probability (all four
    coincidence patterns).

    The error weight collects three channels: a Bell pair meeting a source
    with a doubly excited ``g`` and one ``out`` photon, a single-excitation
    source meeting one with two ``out`` photons, and a Bell pair meeting a
    source with two ``out`` photons of which one is lost. All three carry the
    same factor 1/2. ``as_printed=True`` drops that factor from the third
    channel, an alternative form kept for comparison; the exact Fock-space
    simulation supports the default.
    """
    for name, v in (("eta_d", eta_d), ("eta_m", eta_m), ("eta_t", eta_t)):
        _check_efficiency(name, v)
    S = coeffs.trace
    if S <= 0.0:
        raise DegenerateStateError("source", "amplifier weights have zero trace")
    a, b, g, d = coeffs.alpha0s, coeffs.beta0s, coeffs.gamma0s, coeffs.delta0s
    eta = eta_d * eta_m * eta_t
    norm = 1.0 / S**2
    alpha = norm * eta**2 / 8.0 * a**2
    lost_pair = a * g * (1.0 - eta)
    if not as_printed:
        lost_pair /= 2.0
    beta = norm * eta**2 / 2.0 * ((a * d / 2.0 + b * g) / 2.0 + lost_pair)
    state = LinkState(alpha, beta, 0.0, level=0)
    return state, 4.0 * state.trace


def swap(state: LinkState, eta_d: float, eta_m: float) -> tuple[LinkState, float]:
    """Swap two identical neighbouring links at level k-1 into one at level k.

    The first swap and the later ones act on differently structured states
    and are kept as separate transcriptions.
    """
    _check_efficiency("eta_d", eta_d)
    _check_efficiency("eta_m", eta_m)
    tr = state.trace
    if tr <= 0.0:
        raise DegenerateStateError(f"swap {state.level + 1}")
    eta = eta_d * eta_m
    loss = 1.0 - eta
    norm = 1.0 / tr**2
    a, b, g = state.alpha, state.beta, state.gamma
    if state.level == 0:
        alpha = norm * eta**2 / 8.0 * a**2
        beta = norm * eta**2 * loss * b * (a + 8.0 * b * loss)
        gamma = norm * eta**2 / 8.0 * b * (a + 16.0 * b * loss)
    else:
        alpha = norm * eta**2 / 8.0 * a**2
        beta = norm * eta**2 / 4.0 * (
            b * (a + 2.0 * b) + 4.0 * g * loss * (a + 4.0 * b) + 2.0 * (4.0 * g * loss) ** 2
        )
        gamma = norm * eta**2 / 8.0 * g * (a + 4.0 * b + 16.0 * g * loss)
    out = LinkState(alpha, beta, gamma, level=state.level + 1)
    return out, 4.0 * out.trace


def fidelity(state: LinkState) -> float:
    """Overlap of the normalized state with the target Bell state.

    From level 1 on, the product of single excitations in both memories
    contains the Bell state with unit weight, so it adds ``beta`` to the
    overlap; the level-0 error term is orthogonal to it.
    """
    tr = state.trace
    if tr <= 0.0:
        raise DegenerateStateError(f"level {state.level}")
    if state.level == 0:
        return state.alpha / tr
    return (state.alpha + state.beta) / tr


def bell_weight(state: LinkState) -> float:
    """Share of the trace carried by the Bell projector alone."""
    tr = state.trace
    if tr <= 0.0:
        raise DegenerateStateError(f"level {state.level}")
    return state.alpha / tr


def propagate(
    coeffs: AmplifierCoeffs,
    eta_d: float,
    eta_m: float,
    eta_t: float,
    n: int,
    as_printed: bool = False,
) -> tuple[list[LinkState], list[float]]:
    """States and success probabilities from link creation through ``n`` swaps."""
    state, P = elementary_link(coeffs, eta_d, eta_m, eta_t, as_printed=as_printed)
    if P <= 0.0:
        raise DegenerateStateError("elementary link", "success probability is zero")
    states, probs = [state], [P]
    for _ in range(n):
        state, P = swap(state, eta_d, eta_m)
        if P <= 0.0:
            raise DegenerateStateError(f"swap {state.level}", "success probability is zero")
        states.append(state)
        probs.append(P)
    return states, probs


def evaluate(params: RepeaterParams, as_printed: bool = False) -> tuple[float, float]:
    """``(T_tot, F)`` without diagnostics, source preparation time neglected."""
    params.require_rate_domain()
    coeffs = amplifier.amplifier_coefficients(params, warn=False)
    states, probs = propagate(coeffs, params.eta_d, params.eta_m, params.eta_t, params.nesting_levels, as_printed)
    T = 1.5**params.nesting_levels * params.communication_time_s / math.prod(probs)
    return T, fidelity(states[-1])


@dataclass
class ChainResult:
    T_tot: float
    F: float
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"T_tot_s": self.T_tot, "F": self.F, **self.diagnostics}


def total_time(
    params: RepeaterParams, include_prep_time: bool = False, as_printed: bool = False
) -> ChainResult:
    """Average time to distribute one pair over the full distance, and its fidelity.

    With ``include_prep_time`` and a repetition rate set, the per-attempt
    time is the source preparation time plus the link communication time.
    """
    params.require_rate_domain()
    n = params.nesting_levels
    coeffs = amplifier.amplifier_coefficients(params, warn=False)
    P0s = amplifier.herald_probability(coeffs)
    if P0s <= 0.0:
        raise DegenerateStateError("source", "herald probability is zero")
    L0 = params.link_length_km
    eta_t = channel_transmission(L0, params.attenuation_length_km)

    states, probs = propagate(coeffs, params.eta_d, params.eta_m, eta_t, n, as_printed)
    fidelities = [fidelity(st) for st in states]
    state = states[-1]

    comm = params.communication_time_s
    tau = comm
    T0s = None
    if params.gamma_rep_hz is not None:
        T0s = amplifier.preparation_time(P0s, params.gamma_rep_hz)
        if include_prep_time:
            tau = T0s + comm
    T_tot = 1.5**n * tau / math.prod(probs)

    diagnostics = {
        "P0s": P0s,
        "P_k": probs,
        "fidelity_per_level": fidelities,
        "alpha0s": coeffs.alpha0s,
        "beta0s": coeffs.beta0s,
        "gamma0s": coeffs.gamma0s,
        "delta0s": coeffs.delta0s,
        "eta_t": eta_t,
        "link_length_km": L0,
        "communication_time_s": comm,
        "tau_s": tau,
        "prep_time_s": T0s,
        "include_prep_time": bool(include_prep_time and T0s is not None),
        "breakeven_gamma_rep_hz": amplifier.breakeven_repetition_rate(
            P0s, L0, params.fiber_speed_km_per_s
        ),
        "regime_flags": amplifier.regime_flags(params.p, params.q, params.R),
        "bell_weight": bell_weight(state),
        "as_printed": as_printed,
        "final_state": {"alpha": state.alpha, "beta": state.beta, "gamma": state.gamma, "level": state.level},
    }
    return ChainResult(T_tot, fidelities[-1], diagnostics)


def ideal_total_time(
    n: int,
    L: float,
    eta_d: float,
    eta_m: float,
    L_att: float = 22.0,
    c: float = 2.0e5,
) -> float:
    """Distribution time with deterministic, perfect pair sources."""
    if isinstance(n, bool) or not isinstance(n, int) or n < 0:
        raise ParameterError("nesting_levels", f"must be a non-negative integer, got {n!r}")
    _check_positive("total_length_km", L)
    _check_efficiency("eta_d", eta_d)
    _check_efficiency("eta_m", eta_m)
    _check_positive("fiber_speed_km_per_s", c)
    L0 = L / 2**n
    eta_t = channel_transmission(L0, L_att)
    return 2.0 * 3**n * (L0 / c) / (eta_d ** (2 * n + 2) * eta_m ** (2 * n) * eta_t**2)
