"""Parameter and state types shared by the analytical pipeline."""

from __future__ import annotations

import math
from dataclasses import MISSING, asdict, dataclass, fields
from typing import Any, Optional


class ParameterError(ValueError):
    """A parameter lies outside its domain.

    ``field`` names the offending parameter so the CLI can report it.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class DegenerateStateError(ArithmeticError):
    """A state with zero trace reached an operation that normalizes by it."""

    def __init__(self, stage: str, message: str = "zero trace"):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


class RegimeError(ArithmeticError):
    """Perturbative formulas were pushed to a point where a probability exceeds 1."""


def _check_probability(name: str, value: float) -> None:
    if not isinstance(value, (int, float)) or math.isnan(value):
        raise ParameterError(name, f"expected a number, got {value!r}")
    if not 0.0 <= value <= 1.0:
        raise ParameterError(name, f"must lie in [0, 1], got {value}")


def _check_positive(name: str, value: float) -> None:
    if not isinstance(value, (int, float)) or math.isnan(value):
        raise ParameterError(name, f"expected a number, got {value!r}")
    if not value > 0.0 or math.isinf(value):
        raise ParameterError(name, f"must be strictly positive and finite, got {value}")


@dataclass(frozen=True)
class RepeaterParams:
    """Physical and protocol parameters of one repeater configuration.

    Probabilities: ``p`` (pair emission), ``q`` (single-photon emission),
    ``R`` (beam-splitter reflectivity), ``eta_d`` / ``eta_m`` (detector and
    memory efficiency). Lengths in km, speed in km/s, rate in Hz.
    """

    p: float
    q: float
    R: float
    eta_d: float
    eta_m: float
    total_length_km: float
    nesting_levels: int
    attenuation_length_km: float = 22.0
    fiber_speed_km_per_s: float = 2.0e5
    gamma_rep_hz: Optional[float] = None

    def __post_init__(self) -> None:
        for name in ("p", "q", "R", "eta_d", "eta_m"):
            _check_probability(name, getattr(self, name))
        for name in ("total_length_km", "attenuation_length_km", "fiber_speed_km_per_s"):
            _check_positive(name, getattr(self, name))
        n = self.nesting_levels
        if isinstance(n, bool) or not isinstance(n, int) or n < 0:
            raise ParameterError("nesting_levels", f"must be a non-negative integer, got {n!r}")
        if self.gamma_rep_hz is not None:
            _check_positive("gamma_rep_hz", self.gamma_rep_hz)
        if not self.link_length_km > 0.0:
            raise ParameterError("nesting_levels", "elementary link length underflows to zero")

    @property
    def T(self) -> float:
        return 1.0 - self.R

    @property
    def link_length_km(self) -> float:
        return self.total_length_km / 2**self.nesting_levels

    @property
    def eta_t(self) -> float:
        return channel_transmission(self.link_length_km, self.attenuation_length_km)

    @property
    def communication_time_s(self) -> float:
        return self.link_length_km / self.fiber_speed_km_per_s

    def require_rate_domain(self) -> None:
        """Reject settings for which no herald can ever occur."""
        if self.R in (0.0, 1.0):
            raise ParameterError("R", f"reflectivity must lie strictly inside (0, 1), got {self.R}")
        for name in ("p", "q", "eta_d", "eta_m"):
            if getattr(self, name) == 0.0:
                raise ParameterError(name, "must be non-zero for a rate computation")

    def replace(self, **changes: Any) -> "RepeaterParams":
        data = asdict(self)
        data.update(changes)
        return RepeaterParams(**data)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RepeaterParams":
        """Build from a flat mapping, ignoring keys that are not parameters."""
        names = {f.name for f in fields(cls)}
        kwargs = {k: v for k, v in data.items() if k in names}
        for f in fields(cls):
            if f.name not in kwargs and f.default is MISSING:
                raise ParameterError(f.name, "missing")
        if "nesting_levels" in kwargs and isinstance(kwargs["nesting_levels"], float):
            if kwargs["nesting_levels"].is_integer():
                kwargs["nesting_levels"] = int(kwargs["nesting_levels"])
        return cls(**kwargs)


@dataclass(frozen=True)
class AmplifierCoeffs:
    """Weights of the heralded source state for a single coincidence pattern.

    ``alpha0s`` multiplies the Bell projector, ``beta0s`` the single-excitation
    term, ``gamma0s`` and ``delta0s`` the two double-excitation terms. The
    basis elements are unnormalized, hence the trace multiplicities 1, 2, 4, 8.
    """

    alpha0s: float
    beta0s: float
    gamma0s: float
    delta0s: float

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if math.isnan(v) or v < 0.0:
                raise ParameterError(f.name, f"weight must be non-negative, got {v}")

    @property
    def trace(self) -> float:
        return self.alpha0s + 2 * self.beta0s + 4 * self.gamma0s + 8 * self.delta0s


@dataclass(frozen=True)
class LinkState:
    """Non-normalized weights of a distributed state after ``level`` swaps.

    At level 0 only ``alpha`` (Bell projector) and ``beta`` (one side singly,
    the other doubly excited; trace multiplicity 16) are populated. From
    level 1 on, ``beta`` weighs the product of single excitations (trace 4)
    and ``gamma`` the single/double excitation term (trace 16).
    """

    alpha: float
    beta: float
    gamma: float = 0.0
    level: int = 0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if math.isnan(v) or v < 0.0:
                raise ParameterError(name, f"weight must be non-negative, got {v}")
        if self.level < 0:
            raise ParameterError("level", f"must be non-negative, got {self.level}")
        if self.level == 0 and self.gamma != 0.0:
            raise ParameterError("gamma", "an elementary-link state carries no gamma term")

    @property
    def trace(self) -> float:
        if self.level == 0:
            return self.alpha + 16 * self.beta
        return self.alpha + 4 * self.beta + 16 * self.gamma


def channel_transmission(link_length_km: float, attenuation_length_km: float) -> float:
    """Transmission from one end of an elementary link to its central station."""
    if not link_length_km >= 0.0 or math.isinf(link_length_km):
        raise ParameterError("link_length_km", f"must be non-negative and finite, got {link_length_km}")
    _check_positive("attenuation_length_km", attenuation_length_km)
    return math.exp(-link_length_km / (2.0 * attenuation_length_km))
