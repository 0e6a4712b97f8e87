"""Grid search over source settings under a fidelity floor, and one-variable sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from qamp import amplifier, chain
from qamp.model import ParameterError, RepeaterParams


@dataclass(frozen=True)
class GridSpec:
    """Search grid: log-spaced ``p``, linear ``R``; one refinement pass by default."""

    p_min: float = 1e-5
    p_max: float = 1e-1
    p_points: int = 60
    R_min: float = 0.01
    R_max: float = 0.99
    R_points: int = 99
    refine: bool = True
    refine_factor: float = 10.0

    def __post_init__(self) -> None:
        if not 0.0 < self.p_min <= self.p_max < 1.0:
            raise ParameterError("p_min", f"need 0 < p_min <= p_max < 1, got [{self.p_min}, {self.p_max}]")
        if not 0.0 < self.R_min <= self.R_max < 1.0:
            raise ParameterError("R_min", f"need 0 < R_min <= R_max < 1, got [{self.R_min}, {self.R_max}]")
        for name in ("p_points", "R_points"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ParameterError(name, f"must be a positive integer, got {v!r}")
        if not self.refine_factor > 1.0:
            raise ParameterError("refine_factor", f"must exceed 1, got {self.refine_factor}")

    def p_values(self) -> np.ndarray:
        return np.geomspace(self.p_min, self.p_max, self.p_points)

    def R_values(self) -> np.ndarray:
        return np.linspace(self.R_min, self.R_max, self.R_points)

    def around(self, p: float, R: float) -> "GridSpec":
        """Grid ``refine_factor`` times narrower, centred on (p, R), clipped to this one."""
        log_half = (math.log10(self.p_max) - math.log10(self.p_min)) / (2 * self.refine_factor)
        p_lo = max(self.p_min, p / 10**log_half)
        p_hi = min(self.p_max, p * 10**log_half)
        R_half = (self.R_max - self.R_min) / (2 * self.refine_factor)
        R_lo = max(self.R_min, R - R_half)
        R_hi = min(self.R_max, R + R_half)
        return GridSpec(p_lo, p_hi, self.p_points, R_lo, R_hi, self.R_points, refine=False)


@dataclass
class Optimum:
    feasible: bool
    p: Optional[float] = None
    R: Optional[float] = None
    n: Optional[int] = None
    T_tot: Optional[float] = None
    F: Optional[float] = None
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "feasible": self.feasible,
            "p": self.p,
            "R": self.R,
            "nesting_levels": self.n,
            "T_tot_s": self.T_tot,
            "F": self.F,
            **self.diagnostics,
        }


def _row(args) -> tuple[list[float], list[float]]:
    """Evaluate one row of fixed ``p`` across all ``R``; infeasible or degenerate points give NaN."""
    template, p, n, R_values, as_printed = args
    Ts, Fs = [], []
    for R in R_values:
        try:
            T, F = chain.evaluate(template.replace(p=float(p), R=float(R), nesting_levels=n), as_printed)
        except (ArithmeticError, ValueError):
            T, F = math.nan, math.nan
        Ts.append(T)
        Fs.append(F)
    return Ts, Fs


def evaluate_grid(
    template: RepeaterParams,
    n: int,
    grid: GridSpec,
    workers: int = 1,
    as_printed: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """``T_tot`` and ``F`` arrays indexed ``[p_index, R_index]``."""
    ps, Rs = grid.p_values(), grid.R_values()
    jobs = [(template, p, n, Rs, as_printed) for p in ps]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_row, jobs))
    else:
        rows = [_row(job) for job in jobs]
    T = np.array([r[0] for r in rows], dtype=float)
    F = np.array([r[1] for r in rows], dtype=float)
    return T, F


def _best(T: np.ndarray, F: np.ndarray, f_min: float) -> Optional[tuple[int, int]]:
    """Feasible minimum; ties resolved toward the lowest grid index (smaller p, then R)."""
    ok = np.isfinite(T) & (F >= f_min)
    if not ok.any():
        return None
    masked = np.where(ok, T, np.inf)
    flat = int(np.argmin(masked))  # argmin returns the first minimum in row-major order
    return divmod(flat, T.shape[1])


def optimize(
    q: float,
    hardware: RepeaterParams,
    f_min: float = 0.9,
    n_max: int = 4,
    grid: Optional[GridSpec] = None,
    workers: int = 1,
    as_printed: bool = False,
) -> Optimum:
    """Minimize the distribution time over (p, R, n) subject to ``F >= f_min``.

    ``hardware`` supplies efficiencies, distance and fiber constants; its
    ``p``, ``R`` and ``nesting_levels`` are ignored. Returns an infeasible
    :class:`Optimum` rather than raising when no grid point meets the floor.
    """
    if not 0.0 < q <= 1.0:
        raise ParameterError("q", f"must lie in (0, 1], got {q}")
    if not 0.0 < f_min < 1.0 and f_min != 1.0:
        raise ParameterError("f_min", f"must lie in (0, 1], got {f_min}")
    if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 0:
        raise ParameterError("n_max", f"must be a non-negative integer, got {n_max!r}")
    grid = grid or GridSpec()
    template = hardware.replace(q=q)

    # Strict '<' keeps the smallest n on ties.
    incumbent = None
    evaluations = 0
    per_level = {}
    for n in range(n_max + 1):
        T, F = evaluate_grid(template, n, grid, workers, as_printed)
        evaluations += T.size
        idx = _best(T, F, f_min)
        if idx is None:
            per_level[n] = None
            continue
        i, j = idx
        cand = (float(T[i, j]), n, float(grid.p_values()[i]), float(grid.R_values()[j]), float(F[i, j]))
        per_level[n] = {"T_tot_s": cand[0], "p": cand[2], "R": cand[3], "F": cand[4]}
        if incumbent is None or cand[0] < incumbent[0]:
            incumbent = cand

    diagnostics: dict[str, Any] = {
        "f_min": f_min,
        "n_max": n_max,
        "q": q,
        "grid": {
            "p": [grid.p_min, grid.p_max, grid.p_points],
            "R": [grid.R_min, grid.R_max, grid.R_points],
        },
        "best_per_level": per_level,
    }
    if incumbent is None:
        diagnostics["evaluations"] = evaluations
        diagnostics["reason"] = "no feasible point"
        return Optimum(False, diagnostics=diagnostics)

    T_best, n_best, p_best, R_best, F_best = incumbent
    diagnostics["coarse"] = {"T_tot_s": T_best, "p": p_best, "R": R_best, "nesting_levels": n_best, "F": F_best}
    if grid.refine:
        fine = grid.around(p_best, R_best)
        T, F = evaluate_grid(template, n_best, fine, workers, as_printed)
        evaluations += T.size
        idx = _best(T, F, f_min)
        if idx is not None:
            i, j = idx
            if T[i, j] < T_best:
                T_best = float(T[i, j])
                p_best = float(fine.p_values()[i])
                R_best = float(fine.R_values()[j])
                F_best = float(F[i, j])
        diagnostics["refined_grid"] = {"p": [fine.p_min, fine.p_max], "R": [fine.R_min, fine.R_max]}
    diagnostics["evaluations"] = evaluations

    # Re-check the winner through the full chain rather than trusting the search loop.
    params = template.replace(p=p_best, R=R_best, nesting_levels=n_best)
    result = chain.total_time(params, as_printed=as_printed)
    if result.F < f_min:
        raise AssertionError(f"optimizer incumbent violates the fidelity floor: {result.F} < {f_min}")
    diagnostics["regime_flags"] = amplifier.regime_flags(p_best, q, R_best)
    diagnostics["chain"] = result.diagnostics
    return Optimum(True, p_best, R_best, n_best, result.T_tot, result.F, diagnostics)


SWEEP_FIELDS = {
    "p": "p",
    "q": "q",
    "R": "R",
    "L": "total_length_km",
    "eta_d": "eta_d",
    "eta_m": "eta_m",
    "n": "nesting_levels",
}


def sweep(
    variable: str,
    values: Sequence[float],
    fixed: RepeaterParams,
    include_prep_time: bool = False,
    as_printed: bool = False,
) -> list[dict[str, Any]]:
    """One chain evaluation per value; a failing point records its error in its row."""
    try:
        name = SWEEP_FIELDS[variable]
    except KeyError:
        raise ParameterError("variable", f"unknown sweep variable {variable!r}; choose from {sorted(SWEEP_FIELDS)}") from None
    rows = []
    for value in values:
        row: dict[str, Any] = {"variable": variable, "value": value}
        try:
            v = int(value) if name == "nesting_levels" else float(value)
            if name == "nesting_levels" and v != value:
                raise ParameterError("nesting_levels", f"must be an integer, got {value}")
            result = chain.total_time(fixed.replace(**{name: v}), include_prep_time, as_printed)
        except (ArithmeticError, ValueError) as exc:
            row.update({"T_tot_s": None, "F": None, "P0s": None, "P_k": [], "error": str(exc)})
        else:
            d = result.diagnostics
            row.update({"T_tot_s": result.T_tot, "F": result.F, "P0s": d["P0s"], "P_k": d["P_k"], "error": None})
        rows.append(row)
    return rows
