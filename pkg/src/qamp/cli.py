"""Command-line front end: ``qamp {rate,ideal,optimize,sweep,verify,table1}``.

Configuration is one flat JSON object whose keys are the parameter names
(``p``, ``q``, ``R``, ``eta_d``, ...). Flags override config keys; the
``QAMP_CONFIG`` environment variable names a config file when ``--config``
is absent. Exit codes: 0 success, 1 invalid input, 2 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from qamp import __version__, chain, oracle, optimizer
from qamp.model import ParameterError, RepeaterParams

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_VERIFY_FAILED = 2

CONFIG_ENV = "QAMP_CONFIG"

# flag dest -> config key
OVERRIDES = {
    "p": "p",
    "q": "q",
    "R": "R",
    "eta_d": "eta_d",
    "eta_m": "eta_m",
    "L": "total_length_km",
    "n": "nesting_levels",
    "gamma_rep": "gamma_rep_hz",
}

# Placeholders for the search variables when optimize is given hardware only.
_SEARCH_PLACEHOLDERS = {"p": 1e-3, "R": 0.5, "nesting_levels": 0}

TABLE1_ROWS = (
    # params, reference T_tot [s], F, gamma_rep [MHz]
    ({"p": 6e-4, "q": 1.0, "R": 0.12}, 7.4, 0.96, 60.0),
    ({"p": 3.6e-3, "q": 1.0, "R": 0.23}, 7.8, 0.90, 6.0),
    ({"p": 6e-4, "q": 0.66, "R": 0.17}, 19.2, 0.96, 60.0),
)
TABLE1_HARDWARE = {"eta_d": 0.9, "eta_m": 0.9, "total_length_km": 1000.0, "nesting_levels": 4}
TABLE1_T_RTOL = 0.10
TABLE1_F_ATOL = 0.01


class InputError(Exception):
    """Unusable input; reported on stderr with exit code 1."""


# ---------------------------------------------------------------- config


def load_config(path: Optional[str]) -> dict[str, Any]:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"config: cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"config: {path} is not valid JSON ({exc.msg}, line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise InputError(f"config: {path} must hold a JSON object")
    return data


def merged_config(args: argparse.Namespace) -> dict[str, Any]:
    cfg = load_config(args.config)
    for dest, key in OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            cfg[key] = value
    if args.include_prep_time:
        cfg["include_prep_time"] = True
    if args.printed_link_coefficient:
        cfg["as_printed"] = True
    return cfg


def _flag(cfg: dict[str, Any], key: str) -> bool:
    value = cfg.get(key, False)
    if not isinstance(value, bool):
        raise ParameterError(key, f"must be true or false, got {value!r}")
    return value


def _number(cfg: dict[str, Any], key: str, default: Any = None, kind: type = float) -> Any:
    value = cfg.get(key, default)
    if value is None:
        raise ParameterError(key, "missing")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParameterError(key, f"must be a number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ParameterError(key, f"must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _params(cfg: dict[str, Any]) -> RepeaterParams:
    try:
        return RepeaterParams.from_dict(cfg)
    except TypeError as exc:
        raise InputError(f"config: {exc}") from None


# ---------------------------------------------------------------- output


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def _flatten(obj: Any, prefix: str = "") -> dict[str, Any]:
    out: dict[str, Any] = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}.{k}" if prefix else str(k)))
    elif isinstance(obj, (list, tuple)) and not all(isinstance(v, str) for v in obj):
        for i, v in enumerate(obj):
            out.update(_flatten(v, f"{prefix}_{i}"))
    elif isinstance(obj, (list, tuple)):
        out[prefix] = ";".join(obj)
    else:
        out[prefix] = obj
    return out


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return f"{value:.6g}"
    return str(value)


def to_csv(rows: Sequence[dict[str, Any]]) -> str:
    flat = [_flatten(_jsonable(r)) for r in rows]
    header: list[str] = []
    for row in flat:
        header += [k for k in row if k not in header]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in flat:
        writer.writerow([_cell(row.get(k)) for k in header])
    return buf.getvalue()


def to_text(report: Any) -> str:
    if isinstance(report, list):
        return to_csv(report)
    flat = _flatten(_jsonable(report))
    width = max((len(k) for k in flat), default=0)
    return "\n".join(f"{k:<{width}}  {_cell(v)}" for k, v in flat.items()) + "\n"


def render(report: Any, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_jsonable(report), indent=2) + "\n"
    if fmt == "csv":
        return to_csv(report if isinstance(report, list) else [report])
    return to_text(report)


def emit(report: Any, args: argparse.Namespace, default_format: str = "json") -> None:
    text = render(report, args.format or default_format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands


def cmd_rate(args: argparse.Namespace) -> int:
    cfg = merged_config(args)
    params = _params(cfg)
    include = _flag(cfg, "include_prep_time")
    as_printed = _flag(cfg, "as_printed")
    result = chain.total_time(params, include_prep_time=include, as_printed=as_printed)
    report = {**params.to_dict(), **result.to_dict()}
    # The diagnostic reflects whether preparation time was actually used;
    # keep the request itself so the report re-ingests to the same run.
    report["include_prep_time"] = include
    report["prep_time_included"] = result.diagnostics["include_prep_time"]
    emit(report, args)
    return EXIT_OK


def cmd_ideal(args: argparse.Namespace) -> int:
    cfg = merged_config(args)
    n = _number(cfg, "nesting_levels", kind=int)
    L = _number(cfg, "total_length_km")
    eta_d = _number(cfg, "eta_d")
    eta_m = _number(cfg, "eta_m")
    L_att = _number(cfg, "attenuation_length_km", 22.0)
    c = _number(cfg, "fiber_speed_km_per_s", 2.0e5)
    T = chain.ideal_total_time(n, L, eta_d, eta_m, L_att, c)
    report = {
        "nesting_levels": n,
        "total_length_km": L,
        "eta_d": eta_d,
        "eta_m": eta_m,
        "attenuation_length_km": L_att,
        "fiber_speed_km_per_s": c,
        "T_ideal_s": T,
    }
    emit(report, args)
    return EXIT_OK


def _grid(cfg: dict[str, Any]) -> optimizer.GridSpec:
    base = optimizer.GridSpec()
    return optimizer.GridSpec(
        p_min=_number(cfg, "p_min", base.p_min),
        p_max=_number(cfg, "p_max", base.p_max),
        p_points=_number(cfg, "p_points", base.p_points, int),
        R_min=_number(cfg, "R_min", base.R_min),
        R_max=_number(cfg, "R_max", base.R_max),
        R_points=_number(cfg, "R_points", base.R_points, int),
        refine=_flag({"refine": cfg.get("refine", True)}, "refine"),
        refine_factor=_number(cfg, "refine_factor", base.refine_factor),
    )


def cmd_optimize(args: argparse.Namespace) -> int:
    cfg = merged_config(args)
    if args.f_min is not None:
        cfg["f_min"] = args.f_min
    if args.n_max is not None:
        cfg["n_max"] = args.n_max
    hardware = _params({**_SEARCH_PLACEHOLDERS, **cfg})
    best = optimizer.optimize(
        q=hardware.q,
        hardware=hardware,
        f_min=_number(cfg, "f_min", 0.9),
        n_max=_number(cfg, "n_max", 4, int),
        grid=_grid(cfg),
        workers=args.workers,
        as_printed=_flag(cfg, "as_printed"),
    )
    emit(best.to_dict(), args)
    return EXIT_OK


def _values(raw: Any) -> list[float]:
    if isinstance(raw, str):
        parts = [s for s in raw.replace(";", ",").split(",") if s.strip()]
        try:
            return [float(s) for s in parts]
        except ValueError:
            raise ParameterError("values", f"not a comma-separated list of numbers: {raw!r}") from None
    if isinstance(raw, (list, tuple)) and raw and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw
    ):
        return [float(v) for v in raw]
    raise ParameterError("values", "need a non-empty list of numbers")


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = merged_config(args)
    variable = args.variable or cfg.get("variable")
    if variable is None:
        raise ParameterError("variable", "missing")
    raw = args.values if args.values is not None else cfg.get("values")
    if raw is None:
        raise ParameterError("values", "missing")
    values = _values(raw)
    if variable in ("p", "R"):
        # The swept variable need not be present in the config.
        cfg.setdefault(variable, values[0])
    if variable == "n":
        cfg.setdefault("nesting_levels", int(values[0]))
    fixed = _params(cfg)
    rows = optimizer.sweep(
        variable,
        values,
        fixed,
        include_prep_time=_flag(cfg, "include_prep_time"),
        as_printed=_flag(cfg, "as_printed"),
    )
    emit(rows, args, default_format="csv")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = merged_config(args)
    kind = args.kind or cfg.get("kind", "amplifier")
    p = _number(cfg, "p")
    q = _number(cfg, "q")
    R = _number(cfg, "R")
    eta_d = _number(cfg, "eta_d")
    for name, v in (("p", p), ("q", q), ("R", R), ("eta_d", eta_d)):
        if not 0.0 < v <= 1.0 or (name == "R" and v == 1.0):
            raise ParameterError(name, f"out of range for verification: {v}")
    if kind == "amplifier":
        tol = args.tolerance if args.tolerance is not None else _number(cfg, "tolerance", 0.01)
        report = oracle.verify_amplifier(p, q, R, eta_d, tolerance=tol)
    elif kind == "link":
        eta_m = _number(cfg, "eta_m")
        if "eta_t" in cfg:
            eta_t = _number(cfg, "eta_t")
        else:
            eta_t = _params({**_SEARCH_PLACEHOLDERS, **cfg}).eta_t
        tol = args.tolerance if args.tolerance is not None else _number(cfg, "tolerance", 0.02)
        levels = args.levels if args.levels is not None else _number(cfg, "levels", 1, int)
        report = oracle.verify_link_and_swaps(
            p, q, R, eta_d, eta_m, eta_t, levels=levels, tolerance=tol, as_printed=_flag(cfg, "as_printed")
        )
    else:
        raise ParameterError("kind", f"must be 'amplifier' or 'link', got {kind!r}")
    emit(report.to_dict(), args)
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def table1(as_printed: bool = False) -> list[dict[str, Any]]:
    """Recompute the three reference performance rows against their reference values."""
    rows = []
    for i, (setting, T_ref, F_ref, gamma_ref) in enumerate(TABLE1_ROWS, start=1):
        params = RepeaterParams(**setting, **TABLE1_HARDWARE)
        res = chain.total_time(params, as_printed=as_printed)
        gamma_mhz = res.diagnostics["breakeven_gamma_rep_hz"] / 1e6
        T_ok = abs(res.T_tot - T_ref) <= TABLE1_T_RTOL * T_ref
        F_ok = abs(res.F - F_ref) <= TABLE1_F_ATOL
        rows.append(
            {
                "row": i,
                **setting,
                "T_tot_s": res.T_tot,
                "T_tot_ref_s": T_ref,
                "F": res.F,
                "F_ref": F_ref,
                "gamma_rep_MHz": gamma_mhz,
                "gamma_rep_ref_MHz": gamma_ref,
                "passed": T_ok and F_ok,
            }
        )
    return rows


def cmd_table1(args: argparse.Namespace) -> int:
    rows = table1(as_printed=args.printed_link_coefficient)
    if (args.format or "text") != "text":
        emit(rows, args)
        return EXIT_OK
    lines = [
        f"{'row':>3}  {'p':>8}  {'q':>5}  {'R':>5}  {'T_tot [s]':>9}  {'ref':>5}  "
        f"{'F':>6}  {'ref':>5}  {'gamma [MHz]':>11}  {'ref':>5}  result"
    ]
    for r in rows:
        lines.append(
            f"{r['row']:>3}  {r['p']:>8.2g}  {r['q']:>5.2f}  {r['R']:>5.2f}  {r['T_tot_s']:>9.2f}  "
            f"{r['T_tot_ref_s']:>5.1f}  {r['F']:>6.3f}  {r['F_ref']:>5.2f}  "
            f"{r['gamma_rep_MHz']:>11.1f}  {r['gamma_rep_ref_MHz']:>5.0f}  {'PASS' if r['passed'] else 'FAIL'}"
        )
    lines.append(f"tolerance: T_tot within {TABLE1_T_RTOL:.0%}, F within {TABLE1_F_ATOL}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"flat JSON config (fallback: ${CONFIG_ENV})")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv", "text"), default=None)
    common.add_argument("--include-prep-time", action="store_true", help="add T0s to the per-attempt time")
    common.add_argument(
        "--printed-link-coefficient",
        action="store_true",
        help="double the lost-pair channel of the elementary-link error weight (alternative form)",
    )
    common.add_argument("--p", type=float, help="pair emission probability")
    common.add_argument("--q", type=float, help="single-photon source efficiency")
    common.add_argument("--R", type=float, help="tunable beam-splitter reflectivity")
    common.add_argument("--eta-d", dest="eta_d", type=float, help="detector efficiency")
    common.add_argument("--eta-m", dest="eta_m", type=float, help="memory efficiency")
    common.add_argument("--L", type=float, help="total distance [km]")
    common.add_argument("--n", type=int, help="nesting levels")
    common.add_argument("--gamma-rep", dest="gamma_rep", type=float, help="source repetition rate [Hz]")

    parser = argparse.ArgumentParser(prog="qamp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("rate", parents=[common], help="distribution time and fidelity")
    sp.set_defaults(func=cmd_rate)

    sp = sub.add_parser("ideal", parents=[common], help="time with perfect on-demand pair sources")
    sp.set_defaults(func=cmd_ideal)

    sp = sub.add_parser("optimize", parents=[common], help="grid search over p, R and n")
    sp.add_argument("--f-min", dest="f_min", type=float, help="fidelity floor (default 0.9)")
    sp.add_argument("--n-max", dest="n_max", type=int, help="largest nesting level (default 4)")
    sp.add_argument("--workers", type=int, default=1, help="worker processes")
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("sweep", parents=[common], help="one-variable sweep, CSV by default")
    sp.add_argument("--variable", choices=sorted(optimizer.SWEEP_FIELDS))
    sp.add_argument("--values", help="comma-separated values")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify", parents=[common], help="exact optical simulation against the formulas")
    sp.add_argument("--kind", choices=("amplifier", "link"))
    sp.add_argument("--levels", type=int, help="swap levels to simulate (link only, 0-2)")
    sp.add_argument("--tolerance", type=float, help="relative tolerance")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("table1", parents=[common], help="reference performance table, recomputed")
    sp.set_defaults(func=cmd_table1)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: invalid parameter {exc}", file=sys.stderr)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
