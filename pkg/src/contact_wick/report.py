"""Report assembly and deterministic JSON serialization."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

import numpy as np

from . import __version__
from .chart import ChartStructure
from .geometry import (
    GeometryFrame,
    check_compatibility,
    check_connection,
    check_symmetries,
    classify,
    jacobi_bracket,
)

SCHEMA_VERSION = 1
TOL_ENV = "CONTACT_WICK_TOL"
DEFAULT_TOL = 1e-8


def default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None or raw == "":
        return DEFAULT_TOL
    try:
        val = float(raw)
    except ValueError:
        raise ValueError(f"{TOL_ENV}={raw!r} is not a number") from None
    if not val > 0:
        raise ValueError(f"{TOL_ENV} must be positive")
    return val


# ---------------------------------------------------------------------------
# serialization


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = "%.17g" % x
    if all(c in "-0123456789" for c in s):
        s += ".0"
    return s


def _esc(s: str) -> str:
    out = []
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch < " ":
            out.append("\\u%04x" % ord(ch))
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


def to_plain(obj):
    """Convert numpy and complex values to JSON-friendly Python objects."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def dumps(obj, indent: int = 1) -> str:
    """JSON text with sorted keys and 17-significant-digit floats."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{_esc(k)}: {enc(o[k], level + 1)}" for k in sorted(o)]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in o):
                return "[" + ", ".join(enc(v, level) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in o) + "\n" + end + "]"
        if o is None:
            return "null"
        if o is True:
            return "true"
        if o is False:
            return "false"
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            return _fmt_float(o)
        if isinstance(o, str):
            return _esc(o)
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(to_plain(obj), 0) + "\n"


def header(command: str, chart: ChartStructure, tol: float, seed=None, **extra) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "tool": "contact_wick",
        "version": __version__,
        "command": command,
        "chart": chart.descriptor(),
        "tolerance": {"tol": tol, "env_var": TOL_ENV},
        "seed": seed,
    }
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# points


def sample_points(dim: int, n: int, seed: int, box=(-0.5, 0.5)) -> np.ndarray:
    rng = np.random.default_rng(seed)
    lo, hi = box
    return rng.uniform(lo, hi, size=(n, dim))


def sweep(fn, chart, points, args, workers: int = 1) -> list:
    """Apply ``fn(chart, point, *args)`` to every point, keeping the input order."""
    if workers <= 1 or len(points) <= 1:
        return [fn(chart, p, *args) for p in points]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(fn, chart, p, *args) for p in points]
        return [f.result() for f in futs]


def _max_val(d: dict) -> float:
    return max((float(v) for v in d.values()), default=0.0)


# ---------------------------------------------------------------------------
# per-point work units (top level so that worker processes can pickle them)


def verify_point(chart: ChartStructure, point, order: int) -> dict:
    frame = GeometryFrame(chart, point, order)
    res = {
        "compatibility": check_compatibility(frame),
        "connection": check_connection(frame),
        "symmetries": check_symmetries(frame),
    }
    return {"point": list(point), "residuals": res, "classification": classify(frame)}


def classify_point(chart: ChartStructure, point, order: int, tol: float) -> dict:
    frame = GeometryFrame(chart, point, order)
    return {"point": list(point), **classify(frame, tol)}


def fedosov_point(chart: ChartStructure, point, nu_cutoff: int, order: int) -> dict:
    from .fedosov import flatness_residual, iterate_once, solve_r
    from .wick import delta_inv

    frame = GeometryFrame(chart, point, order)
    st = solve_r(frame, nu_cutoff)
    coeffs = []
    for (p, alpha, F), v in sorted(st.r.truncate(nu_cutoff).point_values().items()):
        if abs(v) > 1e-15:
            coeffs.append({"nu": p, "y": list(alpha), "form": list(F), "value": v})
    flat = flatness_residual(st)
    return {
        "point": list(point),
        "r_coefficients": coeffs,
        "flatness_residual": {str(k): v for k, v in flat.items() if k <= nu_cutoff},
        "delta_inv_r": delta_inv(st.r).max_abs(),
        "idempotence": (iterate_once(st) - st.r).max_abs(),
        "iteration_changes": list(st.residuals),
    }


def _series_values(s) -> list:
    return [complex(v) for v in s.values()]


def star_point(chart, point, a_expr, b_expr, nu_cutoff, order) -> dict:
    from .fedosov import delta_op, observable_series, solve_r, star

    frame = GeometryFrame(chart, point, order)
    st = solve_r(frame, nu_cutoff)
    ab = star(st, a_expr, b_expr)
    ba = star(st, b_expr, a_expr)
    a = observable_series(frame, a_expr)[0]
    b = observable_series(frame, b_expr)[0]
    br = jacobi_bracket(frame, a, b)
    return {
        "point": list(point),
        "a_star_b": _series_values(ab),
        "b_star_a": _series_values(ba),
        "commutator": _series_values(ab - ba),
        "i_jacobi_bracket": 1j * complex(br.value),
        "delta_a": _series_values(delta_op(st, a_expr)),
        "delta_b": _series_values(delta_op(st, b_expr)),
    }


def delta_point(chart, point, a_expr, nu_cutoff, order) -> dict:
    from .fedosov import delta_op, solve_r

    frame = GeometryFrame(chart, point, order)
    st = solve_r(frame, nu_cutoff)
    return {"point": list(point), "delta": _series_values(delta_op(st, a_expr))}


def obstruction_point(chart, point, a_expr, nu_cutoff, order) -> dict:
    from .diagnostics import obstruction_data
    from .fedosov import delta_op, solve_r

    frame = GeometryFrame(chart, point, order)
    data = obstruction_data(frame, a_expr)
    st = solve_r(frame, max(nu_cutoff, 2))
    d = delta_op(st, a_expr).values()
    engine = complex(d[1]) if len(d) > 1 else complex("nan")
    return {
        "point": list(point),
        "delta1": dict(data.delta1_forms),
        "delta1_engine": engine,
        "zeta": data.zeta,
        "chi": data.chi,
    }


def worst(results: Sequence[dict], key_path: Sequence[str]) -> float:
    """Maximum of a nested residual table over all points."""
    best = 0.0
    for r in results:
        d = r
        for k in key_path:
            d = d[k]
        if isinstance(d, dict):
            best = max(best, _max_val(d))
        else:
            best = max(best, float(d))
    return best
