"""Command line interface.

Exit codes: 0 all checks pass, 1 a check exceeded tolerance, 2 input or
parse error, 3 jet budget exhausted.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import report as rp
from .chart import ChartSyntaxError, parse_chart
from .geometry import NonContactPoint
from .jets import BudgetExhausted, JetDomainError
from .registry import NAMES, ORBITS, builtin

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class InputError(Exception):
    pass


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"could not parse {what} {text!r}") from None


def _chart(args):
    if args.chart:
        try:
            text = Path(args.chart).read_text()
        except OSError as exc:
            raise InputError(f"cannot read chart file: {exc}") from None
        return parse_chart(text, symmetric_fill=not args.strict_symmetry)
    try:
        return builtin(args.builtin, args.eps)
    except (KeyError, ValueError) as exc:
        raise InputError(str(exc.args[0] if exc.args else exc)) from None


def _points(args, dim: int):
    if args.point is not None:
        p = _floats(args.point, "point")
        if len(p) != dim:
            raise InputError(f"point has {len(p)} coordinates, chart dimension is {dim}")
        return np.array([p]), None
    box = _floats(args.box, "box")
    if len(box) != 2 or not box[0] < box[1]:
        raise InputError("box must be LO,HI with LO < HI")
    return rp.sample_points(dim, args.points, args.seed, tuple(box)), args.seed


def _tol(args) -> float:
    return args.tol if args.tol is not None else rp.default_tol()


def _order(args, nu_cutoff=None) -> int:
    if args.order is not None:
        return args.order
    return nu_cutoff + 3 if nu_cutoff is not None else 4


# ---------------------------------------------------------------------------
# subcommands


def cmd_verify(args):
    chart = _chart(args)
    pts, seed = _points(args, chart.dim)
    tol = _tol(args)
    res = rp.sweep(rp.verify_point, chart, pts, (_order(args),), args.workers)
    worst = {k: rp.worst(res, ("residuals", k)) for k in ("compatibility", "connection", "symmetries")}
    ok = all(v <= tol for v in worst.values())
    doc = rp.header("verify", chart, tol, seed, points=pts, order=_order(args),
                    results=res, worst=worst, passed=ok)
    return doc, ok


def cmd_classify(args):
    chart = _chart(args)
    pts, seed = _points(args, chart.dim)
    tol = _tol(args)
    res = rp.sweep(rp.classify_point, chart, pts, (_order(args), tol), args.workers)
    flags = {k: all(r[k] for r in res)
             for k in ("is_contact", "is_kcontact", "is_cr", "is_sasakian", "levi_positive")}
    doc = rp.header("classify", chart, tol, seed, points=pts, order=_order(args),
                    results=res, flags=flags)
    return doc, True


def cmd_fedosov(args):
    chart = _chart(args)
    pts, seed = _points(args, chart.dim)
    tol = _tol(args)
    K = args.nu_cutoff
    res = rp.sweep(rp.fedosov_point, chart, pts, (K, _order(args, K)), args.workers)
    flat = rp.worst(res, ("flatness_residual",))
    dinv = rp.worst(res, ("delta_inv_r",))
    ok = flat <= tol and dinv <= tol
    doc = rp.header("fedosov", chart, tol, seed, points=pts, nu_cutoff=K,
                    order=_order(args, K), results=res, passed=ok)
    return doc, ok


def cmd_star(args):
    chart = _chart(args)
    pts, seed = _points(args, chart.dim)
    K = args.nu_cutoff
    res = rp.sweep(rp.star_point, chart, pts, (args.a, args.b, K, _order(args, K)), args.workers)
    doc = rp.header("star", chart, _tol(args), seed, points=pts, nu_cutoff=K,
                    order=_order(args, K), a=args.a, b=args.b, results=res)
    return doc, True


def cmd_delta(args):
    chart = _chart(args)
    pts, seed = _points(args, chart.dim)
    K = args.nu_cutoff
    res = rp.sweep(rp.delta_point, chart, pts, (args.a, K, _order(args, K)), args.workers)
    doc = rp.header("delta", chart, _tol(args), seed, points=pts, nu_cutoff=K,
                    order=_order(args, K), a=args.a, results=res)
    return doc, True


def cmd_obstruction(args):
    from .diagnostics import psi_gamma

    chart = _chart(args)
    pts, seed = _points(args, chart.dim)
    tol = _tol(args)
    K = max(args.nu_cutoff, 2)
    order = _order(args, K)
    res = rp.sweep(rp.obstruction_point, chart, pts, (args.a, K, order), args.workers)
    spread = 0.0
    for r in res:
        vals = list(r["delta1"].values()) + [r["delta1_engine"]]
        spread = max(spread, max(abs(complex(u) - complex(v)) for u in vals for v in vals))
    doc = rp.header("obstruction", chart, tol, seed, points=pts, nu_cutoff=K, order=order,
                    a=args.a, results=res, delta1_spread=spread)
    ok = spread <= max(tol, 1e-7)
    if args.orbit:
        if args.orbit not in ORBITS:
            raise InputError(f"unknown orbit {args.orbit!r}; choose from {', '.join(ORBITS)}")
        q = psi_gamma(chart, ORBITS[args.orbit](), args.a, n_quad=args.n_quad)
        doc["psi_gamma"] = {"orbit": args.orbit, "value": q.value,
                            "error_estimate": q.error_estimate, "n_quad": q.n_quad,
                            "orbit_residual": q.orbit_residual}
    doc["passed"] = ok
    return doc, ok


COMMANDS = {
    "verify": cmd_verify,
    "classify": cmd_classify,
    "fedosov": cmd_fedosov,
    "star": cmd_star,
    "delta": cmd_delta,
    "obstruction": cmd_obstruction,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--builtin", default="heisenberg3", choices=NAMES,
                     help="builtin structure (default heisenberg3)")
    src.add_argument("--chart", help="chart file")
    common.add_argument("--eps", type=float, default=None, help="deformation parameter")
    common.add_argument("--strict-symmetry", action="store_true",
                        help="require both off-diagonal metric entries in chart files")
    common.add_argument("--point", help='base point, e.g. "0.1,0.2,0.3"')
    common.add_argument("--points", type=int, default=1, help="number of random points")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--box", default="-0.5,0.5", help="sampling box LO,HI")
    common.add_argument("--nu-cutoff", type=int, default=4, help="weight cutoff (deg nu = 2)")
    common.add_argument("--order", type=int, default=None, help="frame jet order")
    common.add_argument("--tol", type=float, default=None,
                        help=f"tolerance (default ${rp.TOL_ENV} or {rp.DEFAULT_TOL:g})")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out", help="write the report here instead of stdout")

    p = argparse.ArgumentParser(prog="contact-wick",
                                description="Fedosov-type quantization checks on contact metric charts.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="structure residuals at base points")
    sub.add_parser("classify", parents=[common], help="K-contact / Sasakian flags")
    sub.add_parser("fedosov", parents=[common], help="abelian connection and flatness")
    sp = sub.add_parser("star", parents=[common], help="star products of two observables")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sd = sub.add_parser("delta", parents=[common], help="the operator Delta on an observable")
    sd.add_argument("--a", required=True)
    so = sub.add_parser("obstruction", parents=[common], help="Delta_1, zeta, chi and Psi")
    so.add_argument("--a", required=True)
    so.add_argument("--orbit", default=None, help=f"closed Reeb orbit ({', '.join(ORBITS)})")
    so.add_argument("--n-quad", type=int, default=256)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        doc, ok = COMMANDS[args.command](args)
    except (InputError, ChartSyntaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExhausted as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (NonContactPoint, JetDomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = rp.dumps(doc)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_CHECK
