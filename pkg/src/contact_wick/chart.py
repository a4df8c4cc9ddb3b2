"""Chart files: an expression grammar, its parser/printer and jet evaluation.

Expression grammar::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom ("^" ["-"] INT)?
    atom   := NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"
    FUNC   := sin | cos | exp | sqrt

A chart file is a list of ``key = value`` header lines followed by the
sections ``[lambda]``, ``[metric]``, ``[phi]`` and ``[xi]``::

    dim = 3
    coords = x, y, z
    [lambda]
    x = -y
    z = 1
    [metric]
    x,x = 1 + y^2
    x,z = -y
    ...

Indices are coordinate names or 0-based integers.  Omitted entries are
zero.  A ``[phi]`` entry ``i,j`` is the component ``phi^i_j``.  A metric
off-diagonal entry given once fills both slots; if both ``i,j`` and ``j,i``
appear they must be the same expression.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .jets import Jet, jet_elem, jet_vars, jet_space, n_monomials

FUNCTIONS = ("sin", "cos", "exp", "sqrt")


class ChartSyntaxError(ValueError):
    """Malformed chart file or expression; carries line and column."""

    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {col}" if col is not None else "") + ": "
        super().__init__(where + msg)


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exp: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Num | Var | Neg | BinOp | Pow | Call

ZERO = Num(0.0)


def symbols(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, BinOp):
        return symbols(e.left) | symbols(e.right)
    if isinstance(e, (Neg, Call)):
        return symbols(e.arg)
    return symbols(e.base)


def is_zero(e: Expr) -> bool:
    return isinstance(e, Num) and e.value == 0.0


# ---------------------------------------------------------------------------
# tokenizer and parser

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
      | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<op>[-+*/^()])
    )""",
    re.VERBOSE,
)


def _tokenize(text: str, line: int | None, col0: int):
    toks = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ChartSyntaxError(f"unexpected character {text[pos]!r}", line, col0 + pos + 1)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), col0 + start + 1))
        pos = m.end()
    toks.append(("end", "", col0 + len(text) + 1))
    return toks


class _Parser:
    def __init__(self, text, coords, line, col0):
        self.toks = _tokenize(text, line, col0)
        self.k = 0
        self.coords = coords
        self.line = line

    def peek(self):
        return self.toks[self.k]

    def take(self):
        t = self.toks[self.k]
        self.k += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ChartSyntaxError(msg, self.line, tok[2])

    def expect(self, val):
        t = self.take()
        if t[1] != val:
            self.error(f"expected {val!r}, found {t[1] or 'end of expression'!r}", t)
        return t

    def parse(self):
        e = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected token {self.peek()[1]!r}")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        t = self.peek()
        if t[0] == "op" and t[1] == "-":
            self.take()
            return Neg(self.unary())
        if t[0] == "op" and t[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                self.take()
                sign = -1
            t = self.take()
            if t[0] != "num" or not re.fullmatch(r"\d+", t[1]):
                self.error("exponent must be an integer literal", t)
            return Pow(base, sign * int(t[1]))
        return base

    def atom(self):
        t = self.take()
        kind, val = t[0], t[1]
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek()[1] == "(":
                if val not in FUNCTIONS:
                    self.error(f"unknown function {val!r}", t)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in FUNCTIONS:
                self.error(f"function {val!r} needs one parenthesised argument", t)
            if self.coords is not None and val not in self.coords:
                self.error(f"undeclared coordinate {val!r}", t)
            return Var(val)
        if val == "(":
            e = self.expr()
            self.expect(")")
            return e
        self.error(f"unexpected token {val or 'end of expression'!r}", t)


def parse_expr(text: str, coords: Sequence[str] | None = None, line: int | None = None,
               col0: int = 0) -> Expr:
    """Parse one expression; ``coords`` (if given) restricts the allowed names."""
    return _Parser(text, None if coords is None else set(coords), line, col0).parse()


# ---------------------------------------------------------------------------
# printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(e):
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Pow):
        return 4
    return 5


def emit_expr(e: Expr) -> str:
    """Print an expression so that :func:`parse_expr` returns the same tree."""
    if isinstance(e, Num):
        s = repr(float(e.value))
        if e.value < 0:
            raise ValueError("negative literals are not representable; use Neg")
        return s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({emit_expr(e.arg)})"
    if isinstance(e, Neg):
        inner = emit_expr(e.arg)
        if _prec(e.arg) < 3:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Pow):
        b = emit_expr(e.base)
        if _prec(e.base) < 5:
            b = f"({b})"
        return f"{b}^{e.exp}"
    p = _PREC[e.op]
    left = emit_expr(e.left)
    if _prec(e.left) < p:
        left = f"({left})"
    right = emit_expr(e.right)
    # operators are left associative: same-precedence right operands need parens
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}"


# ---------------------------------------------------------------------------
# evaluation


def eval_expr_jets(e: Expr, coords: Sequence[Jet], names: Sequence[str] | None = None) -> Jet:
    """Evaluate ``e`` with coordinate symbols bound to the jets ``coords``.

    ``names`` gives the coordinate names in order; without it, names are
    resolved through the ``_names`` attribute set by :func:`eval_jet`.
    """
    proto = coords[0]
    lookup = {n: c for n, c in zip(names, coords)} if names is not None else None

    def ev(x):
        if isinstance(x, Num):
            return Jet.constant(x.value, proto.n_vars, proto.order)
        if isinstance(x, Var):
            if lookup is None:
                raise KeyError("coordinate names are required")
            try:
                return lookup[x.name]
            except KeyError:
                raise ChartSyntaxError(f"undeclared coordinate {x.name!r}") from None
        if isinstance(x, Neg):
            return -ev(x.arg)
        if isinstance(x, Pow):
            return jet_elem("pow_int", ev(x.base), power=x.exp)
        if isinstance(x, Call):
            return jet_elem(x.func, ev(x.arg))
        a, b = ev(x.left), ev(x.right)
        if x.op == "+":
            return a + b
        if x.op == "-":
            return a - b
        if x.op == "*":
            return a * b
        return a / b

    return ev(e)


def eval_jet(e: Expr, base_point: Sequence[float], order: int,
             coords: Sequence[str] | None = None) -> Jet:
    """Jet of ``e`` at ``base_point``.

    ``coords`` names the coordinates in order; it defaults to ``x, y, z``
    for three variables and ``x0, x1, ...`` otherwise.
    """
    n = len(base_point)
    if coords is None:
        coords = ("x", "y", "z") if n == 3 else tuple(f"x{i}" for i in range(n))
    if len(coords) != n:
        raise ValueError(f"base point has {n} entries but {len(coords)} coordinates are named")
    return eval_expr_jets(e, jet_vars(base_point, order), coords)


def eval_array(exprs, names, point, order) -> np.ndarray:
    """Coefficient array of a nested list of expressions (zeros skipped)."""
    exprs = np.asarray(exprs, dtype=object)
    n = len(point)
    out = np.zeros(exprs.shape + (n_monomials(n, order),))
    cjets = jet_vars(point, order)
    cache: dict = {}
    for idx in np.ndindex(exprs.shape):
        e = exprs[idx]
        if is_zero(e):
            continue
        if e not in cache:
            cache[e] = eval_expr_jets(e, cjets, names).coeffs
        val = cache[e]
        if np.iscomplexobj(val):
            raise ValueError("chart data must be real")
        out[idx] = val
    return out


# ---------------------------------------------------------------------------
# chart structures


@dataclass(frozen=True)
class ChartStructure:
    """Contact metric data on one chart.

    ``lam[i]`` is ``lambda_i``, ``metric[i][j]`` is ``g_ij``,
    ``phi[i][j]`` is ``phi^i_j`` and ``xi[i]`` is ``xi^i``.
    """

    coords: tuple[str, ...]
    lam: tuple[Expr, ...]
    metric: tuple[tuple[Expr, ...], ...]
    phi: tuple[tuple[Expr, ...], ...]
    xi: tuple[Expr, ...]
    name: str = ""
    params: tuple = field(default=())

    def __post_init__(self):
        n = len(self.coords)
        if n % 2 == 0 or n < 3:
            raise ValueError(f"chart dimension must be odd and >= 3, got {n}")
        for i in range(n):
            for j in range(i + 1, n):
                if self.metric[i][j] != self.metric[j][i]:
                    raise ChartSyntaxError("non-symmetric metric block "
                                           f"({self.coords[i]},{self.coords[j]})")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def m(self) -> int:
        return (self.dim - 1) // 2

    def descriptor(self) -> str:
        if self.name:
            return self.name
        return "sha256:" + hashlib.sha256(emit_chart(self).encode()).hexdigest()

    def arrays(self, point, order: int) -> dict[str, np.ndarray]:
        """Real jet coefficient arrays for ``lam``, ``g``, ``phi`` and ``xi``."""
        point = np.asarray(point, dtype=float)
        if point.shape != (self.dim,):
            raise ValueError(f"base point must have {self.dim} coordinates")
        names = self.coords
        return {
            "lam": eval_array(self.lam, names, point, order),
            "g": eval_array(self.metric, names, point, order),
            "phi": eval_array(self.phi, names, point, order),
            "xi": eval_array(self.xi, names, point, order),
        }

    def with_phi_sign(self, sign: int) -> "ChartStructure":
        if sign == 1:
            return self
        phi = tuple(tuple(_negate(e) for e in row) for row in self.phi)
        return ChartStructure(self.coords, self.lam, self.metric, phi, self.xi,
                              self.name, self.params)

    def scaled_metric(self, factor: float) -> "ChartStructure":
        """Copy with ``g`` multiplied by ``factor`` (a deliberately broken structure)."""
        g = tuple(tuple(e if is_zero(e) else BinOp("*", Num(float(factor)), e) for e in row)
                  for row in self.metric)
        return ChartStructure(self.coords, self.lam, g, self.phi, self.xi,
                              f"{self.name}*g{factor}" if self.name else "", self.params)


def _negate(e):
    if is_zero(e):
        return e
    if isinstance(e, Neg):
        return e.arg
    return Neg(e)


_HEADER = re.compile(r"^\s*([A-Za-z_]+)\s*=\s*(.*?)\s*$")
_SECTION = re.compile(r"^\s*\[\s*([A-Za-z_]+)\s*\]\s*$")
_ENTRY = re.compile(r"^(\s*)([^=]+?)\s*=\s*(.*?)\s*$")


def _strip_comment(line):
    k = line.find("#")
    return line if k < 0 else line[:k]


def parse_chart(text: str, symmetric_fill: bool = True) -> ChartStructure:
    """Parse a chart file.

    Parameters
    ----------
    text : str
        File contents.
    symmetric_fill : bool
        If true, a single off-diagonal metric entry fills both slots.  If
        false, both ``i,j`` and ``j,i`` are required.
    """
    header: dict[str, tuple[str, int]] = {}
    sections: dict[str, list[tuple[str, str, int, int]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        m = _SECTION.match(line)
        if m:
            current = m.group(1).lower()
            if current not in ("lambda", "metric", "phi", "xi"):
                raise ChartSyntaxError(f"unknown section [{current}]", lineno, 1)
            if current in sections:
                raise ChartSyntaxError(f"duplicate section [{current}]", lineno, 1)
            sections[current] = []
            continue
        m = _ENTRY.match(line)
        if not m:
            raise ChartSyntaxError("expected 'key = value'", lineno, 1)
        key = m.group(2).strip()
        val = m.group(3)
        col = line.index("=", len(m.group(1)) + len(m.group(2))) + 1
        while col < len(line) and line[col].isspace():
            col += 1
        if current is None:
            header[key.lower()] = (val, lineno)
        else:
            sections[current].append((key, val, lineno, col))

    if "coords" not in header:
        raise ChartSyntaxError("missing header 'coords'")
    coords = tuple(c.strip() for c in header["coords"][0].split(",") if c.strip())
    for c in coords:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", c) or c in FUNCTIONS:
            raise ChartSyntaxError(f"invalid coordinate name {c!r}", header["coords"][1])
    if len(set(coords)) != len(coords):
        raise ChartSyntaxError("repeated coordinate name", header["coords"][1])
    n = len(coords)
    if "dim" in header:
        try:
            dim = int(header["dim"][0])
        except ValueError:
            raise ChartSyntaxError("dim must be an integer", header["dim"][1]) from None
        if dim != n:
            raise ChartSyntaxError(f"dim = {dim} but {n} coordinates declared", header["dim"][1])
    if n % 2 == 0 or n < 3:
        raise ChartSyntaxError(f"dimension must be odd and >= 3, got {n}")
    for sec in ("lambda", "metric", "phi", "xi"):
        if sec not in sections:
            raise ChartSyntaxError(f"missing section [{sec}]")

    def index(tok, lineno):
        tok = tok.strip()
        if tok in coords:
            return coords.index(tok)
        if re.fullmatch(r"\d+", tok) and int(tok) < n:
            return int(tok)
        raise ChartSyntaxError(f"undeclared coordinate index {tok!r}", lineno, 1)

    def parse_val(val, lineno, col):
        return parse_expr(val, coords, lineno, col - 1)

    def vector(sec):
        out = [ZERO] * n
        seen = set()
        for key, val, lineno, col in sections[sec]:
            if "," in key:
                raise ChartSyntaxError(f"[{sec}] entries take a single index", lineno, 1)
            i = index(key, lineno)
            if i in seen:
                raise ChartSyntaxError(f"duplicate entry {key!r} in [{sec}]", lineno, 1)
            seen.add(i)
            out[i] = parse_val(val, lineno, col)
        return tuple(out)

    def matrix(sec):
        out = [[ZERO] * n for _ in range(n)]
        given = {}
        for key, val, lineno, col in sections[sec]:
            parts = key.split(",")
            if len(parts) != 2:
                raise ChartSyntaxError(f"[{sec}] entries take an index pair", lineno, 1)
            i, j = index(parts[0], lineno), index(parts[1], lineno)
            if (i, j) in given:
                raise ChartSyntaxError(f"duplicate entry {key!r} in [{sec}]", lineno, 1)
            given[(i, j)] = lineno
            out[i][j] = parse_val(val, lineno, col)
        return out, given

    lam = vector("lambda")
    xi = vector("xi")
    phi, _ = matrix("phi")
    g, given = matrix("metric")
    for (i, j), lineno in given.items():
        if i == j:
            continue
        if (j, i) in given:
            if g[i][j] != g[j][i]:
                raise ChartSyntaxError(
                    f"non-symmetric metric block ({coords[i]},{coords[j]})", lineno, 1)
        elif symmetric_fill:
            g[j][i] = g[i][j]
        else:
            raise ChartSyntaxError(
                f"missing symmetric entry ({coords[j]},{coords[i]})", lineno, 1)
    name = header.get("name", ("", 0))[0]
    return ChartStructure(coords, lam, tuple(map(tuple, g)), tuple(map(tuple, phi)), xi, name)


def emit_chart(chart: ChartStructure) -> str:
    """Serialise a chart; :func:`parse_chart` inverts this exactly."""
    c = chart.coords
    n = len(c)
    lines = []
    if chart.name:
        lines.append(f"name = {chart.name}")
    lines += [f"dim = {n}", "coords = " + ", ".join(c), "[lambda]"]
    lines += [f"{c[i]} = {emit_expr(e)}" for i, e in enumerate(chart.lam) if not is_zero(e)]
    lines.append("[metric]")
    for i in range(n):
        for j in range(i, n):
            e = chart.metric[i][j]
            if not is_zero(e):
                lines.append(f"{c[i]},{c[j]} = {emit_expr(e)}")
    lines.append("[phi]")
    for i in range(n):
        for j in range(n):
            e = chart.phi[i][j]
            if not is_zero(e):
                lines.append(f"{c[i]},{c[j]} = {emit_expr(e)}")
    lines.append("[xi]")
    lines += [f"{c[i]} = {emit_expr(e)}" for i, e in enumerate(chart.xi) if not is_zero(e)]
    return "\n".join(lines) + "\n"
