"""Truncated multivariate Taylor jets.

A jet in ``n`` variables of order ``k`` is stored as a dense coefficient
vector over the monomials of total degree ``<= k``, listed in graded
lexicographic order.  Because the basis is graded, truncating to a lower
order is a prefix slice, which the rest of the package relies on.

Two layers are provided:

* :class:`JetSpace` works on raw numpy arrays whose *last* axis holds the
  coefficients.  Leading axes are free, so a whole tensor of jets (say a
  Christoffel array) is a single array and products/contractions are
  vectorised through :meth:`JetSpace.einsum`.
* :class:`Jet` is a small immutable value wrapper with operator
  overloading, used for user-facing scalars.
"""
from __future__ import annotations

import functools
import itertools
import math
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

ATOL = 1e-10
RTOL = 1e-8

# temporaries in pair-space products are chunked to stay below this many
# elements per operand
_CHUNK_ELEMS = 4_000_000


class BudgetExhausted(ValueError):
    """Raised when an operation needs more derivative orders than a jet holds."""


class JetDomainError(ValueError):
    """Raised when an elementary function is evaluated outside its domain."""


def _graded_lex(n_vars: int, order: int) -> np.ndarray:
    rows = []
    for d in range(order + 1):
        # lexicographically decreasing exponent tuples of degree d
        for combo in itertools.combinations_with_replacement(range(n_vars), d):
            e = [0] * n_vars
            for v in combo:
                e[v] += 1
            rows.append(e)
    if n_vars == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(rows, dtype=np.int64).reshape(-1, n_vars)


def n_monomials(n_vars: int, order: int) -> int:
    if order < 0:
        return 0
    return math.comb(n_vars + order, order)


class JetSpace:
    """Monomial basis and multiplication tables for ``n_vars`` variables up to ``order``.

    Instances are cached; obtain them through :func:`jet_space`.
    """

    def __init__(self, n_vars: int, order: int):
        self.n_vars = n_vars
        self.order = order
        self.exponents = _graded_lex(n_vars, order)
        self.size = len(self.exponents)
        self.degrees = self.exponents.sum(axis=1)
        self._base = order + 1
        self._radix = self._base ** np.arange(n_vars, dtype=np.int64)
        codes = self.exponents @ self._radix
        self._code_order = np.argsort(codes)
        self._sorted_codes = codes[self._code_order]
        self.index = {tuple(int(v) for v in e): k for k, e in enumerate(self.exponents)}

    def __repr__(self):
        return f"JetSpace(n_vars={self.n_vars}, order={self.order})"

    def lookup(self, exps: np.ndarray) -> np.ndarray:
        """Basis indices of exponent rows (all of degree <= order)."""
        codes = np.asarray(exps, dtype=np.int64) @ self._radix
        pos = np.searchsorted(self._sorted_codes, codes)
        return self._code_order[pos]

    def size_of(self, order: int) -> int:
        return n_monomials(self.n_vars, min(order, self.order))

    # -- multiplication tables ------------------------------------------

    @functools.cached_property
    def _pairs(self):
        return self.pair_table(None)

    def pair_table(self, left: np.ndarray | None):
        """Index pairs ``(I, J)`` with ``e_I + e_J = e_K`` grouped by ``K``.

        ``left`` optionally restricts the left factor to a subset of basis
        indices.  Returns ``(I, J, starts, targets)`` suitable for
        ``np.add.reduceat``.
        """
        I_all, J_all = [], []
        cand = np.arange(self.size) if left is None else np.asarray(left)
        for d in range(self.order + 1):
            li = cand[self.degrees[cand] == d]
            if len(li) == 0:
                continue
            nj = self.size_of(self.order - d)
            I_all.append(np.repeat(li, nj))
            J_all.append(np.tile(np.arange(nj), len(li)))
        I = np.concatenate(I_all)
        J = np.concatenate(J_all)
        K = self.lookup(self.exponents[I] + self.exponents[J])
        perm = np.argsort(K, kind="stable")
        I, J, K = I[perm], J[perm], K[perm]
        starts = np.flatnonzero(np.r_[True, K[1:] != K[:-1]])
        return I, J, starts, K[starts]

    def _reduce(self, prod: np.ndarray, starts, targets) -> np.ndarray:
        red = np.add.reduceat(prod, starts, axis=-1)
        if len(targets) == self.size:
            return red
        out = np.zeros(prod.shape[:-1] + (self.size,), dtype=red.dtype)
        out[..., targets] = red
        return out

    def fit(self, a) -> np.ndarray:
        """Truncate or zero-pad the last axis of ``a`` to this space's size."""
        a = np.asarray(a)
        s = a.shape[-1]
        if s == self.size:
            return a
        if s > self.size:
            return a[..., : self.size]
        out = np.zeros(a.shape[:-1] + (self.size,), dtype=a.dtype)
        out[..., :s] = a
        return out

    def mul(self, a, b, table=None) -> np.ndarray:
        """Truncated product of two (broadcastable) jet arrays."""
        I, J, starts, targets = self._pairs if table is None else table
        a = self.fit(a)
        b = self.fit(b)
        if self.order == 0:
            return a * b
        return self._reduce(a[..., I] * b[..., J], starts, targets)

    def einsum(self, spec: str, *ops, table=None) -> np.ndarray:
        """``np.einsum`` over leading tensor axes with jet multiplication.

        ``spec`` names only the tensor axes of the two operands, e.g.
        ``"ik,kj->ij"``.
        """
        ins, out = spec.split("->")
        terms = ins.split(",")
        if len(ops) != 2 or len(terms) != 2:
            raise ValueError("einsum expects exactly two jet operands")
        a, b = (self.fit(o) for o in ops)
        if self.order == 0:
            return np.einsum(f"{terms[0]}Z,{terms[1]}Z->{out}Z", a, b)
        I, J, starts, targets = self._pairs if table is None else table
        full = f"{terms[0]}Z,{terms[1]}Z->{out}Z"
        per_pair = max(1, a[..., :1].size + b[..., :1].size)
        step = max(1, _CHUNK_ELEMS // per_pair)
        if len(I) <= step:
            prod = np.einsum(full, a[..., I], b[..., J], optimize=True)
            return self._reduce(prod, starts, targets)
        # chunk along segment boundaries so each reduceat sees whole segments
        pieces = []
        bounds = list(starts) + [len(I)]
        s0 = 0
        while s0 < len(starts):
            s1 = int(np.searchsorted(starts, starts[s0] + step, side="right"))
            s1 = max(s1, s0 + 1)
            lo, hi = bounds[s0], bounds[s1]
            sl = slice(lo, hi)
            prod = np.einsum(full, a[..., I[sl]], b[..., J[sl]], optimize=True)
            pieces.append(np.add.reduceat(prod, starts[s0:s1] - lo, axis=-1))
            s0 = s1
        red = np.concatenate(pieces, axis=-1)
        if len(targets) == self.size:
            return red
        outarr = np.zeros(red.shape[:-1] + (self.size,), dtype=red.dtype)
        outarr[..., targets] = red
        return outarr

    # -- differentiation -----------------------------------------------

    @functools.lru_cache(maxsize=None)
    def _deriv_map(self, i: int):
        # d/dx_i maps monomial e (with e_i >= 1) to e_i * x^(e - 1_i)
        src = np.flatnonzero(self.exponents[:, i] > 0)
        src = src[self.degrees[src] <= self.order]
        e = self.exponents[src].copy()
        fac = e[:, i].astype(float)
        e[:, i] -= 1
        lower = jet_space(self.n_vars, self.order - 1)
        dst = lower.lookup(e)
        return src, dst, fac

    def partial(self, a, i: int) -> np.ndarray:
        """Derivative along variable ``i``; the result lives one order lower."""
        if self.order < 1:
            raise BudgetExhausted("cannot differentiate an order-0 jet")
        a = self.fit(a)
        src, dst, fac = self._deriv_map(i)
        lower = n_monomials(self.n_vars, self.order - 1)
        out = np.zeros(a.shape[:-1] + (lower,), dtype=a.dtype)
        out[..., dst] = a[..., src] * fac
        return out

    def gradient(self, a) -> np.ndarray:
        """Stack of all first partials, new axis inserted before the coefficient axis."""
        return np.stack([self.partial(a, i) for i in range(self.n_vars)], axis=-2)

    # -- composition -----------------------------------------------------

    def compose(self, taylor: Sequence, a) -> np.ndarray:
        """``sum_k taylor[k] * (a - a(0))**k`` truncated to this order (Horner)."""
        a = self.fit(a)
        nil = a.copy()
        nil[..., 0] = 0
        out = np.zeros_like(nil, dtype=np.result_type(nil, np.asarray(taylor[0])))
        K = min(len(taylor) - 1, self.order)
        out[..., 0] = taylor[K]
        for k in range(K - 1, -1, -1):
            out = self.mul(out, nil)
            out[..., 0] += taylor[k]
        return out

    def inv(self, a) -> np.ndarray:
        a = self.fit(a)
        c = a[..., 0]
        if np.any(c == 0):
            raise JetDomainError("reciprocal of a jet with zero value")
        taylor = [(-1.0) ** k / c ** (k + 1) for k in range(self.order + 1)]
        return self.compose(taylor, a)

    def mat_inv(self, A) -> np.ndarray:
        """Inverse of a square matrix of jets, shape ``(n, n, size)``."""
        A = self.fit(A)
        A0 = A[..., 0]
        try:
            A0i = np.linalg.inv(A0)
        except np.linalg.LinAlgError as exc:
            raise JetDomainError("singular matrix at the base point") from exc
        nil = A.copy()
        nil[..., 0] = 0
        step = -np.einsum("ik,kjZ->ijZ", A0i, nil)
        term = np.zeros_like(A)
        term[..., 0] = A0i
        out = term.copy()
        for _ in range(self.order):
            term = self.einsum("ik,kj->ij", step, term)
            out = out + term
        return out

    def values(self, a) -> np.ndarray:
        return np.asarray(a)[..., 0]


@functools.lru_cache(maxsize=None)
def jet_space(n_vars: int, order: int) -> JetSpace:
    if order < 0:
        raise BudgetExhausted(f"negative jet order {order}")
    return JetSpace(n_vars, order)


def order_of(n_vars: int, size: int) -> int:
    """Jet order whose basis has ``size`` elements."""
    k = 0
    while n_monomials(n_vars, k) < size:
        k += 1
    if n_monomials(n_vars, k) != size:
        raise ValueError(f"{size} is not a jet basis size for {n_vars} variables")
    return k


def common_space(n_vars: int, *arrays) -> JetSpace:
    return jet_space(n_vars, min(order_of(n_vars, np.shape(a)[-1]) for a in arrays))


# ---------------------------------------------------------------------------
# univariate Taylor coefficients of the elementary functions


def _taylor_exp(c, K):
    e = np.exp(c)
    return [e / math.factorial(k) for k in range(K + 1)]


def _taylor_sin(c, K):
    cyc = [np.sin(c), np.cos(c), -np.sin(c), -np.cos(c)]
    return [cyc[k % 4] / math.factorial(k) for k in range(K + 1)]


def _taylor_cos(c, K):
    cyc = [np.cos(c), -np.sin(c), -np.cos(c), np.sin(c)]
    return [cyc[k % 4] / math.factorial(k) for k in range(K + 1)]


def _taylor_pow(c, K, p):
    # generalized binomial series of u**p around c
    out = []
    coef = 1.0
    for k in range(K + 1):
        out.append(coef * c ** (p - k) if (p - k >= 0 or c != 0) else 0.0)
        coef *= (p - k) / (k + 1)
    return out


def _check_domain(tag, c, power):
    c = np.asarray(c)
    if tag == "sqrt":
        if np.iscomplexobj(c) or np.any(c <= 0):
            raise JetDomainError("sqrt needs a strictly positive value at the base point")
    elif tag == "recip":
        if np.any(c == 0):
            raise JetDomainError("recip of a jet vanishing at the base point")
    elif tag == "pow_int":
        if power is None or int(power) != power:
            raise ValueError("pow_int needs an integer power")
        if power < 0 and np.any(c == 0):
            raise JetDomainError("negative power of a jet vanishing at the base point")


def elem_taylor(tag: str, c, K: int, power: int | None = None):
    """Taylor coefficients ``f^(k)(c)/k!`` for ``k <= K``."""
    _check_domain(tag, c, power)
    if tag == "exp":
        return _taylor_exp(c, K)
    if tag == "sin":
        return _taylor_sin(c, K)
    if tag == "cos":
        return _taylor_cos(c, K)
    if tag == "sqrt":
        return _taylor_pow(c, K, 0.5)
    if tag == "recip":
        return _taylor_pow(c, K, -1.0)
    if tag == "pow_int":
        p = int(power)
        if p >= 0:
            return [math.comb(p, k) * c ** (p - k) if k <= p else 0.0 * c for k in range(K + 1)]
        return _taylor_pow(c, K, float(p))
    raise ValueError(f"unknown elementary function tag {tag!r}")


ELEMENTARY = ("exp", "sin", "cos", "sqrt", "recip", "pow_int")


# ---------------------------------------------------------------------------
# value wrapper


class Jet:
    """Immutable truncated Taylor expansion of a scalar at a base point.

    Parameters
    ----------
    coeffs : array_like
        Dense coefficients in graded lexicographic order.
    n_vars : int
        Number of variables.
    order : int
        Maximal total degree retained.
    """

    __slots__ = ("_c", "n_vars", "order")
    __array_priority__ = 100

    def __init__(self, coeffs, n_vars: int, order: int):
        c = np.array(coeffs)
        if c.dtype.kind not in "fc":
            c = c.astype(float)
        size = n_monomials(n_vars, order)
        if c.shape != (size,):
            raise ValueError(f"expected {size} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "_c", c)
        object.__setattr__(self, "n_vars", n_vars)
        object.__setattr__(self, "order", order)

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    # construction
    @classmethod
    def constant(cls, value, n_vars: int, order: int) -> "Jet":
        c = np.zeros(n_monomials(n_vars, order), dtype=np.result_type(value, float))
        c[0] = value
        return cls(c, n_vars, order)

    @classmethod
    def from_dict(cls, coeffs: Mapping[tuple, complex], n_vars: int, order: int) -> "Jet":
        sp = jet_space(n_vars, order)
        vals = list(coeffs.values())
        c = np.zeros(sp.size, dtype=np.result_type(float, *vals) if vals else float)
        for key, v in coeffs.items():
            e = _normalize_key(key, n_vars)
            if sum(e) <= order:
                c[sp.index[e]] += v
        return cls(c, n_vars, order)

    @property
    def space(self) -> JetSpace:
        return jet_space(self.n_vars, self.order)

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def value(self):
        return self._c[0]

    def coeff(self, exps) -> complex:
        e = _normalize_key(exps, self.n_vars)
        if sum(e) > self.order:
            raise BudgetExhausted(f"monomial {e} beyond order {self.order}")
        return self._c[self.space.index[e]]

    def derivative(self, exps) -> complex:
        """Partial derivative at the base point for exponent tuple ``exps``."""
        e = _normalize_key(exps, self.n_vars)
        return self.coeff(e) * math.prod(math.factorial(k) for k in e)

    def to_dict(self, atol: float = 0.0) -> dict:
        out = {}
        for k, e in enumerate(self.space.exponents):
            v = self._c[k]
            if k == 0 or abs(v) > atol:
                out[tuple(int(x) for x in e)] = v
        return out

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise BudgetExhausted(f"cannot raise jet order {self.order} to {order}")
        return Jet(self._c[: n_monomials(self.n_vars, order)], self.n_vars, order)

    def real(self) -> "Jet":
        return Jet(self._c.real, self.n_vars, self.order)

    def conj(self) -> "Jet":
        return Jet(self._c.conj(), self.n_vars, self.order)

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.n_vars != self.n_vars:
                raise ValueError("jets over different numbers of variables")
            o = min(self.order, other.order)
            return self.truncate(o)._c, other.truncate(o)._c, o
        if np.isscalar(other) or np.ndim(other) == 0:
            c = np.zeros_like(self._c, dtype=np.result_type(self._c, other))
            c[0] = other
            return self._c, c, self.order
        return NotImplemented

    def __add__(self, other):
        co = self._coerce(other)
        if co is NotImplemented:
            return co
        a, b, o = co
        return Jet(a + b, self.n_vars, o)

    __radd__ = __add__

    def __sub__(self, other):
        co = self._coerce(other)
        if co is NotImplemented:
            return co
        a, b, o = co
        return Jet(a - b, self.n_vars, o)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Jet(-self._c, self.n_vars, self.order)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other, strict=False)
        if np.isscalar(other) or np.ndim(other) == 0:
            return Jet(self._c * other, self.n_vars, self.order)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * jet_elem("recip", other)
        if np.isscalar(other) or np.ndim(other) == 0:
            return Jet(self._c / other, self.n_vars, self.order)
        return NotImplemented

    def __rtruediv__(self, other):
        return jet_elem("recip", self) * other

    def __pow__(self, p):
        if int(p) != p:
            raise ValueError("only integer powers of jets are supported")
        return jet_elem("pow_int", self, power=int(p))

    def __repr__(self):
        return f"Jet(n_vars={self.n_vars}, order={self.order}, value={self.value!r})"

    def allclose(self, other, atol: float = ATOL, rtol: float = RTOL) -> bool:
        a, b, _ = self._coerce(other)
        return bool(np.allclose(a, b, atol=atol, rtol=rtol))


def _normalize_key(key, n_vars):
    # accept the empty tuple for the constant term
    key = tuple(int(k) for k in key)
    if len(key) == 0:
        return (0,) * n_vars
    if len(key) != n_vars:
        raise ValueError(f"multi-index {key} does not have {n_vars} entries")
    return key


def jet_const(value, n_vars: int, order: int) -> Jet:
    return Jet.constant(value, n_vars, order)


def jet_var(i: int, value, n_vars: int, order: int) -> Jet:
    """Jet of the coordinate function ``x^i`` centred at ``value``."""
    if not 0 <= i < n_vars:
        raise IndexError(f"coordinate index {i} out of range for {n_vars} variables")
    c = np.zeros(n_monomials(n_vars, order), dtype=np.result_type(value, float))
    c[0] = value
    if order >= 1:
        c[1 + i] = 1.0
    return Jet(c, n_vars, order)


def jet_vars(point: Sequence[float], order: int) -> list[Jet]:
    n = len(point)
    return [jet_var(i, point[i], n, order) for i in range(n)]


def jet_mul(a: Jet, b: Jet, strict: bool = True) -> Jet:
    """Cauchy product truncated at ``a.order``.

    With ``strict`` the two jets must share ``n_vars`` and ``order``;
    otherwise the higher-order operand is truncated first.
    """
    if a.n_vars != b.n_vars or (strict and a.order != b.order):
        raise ValueError(
            f"jet shapes differ: ({a.n_vars}, {a.order}) vs ({b.n_vars}, {b.order})"
        )
    o = min(a.order, b.order)
    sp = jet_space(a.n_vars, o)
    return Jet(sp.mul(a.coeffs[: sp.size], b.coeffs[: sp.size]), a.n_vars, o)


def jet_elem(f: str, a: Jet, power: int | None = None) -> Jet:
    """Compose an elementary function with a jet.

    ``f`` is one of ``exp``, ``sin``, ``cos``, ``sqrt``, ``recip`` or
    ``pow_int`` (which needs ``power``).
    """
    taylor = elem_taylor(f, a.value, a.order, power)
    return Jet(a.space.compose(taylor, a.coeffs), a.n_vars, a.order)


def jet_elem_derivative(f: str, a: Jet, power: int | None = None) -> Jet:
    """``f'(a)`` for the tabulated elementary functions."""
    if f == "exp":
        return jet_elem("exp", a)
    if f == "sin":
        return jet_elem("cos", a)
    if f == "cos":
        return -jet_elem("sin", a)
    if f == "sqrt":
        return 0.5 * jet_elem("recip", jet_elem("sqrt", a))
    if f == "recip":
        return -jet_elem("pow_int", a, power=-2)
    if f == "pow_int":
        if power == 0:
            return Jet.constant(0.0, a.n_vars, a.order)
        return power * jet_elem("pow_int", a, power=power - 1)
    raise ValueError(f"unknown elementary function tag {f!r}")


def jet_partial(a: Jet, i: int) -> Jet:
    """``d a / d x^i`` as a jet of order ``a.order - 1``."""
    if not 0 <= i < a.n_vars:
        raise IndexError(f"coordinate index {i} out of range")
    if a.order < 1:
        raise BudgetExhausted("jet order exhausted; raise the configured jet order")
    return Jet(a.space.partial(a.coeffs, i), a.n_vars, a.order - 1)


def exp(a: Jet) -> Jet:
    return jet_elem("exp", a)


def sin(a: Jet) -> Jet:
    return jet_elem("sin", a)


def cos(a: Jet) -> Jet:
    return jet_elem("cos", a)


def sqrt(a: Jet) -> Jet:
    return jet_elem("sqrt", a)


def stack_jets(jets: Iterable[Jet]) -> np.ndarray:
    jets = list(jets)
    o = min(j.order for j in jets)
    return np.stack([j.truncate(o).coeffs for j in jets])


def as_jet_function(f, names: Sequence[str] | None = None) -> Callable[[Sequence[Jet]], Jet]:
    """Normalise an observable to a callable on coordinate jets.

    Accepts a callable ``f(coords) -> Jet``, a chart expression string or
    an :class:`~contact_wick.chart.Expr`; ``names`` are the coordinate
    names the expression refers to.
    """
    from . import chart

    if callable(f):
        return f
    expr = chart.parse_expr(f, names) if isinstance(f, str) else f

    def _fn(coords, _e=expr):
        return chart.eval_expr_jets(_e, coords, names)

    return _fn
