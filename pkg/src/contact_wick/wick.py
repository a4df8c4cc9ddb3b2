"""Truncated formal Wick algebra with differential forms at one base point.

An element is a finite sum of terms ``nu^p y^alpha dx^F c(t)`` where
``c`` is a jet in the chart offset ``t = x - x0``.  Storage is keyed by
``(p, k)`` with ``k = |F|``; each value is an array of shape
``(C(n, k), size)`` over the polynomial basis in the ``2n`` variables
``(y^0..y^(n-1), t^0..t^(n-1))`` truncated at total degree ``W - 2p``.

``W`` is the weight cutoff of the element: with ``deg nu = 2`` and
``deg y = 1``, the coefficient of ``nu^p y^alpha`` is known as a jet of
order ``W - 2p - |alpha|``.  Each element also records ``low``, a lower
bound for the weight ``2p + |alpha|`` of its nonzero terms, which
determines how far products stay valid:

* product: ``W = min(W_a + low_b, W_b + low_a)``, ``low = low_a + low_b``
* ``d_nabla``: ``W - 1``; ``delta``: ``W - 1`` and ``low - 1``
* ``delta_star``, ``delta_inv``: ``W + 1`` and ``low + 1``
* division by ``nu``: ``W - 2`` and ``low - 2``
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .geometry import GeometryFrame
from .jets import BudgetExhausted, Jet, jet_space, n_monomials, order_of

WEIGHT_NONE = 10**6  # ``low`` of the zero element


# ---------------------------------------------------------------------------
# exterior algebra tables


@functools.lru_cache(maxsize=None)
def forms(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.combinations(range(n), k))


@functools.lru_cache(maxsize=None)
def form_index(n: int, k: int) -> dict:
    return {F: i for i, F in enumerate(forms(n, k))}


def _merge_sign(F, G):
    # sign of sorting the concatenation F + G (both increasing, disjoint)
    inv = sum(1 for f in F for g in G if f > g)
    return -1 if inv % 2 else 1


@functools.lru_cache(maxsize=None)
def wedge_table(n: int, k1: int, k2: int) -> np.ndarray:
    """``W[f, g, h]`` with ``dx^F ^ dx^G = sum_h W[f, g, h] dx^H``."""
    out = np.zeros((math.comb(n, k1), math.comb(n, k2), math.comb(n, k1 + k2)))
    idx = form_index(n, k1 + k2)
    for a, F in enumerate(forms(n, k1)):
        for b, G in enumerate(forms(n, k2)):
            if set(F) & set(G):
                continue
            out[a, b, idx[tuple(sorted(F + G))]] = _merge_sign(F, G)
    return out


@functools.lru_cache(maxsize=None)
def interior_table(n: int, k: int) -> np.ndarray:
    """``I[j, f, h]`` with ``i_(d/dx^j) dx^F = sum_h I[j, f, h] dx^H``."""
    out = np.zeros((n, math.comb(n, k), math.comb(n, k - 1)))
    idx = form_index(n, k - 1)
    for a, F in enumerate(forms(n, k)):
        for r, j in enumerate(F):
            out[j, a, idx[F[:r] + F[r + 1:]]] = -1.0 if r % 2 else 1.0
    return out


# ---------------------------------------------------------------------------
# polynomial spaces in (y, t)


class _Fiber:
    """Basis bookkeeping for polynomials in ``(y, t)`` of degree ``<= D``."""

    def __init__(self, n: int, D: int):
        self.n = n
        self.D = D
        self.sp = jet_space(2 * n, D)
        ex = self.sp.exponents
        self.ydeg = ex[:, :n].sum(axis=1)
        self.tdeg = ex[:, n:].sum(axis=1)
        self.size = self.sp.size

    @functools.cached_property
    def tpairs(self):
        return self.sp.pair_table(np.flatnonzero(self.ydeg == 0))

    @functools.cached_property
    def y1pairs(self):
        return self.sp.pair_table(np.flatnonzero(self.ydeg == 1))

    @functools.lru_cache(maxsize=None)
    def embed_index(self, alpha: tuple[int, ...]):
        # positions of y^alpha t^tau for all tau of degree <= D - |alpha|
        o = self.D - sum(alpha)
        if o < 0:
            return np.zeros(0, dtype=np.int64), -1
        tex = jet_space(self.n, o).exponents
        ex = np.concatenate([np.tile(np.array(alpha, dtype=np.int64), (len(tex), 1)), tex], axis=1)
        return self.sp.lookup(ex), o

    def embed(self, c: np.ndarray, alpha: tuple[int, ...] | None = None) -> np.ndarray:
        """Place a t-jet array (last axis) on the monomials ``y^alpha t^tau``."""
        alpha = (0,) * self.n if alpha is None else tuple(alpha)
        idx, o = self.embed_index(alpha)
        c = np.asarray(c)
        out = np.zeros(c.shape[:-1] + (self.size,), dtype=c.dtype)
        if o < 0:
            return out
        have = order_of(self.n, c.shape[-1])
        if have < o:
            raise BudgetExhausted(
                f"geometric jet of order {have} cannot support truncation degree {self.D}; "
                "raise the frame jet order")
        out[..., idx] = c[..., : len(idx)]
        return out

    def restrict_t(self, a: np.ndarray) -> np.ndarray:
        """The ``y = 0`` part of ``a`` as a t-jet array of order ``D``."""
        idx, _ = self.embed_index((0,) * self.n)
        return a[..., idx]

    def dy(self, a: np.ndarray) -> np.ndarray:
        """Stack of ``d/dy^j`` (new axis before the form axis)."""
        return np.stack([self.sp.partial(a, j) for j in range(self.n)])

    def dt(self, a: np.ndarray) -> np.ndarray:
        return np.stack([self.sp.partial(a, self.n + j) for j in range(self.n)])


@functools.lru_cache(maxsize=None)
def fiber(n: int, D: int) -> _Fiber:
    if D < 0:
        raise BudgetExhausted(f"negative truncation degree {D}")
    return _Fiber(n, D)


def _frame_cache(frame: GeometryFrame) -> dict:
    cache = getattr(frame, "_wick_cache", None)
    if cache is None:
        cache = {}
        frame._wick_cache = cache
    return cache


def _geo(frame: GeometryFrame, name: str, D: int) -> np.ndarray:
    """Frame tensors embedded as (y, t)-polynomials of degree ``<= D``."""
    key = (name, D)
    cache = _frame_cache(frame)
    if key in cache:
        return cache[key]
    fb = fiber(frame.n, D)
    n = frame.n
    if name in ("h", "lam", "xi"):
        val = fb.embed(getattr(frame, name))
    elif name == "L":
        # L[k, i] = sum_j Gamma[k, j, i](t) y^j
        G = frame.Gamma
        val = sum(fb.embed(G[:, j, :, :], _unit(n, j)) for j in range(n))
    elif name == "Y":
        # Y[j] = sum_i P[j, i](t) y^i
        P = frame.P
        val = sum(fb.embed(P[:, i, :], _unit(n, i)) for i in range(n))
    else:
        raise KeyError(name)
    cache[key] = val
    return val


def _unit(n, j):
    e = [0] * n
    e[j] = 1
    return tuple(e)


# ---------------------------------------------------------------------------
# elements


class WickElement:
    """Element of the truncated algebra at one base point.

    Parameters
    ----------
    frame : GeometryFrame
    W : int
        Weight cutoff (``nu_cutoff``).
    comps : mapping
        ``(p, k) -> array (C(n, k), size(2n, W - 2p))``.
    low : int, optional
        Lower bound on the weight of nonzero terms; detected if omitted.
    """

    __slots__ = ("frame", "W", "comps", "low")

    def __init__(self, frame: GeometryFrame, W: int, comps: Mapping, low: int | None = None):
        self.frame = frame
        self.W = int(W)
        n = frame.n
        clean = {}
        for (p, k), arr in comps.items():
            D = self.W - 2 * p
            if D < 0 or k > n:
                continue
            arr = fiber(n, D).sp.fit(np.asarray(arr, dtype=complex))
            if arr.shape[0] != math.comb(n, k):
                raise ValueError(f"component {(p, k)} has {arr.shape[0]} form slots")
            if np.any(arr != 0):
                clean[(p, k)] = arr
        self.comps = clean
        self.low = _detect_low(n, clean) if low is None else (low if clean else WEIGHT_NONE)

    # -- basic properties ----------------------------------------------

    @property
    def n(self) -> int:
        return self.frame.n

    @property
    def m(self) -> int:
        return self.frame.m

    @property
    def nu_cutoff(self) -> int:
        return self.W

    @property
    def budget(self) -> int:
        """Smallest jet order carried by any stored coefficient."""
        return min((self.W - 2 * p for p, _ in self.comps), default=self.W)

    def form_degrees(self) -> set[int]:
        return {k for _, k in self.comps}

    def is_zero(self) -> bool:
        return not self.comps

    def __repr__(self):
        keys = sorted(self.comps)
        return f"WickElement(W={self.W}, low={self.low}, comps={keys})"

    def copy_with(self, comps, W=None, low=None) -> "WickElement":
        return WickElement(self.frame, self.W if W is None else W, comps, low)

    # -- construction ------------------------------------------------------

    @classmethod
    def zero(cls, frame, W):
        return cls(frame, W, {})

    @classmethod
    def from_monomials(cls, frame: GeometryFrame, terms: Mapping, W: int) -> "WickElement":
        """Build from ``{(p, alpha, F): coefficient}``.

        Coefficients are scalars (exact constants) or :class:`Jet` objects
        in the chart variables.  ``F`` must be strictly increasing.  The
        cutoff is lowered to what the jet orders support.
        """
        n = frame.n
        comps: dict = {}
        Wc = W
        for (p, alpha, F), c in terms.items():
            alpha = tuple(int(a) for a in alpha)
            F = tuple(int(f) for f in F)
            if len(alpha) != n:
                raise ValueError(f"y multi-index {alpha} must have {n} entries")
            if list(F) != sorted(set(F)) or any(not 0 <= f < n for f in F):
                raise ValueError(f"form index set {F} must be strictly increasing in range")
            if isinstance(c, Jet):
                Wc = min(Wc, c.order + 2 * p + sum(alpha))
        for (p, alpha, F), c in terms.items():
            alpha = tuple(int(a) for a in alpha)
            F = tuple(int(f) for f in F)
            D = Wc - 2 * p
            if D - sum(alpha) < 0:
                continue
            fb = fiber(n, D)
            o = D - sum(alpha)
            if isinstance(c, Jet):
                coef = c.coeffs[: n_monomials(n, o)]
            else:
                coef = np.zeros(n_monomials(n, o), dtype=complex)
                coef[0] = c
            key = (p, len(F))
            arr = comps.setdefault(key, np.zeros((math.comb(n, len(F)), fb.size), dtype=complex))
            arr[form_index(n, len(F))[F]] += fb.embed(coef, alpha)
        return cls(frame, Wc, comps)

    @classmethod
    def from_series(cls, frame: GeometryFrame, series: "NuSeries | Jet", W: int | None = None):
        """A scalar (0-form, y-independent) element from a series of jets in ``nu``."""
        if isinstance(series, Jet):
            series = NuSeries((series,))
        terms = {}
        Wc = min(c.order + 2 * p for p, c in enumerate(series.terms))
        if W is not None:
            Wc = min(Wc, W)
        for p, c in enumerate(series.terms):
            terms[(p, (0,) * frame.n, ())] = c
        return cls.from_monomials(frame, terms, Wc)

    def monomials(self, atol: float = 0.0) -> dict:
        """``{(p, alpha, F): Jet}`` view of the nonzero terms."""
        n = self.n
        out = {}
        for (p, k), arr in sorted(self.comps.items()):
            fb = fiber(n, self.W - 2 * p)
            ex = fb.sp.exponents
            for fi, F in enumerate(forms(n, k)):
                row = arr[fi]
                nz = np.flatnonzero(np.abs(row) > atol)
                alphas = {tuple(int(v) for v in ex[j, :n]) for j in nz}
                for alpha in sorted(alphas):
                    idx, o = fb.embed_index(alpha)
                    out[(p, alpha, F)] = Jet(row[idx], n, o)
        return out

    def coefficient(self, p: int, alpha, F=()) -> complex:
        """Value at the base point of the coefficient of ``nu^p y^alpha dx^F``."""
        n = self.n
        F = tuple(F)
        arr = self.comps.get((p, len(F)))
        if arr is None:
            return 0.0
        fb = fiber(n, self.W - 2 * p)
        e = tuple(int(a) for a in alpha) + (0,) * n
        if sum(e) > fb.D:
            raise BudgetExhausted(f"monomial {alpha} beyond the cutoff")
        return complex(arr[form_index(n, len(F))[F], fb.sp.index[e]])

    # -- linear structure ----------------------------------------------

    def _aligned(self, other: "WickElement"):
        _check_compatible(self, other)
        return min(self.W, other.W)

    def __add__(self, other):
        if not isinstance(other, WickElement):
            return NotImplemented
        W = self._aligned(other)
        comps = dict(_truncate_comps(self.n, self.comps, W))
        for key, arr in _truncate_comps(self.n, other.comps, W).items():
            comps[key] = comps[key] + arr if key in comps else arr
        return WickElement(self.frame, W, comps, min(self.low, other.low))

    def __sub__(self, other):
        if not isinstance(other, WickElement):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return WickElement(self.frame, self.W, {k: -v for k, v in self.comps.items()}, self.low)

    def __mul__(self, c):
        if isinstance(c, WickElement):
            return NotImplemented
        return WickElement(self.frame, self.W, {k: c * v for k, v in self.comps.items()}, self.low)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return circ(self, other)

    def truncate(self, W: int) -> "WickElement":
        if W >= self.W:
            return self
        return WickElement(self.frame, W, _truncate_comps(self.n, self.comps, W), self.low)

    def form_part(self, k: int) -> "WickElement":
        return WickElement(self.frame, self.W,
                           {key: v for key, v in self.comps.items() if key[1] == k}, self.low)

    def max_abs(self) -> float:
        return max((float(np.max(np.abs(v))) for v in self.comps.values()), default=0.0)

    def point_values(self) -> dict:
        """``{(p, alpha, F): value}`` restricted to ``t = 0``."""
        n = self.n
        out = {}
        for (p, k), arr in sorted(self.comps.items()):
            fb = fiber(n, self.W - 2 * p)
            sel = np.flatnonzero(fb.tdeg == 0)
            ex = fb.sp.exponents[sel, :n]
            for fi, F in enumerate(forms(n, k)):
                for j, e in zip(sel, ex):
                    v = arr[fi, j]
                    if v != 0:
                        out[(p, tuple(int(x) for x in e), F)] = complex(v)
        return out

    def degree_norms(self, at_point: bool = True) -> dict[int, float]:
        """Max-abs per weight ``2p + |alpha|`` (at ``t = 0`` by default)."""
        out: dict[int, float] = {}
        n = self.n
        for (p, k), arr in self.comps.items():
            fb = fiber(n, self.W - 2 * p)
            mask = fb.tdeg == 0 if at_point else np.ones(fb.size, bool)
            for q in np.unique(fb.ydeg[mask]):
                sel = mask & (fb.ydeg == q)
                v = float(np.max(np.abs(arr[:, sel]))) if sel.any() else 0.0
                w = 2 * p + int(q)
                out[w] = max(out.get(w, 0.0), v)
        return dict(sorted(out.items()))


def _truncate_comps(n, comps, W):
    out = {}
    for (p, k), arr in comps.items():
        D = W - 2 * p
        if D < 0:
            continue
        out[(p, k)] = arr[:, : n_monomials(2 * n, D)]
    return out


def _detect_low(n, comps) -> int:
    low = WEIGHT_NONE
    for (p, k), arr in comps.items():
        fb = fiber(n, order_of(2 * n, arr.shape[-1]))
        nz = np.any(arr != 0, axis=0)
        if nz.any():
            low = min(low, 2 * p + int(fb.ydeg[nz].min()))
    return low


def _check_compatible(a: WickElement, b: WickElement):
    if a.frame is not b.frame:
        if a.frame.chart is not b.frame.chart or not np.array_equal(a.frame.point, b.frame.point):
            raise ValueError("Wick elements live at different base points")


# ---------------------------------------------------------------------------
# the fibrewise product


def _kappa_factorial(kappa):
    out = 1
    for _, grp in itertools.groupby(kappa):
        out *= math.factorial(len(list(grp)))
    return out


def _product_weight(a: WickElement, b: WickElement) -> int:
    # an element without components is only known to vanish through its own cutoff
    la = a.low if a.comps else a.W + 1
    lb = b.low if b.comps else b.W + 1
    return min(a.W + lb, b.W + la)


def circ(a: WickElement, b: WickElement, skip_zero: bool = False) -> WickElement:
    """Fibrewise Wick product ``a o b`` with wedge product of the form parts.

    ``skip_zero`` drops the term without contractions (used for
    commutators, where it cancels identically).
    """
    _check_compatible(a, b)
    frame = a.frame
    n = frame.n
    W = _product_weight(a, b)
    low = a.low + b.low
    if a.is_zero() or b.is_zero() or low > W:
        return WickElement(frame, max(W, 0), {})
    pa_min = min(p for p, _ in a.comps)
    pb_min = min(p for p, _ in b.comps)
    kmax = (W - 2 * (pa_min + pb_min)) // 2

    # level k: {kappa: {(p, k2): H^kappa b}} and {kappa: {(p, k1): d^kappa a}}
    HB = {(): {key: arr for key, arr in b.comps.items()}}
    DA = {(): {key: arr for key, arr in a.comps.items()}}
    out: dict = {}
    for level in range(kmax + 1):
        if level > 0:
            HB = _next_level(frame, HB, W, level, pa_min, apply_h=True)
            DA = _next_level(frame, DA, W, level, pb_min, apply_h=False)
            if not HB or not DA:
                break
            kappas = [kp for kp in HB if kp in DA]
        if level == 0 and skip_zero:
            continue
        if level == 0:
            kappas = [()]
        coefs = np.array([(0.5**level) / _kappa_factorial(kp) for kp in kappas])
        for (p1, k1) in a.comps:
            for (p2, k2) in b.comps:
                if k1 + k2 > n:
                    continue
                p = p1 + p2 + level
                D = W - 2 * p
                if D < 0:
                    continue
                sp = fiber(n, D).sp
                use = [i for i, kp in enumerate(kappas)
                       if (p1, k1) in DA.get(kp, {}) and (p2, k2) in HB[kp]]
                if not use:
                    continue
                A = sp.fit(np.stack([DA[kappas[i]][(p1, k1)] for i in use]))
                B = sp.fit(np.stack([HB[kappas[i]][(p2, k2)] for i in use]))
                A = A * coefs[use, None, None]
                prod = sp.einsum("kf,kg->fg", A, B)
                res = np.einsum("fgh,fgZ->hZ", wedge_table(n, k1, k2), prod)
                key = (p, k1 + k2)
                out[key] = out[key] + res if key in out else res
    return WickElement(frame, W, out, low)


def _next_level(frame, prev, W, level, p_other_min, apply_h):
    """Apply one more ``H_i`` (or ``d/dy^i``) to every multi-index of the previous level."""
    n = frame.n
    nxt: dict = {}
    for kappa, comps in prev.items():
        start = kappa[-1] if kappa else 0
        for key, arr in comps.items():
            p = key[0]
            D = W - 2 * (p + p_other_min + level)
            if D < 0:
                continue
            fb_in = fiber(n, order_of(2 * n, arr.shape[-1]))
            if fb_in.D < 1:
                continue
            fb = fiber(n, D)
            dy = np.stack([fb_in.sp.partial(arr, j) for j in range(n)])
            dy = fb.sp.fit(dy)
            if apply_h:
                h = _geo(frame, "h", D)
                vals = fb.sp.einsum("ij,jf->if", h, dy, table=fb.tpairs)
            else:
                vals = dy
            for i in range(start, n):
                v = vals[i]
                if not np.any(v != 0):
                    continue
                nxt.setdefault(kappa + (i,), {})[key] = v
    # keep only multi-indices with entries for every component that survived
    return nxt


def commutator(a: WickElement, b: WickElement) -> WickElement:
    """Graded commutator ``a o b - (-1)^(|a||b|) b o a`` (no nu^0 part by construction)."""
    _check_compatible(a, b)
    total = None
    for ka in sorted(a.form_degrees()):
        for kb in sorted(b.form_degrees()):
            A = a.form_part(ka)
            B = b.form_part(kb)
            sign = -1 if (ka * kb) % 2 else 1
            term = circ(A, B, skip_zero=True) - sign * circ(B, A, skip_zero=True)
            total = term if total is None else total + term
    if total is None:
        W = min(a.W + b.low, b.W + a.low)
        return WickElement(a.frame, min(W, max(a.W, b.W) + 2), {})
    return total


def div_nu(a: WickElement) -> WickElement:
    """Exact division by ``nu``; a nonzero ``nu^0`` term is an error."""
    for (p, k), arr in a.comps.items():
        if p == 0:
            raise ArithmeticError("division by nu of a term with no nu factor")
    comps = {(p - 1, k): arr for (p, k), arr in a.comps.items()}
    return WickElement(a.frame, a.W - 2, comps, a.low - 2 if a.comps else None)


def i_over_nu_commutator(a: WickElement, b: WickElement) -> WickElement:
    """``(i/nu) [a, b]``"""
    return 1j * div_nu(commutator(a, b))


def dot(a: WickElement, b: WickElement) -> WickElement:
    """Graded commutative product (no contractions)."""
    _check_compatible(a, b)
    n = a.n
    W = _product_weight(a, b)
    out: dict = {}
    for (p1, k1), A in a.comps.items():
        for (p2, k2), B in b.comps.items():
            if k1 + k2 > n or W - 2 * (p1 + p2) < 0:
                continue
            sp = fiber(n, W - 2 * (p1 + p2)).sp
            prod = sp.einsum("f,g->fg", sp.fit(A), sp.fit(B))
            res = np.einsum("fgh,fgZ->hZ", wedge_table(n, k1, k2), prod)
            key = (p1 + p2, k1 + k2)
            out[key] = out[key] + res if key in out else res
    return WickElement(a.frame, W, out, a.low + b.low)


# ---------------------------------------------------------------------------
# operators


def delta(a: WickElement) -> WickElement:
    """``delta a = dx^i ^ d a / d y^i``"""
    n = a.n
    out = {}
    for (p, k), arr in a.comps.items():
        if k + 1 > n:
            continue
        fb = fiber(n, a.W - 2 * p)
        if fb.D < 1:
            continue
        dy = fb.dy(arr)  # (n, F, size_{D-1})
        out[(p, k + 1)] = np.einsum("ifh,ifZ->hZ", wedge_table(n, 1, k), dy)
    return WickElement(a.frame, a.W - 1, out, a.low - 1 if a.comps else None)


def _contract_forms(n, k, arr):
    # c[j, h] = sum_f I[j, f, h] arr[f]
    return np.einsum("jfh,fZ->jhZ", interior_table(n, k), arr)


def delta_star(a: WickElement) -> WickElement:
    """``delta* a = y^i P^j_i i_(d/dx^j) a``"""
    n = a.n
    W = a.W + 1
    out = {}
    for (p, k), arr in a.comps.items():
        if k == 0:
            continue
        D = W - 2 * p
        if D < 1:
            continue
        fb = fiber(n, D)
        c = fb.sp.fit(_contract_forms(n, k, arr))
        Y = _geo(a.frame, "Y", D)
        out[(p, k - 1)] = fb.sp.einsum("j,jh->h", Y, c, table=fb.y1pairs)
    return WickElement(a.frame, W, out, a.low + 1 if a.comps else None)


def interior_xi(a: WickElement) -> WickElement:
    """``i_xi a``"""
    n = a.n
    out = {}
    for (p, k), arr in a.comps.items():
        if k == 0:
            continue
        fb = fiber(n, a.W - 2 * p)
        c = _contract_forms(n, k, arr)
        xi = _geo(a.frame, "xi", fb.D)
        out[(p, k - 1)] = fb.sp.einsum("j,jh->h", xi, c, table=fb.tpairs)
    return WickElement(a.frame, a.W, out, a.low if a.comps else None)


def wedge_lambda(a: WickElement) -> WickElement:
    """``lambda ^ a``"""
    n = a.n
    out = {}
    for (p, k), arr in a.comps.items():
        if k + 1 > n:
            continue
        fb = fiber(n, a.W - 2 * p)
        lam = _geo(a.frame, "lam", fb.D)
        prod = fb.sp.einsum("j,f->jf", lam, arr, table=fb.tpairs)
        out[(p, k + 1)] = np.einsum("jfh,jfZ->hZ", wedge_table(n, 1, k), prod)
    return WickElement(a.frame, a.W, out, a.low if a.comps else None)


def split_lambda(a: WickElement) -> tuple[WickElement, WickElement]:
    """``(a', a'')`` with ``a'' = lambda ^ i_xi a`` and ``a' = a - a''``."""
    a2 = wedge_lambda(interior_xi(a))
    return a - a2, a2


def _scale_by_degree(n, comps, W, shift):
    # multiply each monomial of form degree k by 1 / (ydeg + k + shift), zero if that is <= 0
    out = {}
    for (p, k), arr in comps.items():
        fb = fiber(n, W - 2 * p)
        den = (fb.ydeg + k + shift).astype(float)
        fac = np.where(den > 0, 1.0 / np.where(den > 0, den, 1.0), 0.0)
        out[(p, k)] = arr * fac
    return out


def delta_inv(a: WickElement) -> WickElement:
    """Homotopy operator: ``delta*/(m+n)`` on ``a'`` and ``delta*/(m+n-1)`` on ``a''``.

    ``m`` is the y-degree and ``n`` the form degree of the input monomial;
    after ``delta*`` the output has y-degree ``m + 1`` and form degree
    ``n - 1`` so the denominators read ``ydeg + k`` and ``ydeg + k - 1``.
    """
    a1, a2 = split_lambda(a)
    b1 = delta_star(a1)
    b2 = delta_star(a2)
    n = a.n
    c1 = _scale_by_degree(n, b1.comps, b1.W, 0)
    c2 = _scale_by_degree(n, b2.comps, b2.W, -1)
    out = WickElement(a.frame, b1.W, c1, b1.low) + WickElement(a.frame, b2.W, c2, b2.low)
    if a.comps:
        out.low = min(out.low, a.low + 1) if out.comps else WEIGHT_NONE
    return out


def proj_Pi(a: WickElement) -> WickElement:
    """``a(x, 0, 0, nu) + lambda (i_xi a)(x, 0, 0, nu)``"""
    n = a.n
    out = {}
    for (p, k), arr in a.comps.items():
        if k == 0:
            fb = fiber(n, a.W - 2 * p)
            keep = np.where(fb.ydeg == 0, arr, 0)
            out[(p, 0)] = out.get((p, 0), 0) + keep
    ix = interior_xi(a.form_part(1))
    for (p, k), arr in ix.comps.items():
        fb = fiber(n, a.W - 2 * p)
        s = np.where(fb.ydeg == 0, arr, 0)
        lam = _geo(a.frame, "lam", fb.D)
        out[(p, 1)] = fb.sp.einsum("j,f->jf", lam, s, table=fb.tpairs)[:, 0, :]
    res = WickElement(a.frame, a.W, out)
    return res


def cov_d(a: WickElement) -> WickElement:
    """``d_nabla a = dx^i ^ (d a/dx^i - y^j Gamma^k_ji d a/dy^k)``"""
    frame = a.frame
    n = a.n
    out = {}
    for (p, k), arr in a.comps.items():
        if k + 1 > n:
            continue
        fb = fiber(n, a.W - 2 * p)
        if fb.D < 1:
            continue
        lo = fiber(n, fb.D - 1)
        dt = fb.dt(arr)
        dy = fb.dy(arr)
        if lo.D < 1:
            conn = 0
        else:
            L = _geo(frame, "L", lo.D)
            conn = lo.sp.einsum("ki,kf->if", L, dy, table=lo.y1pairs)
        out[(p, k + 1)] = np.einsum("ifh,ifZ->hZ", wedge_table(n, 1, k), dt - conn)
    return WickElement(frame, a.W - 1, out, a.low if a.comps else None)


def make_T_R(frame: GeometryFrame, W: int | None = None) -> tuple[WickElement, WickElement]:
    """Torsion and curvature elements.

    ``T = 1/2 T_kij y^k dx^i dx^j`` and ``R = -1/4 R_ijkl y^i y^j dx^k dx^l``
    with ``R_ijkl = omega_in R^n_jkl``.  The overall sign of ``R`` is the
    one for which ``d_nabla^2 a = (i/nu) [R, a]`` holds with the curvature
    of the commutator convention; the Bianchi identities then follow.
    """
    n = frame.n
    W = frame.order if W is None else min(W, frame.order)
    fb = fiber(n, W)
    F2 = forms(n, 2)
    Tl = frame.T_low
    Rl = frame.R_low
    T = np.zeros((len(F2), fb.size), dtype=complex)
    R = np.zeros((len(F2), fb.size), dtype=complex)
    for h, (i, j) in enumerate(F2):
        for k in range(n):
            T[h] += fb.embed(Tl[k, i, j], _unit(n, k))
        for a in range(n):
            for b in range(a, n):
                alpha = tuple(np.add(_unit(n, a), _unit(n, b)))
                c = Rl[a, b, i, j] if a == b else Rl[a, b, i, j] + Rl[b, a, i, j]
                R[h] -= 0.5 * fb.embed(c, alpha)
    return (WickElement(frame, W, {(0, 2): T}, 1), WickElement(frame, W, {(0, 2): R}, 2))


def omega_element(frame: GeometryFrame, W: int | None = None) -> WickElement:
    """The scalar two-form ``omega = 1/2 omega_ij dx^i dx^j``."""
    n = frame.n
    W = frame.order - 1 if W is None else W
    fb = fiber(n, W)
    F2 = forms(n, 2)
    arr = np.zeros((len(F2), fb.size), dtype=complex)
    for h, (i, j) in enumerate(F2):
        arr[h] = fb.embed(frame.omega[i, j])
    return WickElement(frame, W, {(0, 2): arr}, 0)


def xi_transversality(a: WickElement) -> float:
    """Max-abs of ``xi^i d a / d y^i`` over all stored coefficients."""
    n = a.n
    worst = 0.0
    for (p, k), arr in a.comps.items():
        fb = fiber(n, a.W - 2 * p)
        if fb.D < 1:
            continue
        lo = fiber(n, fb.D - 1)
        dy = fb.dy(arr)
        xi = _geo(a.frame, "xi", lo.D)
        v = lo.sp.einsum("j,jf->f", xi, dy, table=lo.tpairs)
        worst = max(worst, float(np.max(np.abs(v))))
    return worst


def at_y_zero(a: WickElement) -> WickElement:
    """The ``y = 0`` part of ``a`` (all form degrees)."""
    out = {}
    for (p, k), arr in a.comps.items():
        fb = fiber(a.n, a.W - 2 * p)
        out[(p, k)] = np.where(fb.ydeg == 0, arr, 0)
    return WickElement(a.frame, a.W, out)


def bianchi_residuals(frame: GeometryFrame) -> dict[str, float]:
    """``delta T = 0``, ``delta R = d_nabla T`` and ``d_nabla R = 0`` as element identities."""
    T, R = make_T_R(frame)
    return {
        "bianchi_delta_T": delta(T).max_abs(),
        "bianchi_delta_R": (delta(R) - cov_d(T)).max_abs(),
        "bianchi_dnabla_R": cov_d(R).max_abs(),
    }


def random_element(frame: GeometryFrame, W: int, rng: np.random.Generator,
                   form_degrees: Iterable[int] = (0, 1, 2), transverse: bool = True,
                   max_p: int | None = None, scale: float = 1.0) -> WickElement:
    """Random element with dense jet coefficients.

    With ``transverse`` the y-dependence enters through ``P y`` only, so the
    element is annihilated by ``xi^i d/dy^i``.
    """
    n = frame.n
    max_p = W // 2 if max_p is None else max_p
    comps = {}
    for k in form_degrees:
        nf = math.comb(n, k)
        for p in range(max_p + 1):
            D = W - 2 * p
            if D < 0:
                continue
            fb = fiber(n, D)
            coef = scale * (rng.standard_normal((nf, fb.size))
                            + 1j * rng.standard_normal((nf, fb.size)))
            if transverse:
                coef = _substitute_Py(frame, coef, D)
            comps[(p, k)] = coef
    return WickElement(frame, W, comps)


def _substitute_Py(frame, coef, D):
    """Replace ``y`` by ``P(t) y`` in a polynomial in ``(y, t)``."""
    n = frame.n
    fb = fiber(n, D)
    Y = _geo(frame, "Y", D)
    idx0, _ = fb.embed_index((0,) * n)
    one = np.zeros(fb.size)
    one[idx0[0]] = 1.0
    powers = {(0,) * n: one}
    out = np.zeros_like(coef)
    for q in range(D + 1):
        for alpha in _alphas(n, q):
            if alpha not in powers:
                j = next(i for i in range(n) if alpha[i] > 0)
                prev = list(alpha)
                prev[j] -= 1
                powers[alpha] = fb.sp.mul(Y[j], powers[tuple(prev)])
            idxa, _ = fb.embed_index(alpha)
            # move the coefficient jet of y^alpha onto y^0 and multiply by (P y)^alpha
            tpart = np.zeros((coef.shape[0], fb.size), dtype=complex)
            tpart[:, idx0[: len(idxa)]] = coef[:, idxa]
            out += fb.sp.mul(tpart, powers[alpha][None, :], table=fb.tpairs)
    return out


@functools.lru_cache(maxsize=None)
def _alphas(n, q):
    out = []
    for combo in itertools.combinations_with_replacement(range(n), q):
        e = [0] * n
        for v in combo:
            e[v] += 1
        out.append(tuple(e))
    return tuple(out)


# ---------------------------------------------------------------------------
# scalar series in nu


@dataclass(frozen=True)
class NuSeries:
    """Scalar formal series ``sum_p nu^p c_p`` with jet coefficients."""

    terms: tuple

    @classmethod
    def constant(cls, jet: Jet) -> "NuSeries":
        return cls((jet,))

    @property
    def cutoff(self) -> int:
        return len(self.terms) - 1

    def __getitem__(self, p) -> Jet:
        return self.terms[p]

    def __len__(self):
        return len(self.terms)

    def values(self) -> np.ndarray:
        return np.array([complex(t.value) for t in self.terms])

    def _zip(self, other):
        if isinstance(other, Jet):
            other = NuSeries((other,))
        L = max(len(self), len(other))
        out = []
        for p in range(L):
            a = self.terms[p] if p < len(self) else None
            b = other.terms[p] if p < len(other) else None
            out.append((a, b))
        return out

    def __add__(self, other):
        return NuSeries(tuple(a if b is None else b if a is None else a + b
                              for a, b in self._zip(other)))

    def __neg__(self):
        return NuSeries(tuple(-t for t in self.terms))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, NuSeries):
            # terms beyond the shorter cutoff would be incomplete
            L = min(len(self), len(other))
            out = []
            for p in range(L):
                acc = self.terms[0] * other.terms[p]
                for q in range(1, p + 1):
                    acc = acc + self.terms[q] * other.terms[p - q]
                out.append(acc)
            return NuSeries(tuple(out))
        return NuSeries(tuple(t * other for t in self.terms))

    __rmul__ = __mul__

    def truncate(self, cutoff: int) -> "NuSeries":
        return NuSeries(self.terms[: cutoff + 1])

    def max_abs(self, upto: int | None = None) -> float:
        vals = self.values()
        if upto is not None:
            vals = vals[: upto + 1]
        return float(np.max(np.abs(vals))) if len(vals) else 0.0


def element_to_series(a: WickElement) -> NuSeries:
    """The ``y = 0`` scalar part of ``a`` as a series of t-jets."""
    n = a.n
    terms = []
    pmax = a.W // 2
    for p in range(pmax + 1):
        fb = fiber(n, a.W - 2 * p)
        arr = a.comps.get((p, 0))
        if arr is None:
            terms.append(Jet(np.zeros(n_monomials(n, fb.D), dtype=complex), n, fb.D))
        else:
            terms.append(Jet(fb.restrict_t(arr[0]), n, fb.D))
    return NuSeries(tuple(terms))


def lambda_coefficient(a: WickElement) -> NuSeries:
    """``i_xi`` of the 1-form part at ``y = 0`` as a series (the coefficient of lambda after Pi)."""
    ix = interior_xi(a.form_part(1))
    return element_to_series(ix)
