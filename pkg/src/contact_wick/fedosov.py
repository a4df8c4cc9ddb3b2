"""Abelian connection, quantum lift, the operator Delta and the star product.

All reported identities hold up to total weight ``nu_cutoff`` with
``deg y = 1`` and ``deg nu = 2``.  Scalar outputs are :class:`NuSeries`
whose ``p``-th coefficient multiplies ``nu^p`` (``2p <= nu_cutoff``) and
is a jet in the offset from the base point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import GeometryFrame
from .jets import BudgetExhausted, Jet, as_jet_function, jet_vars, n_monomials
from .wick import (
    NuSeries,
    WickElement,
    circ,
    cov_d,
    delta,
    delta_inv,
    div_nu,
    element_to_series,
    i_over_nu_commutator,
    interior_xi,
    make_T_R,
    omega_element,
)


@dataclass(frozen=True)
class FedosovState:
    """Solution ``r`` of the abelian-connection equation at one base point.

    ``r`` is stored with weight cutoff ``nu_cutoff + 2`` so that the
    connection applied to lifts of cutoff ``nu_cutoff + 1`` stays exact
    through ``nu_cutoff``.
    """

    frame: GeometryFrame
    nu_cutoff: int
    r: WickElement
    T: WickElement
    R: WickElement
    residuals: tuple = field(default=())

    @property
    def lift_weight(self) -> int:
        return self.nu_cutoff + 1

    @property
    def r_weight(self) -> int:
        return self.nu_cutoff + 2

    @property
    def nu_order(self) -> int:
        """Highest power of nu reported in scalar outputs."""
        return self.nu_cutoff // 2


def required_order(nu_cutoff: int) -> int:
    """Frame jet order needed for a given cutoff."""
    return nu_cutoff + 3


def _check_budget(frame: GeometryFrame, nu_cutoff: int):
    if nu_cutoff < 1:
        raise ValueError("nu_cutoff must be at least 1")
    need = required_order(nu_cutoff)
    if frame.order < need:
        raise BudgetExhausted(
            f"nu_cutoff {nu_cutoff} needs frame jet order {need}, got {frame.order}")


def _r_step(r, TR, W):
    rhs = TR + cov_d(r) + 1j * div_nu(circ(r, r, skip_zero=True))
    return delta_inv(rhs).truncate(W)


def solve_r(frame: GeometryFrame, nu_cutoff: int) -> FedosovState:
    """Iterate ``r = delta^-1 (T + R) + delta^-1 (d_nabla r + (i/nu) r o r)``.

    Each pass fixes one more weight, so ``nu_cutoff + 1`` passes starting
    from zero reach the stored cutoff ``nu_cutoff + 2`` exactly.  The
    recorded residuals are the max-abs changes between passes.
    """
    _check_budget(frame, nu_cutoff)
    W = nu_cutoff + 2
    T, R = make_T_R(frame)
    TR = (T + R).truncate(W)
    r = WickElement.zero(frame, W)
    res = []
    for _ in range(nu_cutoff + 1):
        new = _r_step(r, TR, W)
        res.append((new - r).max_abs())
        r = new
    return FedosovState(frame, nu_cutoff, r, T, R, tuple(res))


def iterate_once(state: FedosovState) -> WickElement:
    """One more pass of the recursion; equals ``state.r`` at the fixed point."""
    TR = (state.T + state.R).truncate(state.r_weight)
    return _r_step(state.r, TR, state.r_weight)


def weyl_curvature(state: FedosovState) -> WickElement:
    """``Omega = omega - delta r + T + R + d_nabla r + (i/nu) r o r``"""
    r = state.r
    om = omega_element(state.frame, r.W - 1)
    return om + flatness_defect(state)


def flatness_defect(state: FedosovState) -> WickElement:
    """``Omega - omega``; zero through weight ``nu_cutoff + 1`` at the fixed point."""
    r = state.r
    TR = (state.T + state.R).truncate(r.W)
    return -delta(r) + TR + cov_d(r) + 1j * div_nu(circ(r, r, skip_zero=True))


def flatness_residual(state: FedosovState) -> dict[int, float]:
    """Max-abs of ``Omega - omega`` per weight, including all jet coefficients."""
    return flatness_defect(state).degree_norms(at_point=False)


def connection_D(state: FedosovState, a: WickElement) -> WickElement:
    """``D a = d_nabla a - delta a + (i/nu) [r, a]``"""
    out = cov_d(a) - delta(a)
    if state.r.comps and a.comps:
        out = out + i_over_nu_commutator(state.r, a)
    return out


# ---------------------------------------------------------------------------
# observables


def observable_series(frame: GeometryFrame, a0, order: int | None = None) -> NuSeries:
    """Coerce an observable to a :class:`NuSeries` of jets at the base point.

    ``a0`` may be a :class:`Jet` (Taylor data in the offset from the base
    point), a :class:`NuSeries`, an expression string in the chart
    coordinates, or a callable acting on coordinate jets.
    """
    if isinstance(a0, NuSeries):
        return a0
    if isinstance(a0, Jet):
        if a0.n_vars != frame.n:
            raise ValueError(f"observable has {a0.n_vars} variables, chart has {frame.n}")
        return NuSeries((a0,))
    order = frame.order if order is None else order
    if isinstance(a0, (int, float, complex, np.number)):
        return NuSeries((Jet.constant(a0, frame.n, order),))
    fn = as_jet_function(a0, frame.chart.coords)
    return NuSeries((fn(jet_vars(frame.point, order)),))


def quantum_lift(state: FedosovState, a0) -> WickElement:
    """Flat lift ``Q a0`` solving ``b = a0 + delta^-1 (d_nabla b + (i/nu) [r, b])``."""
    frame = state.frame
    W = state.lift_weight
    series = observable_series(frame, a0)
    a = WickElement.from_series(frame, series, W)
    if a.W < W:
        raise BudgetExhausted(
            f"observable jets support weight {a.W}, the lift needs {W}")
    b = a
    for _ in range(W):
        corr = cov_d(b)
        if b.comps:
            corr = corr + i_over_nu_commutator(state.r, b)
        b = (a + delta_inv(corr)).truncate(W)
    return b


def _cut(series: NuSeries, state: FedosovState) -> NuSeries:
    return series.truncate(state.nu_order)


def delta_op(state: FedosovState, a0) -> NuSeries:
    """``Delta a0 = i_xi Pi D Q a0``: the lambda-coefficient of ``Pi D Q a0``."""
    DQ = connection_D(state, quantum_lift(state, a0))
    return _cut(element_to_series(interior_xi(DQ.form_part(1))), state)


def star(state: FedosovState, a0, b0) -> NuSeries:
    """``a0 * b0 = Pi (Q a0 o Q b0)`` as a series of jets."""
    prod = circ(quantum_lift(state, a0), quantum_lift(state, b0))
    return _cut(element_to_series(prod), state)


def series_close(a: NuSeries, b: NuSeries, upto: int | None = None) -> float:
    """Max-abs difference of base-point values of two series."""
    va, vb = a.values(), b.values()
    L = max(len(va), len(vb)) if upto is None else upto + 1
    va = np.pad(va, (0, max(0, L - len(va))))[:L]
    vb = np.pad(vb, (0, max(0, L - len(vb))))[:L]
    return float(np.max(np.abs(va - vb))) if L else 0.0


def series_norm(a: NuSeries, jets: bool = False) -> float:
    """Max-abs over base-point values (or over all jet coefficients)."""
    if jets:
        return max((float(np.max(np.abs(t.coeffs))) for t in a.terms), default=0.0)
    return a.max_abs()


# ---------------------------------------------------------------------------
# holomorphic observables and the Wick property


def holomorphic_residual(frame: GeometryFrame, a0, side: str = "right") -> float:
    """Jet max-abs of the h-kernel condition for an observable.

    ``side="right"``: ``h^(ij) d_j a`` (a may stand on the right of ``*``
    without corrections).  ``side="left"``: ``h^(ij) d_i a``.
    """
    a = observable_series(frame, a0)[0]
    sp = frame.space(min(a.order, frame.order) - 1)
    da = sp.fit(frame.space(a.order).gradient(a.coeffs))
    h = sp.fit(frame.h)
    spec = "ij,j->i" if side == "right" else "ij,i->j"
    return float(np.max(np.abs(sp.einsum(spec, h, da))))


def holomorphic_candidates(frame: GeometryFrame, side: str = "right") -> list[Jet]:
    """Linear functions whose differential lies in the kernel of ``h`` at the base point.

    The kernel is taken from the computed Wick tensor, so the sign of the
    complex structure never has to be guessed.  Candidates still have to be
    validated with :func:`holomorphic_residual` at the needed jet order.
    """
    h0 = frame.h[..., 0]
    M = h0 if side == "right" else h0.T
    # rows j: sum_i M[j, i] theta_i = 0
    _, s, vh = np.linalg.svd(M)
    null = vh[s.size - int(np.sum(s < 1e-10 * max(1.0, s[0]))):].conj()
    out = []
    n = frame.n
    for theta in null:
        k = int(np.argmax(np.abs(theta)))
        theta = theta / theta[k]
        c = np.zeros(n_monomials(n, frame.order), dtype=complex)
        c[1: n + 1] = theta
        out.append(Jet(c, n, frame.order))
    return out


def check_wick_property(state: FedosovState, a_hol, c, side: str = "right") -> float:
    """``max |c * a - c a|`` over all nu-orders (``side="right"``).

    With ``side="left"`` checks ``a * c = a c`` for antiholomorphic ``a``.
    """
    frame = state.frame
    a = observable_series(frame, a_hol)
    cs = observable_series(frame, c)
    if side == "right":
        lhs = star(state, cs, a)
    else:
        lhs = star(state, a, cs)
    rhs = _cut(cs * a, state)
    return series_close(lhs, rhs, state.nu_order)
