"""First-order obstruction to quantizing a classical observable.

Three closed forms of the order-nu part of ``Delta`` on scalars, the
vector field ``zeta`` and its divergence ``chi``, and the two integral
characteristics built from them (along closed Reeb orbits and over
quadrature grids).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .chart import ChartStructure, parse_expr, eval_expr_jets
from .geometry import GeometryFrame
from .jets import BudgetExhausted, Jet, as_jet_function, jet_space, jet_vars
from .registry import ReebOrbit

FORMS = ("a", "b", "c")


# ---------------------------------------------------------------------------
# tensor pieces


def _trunc(*arrs):
    s = min(a.shape[-1] for a in arrs)
    return [a[..., :s] for a in arrs]


def _gradients(frame: GeometryFrame, a: Jet):
    """First and second partials of an observable as jet arrays."""
    n = frame.n
    o = min(a.order, frame.order)
    if o < 3:
        raise BudgetExhausted("observable jets of order >= 3 are needed")
    sp = jet_space(n, o)
    da = sp.gradient(sp.fit(a.coeffs))  # [l]
    dda = jet_space(n, o - 1).gradient(da)  # [l, k] = d_k d_l a
    return da, dda


def hessian(frame: GeometryFrame, a: Jet, gamma=None) -> np.ndarray:
    """``[n, m] = nabla_n nabla_m a`` for the contact connection (or ``gamma``)."""
    G = frame.Gamma if gamma is None else gamma
    da, dda = _gradients(frame, a)
    corr = frame.mul("kmn,k->nm", G, da)
    dda, corr = _trunc(np.swapaxes(dda, 0, 1), corr)
    return dda - corr


def H_tensor(frame: GeometryFrame) -> np.ndarray:
    """``H^(ij|nm) = pi^in g^jm + pi^jm g^in + pi^jn g^im + pi^im g^jn``"""
    pi, gi = frame.pi, frame.ginv
    t1 = frame.mul("in,jm->ijnm", pi, gi)
    return (t1 + np.transpose(t1, (1, 0, 3, 2, 4)) + np.transpose(t1, (1, 0, 2, 3, 4))
            + np.transpose(t1, (0, 1, 3, 2, 4)))


def laplacian(frame: GeometryFrame, a: Jet) -> np.ndarray:
    """``g^nm nabla^g_n nabla^g_m a`` as a jet array."""
    hs = hessian(frame, a, frame.Gamma_g)
    return frame.mul("nm,nm->", frame.ginv, hs)


def zeta_jet(frame: GeometryFrame) -> np.ndarray:
    """``zeta^i`` as jets.

    ``zeta^i = gR^i_nkm g^nm xi^k + g^nm nabla^g_n nabla^g_m xi^i
    + 1/6 (L_xi ginv)^nm (nabla^g_n omega_mk) pi^ki``.
    """
    gi = frame.ginv
    t1 = frame.mul("inkm,nm->ik", frame.riemann_g, gi)
    t1 = frame.mul("ik,k->i", t1, frame.xi)
    d2xi = frame.covariant(frame.nabla_g_xi, 1, 1, frame.Gamma_g)  # [i, m, n]
    t2 = frame.mul("imn,nm->i", d2xi, gi)
    tmp = frame.mul("nm,mkn->k", frame.lie_xi_ginv, frame.nabla_g_omega)
    t3 = frame.mul("k,ki->i", tmp, frame.pi) / 6.0
    t1, t2, t3 = _trunc(t1, t2, t3)
    return t1 + t2 + t3


def chi_jet(frame: GeometryFrame, zeta: np.ndarray | None = None) -> np.ndarray:
    """Riemannian divergence ``chi = d_i zeta^i + Gamma_g^i_ik zeta^k``."""
    z = zeta_jet(frame) if zeta is None else zeta
    dz = frame.d(z)  # [i, k] = d_k zeta^i
    div = np.einsum("iiZ->Z", dz)
    tr = np.einsum("iikZ->kZ", frame.Gamma_g)
    corr = frame.mul("k,k->", tr, z)
    div, corr = _trunc(div, corr)
    return div + corr


def zeta_chi(frame: GeometryFrame) -> tuple[np.ndarray, float]:
    """Values of ``zeta`` and ``chi`` at the base point."""
    z = zeta_jet(frame)
    return np.real_if_close(z[..., 0]), float(np.real(chi_jet(frame, z)[0]))


# ---------------------------------------------------------------------------
# three forms of Delta_1


def _observable(frame: GeometryFrame, a0, order: int | None = None) -> Jet:
    if isinstance(a0, Jet):
        return a0
    order = frame.order if order is None else order
    if isinstance(a0, (int, float, complex, np.number)):
        return Jet.constant(a0, frame.n, order)
    return as_jet_function(a0, frame.chart.coords)(jet_vars(frame.point, order))


def delta1_jet(frame: GeometryFrame, a0, form: str = "a") -> np.ndarray:
    """Order-nu part of ``Delta a0`` as a jet array, by one of three closed forms.

    ``a``: ``-1/8 T_ijk xi^k H^(ij|nm) nabla_n nabla_m a
    + 1/24 T_ijk T_nmp xi^p H^(ij|nm) pi^kl d_l a``.

    ``b``: ``-1/4 (L_xi ginv)^ij nabla_i nabla_j a
    + 1/12 (L_xi ginv)^ij (nabla^g_i omega_jk) pi^kn d_n a``.

    ``c``: ``-1/4 ( xi(La) - L(xi a) + 1/2 (L_xi g)_ij (L_xi ginv)^ij xi a + zeta a )``
    with ``L`` the Laplacian.

    Forms ``b`` and ``c`` assume ``xi a0 = 0``.
    """
    a = _observable(frame, a0)
    if form == "a":
        H = H_tensor(frame)
        Txi = frame.mul("ijk,k->ij", frame.T_low, frame.xi)
        TH = frame.mul("ij,ijnm->nm", Txi, H)
        t1 = frame.mul("nm,nm->", TH, hessian(frame, a))
        da, _ = _gradients(frame, a)
        Tpl = frame.mul("ijk,kl->ijl", frame.T_low, frame.pi)
        Tpl = frame.mul("ijl,l->ij", Tpl, da)
        t2 = frame.mul("nm,nm->", frame.mul("ij,ijnm->nm", Tpl, H), Txi)
        t1, t2 = _trunc(t1, t2)
        return -t1 / 8.0 + t2 / 24.0
    if form == "b":
        Lgi = frame.lie_xi_ginv
        t1 = frame.mul("ij,ij->", Lgi, hessian(frame, a))
        da, _ = _gradients(frame, a)
        tmp = frame.mul("ij,jki->k", Lgi, frame.nabla_g_omega)
        tmp = frame.mul("k,kn->n", tmp, frame.pi)
        t2 = frame.mul("n,n->", tmp, da)
        t1, t2 = _trunc(t1, t2)
        return -t1 / 4.0 + t2 / 12.0
    if form == "c":
        n = frame.n
        da, _ = _gradients(frame, a)
        xi_a = frame.mul("i,i->", frame.xi, da)
        La = laplacian(frame, a)
        xi_La = frame.mul("i,i->", frame.xi, frame.d(La))
        o = frame.ord(xi_a)
        L_xia = laplacian(frame, Jet(xi_a, n, o)) if o >= 3 else np.zeros(1)
        LL = frame.mul("ij,ij->", frame.lie_xi_g, frame.lie_xi_ginv)
        t3 = 0.5 * frame.mul(",->", LL, xi_a)
        t4 = frame.mul("i,i->", zeta_jet(frame), da)
        xi_La, L_xia, t3, t4 = _trunc(xi_La, L_xia, t3, t4)
        return -(xi_La - L_xia + t3 + t4) / 4.0
    raise ValueError(f"unknown form {form!r}; choose from a, b, c")


def delta1(frame: GeometryFrame, a0, form: str = "a") -> float:
    """Value at the base point of the order-nu part of ``Delta a0``."""
    v = complex(delta1_jet(frame, a0, form)[0])
    return v.real if abs(v.imag) <= 1e-14 * max(1.0, abs(v.real)) else v


@dataclass(frozen=True)
class ObstructionData:
    """Obstruction data for one observable at one base point."""

    delta1_forms: dict
    zeta: np.ndarray
    chi: float
    laplacian: float

    def max_form_spread(self) -> float:
        v = list(self.delta1_forms.values())
        return max(abs(a - b) for a in v for b in v)


def obstruction_data(frame: GeometryFrame, a0) -> ObstructionData:
    a = _observable(frame, a0)
    z, c = zeta_chi(frame)
    return ObstructionData({f: delta1(frame, a, f) for f in FORMS}, z, c,
                           float(np.real(laplacian(frame, a)[0])))


# ---------------------------------------------------------------------------
# identities used by the Laplacian form


def lie_commutator_residuals(frame: GeometryFrame, rng: np.random.Generator) -> dict[str, float]:
    """``[L_xi, nabla_i] f = 0`` and the Levi-Civita commutator formula on random data."""
    n = frame.n
    o = frame.order
    sp = jet_space(n, o)
    xi = frame.xi
    dxi = frame.d(xi)  # [k, i] = d_i xi^k

    def lie_covector(al):  # (L_xi al)_j = xi^k d_k al_j + al_k d_j xi^k
        dal = frame.d(al)
        return frame.mul("k,jk->j", xi, dal) + frame.mul("k,kj->j", al, dxi)[..., : dal.shape[-1]]

    def lie_2form(B):  # covariant 2-tensor
        dB = frame.d(B)
        t = frame.mul("k,jik->ji", xi, dB)
        s = t.shape[-1]
        return (t + frame.mul("ki,kj->ji", B, dxi)[..., :s]
                + frame.mul("jk,ki->ji", B, dxi)[..., :s])

    f = rng.standard_normal(sp.size)
    df = sp.gradient(f)
    # nabla_i on a scalar is d_i; L_xi commutes with d
    lhs = lie_covector(df)
    xif = frame.mul("k,k->", xi, df)
    rhs = frame.d(xif)
    lhs, rhs = _trunc(lhs, rhs)
    r1 = float(np.max(np.abs(lhs - rhs)))

    al = rng.standard_normal((n, sp.size))
    Dal = frame.covariant(al, 0, 1, frame.Gamma_g)  # [j, i] = nabla^g_i al_j
    lhs = lie_2form(Dal)
    rhs0 = frame.covariant(lie_covector(al), 0, 1, frame.Gamma_g)
    d2xi = frame.covariant(frame.nabla_g_xi, 1, 1, frame.Gamma_g)  # [k, j, i] = nabla_i nabla_j xi^k
    K = frame.mul("kjni,n->kji", frame.riemann_g, xi)
    K, d2xi = _trunc(K, d2xi)
    corr = -frame.mul("kji,k->ji", K + d2xi, al)
    lhs, rhs0, corr = _trunc(lhs, rhs0, corr)
    r2 = float(np.max(np.abs(lhs - rhs0 - corr)))
    return {"lie_nabla_scalar": r1, "lie_nabla_g_covector": r2}


# ---------------------------------------------------------------------------
# integral characteristics


def _frame_at(factory, point, order):
    if isinstance(factory, ChartStructure):
        return GeometryFrame(factory, point, order)
    return factory(point, order)


def _scalar_function(fn, names):
    if isinstance(fn, Jet):
        raise TypeError("pass a function, expression or callable, not a jet")
    return as_jet_function(fn, names)


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    n_quad: int
    orbit_residual: float = 0.0


def validate_orbit(chart: ChartStructure, orbit: ReebOrbit, n: int = 64) -> float:
    """Max of ``|gamma'(t) - xi(gamma(t))|`` over uniform samples."""
    t, pts = orbit.samples(n)
    vel = orbit.velocities(t)
    worst = 0.0
    for p, v in zip(pts, vel):
        xi = chart.arrays(p, 0)["xi"][..., 0]
        worst = max(worst, float(np.max(np.abs(v - xi))))
    return worst


def psi_gamma(factory, orbit: ReebOrbit, a0, n_quad: int = 256, zeta=None,
              tol: float = 1e-8, validate: bool = True) -> QuadratureResult:
    """``Psi_gamma[a0]``: the integral of ``zeta a0`` once around a closed Reeb orbit.

    Parameters
    ----------
    factory : ChartStructure or callable
        Chart, or ``factory(point, order) -> GeometryFrame``.
    orbit : ReebOrbit
    a0 : str, callable
        Observable as an expression in the chart coordinates or a callable on jets.
    n_quad : int
        Trapezoid nodes; the estimate compares against half as many nodes.
    zeta : callable, optional
        Replace ``zeta`` by ``zeta(point) -> vector`` (synthetic tests).
    """
    if n_quad < 4 or n_quad % 2:
        raise ValueError("n_quad must be an even number >= 4")
    chart = factory if isinstance(factory, ChartStructure) else None
    res = 0.0
    if validate:
        if chart is None:
            t, pts = orbit.samples(min(n_quad, 64))
            vel = orbit.velocities(t)
            res = max(float(np.max(np.abs(v - _frame_at(factory, p, 3).xi[..., 0])))
                      for p, v in zip(pts, vel))
        else:
            res = validate_orbit(chart, orbit, min(n_quad, 64))
        if res > tol:
            raise ValueError(f"orbit is not an integral curve of xi (residual {res:.3g})")
    names = chart.coords if chart is not None else None
    fa = _scalar_function(a0, names)

    def integrand(p):
        frame = None
        if zeta is None:
            frame = _frame_at(factory, p, 3)
            z = zeta_jet(frame)[..., 0]
            n = frame.n
        else:
            z = np.asarray(zeta(p), dtype=float)
            n = len(p)
        a = fa(jet_vars(p, 1))
        return complex(np.dot(z, a.coeffs[1: n + 1]))

    t, pts = orbit.samples(n_quad)
    vals = np.array([integrand(p) for p in pts])
    h = orbit.period / n_quad
    full = vals.sum() * h
    half = vals[::2].sum() * 2 * h
    full = full.real if abs(full.imag) <= 1e-14 else full
    return QuadratureResult(full, float(abs(full - half)), n_quad, res)


def torus_grid(nx: int, ny: int, nz: int, y_range=(-1.0, 1.0), period=2 * np.pi):
    """Product grid: periodic trapezoid in ``x`` and ``z``, Gauss-Legendre in ``y``."""
    xs = np.arange(nx) * period / nx
    zs = np.arange(nz) * period / nz
    yg, yw = np.polynomial.legendre.leggauss(ny)
    a, b = y_range
    ys = 0.5 * (b - a) * yg + 0.5 * (a + b)
    yw = 0.5 * (b - a) * yw
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    Wt = (period / nx) * (period / nz) * np.broadcast_to(yw[None, :, None], X.shape)
    pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    return pts, Wt.ravel().copy()


@dataclass(frozen=True)
class CharacterResult:
    direct: float
    by_parts: float

    @property
    def discrepancy(self) -> float:
        return abs(self.direct - self.by_parts)


def _univariate(f):
    if callable(f):
        return f
    e = parse_expr(str(f), ("u",))
    return lambda u, _e=e: eval_expr_jets(_e, [u], ("u",))


def phi_character(factory, quad_grid, a0, f=lambda u: u) -> CharacterResult:
    """Both sides of the integration-by-parts identity for the f-character.

    ``direct = sum_w v zeta(f(a0))`` and ``by_parts = -sum_w v chi f(a0)``
    where ``v`` is the density of ``lam ^ (d lam)^m``.
    """
    pts, wts = (np.asarray(q, dtype=float) for q in quad_grid)
    if pts.ndim != 2 or wts.shape != (len(pts),):
        raise ValueError("grid must be (points[N, n], weights[N])")
    if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(wts))):
        raise ValueError("grid contains non-finite entries")
    chart = factory if isinstance(factory, ChartStructure) else None
    fa = _scalar_function(a0, chart.coords if chart is not None else None)
    ff = _univariate(f)
    direct = 0.0
    by_parts = 0.0
    for p, w in zip(pts, wts):
        frame = _frame_at(factory, p, 3)
        z = zeta_jet(frame)
        chi = chi_jet(frame, z)[0]
        F = ff(fa(jet_vars(p, 1)))
        v = frame.volume_density
        n = frame.n
        direct += w * v * np.dot(z[..., 0], F.coeffs[1: n + 1])
        by_parts -= w * v * chi * F.coeffs[0]
    return CharacterResult(float(np.real(direct)), float(np.real(by_parts)))
