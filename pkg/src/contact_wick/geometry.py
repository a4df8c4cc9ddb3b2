"""Derived tensors of a contact metric structure as jets at a base point.

Index conventions (all arrays carry a trailing jet-coefficient axis):

* ``omega[i, j] = d_i lam_j - d_j lam_i``
* ``pi[i, j] = ginv[i, k] phi[j, k]`` and ``h = 1j * pi + ginv``
* covariant derivatives append the derivative index last:
  ``nabla_k v^i = d_k v^i + Gamma[i, j, k] v^j`` and
  ``nabla_k a_j = d_k a_j - Gamma[m, j, k] a_m``
* ``R[i, j, k, l] = d_k Gamma[i, j, l] - d_l Gamma[i, j, k]
  + Gamma[i, m, k] Gamma[m, j, l] - Gamma[i, m, l] Gamma[m, j, k]``
* ``T[i, j, k] = Gamma[i, j, k] - Gamma[i, k, j]``

Jet orders shrink with differentiation: with frame order ``J`` the data
``lam, g, phi, xi, ginv, pi, h, P`` have order ``J``; Christoffel symbols,
torsion, ``omega`` and the Lie derivatives have ``J - 1``; curvatures have
``J - 2``.
"""
from __future__ import annotations

import functools
import itertools
import string
from typing import Sequence

import numpy as np

from .chart import ChartStructure
from .jets import BudgetExhausted, Jet, JetDomainError, jet_space, order_of

TOL_GEOMETRY = 1e-8


class NonContactPoint(ValueError):
    """The contact volume density vanishes at the requested base point."""


def _perm_sign(p):
    sign = 1
    p = list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


class GeometryFrame:
    """All derived tensor jets of a chart at one base point.

    Parameters
    ----------
    chart : ChartStructure
    base_point : sequence of float
    order : int
        Jet order ``J`` of the raw chart data; at least 3.
    connection : ndarray, optional
        Replace the contact metric connection by this Christoffel array
        (shape ``(n, n, n, size)``).  Used for negative controls.
    """

    def __init__(self, chart: ChartStructure, base_point: Sequence[float], order: int,
                 connection: np.ndarray | None = None, check_contact: bool = True):
        if order < 3:
            raise BudgetExhausted("frame jet order must be at least 3")
        self.chart = chart
        self.point = np.asarray(base_point, dtype=float)
        self.order = int(order)
        self.n = chart.dim
        self.m = chart.m
        arr = chart.arrays(self.point, self.order)
        self.lam = arr["lam"]
        self.g = arr["g"]
        self.phi = arr["phi"]
        self.xi = arr["xi"]
        self._connection = connection
        if abs(np.linalg.det(self.g[..., 0])) < 1e-14:
            raise JetDomainError("singular metric at the base point")
        if check_contact and abs(self.volume_density) < TOL_GEOMETRY:
            raise NonContactPoint(
                f"lambda ^ (d lambda)^m vanishes at {self.point.tolist()}")

    def __repr__(self):
        return (f"GeometryFrame({self.chart.descriptor()!r}, point={self.point.tolist()}, "
                f"order={self.order})")

    # -- jet helpers -------------------------------------------------------

    def space(self, order: int):
        return jet_space(self.n, order)

    def ord(self, a) -> int:
        return order_of(self.n, np.shape(a)[-1])

    def mul(self, spec: str, a, b) -> np.ndarray:
        o = min(self.ord(a), self.ord(b))
        return self.space(o).einsum(spec, a, b)

    def d(self, a) -> np.ndarray:
        """Gradient; the derivative index becomes the last tensor axis."""
        return self.space(self.ord(a)).gradient(a)

    def covariant(self, t, up: int, down: int, gamma=None) -> np.ndarray:
        """Covariant derivative of a tensor with ``up`` upper then ``down`` lower indices."""
        G = self.Gamma if gamma is None else gamma
        out = self.d(t)
        rank = up + down
        letters = string.ascii_lowercase[:rank]
        k, mm = "y", "z"
        for ax in range(rank):
            idx = list(letters)
            target = letters + k
            if ax < up:
                src = idx[ax]
                idx[ax] = mm
                term = self.mul(f"{src}{mm}{k},{''.join(idx)}->{target}", G, t)
                s = min(out.shape[-1], term.shape[-1])
                out = out[..., :s] + term[..., :s]
            else:
                src = idx[ax]
                idx[ax] = mm
                term = self.mul(f"{mm}{src}{k},{''.join(idx)}->{target}", G, t)
                s = min(out.shape[-1], term.shape[-1])
                out = out[..., :s] - term[..., :s]
        return out

    # -- algebraic data --------------------------------------------------

    @functools.cached_property
    def ginv(self) -> np.ndarray:
        return self.space(self.order).mat_inv(self.g)

    @functools.cached_property
    def omega(self) -> np.ndarray:
        dl = self.d(self.lam)  # dl[j, i] = d_i lam_j
        return np.swapaxes(dl, 0, 1) - dl

    @functools.cached_property
    def pi(self) -> np.ndarray:
        return self.mul("ik,jk->ij", self.ginv, self.phi)

    @functools.cached_property
    def h(self) -> np.ndarray:
        return 1j * self.pi + self.ginv

    @functools.cached_property
    def P(self) -> np.ndarray:
        out = -self.mul("i,j->ij", self.xi, self.lam)
        out[..., 0] += np.eye(self.n)
        return out

    @functools.cached_property
    def volume_density(self) -> float:
        """Coefficient of ``lam ^ (d lam)^m`` on ``dx^0 ^ ... ^ dx^(n-1)`` at the point."""
        lam = self.lam[..., 0]
        w = (np.swapaxes(self.d(self.lam), 0, 1) - self.d(self.lam))[..., 0]
        total = 0.0
        for p in itertools.permutations(range(self.n)):
            term = lam[p[0]]
            for a in range(self.m):
                term *= 0.5 * w[p[2 * a + 1], p[2 * a + 2]]
            total += _perm_sign(p) * term
        return float(total)

    # -- connections -----------------------------------------------------

    @functools.cached_property
    def Gamma_g(self) -> np.ndarray:
        dg = self.d(self.g)  # dg[l, k, j] = d_j g_lk
        C = dg + np.swapaxes(dg, 1, 2) - np.transpose(dg, (2, 0, 1, 3))
        # C[l, j, k] = d_j g_lk + d_k g_lj - d_l g_jk
        return 0.5 * self.mul("il,ljk->ijk", self.ginv, C)

    def _cov_g(self, t, up, down):
        return self.covariant(t, up, down, self.Gamma_g)

    @functools.cached_property
    def nabla_g_phi(self) -> np.ndarray:
        """``[l, j, k] = nabla^g_k phi^l_j``"""
        return self._cov_g(self.phi, 1, 1)

    @functools.cached_property
    def nabla_g_xi(self) -> np.ndarray:
        """``[i, k] = nabla^g_k xi^i``"""
        return self._cov_g(self.xi, 1, 0)

    @functools.cached_property
    def nabla_g_lam(self) -> np.ndarray:
        """``[j, k] = nabla^g_k lam_j``"""
        return self._cov_g(self.lam, 0, 1)

    @functools.cached_property
    def nabla_g_omega(self) -> np.ndarray:
        """``[i, j, k] = nabla^g_k omega_ij``"""
        return self._cov_g(self.omega, 0, 2)

    @functools.cached_property
    def S(self) -> np.ndarray:
        """Potential ``S[i, j, k] = S^i_jk`` of the contact metric connection."""
        if self._connection is not None:
            o = self.ord(self._connection)
            return self._connection - self.Gamma_g[..., : jet_space(self.n, o).size]
        t1 = self.mul("il,ljk->ijk", self.phi, self.nabla_g_phi)
        t2 = self.mul("j,ik->ijk", self.lam, self.nabla_g_xi)
        t3 = self.mul("i,jk->ijk", self.xi, self.nabla_g_lam)
        return -0.5 * t1 - 0.5 * t2 + t3

    @functools.cached_property
    def Gamma(self) -> np.ndarray:
        if self._connection is not None:
            return np.array(self._connection)
        return self.Gamma_g + self.S

    @functools.cached_property
    def T(self) -> np.ndarray:
        """Torsion ``T[i, j, k] = T^i_jk``."""
        G = self.Gamma
        return G - np.swapaxes(G, 1, 2)

    @staticmethod
    def _riemann(frame, G) -> np.ndarray:
        dG = frame.d(G)  # dG[i, j, l, k] = d_k G[i, j, l]
        quad = frame.mul("imk,mjl->ijkl", G, G)
        lin = np.swapaxes(dG, 2, 3) - dG
        quad = quad[..., : lin.shape[-1]]
        return lin + quad - np.swapaxes(quad, 2, 3)

    @functools.cached_property
    def R(self) -> np.ndarray:
        """Curvature ``R[i, j, k, l] = R^i_jkl`` of the connection."""
        return self._riemann(self, self.Gamma)

    @functools.cached_property
    def T_low(self) -> np.ndarray:
        """``T_kij = omega_kn T^n_ij``"""
        return self.mul("kn,nij->kij", self.omega, self.T)

    @functools.cached_property
    def R_low(self) -> np.ndarray:
        """``R_klij = omega_kn R^n_lij``"""
        return self.mul("kn,nlij->klij", self.omega, self.R)

    @functools.cached_property
    def riemann_g(self) -> np.ndarray:
        """Levi-Civita curvature, same index convention as :attr:`R`."""
        return self._riemann(self, self.Gamma_g)

    # -- classification data ----------------------------------------------

    @functools.cached_property
    def tanno(self) -> np.ndarray:
        """``Q[k, i, j] = Q^k_ij``"""
        t1 = self.nabla_g_phi  # [k, i, j]
        t2 = self.mul("k,ij->kij", self.xi, self.mul("ni,nj->ij", self.phi, self.nabla_g_lam))
        t3 = self.mul("kj,i->kij", self.mul("kn,nj->kj", self.phi, self.nabla_g_xi), self.lam)
        o = min(self.ord(t) for t in (t1, t2, t3))
        s = jet_space(self.n, o).size
        return t1[..., :s] + t2[..., :s] + t3[..., :s]

    @functools.cached_property
    def lie_xi_g(self) -> np.ndarray:
        """``(L_xi g)_ij``"""
        dg = self.d(self.g)
        dxi = self.d(self.xi)  # dxi[k, i] = d_i xi^k
        t1 = self.mul("k,ijk->ij", self.xi, dg)
        t2 = self.mul("kj,ki->ij", self.g, dxi)
        return t1 + t2 + np.swapaxes(t2, 0, 1)

    @functools.cached_property
    def lie_xi_ginv(self) -> np.ndarray:
        """``(L_xi ginv)^ij = -ginv^ik ginv^jl (L_xi g)_kl``"""
        tmp = self.mul("ik,kl->il", self.ginv, self.lie_xi_g)
        return -self.mul("il,jl->ij", tmp, self.ginv)

    @functools.cached_property
    def sasaki_defect(self) -> np.ndarray:
        """``2 nabla^g_k omega_ij - lam_i g_kj + lam_j g_ki`` as ``[i, j, k]``."""
        lg = self.mul("i,kj->ijk", self.lam, self.g)
        t = 2 * self.nabla_g_omega
        return t - lg[..., : t.shape[-1]] + np.transpose(lg, (1, 0, 2, 3))[..., : t.shape[-1]]

    def levi_form(self) -> np.ndarray:
        """``omega(phi X, Y)`` on an orthonormal basis of ``ker lam`` at the point."""
        g = self.g[..., 0]
        lam = self.lam[..., 0]
        xi = self.xi[..., 0]
        # vectors annihilated by lam, orthonormalised against xi in g
        basis = []
        for e in np.eye(self.n):
            v = e - lam @ e * xi
            for b in basis:
                v = v - (b @ g @ v) * b
            nv = np.sqrt(abs(v @ g @ v))
            if nv > 1e-10 and len(basis) < 2 * self.m:
                basis.append(v / nv)
        B = np.array(basis).T
        w = self.omega[..., 0]
        phi = self.phi[..., 0]
        L = (phi @ B).T @ w @ B
        return 0.5 * (L + L.T)

    def with_connection(self, gamma: np.ndarray) -> "GeometryFrame":
        return GeometryFrame(self.chart, self.point, self.order, connection=gamma)


def build_frame(chart: ChartStructure, base_point: Sequence[float], order: int) -> GeometryFrame:
    """Evaluate all derived tensors of ``chart`` as jets of order ``order`` at ``base_point``."""
    return GeometryFrame(chart, base_point, order)


# ---------------------------------------------------------------------------
# residual reports


def _maxabs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def _val(a):
    return np.asarray(a)[..., 0]


def check_compatibility(frame: GeometryFrame) -> dict[str, float]:
    """Max-norm residuals of the six algebraic compatibility relations at the point."""
    lam, g, phi, xi = (_val(a) for a in (frame.lam, frame.g, frame.phi, frame.xi))
    w = _val(frame.omega)
    n = frame.n
    return {
        "lambda_eq_g_xi": _maxabs(lam - g @ xi),
        "omega_eq_g_phi": _maxabs(w - g @ phi),
        "g_phi_phi": _maxabs(phi.T @ g @ phi - g + np.outer(lam, lam)),
        "phi_squared": _maxabs(phi @ phi + np.eye(n) - np.outer(xi, lam)),
        "phi_xi": _maxabs(phi @ xi),
        "lambda_phi": _maxabs(lam @ phi),
        "lambda_xi_minus_one": abs(float(lam @ xi) - 1.0),
        "xi_omega": _maxabs(xi @ w),
    }


def check_connection(frame: GeometryFrame, gamma: np.ndarray | None = None) -> dict[str, float]:
    """Residuals of parallel ``lam, xi, omega, g, phi`` and the torsion relation.

    ``gamma`` replaces the contact metric connection (e.g. ``frame.Gamma_g``).
    """
    G = frame.Gamma if gamma is None else gamma
    cov = frame.covariant
    T = G - np.swapaxes(G, 1, 2)
    return {
        "nabla_lambda": _maxabs(_val(cov(frame.lam, 0, 1, G))),
        "nabla_xi": _maxabs(_val(cov(frame.xi, 1, 0, G))),
        "nabla_omega": _maxabs(_val(cov(frame.omega, 0, 2, G))),
        "nabla_g": _maxabs(_val(cov(frame.g, 0, 2, G))),
        "nabla_phi": _maxabs(_val(cov(frame.phi, 1, 1, G))),
        # omega_ij = lam_k T^k_ji
        "torsion_relation": _maxabs(_val(frame.omega)
                                    - np.einsum("k,kji->ij", _val(frame.lam), _val(T))),
    }


def random_connection(frame: GeometryFrame, scale: float = 0.3, seed: int = 0) -> np.ndarray:
    """Contact metric connection plus a random perturbation (a non-metric connection)."""
    rng = np.random.default_rng(seed)
    G = frame.Gamma
    return G + scale * rng.standard_normal(G.shape)


def check_symmetries(frame: GeometryFrame, bianchi: bool = True) -> dict[str, float]:
    """Residuals of the curvature/torsion symmetries and the Bianchi identities."""
    R = _val(frame.R_low)
    Rup = _val(frame.R)
    T = _val(frame.T_low)
    ginv = _val(frame.ginv)
    gR = np.einsum("in,jnkl->ijkl", ginv, Rup)
    out = {
        "R_swap_first": _maxabs(R - np.swapaxes(R, 0, 1)),
        "R_antisym_last": _maxabs(R + np.swapaxes(R, 2, 3)),
        "torsion_cyclic": _maxabs(T + np.transpose(T, (1, 2, 0)) + np.transpose(T, (2, 0, 1))),
        "curvature_metric": _maxabs(gR + np.swapaxes(gR, 0, 1)),
    }
    if bianchi:
        from . import wick

        out.update(wick.bianchi_residuals(frame))
    return out


def classify(frame: GeometryFrame, tol: float = TOL_GEOMETRY) -> dict:
    """Contact / K-contact / CR / Sasakian flags and the residuals behind them."""
    scale = max(1.0, _maxabs(_val(frame.g)))
    lie = _maxabs(_val(frame.lie_xi_g))
    tanno = _maxabs(_val(frame.tanno))
    sas = _maxabs(_val(frame.sasaki_defect))
    vol = frame.volume_density
    eig = float(np.min(np.linalg.eigvalsh(frame.levi_form())))
    thr = tol * scale
    return {
        "is_contact": bool(abs(vol) > thr),
        "is_kcontact": bool(lie <= thr),
        "is_cr": bool(tanno <= thr),
        "is_sasakian": bool(sas <= thr),
        "levi_positive": bool(eig > thr),
        "residuals": {
            "volume_density": vol,
            "lie_xi_g": lie,
            "tanno": tanno,
            "sasaki": sas,
            "levi_min_eigenvalue": eig,
        },
    }


def frame_invariants(frame: GeometryFrame) -> dict[str, float]:
    """Residuals of the structural invariants of the derived tensors."""
    g = _val(frame.g)
    ginv = _val(frame.ginv)
    P = _val(frame.P)
    h = _val(frame.h)
    w = _val(frame.omega)
    out = {
        "ginv_g": _maxabs(ginv @ g - np.eye(frame.n)),
        "P_idempotent": _maxabs(P @ P - P),
        "P_trace": abs(np.trace(P) - 2 * frame.m),
        "h_hermitian": _maxabs(h - h.conj().T),
        "omega_rank": float(2 * frame.m - np.linalg.matrix_rank(w, tol=1e-8)),
        "omega_hh": _maxabs(np.einsum("ij,in,jm->nm", w, h, h)),
        "P_eq_pi_omega": _maxabs(P - _val(frame.pi) @ w),
    }
    return out


def jacobi_bracket(frame: GeometryFrame, a: Jet, b: Jet) -> Jet:
    """``{a, b} = pi(da, db) + a xi(b) - b xi(a)`` as a jet one order lower."""
    if a.order < 1 or b.order < 1:
        raise BudgetExhausted("Jacobi bracket needs jets of order >= 1")
    n = frame.n
    o = min(a.order, b.order) - 1
    if o > frame.order:
        raise BudgetExhausted("observable order exceeds the frame order")
    sp = jet_space(n, o)
    da = sp.fit(jet_space(n, a.order).gradient(a.coeffs))
    db = sp.fit(jet_space(n, b.order).gradient(b.coeffs))
    pi = sp.fit(frame.pi)
    xi = sp.fit(frame.xi)
    t = sp.einsum("ij,i->j", pi, da)
    t = sp.einsum("j,j->", t, db)
    xa = sp.einsum("i,i->", xi, da)
    xb = sp.einsum("i,i->", xi, db)
    out = t + sp.mul(sp.fit(a.coeffs), xb) - sp.mul(sp.fit(b.coeffs), xa)
    return Jet(out, n, o)
