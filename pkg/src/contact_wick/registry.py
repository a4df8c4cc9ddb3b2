"""Built-in contact metric charts and Reeb orbits."""
from __future__ import annotations

import numpy as np

from .chart import ChartStructure, parse_chart

EPS_RANGE = (-1.0, 1.0)

_HEISENBERG3 = """\
name = heisenberg3
dim = 3
coords = x, y, z
[lambda]
x = -y
z = 1
[metric]
x,x = 1 + y^2
x,z = -y
y,y = 1
z,z = 1
[phi]
x,y = 1
y,x = -1
z,y = y
[xi]
z = 1
"""

_HEISENBERG5 = """\
name = heisenberg5
dim = 5
coords = x1, y1, x2, y2, z
[lambda]
x1 = -y1
x2 = -y2
z = 1
[metric]
x1,x1 = 1 + y1^2
x1,x2 = y1*y2
x1,z = -y1
y1,y1 = 1
x2,x2 = 1 + y2^2
x2,z = -y2
y2,y2 = 1
z,z = 1
[phi]
x1,y1 = 1
y1,x1 = -1
z,y1 = y1
x2,y2 = 1
y2,x2 = -1
z,y2 = y2
[xi]
z = 1
"""

# frame e1 = f d_y, e2 = f^-1 (d_x + y d_z) with f = exp(eps z)
_DEFORMED3 = """\
name = deformed3
dim = 3
coords = x, y, z
[lambda]
x = -y
z = 1
[metric]
x,x = exp({2e}*z) + y^2
x,z = -y
y,y = exp({m2e}*z)
z,z = 1
[phi]
x,y = exp({m2e}*z)
y,x = -exp({2e}*z)
z,y = y*exp({m2e}*z)
[xi]
z = 1
"""

# the same frame rescaling with f = exp(eps sin z), periodic in x and z
_DEFORMED3_PERIODIC = """\
name = deformed3_periodic
dim = 3
coords = x, y, z
[lambda]
x = -y
z = 1
[metric]
x,x = exp({2e}*sin(z)) + y^2
x,z = -y
y,y = exp({m2e}*sin(z))
z,z = 1
[phi]
x,y = exp({m2e}*sin(z))
y,x = -exp({2e}*sin(z))
z,y = y*exp({m2e}*sin(z))
[xi]
z = 1
"""

# round S^3 of radius 2, stereographic coordinates, s = 1 + |u|^2
_S = "(1 + u1^2 + u2^2 + u3^2)"
_SPHERE3 = f"""\
name = sphere3
dim = 3
coords = u1, u2, u3
[lambda]
u1 = 8*(u1*u3 - u2)/{_S}^2
u2 = 8*(u1 + u2*u3)/{_S}^2
u3 = 4*(1 - u1^2 - u2^2 + u3^2)/{_S}^2
[metric]
u1,u1 = 16/{_S}^2
u2,u2 = 16/{_S}^2
u3,u3 = 16/{_S}^2
[phi]
u1,u2 = -(u1^2 + u2^2 - u3^2 - 1)/{_S}
u1,u3 = -2*(u1 + u2*u3)/{_S}
u2,u1 = (u1^2 + u2^2 - u3^2 - 1)/{_S}
u2,u3 = 2*(u1*u3 - u2)/{_S}
u3,u1 = 2*(u1 + u2*u3)/{_S}
u3,u2 = -2*(u1*u3 - u2)/{_S}
[xi]
u1 = (u1*u3 - u2)/2
u2 = (u1 + u2*u3)/2
u3 = (1 - u1^2 - u2^2 + u3^2)/4
"""

NAMES = ("heisenberg3", "heisenberg5", "deformed3", "sphere3", "deformed3_periodic")
SASAKIAN = ("heisenberg3", "heisenberg5", "sphere3")


def _num(x: float) -> str:
    return repr(float(x)) if x >= 0 else f"(-{repr(float(-x))})"


def builtin_text(name: str, eps: float | None = None) -> str:
    """Chart-file text of a builtin structure."""
    if name in ("deformed3", "deformed3_periodic"):
        eps = 0.3 if eps is None else float(eps)
        if not EPS_RANGE[0] <= eps <= EPS_RANGE[1]:
            raise ValueError(f"eps = {eps} outside the supported range {EPS_RANGE}")
        tmpl = _DEFORMED3 if name == "deformed3" else _DEFORMED3_PERIODIC
        return tmpl.format(**{"2e": _num(2 * eps), "m2e": _num(-2 * eps)})
    if eps is not None:
        raise ValueError(f"{name} takes no parameters")
    try:
        return {"heisenberg3": _HEISENBERG3, "heisenberg5": _HEISENBERG5,
                "sphere3": _SPHERE3}[name]
    except KeyError:
        raise KeyError(f"unknown builtin {name!r}; choose from {', '.join(NAMES)}") from None


def _orientation_ok(chart: ChartStructure) -> bool:
    from .geometry import GeometryFrame, check_compatibility

    probe = np.linspace(0.11, 0.37, chart.dim)
    frame = GeometryFrame(chart, probe, 3)
    return check_compatibility(frame)["omega_eq_g_phi"] <= 1e-9


def builtin(name: str, eps: float | None = None) -> ChartStructure:
    """Registry lookup.

    Parameters
    ----------
    name : str
        ``heisenberg3``, ``heisenberg5``, ``deformed3``, ``sphere3`` or
        ``deformed3_periodic``.
    eps : float, optional
        Deformation parameter of the ``deformed3`` charts, in ``[-1, 1]``
        (default 0.3).
    """
    chart = parse_chart(builtin_text(name, eps))
    if eps is not None:
        chart = ChartStructure(chart.coords, chart.lam, chart.metric, chart.phi, chart.xi,
                               chart.name, (("eps", float(eps)),))
    if not _orientation_ok(chart):
        chart = chart.with_phi_sign(-1)
        if not _orientation_ok(chart):
            raise RuntimeError(f"builtin {name} fails the compatibility check in both orientations")
    return chart


# ---------------------------------------------------------------------------
# Reeb orbits


class ReebOrbit:
    """A closed orbit given by uniform samples over one period.

    Parameters
    ----------
    period : float
    sampler : callable
        ``sampler(t)`` returns points of shape ``(len(t), n)``.
    velocity : callable, optional
        Exact derivative of the parametrisation; without it the velocity is
        obtained by spectral differentiation of the samples.
    """

    def __init__(self, period, sampler, velocity=None, name=""):
        self.period = float(period)
        self.sampler = sampler
        self.velocity = velocity
        self.name = name

    @classmethod
    def from_samples(cls, ts, points, period, name=""):
        """Orbit from samples ``(t_k, point_k)`` on a uniform grid over one period."""
        ts = np.asarray(ts, dtype=float)
        pts = np.asarray(points, dtype=float)
        N = len(ts)
        if N < 4:
            raise ValueError("need at least four orbit samples")
        dt = np.diff(ts)
        if not np.allclose(dt, period / N, rtol=1e-9, atol=1e-12):
            raise ValueError("orbit samples must be uniform over one period")
        # trigonometric interpolation through the samples
        coef = np.fft.rfft(pts, axis=0) / N
        k = np.fft.rfftfreq(N, d=1.0 / N)
        if N % 2 == 0:
            coef[-1] *= 0.5  # split the Nyquist mode symmetrically

        def sampler(t, coef=coef, k=k, t0=ts[0]):
            ph = np.exp(2j * np.pi * np.outer(np.asarray(t) - t0, k) / period)
            w = np.where(k == 0, 1.0, 2.0)
            return np.real(ph @ (coef * w[:, None]))

        def velocity(t, coef=coef, k=k, t0=ts[0]):
            ph = np.exp(2j * np.pi * np.outer(np.asarray(t) - t0, k) / period)
            w = np.where(k == 0, 1.0, 2.0) * (2j * np.pi * k / period)
            return np.real(ph @ (coef * w[:, None]))

        return cls(period, sampler, velocity, name)

    def samples(self, n: int):
        t = np.arange(n) * self.period / n
        return t, np.asarray(self.sampler(t), dtype=float)

    def velocities(self, t):
        return np.asarray(self.velocity(t), dtype=float)


def _stereo(X):
    # S^3 of radius 1 in R^4 -> R^3, projecting from (0, 0, 0, 1)
    return X[:, :3] / (1.0 - X[:, 3:4])


def hopf_fiber(z0=(1.0, 0.0)) -> ReebOrbit:
    """Reeb orbit of ``sphere3`` through the unit vector ``z0`` of C^2; period 4 pi."""
    z0 = np.asarray(z0, dtype=complex)
    z0 = z0 / np.linalg.norm(z0)

    def X(t):
        z = np.exp(0.5j * np.asarray(t))[:, None] * z0[None, :]
        return np.stack([z[:, 0].real, z[:, 0].imag, z[:, 1].real, z[:, 1].imag], axis=1)

    def sampler(t):
        return _stereo(X(t))

    def velocity(t):
        Xt = X(t)
        # dX/dt = (i/2) z
        dX = 0.5 * np.stack([-Xt[:, 1], Xt[:, 0], -Xt[:, 3], Xt[:, 2]], axis=1)
        den = 1.0 - Xt[:, 3:4]
        return dX[:, :3] / den + Xt[:, :3] * dX[:, 3:4] / den**2

    return ReebOrbit(4 * np.pi, sampler, velocity, name="hopf")


ORBITS = {"hopf": hopf_fiber}
