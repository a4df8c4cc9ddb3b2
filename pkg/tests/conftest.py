import functools

import numpy as np
import pytest

from contact_wick.geometry import GeometryFrame
from contact_wick.registry import builtin


@functools.lru_cache(maxsize=None)
def frame_at(name, point, order, eps=None):
    return GeometryFrame(builtin(name, eps), np.array(point), order)


@functools.lru_cache(maxsize=None)
def state_at(name, point, nu_cutoff, eps=None):
    from contact_wick.fedosov import solve_r

    return solve_r(frame_at(name, point, nu_cutoff + 3, eps), nu_cutoff)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


P3 = (0.2, 0.4, -0.1)
P5 = (0.1, 0.2, -0.1, 0.3, 0.2)


def sphere_invariants(point, order):
    """Jets of three xi-invariant functions on sphere3 (quadratics in the embedding)."""
    from contact_wick.jets import jet_vars

    u1, u2, u3 = jet_vars(point, order)
    s = 1.0 + u1 * u1 + u2 * u2 + u3 * u3
    si = 1.0 / s
    X1, X2, X3 = 2 * u1 * si, 2 * u2 * si, 2 * u3 * si
    X4 = (s - 2.0) * si
    return X1 * X1 + X2 * X2, X1 * X3 + X2 * X4, X2 * X3 - X1 * X4


def invariant_generators(name, point, order):
    """Jets of functions annihilated by xi on the named builtin."""
    from contact_wick.jets import jet_vars

    if name == "sphere3":
        return list(sphere_invariants(point, order))
    v = jet_vars(point, order)
    # xi = d/dz on the Heisenberg-type and deformed charts
    return list(v[:-1])


def random_invariant(name, point, order, rng, degree=3, n_terms=4):
    """Random polynomial of the given degree in the invariant generators."""
    from contact_wick.jets import Jet

    gens = invariant_generators(name, point, order)
    n = len(point)
    out = Jet.constant(float(rng.normal()), n, order)
    for _ in range(n_terms):
        term = Jet.constant(float(rng.normal()), n, order)
        for _ in range(int(rng.integers(1, degree + 1))):
            term = term * gens[int(rng.integers(len(gens)))]
        out = out + term
    return out


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
