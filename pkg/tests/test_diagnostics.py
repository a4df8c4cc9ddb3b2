import math

import numpy as np
import pytest

from contact_wick.diagnostics import (
    FORMS,
    H_tensor,
    delta1,
    lie_commutator_residuals,
    obstruction_data,
    phi_character,
    psi_gamma,
    torus_grid,
    validate_orbit,
    zeta_chi,
)
from contact_wick.fedosov import delta_op
from contact_wick.geometry import GeometryFrame
from contact_wick.jets import jet_vars
from contact_wick.registry import ReebOrbit, builtin, hopf_fiber

from conftest import P3, P5, frame_at, random_invariant, state_at

# closed forms of zeta and chi on deformed3 (eps = 0.3), evaluated symbolically
ZETA_P3 = [-0.15290446270253179, 0.0, -0.42116178508101271]
CHI_P3 = 0.036697071048607629
DELTA1_P3 = {"x^2+y^2": 0.036021603888333274, "x^3+x*y^2": 0.13462470636310981}

# I0(1) from the series sum 1 / (4^k (k!)^2)
BESSEL_I0_1 = sum(1.0 / (4 ** k * math.factorial(k) ** 2) for k in range(30))


def test_zeta_chi_match_symbolic_values():
    f = frame_at("deformed3", P3, 5, 0.3)
    z, c = zeta_chi(f)
    np.testing.assert_allclose(z, ZETA_P3, atol=1e-13)
    assert c == pytest.approx(CHI_P3, abs=1e-13)


def test_zeta_closed_form_on_a_grid():
    eps = 0.3
    for p in [(0.0, -0.3, 0.5), (1.0, 0.7, -0.4)]:
        f = GeometryFrame(builtin("deformed3", eps), p, 4)
        x, y, z = p
        e = math.exp(-2 * eps * z)
        want = [-4 * eps ** 2 * y * e, 0.0, -4 * eps ** 2 * (y * y * e + 1)]
        np.testing.assert_allclose(zeta_chi(f)[0], want, atol=1e-12)
        assert zeta_chi(f)[1] == pytest.approx(8 * eps ** 3 * y * y * e, abs=1e-12)


@pytest.mark.parametrize("text", sorted(DELTA1_P3))
def test_delta1_forms_match_symbolic_values(text):
    f = frame_at("deformed3", P3, 6, 0.3)
    for form in FORMS:
        assert delta1(f, text, form) == pytest.approx(DELTA1_P3[text], abs=1e-11)


def test_delta1_forms_agree_with_engine(rng):
    st = state_at("deformed3", P3, 4, 0.3)
    f = st.frame
    for _ in range(3):
        a = random_invariant("deformed3", P3, f.order, rng)
        vals = [delta1(f, a, form) for form in FORMS]
        engine = delta_op(st, a)[1].value
        for v in vals:
            assert v == pytest.approx(engine, abs=1e-9)


def test_delta1_of_constant_is_zero():
    f = frame_at("deformed3", P3, 5, 0.3)
    for form in FORMS:
        assert abs(delta1(f, 3.0, form)) <= 1e-15
    with pytest.raises(ValueError):
        delta1(f, "x", "d")


@pytest.mark.parametrize("name, point", [("heisenberg3", P3), ("heisenberg5", P5),
                                         ("sphere3", (0.1, -0.2, 0.3))])
def test_kcontact_obstructions_vanish(name, point, rng):
    f = frame_at(name, point, 5)
    z, c = zeta_chi(f)
    assert np.abs(z).max() <= 1e-9 and abs(c) <= 1e-9
    for _ in range(2):
        a = random_invariant(name, point, f.order, rng)
        data = obstruction_data(f, a)
        assert max(abs(v) for v in data.delta1_forms.values()) <= 1e-9


def test_obstruction_data_fields():
    f = frame_at("deformed3", P3, 5, 0.3)
    d = obstruction_data(f, "x^2+y^2")
    assert set(d.delta1_forms) == set(FORMS)
    assert d.max_form_spread() <= 1e-11
    assert d.chi == pytest.approx(CHI_P3, abs=1e-13)


def test_h_tensor_symmetries():
    f = frame_at("deformed3", P3, 4, 0.3)
    H = H_tensor(f)[..., 0]
    np.testing.assert_allclose(H, np.transpose(H, (1, 0, 2, 3)), atol=1e-15)
    np.testing.assert_allclose(H, np.transpose(H, (0, 1, 3, 2)), atol=1e-15)


@pytest.mark.parametrize("name", ["deformed3", "sphere3"])
def test_lie_commutator_identities(name, rng):
    f = frame_at(name, (0.1, -0.2, 0.3), 5)
    res = lie_commutator_residuals(f, rng)
    assert max(res.values()) <= 1e-10


# ---------------------------------------------------------------------------
# orbit characteristic


def test_psi_synthetic_field_matches_analytic_integral():
    # zeta replaced by d/du1 along the Hopf fibre through (1, 0), where u1 = cos(t/2)
    orbit = hopf_fiber()
    t, pts = orbit.samples(8)
    np.testing.assert_allclose(pts[:, 0], np.cos(t / 2), atol=1e-15)
    res = psi_gamma(builtin("sphere3"), orbit, "exp(u1)", n_quad=128,
                    zeta=lambda p: (1.0, 0.0, 0.0))
    want = 4 * math.pi * BESSEL_I0_1
    assert res.value == pytest.approx(want, abs=1e-8)
    assert res.error_estimate <= 1e-8


def test_psi_vanishes_on_sasakian_orbit():
    res = psi_gamma(builtin("sphere3"), hopf_fiber((0.6, 0.8)), "u1^2 + u2*u3", n_quad=64)
    assert abs(res.value) <= 1e-9
    assert res.orbit_residual <= 1e-10


def test_psi_of_constant_is_zero():
    res = psi_gamma(builtin("sphere3"), hopf_fiber(), "2", n_quad=16,
                    zeta=lambda p: (1.0, 2.0, 3.0))
    assert res.value == 0.0


def test_invalid_orbit_rejected():
    circle = ReebOrbit(2 * np.pi, lambda t: np.stack([np.cos(t), np.sin(t), 0 * t], axis=-1),
                       lambda t: np.stack([-np.sin(t), np.cos(t), 0 * t], axis=-1))
    assert validate_orbit(builtin("sphere3"), circle) > 1e-2
    with pytest.raises(ValueError):
        psi_gamma(builtin("sphere3"), circle, "u1", n_quad=16)
    with pytest.raises(ValueError):
        psi_gamma(builtin("sphere3"), hopf_fiber(), "u1", n_quad=7)


def test_orbit_from_samples_reproduces_hopf_fibre():
    hopf = hopf_fiber()
    ts = np.linspace(0, hopf.period, 64, endpoint=False)
    pts = hopf.sampler(ts)
    orb = ReebOrbit.from_samples(ts, pts, hopf.period)
    assert validate_orbit(builtin("sphere3"), orb) <= 1e-9


# ---------------------------------------------------------------------------
# f-character


def test_character_identity_on_periodic_chart():
    grid = torus_grid(16, 5, 16, y_range=(-0.3, 1.2))
    res = phi_character(builtin("deformed3_periodic", 0.3), grid, "sin(x)+y^2+y*cos(z)", "u^2")
    assert abs(res.direct) > 1.0
    assert res.discrepancy <= 1e-9 * abs(res.direct)


def test_character_vanishes_for_reeb_invariant_input():
    grid = torus_grid(6, 3, 6)
    res = phi_character(builtin("deformed3_periodic", 0.3), grid, "sin(x)+y^2", "u^2")
    assert abs(res.direct) <= 1e-12 and abs(res.by_parts) <= 1e-12


def test_character_zero_on_sasakian_and_for_constants():
    pts = np.array([[0.1, 0.2, 0.3], [-0.2, 0.1, 0.4]])
    wts = np.array([0.5, 0.5])
    res = phi_character(builtin("sphere3"), (pts, wts), "u1*u2", "u^2")
    assert abs(res.direct) <= 1e-10 and abs(res.by_parts) <= 1e-10
    res = phi_character(builtin("deformed3", 0.3), (pts, wts), "2", lambda u: u)
    assert res.direct == 0.0


def test_character_grid_validation():
    with pytest.raises(ValueError):
        phi_character(builtin("sphere3"), (np.zeros((2, 3)), np.ones(3)), "u1")
    with pytest.raises(ValueError):
        phi_character(builtin("sphere3"), (np.full((1, 3), np.nan), np.ones(1)), "u1")
