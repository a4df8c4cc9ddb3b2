import math

import numpy as np
import pytest

from contact_wick.jets import BudgetExhausted, jet_vars
from contact_wick.registry import SASAKIAN, builtin
from contact_wick.wick import (
    WickElement,
    at_y_zero,
    circ,
    commutator,
    cov_d,
    delta,
    delta_inv,
    delta_star,
    div_nu,
    dot,
    forms,
    i_over_nu_commutator,
    interior_xi,
    make_T_R,
    omega_element,
    proj_Pi,
    random_element,
    wedge_lambda,
    wedge_table,
    xi_transversality,
)

from conftest import P3, frame_at

SCALED = 1e-12


def _v(a):
    return np.asarray(a)[..., 0]


def _y(n, *idx):
    alpha = [0] * n
    for i in idx:
        alpha[i] += 1
    return tuple(alpha)


@pytest.fixture(scope="module")
def heis():
    return frame_at("heisenberg3", (0.0, 0.0, 0.0), 6)


@pytest.fixture(scope="module")
def deformed():
    return frame_at("deformed3", P3, 6, 0.3)


# ---------------------------------------------------------------------------
# forms


def test_wedge_signs():
    t = wedge_table(3, 1, 1)
    F2 = forms(3, 2)
    h = F2.index((0, 1))
    assert t[0, 1, h] == 1 and t[1, 0, h] == -1 and t[0, 0].sum() == 0
    t3 = wedge_table(3, 1, 2)
    assert t3[1, F2.index((0, 2)), 0] == -1
    assert t3[0, F2.index((1, 2)), 0] == 1


def test_monomial_round_trip(deformed):
    x, y, z = jet_vars(deformed.point, 4)
    terms = {(0, (1, 0, 0), (2,)): x * z + 1.0, (1, (0, 0, 0), ()): 2.0 + 0j, (0, (0, 2, 1), (0, 1)): y}
    a = WickElement.from_monomials(deformed, terms, 5)
    assert a.W == 5
    got = a.monomials()
    assert set(got) == set(terms)
    for k, c in terms.items():
        want = c.value if hasattr(c, "value") else c
        assert a.coefficient(*k) == pytest.approx(want)
    with pytest.raises(BudgetExhausted):
        a.coefficient(0, (3, 3, 0), (2,))
    with pytest.raises(ValueError):
        WickElement.from_monomials(deformed, {(0, (1, 0, 0), (2, 1)): 1.0}, 3)


def test_low_order_jets_lower_the_cutoff(deformed):
    x, y, z = jet_vars(deformed.point, 2)
    a = WickElement.from_monomials(deformed, {(0, (1, 0, 0), ()): x}, 6)
    assert a.W == 3


# ---------------------------------------------------------------------------
# the product


def test_single_contraction(heis):
    n = 3
    a = WickElement.from_monomials(heis, {(0, _y(n, 0), ()): 1.0}, 4)
    b = WickElement.from_monomials(heis, {(0, _y(n, 1), ()): 1.0}, 4)
    ab = circ(a, b)
    h = _v(heis.h)
    assert ab.coefficient(0, _y(n, 0, 1)) == pytest.approx(1.0)
    assert ab.coefficient(1, _y(n)) == pytest.approx(0.5 * h[0, 1])
    c = commutator(a, b)
    assert c.coefficient(1, _y(n)) == pytest.approx(1j * _v(heis.pi)[0, 1])
    assert c.coefficient(0, _y(n, 0, 1)) == pytest.approx(0.0)


def test_unit_and_self_commutator(deformed, rng):
    a = random_element(deformed, 5, rng, form_degrees=(0, 2))
    one = WickElement.from_monomials(deformed, {(0, _y(3), ()): 1.0}, 5)
    assert (circ(one, a) - a).max_abs() <= SCALED
    assert (circ(a, one) - a).max_abs() <= SCALED
    assert commutator(a, a).max_abs() <= 1e-11


def test_associativity(deformed, rng):
    a, b, c = (random_element(deformed, 4, rng, form_degrees=(0, 1)) for _ in range(3))
    lhs = circ(circ(a, b), c)
    rhs = circ(a, circ(b, c))
    assert (lhs - rhs).max_abs() <= 1e-10 * max(1.0, lhs.max_abs())


def test_omega_is_central(deformed, rng):
    a = random_element(deformed, 4, rng)
    om = omega_element(deformed, 4)
    assert commutator(om, a).max_abs() <= SCALED


def test_commutator_has_no_nu_free_part(deformed, rng):
    a = random_element(deformed, 4, rng, form_degrees=(1,))
    b = random_element(deformed, 4, rng, form_degrees=(1,))
    c = commutator(a, b)
    assert all(p >= 1 for p, _ in c.comps)
    i_over_nu_commutator(a, b)


def test_div_nu_rejects_nu_free_terms(deformed):
    a = WickElement.from_monomials(deformed, {(0, _y(3, 0), ()): 1.0}, 3)
    with pytest.raises(ArithmeticError):
        div_nu(a)


def test_mismatched_points_rejected(rng):
    f1 = frame_at("heisenberg3", (0.0, 0.0, 0.0), 4)
    f2 = frame_at("heisenberg3", (0.1, 0.0, 0.0), 4)
    with pytest.raises(ValueError):
        circ(random_element(f1, 3, rng), random_element(f2, 3, rng))


def test_dot_is_graded_commutative(deformed, rng):
    a = random_element(deformed, 4, rng, form_degrees=(1,))
    b = random_element(deformed, 4, rng, form_degrees=(1,))
    assert (dot(a, b) + dot(b, a)).max_abs() <= SCALED


# ---------------------------------------------------------------------------
# delta and the homotopy


@pytest.mark.parametrize("name", ["heisenberg3", "deformed3", "sphere3"])
def test_homotopy_identity(name, rng):
    f = frame_at(name, (0.1, -0.2, 0.15), 6)
    for _ in range(3):
        a = random_element(f, 5, rng)
        res = a - proj_Pi(a) - delta(delta_inv(a)) - delta_inv(delta(a))
        assert res.max_abs() <= 1e-9


def test_delta_squares_vanish(deformed, rng):
    a = random_element(deformed, 5, rng)
    assert delta(delta(a)).max_abs() <= SCALED
    assert delta_star(delta_star(a)).max_abs() <= SCALED


def test_delta_inv_kills_scalars_and_pi_is_projection(deformed, rng):
    c = WickElement.from_monomials(deformed, {(1, _y(3), ()): 2.0}, 4)
    assert delta_inv(c).is_zero()
    a = random_element(deformed, 4, rng)
    pa = proj_Pi(a)
    assert (proj_Pi(pa) - pa).max_abs() <= SCALED
    assert delta_inv(delta_inv(a)).max_abs() <= SCALED


def test_operators_preserve_transversality(deformed, rng):
    a = random_element(deformed, 5, rng)
    assert xi_transversality(a) <= 1e-10
    for op in (delta, delta_star, delta_inv, proj_Pi):
        assert xi_transversality(op(a)) <= 1e-10


def test_interior_and_wedge_lambda(deformed, rng):
    a = random_element(deformed, 4, rng, form_degrees=(1, 2))
    assert interior_xi(interior_xi(a)).max_abs() <= SCALED
    assert wedge_lambda(wedge_lambda(a)).max_abs() <= SCALED
    # i_xi (lambda ^ b) = b - lambda ^ i_xi b since lambda(xi) = 1
    lhs = interior_xi(wedge_lambda(a))
    rhs = a - wedge_lambda(interior_xi(a))
    assert (lhs - rhs).max_abs() <= 1e-11


# ---------------------------------------------------------------------------
# covariant derivative, torsion and curvature


@pytest.mark.parametrize("name", ["deformed3", "sphere3"])
def test_leibniz_rule(name, rng):
    f = frame_at(name, (0.1, -0.2, 0.15), 6)
    a = random_element(f, 5, rng, form_degrees=(1,))
    b = random_element(f, 5, rng, form_degrees=(0, 1))
    lhs = cov_d(circ(a, b))
    rhs = circ(cov_d(a), b) - circ(a, cov_d(b))
    assert (lhs - rhs).max_abs() <= 1e-9 * max(1.0, lhs.max_abs())


@pytest.mark.parametrize("name", ["heisenberg3", "deformed3", "sphere3"])
def test_torsion_and_curvature_identities(name, rng):
    f = frame_at(name, (0.1, -0.2, 0.15), 7)
    T, R = make_T_R(f)
    a = random_element(f, 4, rng, form_degrees=(0, 1))
    lhs = cov_d(delta(a)) + delta(cov_d(a))
    rhs = -i_over_nu_commutator(T, a)
    assert (lhs - rhs).max_abs() <= 1e-9 * max(1.0, lhs.max_abs())
    lhs = cov_d(cov_d(a))
    rhs = i_over_nu_commutator(R, a)
    assert (lhs - rhs).max_abs() <= 1e-9 * max(1.0, lhs.max_abs())


@pytest.mark.parametrize("name", ["heisenberg3", "heisenberg5", "deformed3", "sphere3"])
def test_bianchi_and_transversality(name):
    f = frame_at(name, tuple([0.1, -0.2, 0.15, 0.05, 0.2][: builtin(name).dim]), 5)
    T, R = make_T_R(f)
    assert delta(T).max_abs() <= 1e-10
    assert (delta(R) - cov_d(T)).max_abs() <= 1e-9
    assert cov_d(R).max_abs() <= 1e-9
    assert xi_transversality(T) <= 1e-10
    assert xi_transversality(R) <= 1e-9


@pytest.mark.parametrize("name", SASAKIAN)
def test_sasakian_delta_inv_torsion(name):
    f = frame_at(name, tuple([0.1, -0.2, 0.15, 0.05, 0.2][: builtin(name).dim]), 4)
    T, _ = make_T_R(f)
    dT = delta_inv(T)
    n = f.n
    g, lam = _v(f.g), _v(f.lam)
    C = 0.25 * (g - np.outer(lam, lam))
    for k in range(n):
        for i in range(n):
            for j in range(i, n):
                want = (C[i, j] + C[j, i] if i != j else C[i, i]) * lam[k]
                assert dT.coefficient(0, _y(n, i, j), (k,)) == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("name", ["heisenberg3", "deformed3", "sphere3"])
def test_curvature_in_wick_kernel(name, rng):
    f = frame_at(name, (0.1, -0.2, 0.15), 6)
    _, R = make_T_R(f)
    b = random_element(f, 4, rng, form_degrees=(0, 1))
    assert at_y_zero(circ(R, b)).max_abs() <= 1e-10
    assert at_y_zero(circ(b, R)).max_abs() <= 1e-10


@pytest.mark.parametrize("name", SASAKIAN)
def test_torsion_primitive_in_wick_kernel(name, rng):
    f = frame_at(name, tuple([0.1, -0.2, 0.15, 0.05, 0.2][: builtin(name).dim]), 5)
    T, _ = make_T_R(f)
    dT = delta_inv(T)
    b = random_element(f, 4, rng, form_degrees=(0,))
    assert at_y_zero(circ(dT, b)).max_abs() <= 1e-10
    assert at_y_zero(circ(b, dT)).max_abs() <= 1e-10


def test_product_with_empty_element_keeps_weight(deformed, rng):
    # an empty element is only known to vanish through its own cutoff
    from contact_wick.wick import WickElement, dot

    a = random_element(deformed, 4, rng)
    z = WickElement.zero(deformed, 4)
    assert circ(z, z).W == 9
    assert circ(a, z).W == min(a.W + 5, 4 + a.low)
    assert dot(z, a).W == min(a.W + 5, 4 + a.low)
