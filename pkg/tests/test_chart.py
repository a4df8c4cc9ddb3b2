import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contact_wick.chart import (
    BinOp,
    Call,
    ChartSyntaxError,
    Neg,
    Num,
    Pow,
    Var,
    emit_chart,
    emit_expr,
    eval_jet,
    parse_chart,
    parse_expr,
)
from contact_wick.registry import NAMES, builtin

COORDS = ("x", "y", "z")

HEIS = """\
name = heis
dim = 3
coords = x, y, z
[lambda]
x = -y/2
y = x/2
z = 1
[metric]
x,x = 1 + y^2/4
x,y = -x*y/4
x,z = y/2
y,y = 1 + x^2/4
y,z = -x/2
z,z = 1
[phi]
x,y = -1
y,x = 1
z,x = -x/2
z,y = -y/2
[xi]
z = 1
"""

# ---------------------------------------------------------------------------
# expressions

leaves = st.one_of(
    st.sampled_from([Var(c) for c in COORDS]),
    st.floats(0.0, 10.0, allow_nan=False, allow_infinity=False).map(Num),
)


def _tree(children):
    return st.one_of(
        st.builds(Neg, children),
        st.builds(BinOp, st.sampled_from("+-*/"), children, children),
        st.builds(Pow, children, st.integers(-3, 4)),
        st.builds(Call, st.sampled_from(["sin", "cos", "exp", "sqrt"]), children),
    )


exprs = st.recursive(leaves, _tree, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(exprs)
def test_emit_parse_round_trip(e):
    assert parse_expr(emit_expr(e), COORDS) == e


def test_precedence_and_associativity():
    assert parse_expr("x - y - z") == BinOp("-", BinOp("-", Var("x"), Var("y")), Var("z"))
    assert parse_expr("x / y * z") == BinOp("*", BinOp("/", Var("x"), Var("y")), Var("z"))
    assert parse_expr("-x^2") == Neg(Pow(Var("x"), 2))
    assert parse_expr("x^-2") == Pow(Var("x"), -2)
    assert emit_expr(BinOp("-", Var("x"), BinOp("-", Var("y"), Var("z")))) == "x - (y - z)"


def test_evaluation_values():
    j = eval_jet(parse_expr("x^-2 + sqrt(y) * exp(z)", COORDS), (2.0, 4.0, 0.0), 2)
    assert j.value == pytest.approx(0.25 + 2.0)
    assert j.coeff((1, 0, 0)) == pytest.approx(-2 / 8)
    assert j.coeff((0, 1, 0)) == pytest.approx(0.25)


@pytest.mark.parametrize(
    "text, fragment, col",
    [
        ("x + foo(y)", "unknown function", 5),
        ("x + w", "undeclared coordinate", 5),
        ("x^1.5", "exponent must be an integer", 3),
        ("x^y", "exponent must be an integer", 3),
        ("x + $", "unexpected character", 5),
        ("(x + y", "expected", None),
        ("sin x", "needs one parenthesised argument", 1),
    ],
)
def test_expression_errors(text, fragment, col):
    with pytest.raises(ChartSyntaxError) as info:
        parse_expr(text, COORDS, line=7)
    assert fragment in str(info.value)
    assert info.value.line == 7
    if col is not None:
        assert info.value.col == col


# ---------------------------------------------------------------------------
# chart files


def test_parse_chart_fields():
    ch = parse_chart(HEIS)
    assert ch.name == "heis" and ch.coords == COORDS and ch.dim == 3 and ch.m == 1
    arr = ch.arrays((0.2, -0.4, 0.1), 1)
    np.testing.assert_allclose(arr["lam"][:, 0], [0.2, 0.1, 1.0])
    assert arr["g"][0, 1, 0] == pytest.approx(arr["g"][1, 0, 0])
    assert arr["phi"][2, 0, 0] == pytest.approx(-0.1)


@pytest.mark.parametrize("name", NAMES)
def test_builtin_round_trip(name):
    ch = builtin(name)
    text = emit_chart(ch)
    again = parse_chart(text)
    assert again == ch
    assert emit_chart(again) == text


def test_upper_triangle_fill_and_strict_mode():
    ch = parse_chart(HEIS)
    assert ch.metric[1][0] == ch.metric[0][1]
    with pytest.raises(ChartSyntaxError) as info:
        parse_chart(HEIS, symmetric_fill=False)
    assert "missing symmetric entry" in str(info.value)
    assert info.value.line == 10


def test_non_symmetric_metric_rejected():
    bad = HEIS.replace("y,z = -x/2\n", "y,z = -x/2\nz,y = x/2\n")
    with pytest.raises(ChartSyntaxError) as info:
        parse_chart(bad)
    assert "non-symmetric metric block" in str(info.value)


def test_explicit_symmetric_entries_accepted_in_strict_mode():
    full = HEIS.replace("z,z = 1\n", "z,z = 1\ny,x = -x*y/4\nz,x = y/2\nz,y = -x/2\n")
    assert parse_chart(full, symmetric_fill=False) == parse_chart(HEIS)


@pytest.mark.parametrize(
    "edit, fragment, line",
    [
        (("x,y = -1\n", "x,y = -1 +\n"), "unexpected token", 16),
        (("[xi]\n", "[chi]\n"), "unknown section", 20),
        (("z = 1\n[metric]", "w = 1\n[metric]"), "undeclared coordinate index", 7),
        (("x,x = 1 + y^2/4\n", "x,x = 1 + w^2/4\n"), "undeclared coordinate", 9),
        (("dim = 3\n", "dim = 5\n"), "dim = 5", 2),
        (("z,z = 1\n", "z,z = 1\nz,z = 2\n"), "duplicate entry", 15),
        (("x,y = -1\n", "x = -1\n"), "index pair", 16),
        (("x,y = -1\n", "x,y -1\n"), "key = value", 16),
    ],
)
def test_chart_errors_report_lines(edit, fragment, line):
    bad = HEIS.replace(*edit, 1)
    with pytest.raises(ChartSyntaxError) as info:
        parse_chart(bad)
    assert fragment in str(info.value)
    assert info.value.line == line


def test_even_dimension_rejected():
    text = "dim = 2\ncoords = x, y\n[lambda]\nx = 1\n[metric]\nx,x = 1\n[phi]\n[xi]\nx = 1\n"
    with pytest.raises(ChartSyntaxError):
        parse_chart(text)


def test_comments_and_blank_lines():
    noisy = "# chart\n\n" + HEIS.replace("[phi]\n", "[phi]   # endomorphism\n")
    assert parse_chart(noisy) == parse_chart(HEIS)
