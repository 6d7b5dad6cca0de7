import json

from hypothesis import given, strategies as st

from lbmexpand.algebra import DiffOp, OperatorMatrix, Scalar
from lbmexpand.jet import as_jet, field
from lbmexpand.render import (
    Naming,
    diffop_from_tree,
    diffop_latex,
    diffop_text,
    diffop_to_tree,
    expr_from_tree,
    expr_to_tree,
    opmatrix_from_tree,
    opmatrix_to_tree,
    to_latex,
    to_text,
)

NAMES = Naming(fields=("rho", "Jx", "Jy"))
rho, jx = field(0, 2), field(1, 2)
lam = Scalar.symbol("lambda")


def test_text_forms():
    assert to_text(as_jet(jx**2 / rho), NAMES) == "Jx^2/rho"
    assert to_text(as_jet(2 * rho * field(0, 2, (1, 0))), NAMES) == "2*rho*rho_x"
    assert to_text(Scalar(0)) == "0"


def test_latex_uses_greek_and_frac():
    out = to_latex(as_jet(lam**2 * jx / rho), NAMES)
    assert "\\lambda" in out and "\\frac" in out and "\\rho" in out


def test_text_is_independent_of_construction_order():
    a = as_jet(field(1, 2, (0, 1)) * rho + jx * lam)
    b = as_jet(lam * jx + rho * field(1, 2, (0, 1)))
    assert to_text(a, NAMES) == to_text(b, NAMES)


exprs = st.builds(
    lambda c1, c2, e, flip: as_jet((c1 * rho ** e * jx + c2 * lam * field(2, 2, (1, 1))) / (rho if flip else 1)),
    st.fractions(-4, 4, max_denominator=5), st.integers(-3, 3), st.integers(0, 3), st.booleans(),
)


@given(exprs)
def test_expr_tree_roundtrip(e):
    tree = json.loads(json.dumps(expr_to_tree(e)))
    assert expr_from_tree(tree) == e


def test_diffop_roundtrip_and_text():
    op = DiffOp(2, {(1, 0): lam, (0, 2): Scalar(3), (0, 0): Scalar(-1)})
    assert diffop_from_tree(json.loads(json.dumps(diffop_to_tree(op)))) == op
    txt = diffop_text(op)
    assert "d_x" in txt or "dx" in txt
    assert diffop_latex(op)


def test_opmatrix_roundtrip():
    P = OperatorMatrix([[DiffOp.partial(2, 0), DiffOp(2, {})], [DiffOp(2, {(0, 0): lam}), DiffOp.partial(2, 1)]], 2)
    assert opmatrix_from_tree(json.loads(json.dumps(opmatrix_to_tree(P)))) == P
