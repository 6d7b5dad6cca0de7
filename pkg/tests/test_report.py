import json

import pytest

from lbmexpand.expand import chapman_enskog, taylor_expand, taylor_expand_linear
from lbmexpand.jet import field
from lbmexpand.algebra import Scalar
from lbmexpand.report import (
    expansion_from_tree,
    expansion_json,
    expansion_latex,
    expansion_text,
    expansion_to_tree,
    expansions_equal,
    substitute_expansion,
    transport_coefficients,
)
from lbmexpand.scheme import builtin


@pytest.fixture(scope="module")
def d2q9_t2():
    return taylor_expand(builtin("d2q9"), 2)


@pytest.mark.parametrize("engine", ["taylor", "ce", "linear"])
def test_json_roundtrip(engine):
    spec = builtin("d1q3")
    exp = {"taylor": taylor_expand, "ce": chapman_enskog, "linear": taylor_expand_linear}[engine](spec, 3)
    text = expansion_json(exp)
    back = expansion_from_tree(json.loads(text), spec)
    assert expansions_equal(exp, back)
    assert expansion_json(back) == text


def test_json_roundtrip_d2q9(d2q9_t2):
    spec = d2q9_t2.spec
    back = expansion_from_tree(json.loads(expansion_json(d2q9_t2)), spec)
    assert expansions_equal(d2q9_t2, back)
    tree = expansion_to_tree(d2q9_t2)
    assert tree["fields"] == ["rho", "Jx", "Jy"] and tree["order"] == 2


def test_from_tree_rejects_other_json():
    with pytest.raises(ValueError):
        expansion_from_tree({"format": "something-else"})


def test_expansions_equal_detects_difference(d2q9_t2):
    other = taylor_expand(builtin("d2q9", sound_speed2=Scalar.symbol("c2")), 2)
    assert not expansions_equal(d2q9_t2, other)


def test_text_report(d2q9_t2):
    txt = expansion_text(d2q9_t2)
    assert "Gamma_2:" in txt and "[Jx]" in txt
    assert "mu = 1/3*dt*lambda^2*sigma_x*rho" in txt
    assert "zeta = 1/3*dt*lambda^2*sigma_e*rho" in txt


def test_latex_report(d2q9_t2):
    tex = expansion_latex(d2q9_t2)
    assert "\\begin{align*}" in tex and "\\mu &=" in tex and "\\zeta &=" in tex


def test_linear_text_labels():
    txt = expansion_text(taylor_expand_linear(builtin("d1q3"), 2))
    assert "alpha_2 (Gamma_2 = alpha_2 W):" in txt and "beta_1" in txt


def test_substitute(d2q9_t2):
    sub = substitute_expansion(d2q9_t2, {"lambda": Scalar(1)})
    names = set().union(*(e.free_parameters() for e in sub.gammas[1]))
    assert "lambda" not in names
    tc = transport_coefficients(sub)
    assert tc["mu"] == Scalar.symbol("dt") * field(0, 2) * Scalar.symbol("sigma_x") / 3


def test_transport_needs_order_two():
    assert transport_coefficients(taylor_expand(builtin("d1q3"), 1)) == {}
