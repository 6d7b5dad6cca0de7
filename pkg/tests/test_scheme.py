from dataclasses import replace
from fractions import Fraction

import pytest

from lbmexpand.algebra import OperatorMatrix, Scalar
from lbmexpand.checks import lambda_d2q9_table
from lbmexpand.jet import field
from lbmexpand.scheme import (
    Linear,
    SchemeError,
    build_lambda,
    builtin,
    compile_scheme,
    linearize,
    rate_of_sigma,
    tau_symbols,
    validate,
)
from lbmexpand.scheme import sigma_of


def test_builtin_names_and_aliases():
    assert builtin("D2Q9").name == "d2q9-isothermal"
    assert builtin("d1q3").q == 3
    with pytest.raises(SchemeError):
        builtin("d3q27")


def test_builtins_validate_clean():
    for name in ("d1q3", "d2q9-isothermal"):
        assert [x for x in validate(builtin(name)) if x.level == "error"] == []


def test_lambda_d2q9_matches_table():
    assert build_lambda(builtin("d2q9")) == lambda_d2q9_table()


def test_lambda_d1q3():
    lam = Scalar.symbol("lambda")
    L = build_lambda(builtin("d1q3"))
    # rho row: d_x J ; J row: (2/3) lambda^2 d_x rho + (1/3) d_x e
    assert L.entries[0][1].terms == {(1,): Scalar(1)}
    assert L.entries[1][0].terms == {(1,): 2 * lam**2 / 3}
    assert L.entries[1][2].terms == {(1,): Scalar(Fraction(1, 3))}


def test_block_powers():
    comp = compile_scheme(builtin("d1q3"))
    A2, B2, C2, D2 = comp.blocks(2)
    L2 = comp.Lambda @ comp.Lambda
    assert L2.entries[0][1:] == B2.entries[0]
    assert L2.entries[0][0] == A2.entries[0][0]


def test_sigma_rate_inverse():
    for s in (Fraction(1, 3), Fraction(3, 2), Fraction(1)):
        assert rate_of_sigma(sigma_of(s)) == s
    with pytest.raises(SchemeError):
        sigma_of(0)


def test_validate_catches_errors():
    d1 = builtin("d1q3")
    sing = replace(d1, M=(d1.M[0], d1.M[0], d1.M[2]))
    assert any("singular" in x.message for x in validate(sing))
    bad_s = d1.with_relaxation([Scalar(3), Scalar(1)])
    assert any("stability" in x.message for x in validate(bad_s))
    zero_s = d1.with_relaxation([Scalar(0), Scalar(1)])
    assert any("Sigma undefined" in x.message for x in validate(zero_s))
    short = replace(d1, s=(Scalar(1),))
    assert any("relaxation rates" in x.message for x in validate(short))
    with pytest.raises(SchemeError):
        compile_scheme(sing)


def test_validate_s_equal_two_warns():
    d1 = builtin("d1q3").with_relaxation([Scalar(2), Scalar(1)])
    diags = validate(d1)
    assert [x.level for x in diags] == ["warning"]


def test_validate_rejects_derivative_equilibrium():
    d1 = builtin("d1q3")
    bad = replace(d1, equilibrium=Linear(((field(0, 1, (1,)),), (Scalar(1),))))
    assert any(x.level == "error" for x in validate(bad))


def test_linearize_d2q9():
    lin = linearize(builtin("d2q9"), [Fraction(1), 0, 0])
    assert lin.is_linear
    lam = Scalar.symbol("lambda")
    E = lin.equilibrium.E
    # Phi_e = 6 p - 4 lambda^2 rho + O(u^2) with p = lambda^2 rho / 3
    assert E[0] == (-2 * lam**2, Scalar(0), Scalar(0))
    assert E[3] == (Scalar(0), -lam**2, Scalar(0))
    assert all(c == 0 for c in E[1] + E[2] + E[5])


def test_sound_speed_option():
    c2 = Scalar.symbol("c2")
    sp = builtin("d2q9", sound_speed2=c2)
    assert "c2" in sp.free_parameters()


def test_tau_symbols_named_by_moment():
    assert [str(t) for t in tau_symbols(builtin("d1q3"))] == ["tau_J", "tau_e"]


def test_sigma_matrix():
    comp = compile_scheme(builtin("d1q3"))
    S = comp.Sigma()
    assert isinstance(S, OperatorMatrix) and S.shape == (2, 2)


def test_sigma_is_inverse_rate_minus_half():
    s1, s2 = Scalar.symbol("s1"), Scalar.symbol("s2")
    spec = builtin("d1q3").with_relaxation([s1, s2])
    comp = compile_scheme(spec)
    assert comp.sigma == [1 / s1 - Fraction(1, 2), 1 / s2 - Fraction(1, 2)]
