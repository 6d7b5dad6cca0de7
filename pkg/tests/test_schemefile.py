from fractions import Fraction
from pathlib import Path

import pytest

from lbmexpand.algebra import Scalar
from lbmexpand.scheme import build_lambda, builtin
from lbmexpand.schemefile import SchemeFileError, dump_scheme, load_scheme, parse_expression, parse_scheme

SCHEMES = Path(__file__).resolve().parent.parent / "schemes"
D1Q3 = (SCHEMES / "d1q3.scheme").read_text()


def _error(text):
    with pytest.raises(SchemeFileError) as info:
        parse_scheme(text, "t.scheme")
    return info.value


def _line_of(text, needle):
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i, line.index(needle) + 1
    raise AssertionError(needle)


def test_shipped_files_match_builtins():
    for fname, name in (("d1q3.scheme", "d1q3"), ("d2q9.scheme", "d2q9")):
        a, b = load_scheme(SCHEMES / fname), builtin(name)
        assert build_lambda(a) == build_lambda(b)
        assert a.s == b.s
        assert all(x == y for x, y in zip(a.phi(), b.phi()))
        assert a.field_names == b.field_names


@pytest.mark.parametrize("name", ["d1q3", "d2q9"])
def test_dump_roundtrip(name):
    spec = builtin(name)
    again = parse_scheme(dump_scheme(spec))
    assert again.M == spec.M and again.s == spec.s and again.stencil == spec.stencil
    assert all(x == y for x, y in zip(again.phi(), spec.phi()))
    assert dump_scheme(again) == dump_scheme(spec)


def test_expression_grammar():
    lam = Scalar.symbol("lambda")
    assert parse_expression("lambda^2/3 + 1/2") == lam**2 / 3 + Fraction(1, 2)
    assert parse_expression("lambda**2 * 0.25") == lam**2 / 4
    assert parse_expression("-(a - b)^-1") == -1 / (Scalar.symbol("a") - Scalar.symbol("b"))


def test_expression_errors():
    with pytest.raises(SchemeFileError):
        parse_expression("x^y")
    with pytest.raises(SchemeFileError):
        parse_expression("1/0")
    with pytest.raises(SchemeFileError):
        parse_expression("f(x)")


def test_dangling_operator_points_at_end():
    text = D1Q3.replace("J = V*rho", "J = V*rho +")
    err = _error(text)
    line, col = _line_of(text, "V*rho +")
    assert (err.line, err.col) == (line, col + len("V*rho +"))


def test_syntax_error_column():
    text = D1Q3.replace("J = V*rho", "J = V rho")
    err = _error(text)
    line, col = _line_of(text, "V rho")
    assert err.line == line and err.col == col + 2
    assert str(err).startswith(f"t.scheme:{line}:{col + 2}:")


def test_unknown_section():
    text = D1Q3.replace("[bindings]", "[extras]")
    err = _error(text)
    assert err.line == _line_of(text, "[extras]")[0] and "unknown section" in err.message


def test_field_name_in_moment_matrix():
    text = D1Q3.replace("row = 0, lambda, -lambda", "row = 0, rho, -lambda")
    err = _error(text)
    assert (err.line, err.col) == _line_of(text, "rho, -lambda")


def test_nonlinear_in_linear_equilibrium():
    text = D1Q3.replace("J = V*rho", "J = V*rho^2")
    err = _error(text)
    assert err.line == _line_of(text, "V*rho^2")[0]


def test_missing_key_value():
    text = D1Q3.replace("J = sigma", "J sigma")
    err = _error(text)
    assert err.line == _line_of(text, "J sigma")[0] and err.col == 1


def test_bad_stencil():
    text = D1Q3.replace("(0) (1) (-1)", "(0) (1) (-1")
    assert _error(text).line == _line_of(text, "stencil")[0]


def test_rate_out_of_range_located():
    text = D1Q3.replace("J = sigma: sigma_J", "J = s: 3")
    err = _error(text)
    line, col = _line_of(text, "J = s: 3")
    assert (err.line, err.col) == (line, col + len("J = s: "))


def test_singular_matrix_points_at_moments():
    text = D1Q3.replace("row = 0, lambda, -lambda", "row = 1, 1, 1")
    err = _error(text)
    assert "singular" in err.message and err.line == _line_of(text, "[moments]")[0]


def test_missing_equilibrium():
    text = D1Q3.replace("e = alpha*lambda^2*rho\n", "")
    assert "no equilibrium" in _error(text).message


def test_linear_rows_form():
    text = D1Q3.replace("J = V*rho\ne = alpha*lambda^2*rho", "row = V\nrow = alpha*lambda^2")
    assert parse_scheme(text).equilibrium == builtin("d1q3").equilibrium


def test_load_missing_file(tmp_path):
    with pytest.raises(SchemeFileError):
        load_scheme(tmp_path / "nope.scheme")
