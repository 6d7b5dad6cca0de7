from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lbmexpand.algebra import (
    AlgebraError,
    DiffOp,
    DimensionError,
    OperatorMatrix,
    Scalar,
    SingularMatrixError,
    as_scalar,
    block_join,
    block_split,
    matrix_inverse,
    multi_indices,
)

x, y, z = (Scalar.symbol(n) for n in ("x", "y", "z"))

fracs = st.fractions(min_value=-5, max_value=5, max_denominator=6)


@st.composite
def scalars(draw, allow_zero=True):
    """Small random rational functions of x, y, z."""
    gens = [x, y, z]
    num = Scalar(draw(fracs))
    for _ in range(draw(st.integers(0, 3))):
        num = num + draw(fracs) * draw(st.sampled_from(gens)) ** draw(st.integers(1, 2))
    den = Scalar(1)
    if draw(st.booleans()):
        den = draw(st.sampled_from(gens)) + draw(st.integers(1, 3))
    out = num / den
    if not allow_zero and not out:
        out = out + 1
    return out


@given(scalars(), scalars(), scalars())
def test_field_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == 0
    assert a + 0 == a and a * 1 == a


@given(scalars(allow_zero=False))
def test_inverse(a):
    assert a * a.inverse() == 1
    assert (1 / a) * a == 1


def test_normal_form_is_canonical():
    a = (x**2 - y**2) / (x - y)
    assert a == x + y
    assert hash(a) == hash(x + y)
    assert (2 * x) / (4 * x * y) == Fraction(1, 2) / y


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        x / (y - y)


def test_floats_rejected():
    with pytest.raises(TypeError):
        Scalar(0.5)


def test_evaluate_and_subs():
    e = (x**2 + 1) / (2 * y)
    assert e.evaluate({"x": 3, "y": 5}) == 1
    assert e.subs({"x": Fraction(1, 2)}) == Fraction(5, 4) / (2 * y)
    assert e.free_parameters() == {"x", "y"}
    with pytest.raises(KeyError):
        e.evaluate({"x": 1})


def test_to_fraction():
    assert as_scalar(Fraction(3, 7)).to_fraction() == Fraction(3, 7)
    with pytest.raises(AlgebraError):
        x.to_fraction()


# -- differential operators ----------------------------------------------------


@st.composite
def diffops(draw, d=2):
    terms = {}
    for _ in range(draw(st.integers(0, 3))):
        mu = tuple(draw(st.integers(0, 2)) for _ in range(d))
        terms[mu] = draw(scalars())
    return DiffOp(d, terms)


@given(diffops(), diffops(), diffops())
def test_diffop_ring(a, b, c):
    assert a * b == b * a  # constant coefficients commute
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


def test_diffop_symbol_is_homomorphism():
    rng = np.random.default_rng(3)
    dx, dy = DiffOp.partial(2, 0), DiffOp.partial(2, 1)
    a = dx * x + dy * dy * 3
    b = dx * dx + dy * y - 2
    k = rng.normal(size=2)
    bind = {"x": 0.7, "y": -1.1}
    lhs = (a * b).symbol(k, bind)
    assert abs(lhs - a.symbol(k, bind) * b.symbol(k, bind)) < 1e-12


def test_diffop_symbol_partial():
    dx = DiffOp.partial(2, 0)
    assert dx.symbol((np.pi, 0.0), {}) == pytest.approx(1j * np.pi)


def test_multi_indices():
    assert sorted(multi_indices(2, 2)) == [(0, 2), (1, 1), (2, 0)]
    assert len(list(multi_indices(3, 2))) == 6


# -- operator matrices -------------------------------------------------------------


def _num_matrix(rows, d=1):
    return OperatorMatrix([[Scalar(Fraction(v)) for v in r] for r in rows], d)


def test_matrix_inverse_exact():
    lam = Scalar.symbol("lambda")
    M = OperatorMatrix([[Scalar(1), Scalar(1), Scalar(1)], [Scalar(0), lam, -lam],
                        [-2 * lam**2, lam**2, lam**2]], 1)
    Minv = matrix_inverse(M)
    assert M @ Minv == OperatorMatrix.identity(3, 1)
    assert Minv @ M == OperatorMatrix.identity(3, 1)


@given(st.lists(st.lists(st.integers(-3, 3), min_size=3, max_size=3), min_size=3, max_size=3))
def test_matrix_inverse_random(rows):
    M = _num_matrix(rows)
    det = round(np.linalg.det(np.array(rows, dtype=float)))
    if det == 0:
        with pytest.raises(SingularMatrixError):
            matrix_inverse(M)
    else:
        assert M @ matrix_inverse(M) == OperatorMatrix.identity(3, 1)


def test_matrix_inverse_rejects_operators():
    P = OperatorMatrix([[DiffOp.partial(1, 0)]], 1)
    with pytest.raises(AlgebraError):
        matrix_inverse(P)


def test_shape_mismatch():
    a = _num_matrix([[1, 2]])
    with pytest.raises(DimensionError):
        a @ a


def test_block_split_join_roundtrip():
    rng = np.random.default_rng(0)
    P = _num_matrix(rng.integers(-3, 4, size=(5, 5)).tolist())
    A, B, C, D = block_split(P, 2)
    assert A.shape == (2, 2) and B.shape == (2, 3) and C.shape == (3, 2) and D.shape == (3, 3)
    assert block_join(A, B, C, D) == P
