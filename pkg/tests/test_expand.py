import random
from dataclasses import replace

import pytest

from lbmexpand.algebra import Scalar
from lbmexpand.checks import random_linear_scheme, third_order_difference
from lbmexpand.expand import (
    ExpansionError,
    ce_to_taylor,
    chapman_enskog,
    conservation_defect,
    mass_third_order,
    second_order_form,
    taylor_expand,
    taylor_expand_linear,
    third_order_form,
)
from lbmexpand.jet import as_jet, differential_orders, field
from lbmexpand.report import transport_coefficients
from lbmexpand.scheme import builtin

lam, V, alpha, sJ = (Scalar.symbol(n) for n in ("lambda", "V", "alpha", "sigma_J"))


@pytest.fixture(scope="module")
def d1q3():
    return builtin("d1q3")


@pytest.fixture(scope="module")
def d1q3_taylor(d1q3):
    return taylor_expand(d1q3, 4)


def test_d1q3_first_order(d1q3_taylor):
    assert d1q3_taylor.gammas[0] == [V * field(0, 1, (1,))]


def test_d1q3_diffusion(d1q3_taylor):
    kappa = transport_coefficients(d1q3_taylor)["kappa"]
    dt = Scalar.symbol("dt")
    assert kappa == dt * sJ * ((2 + alpha) * lam**2 / 3 - V**2)


def test_homogeneous_orders(d1q3_taylor):
    for j, g in enumerate(d1q3_taylor.gammas, start=1):
        assert all(differential_orders(e) <= {j} for e in g)


def test_linear_engine_matches_nonlinear(d1q3, d1q3_taylor):
    lin = taylor_expand_linear(d1q3, 4)
    assert lin.gamma_vectors() == d1q3_taylor.gammas
    assert lin.psi_vectors() == d1q3_taylor.psis[:3]


def test_order_bounds(d1q3):
    for bad in (0, 5, 2.0):
        with pytest.raises(ExpansionError):
            taylor_expand(d1q3, bad)


def test_linear_engine_needs_linear_scheme():
    with pytest.raises(ExpansionError):
        taylor_expand_linear(builtin("d2q9"), 2)


def test_defect_and_second_order_form(d1q3, d1q3_taylor):
    assert conservation_defect(d1q3) == [-p for p in d1q3_taylor.psis[0]]
    assert second_order_form(d1q3) == d1q3_taylor.gammas[1]


def test_third_order_form(d1q3, d1q3_taylor):
    assert third_order_form(d1q3) == d1q3_taylor.gammas[2]


def test_ce_and_taylor(d1q3, d1q3_taylor):
    ce = chapman_enskog(d1q3, 3)
    assert ce_to_taylor(d1q3, ce.gammas[1]) == d1q3_taylor.gammas[1]
    assert ce_to_taylor(d1q3, ce.psis[1]) == d1q3_taylor.psis[1]
    lhs, rhs = third_order_difference(d1q3, d1q3_taylor, ce)
    assert lhs == rhs
    assert any(x for x in lhs)  # the two engines really differ at third order


def test_ce_uses_relaxation_times(d1q3):
    ce = chapman_enskog(d1q3, 2)
    names = set().union(*(e.free_parameters() for e in ce.gammas[1]))
    assert "tau_J" in names and "sigma_J" not in names


def test_random_linear_schemes_agree():
    rng = random.Random(7)
    for _ in range(4):
        spec = random_linear_scheme(rng)
        tay = taylor_expand(spec, 3)
        lin = taylor_expand_linear(spec, 3)
        assert lin.gamma_vectors() == tay.gammas
        ce = chapman_enskog(spec, 3)
        assert ce_to_taylor(spec, ce.gammas[1]) == tay.gammas[1]
        assert second_order_form(spec) == tay.gammas[1]
        assert conservation_defect(spec) == [-p for p in tay.psis[0]]


@pytest.fixture(scope="module")
def d2q9_t2():
    return taylor_expand(builtin("d2q9"), 2)


def test_d2q9_mass_equation(d2q9_t2):
    G1, G2 = d2q9_t2.gammas
    assert G1[0] == field(1, 2, (1, 0)) + field(2, 2, (0, 1))
    assert G2[0] == 0


def test_d2q9_viscosities(d2q9_t2):
    tc = transport_coefficients(d2q9_t2)
    rho, dt = field(0, 2), Scalar.symbol("dt")
    assert tc["mu"] == dt * lam**2 * rho * Scalar.symbol("sigma_x") / 3
    assert tc["zeta"] == dt * lam**2 * rho * Scalar.symbol("sigma_e") / 3


def test_d2q9_phi_h_irrelevant(d2q9_t2):
    from lbmexpand.scheme import Nonlinear, d2q9_equilibrium

    base = builtin("d2q9")
    alt = replace(base, equilibrium=Nonlinear(d2q9_equilibrium(phi_h=Scalar.symbol("h0") * field(0, 2))))
    assert taylor_expand(alt, 2).gammas[1] == d2q9_t2.gammas[1]


def test_mass_third_order_is_a_pure_derivative():
    out = mass_third_order(builtin("d2q9"))
    assert all(o == 3 for o in differential_orders(out))


def test_sound_speed_enters_first_order():
    c2 = Scalar.symbol("c2")
    t = taylor_expand(builtin("d2q9", sound_speed2=c2), 1)
    rho, jx = field(0, 2), field(1, 2)
    # momentum flux: d_x (Jx^2/rho + c2 rho) + d_y (Jx Jy/rho)
    from lbmexpand.jet import total_derivative

    expected = total_derivative(jx**2 / rho + c2 * rho, 0) + total_derivative(jx * field(2, 2) / rho, 1)
    assert t.gammas[0][1] == as_jet(expected)


def test_deterministic():
    from lbmexpand.report import expansion_json

    a = expansion_json(taylor_expand(builtin("d1q3"), 3))
    b = expansion_json(taylor_expand(builtin("d1q3"), 3))
    assert a == b
