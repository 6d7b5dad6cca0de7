"""Reference identities for the D2Q9 and D1Q3 schemes, and a random scheme generator.

The functions here transcribe known closed forms by hand (the D2Q9 operator
table, the heat-flux equilibria, the Navier-Stokes viscous stress and its
cubic residuals) and compare them with what the engines derive.
``validation_suite`` runs the whole checklist; the CLI command
``validate-paper`` prints it.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from fractions import Fraction

from .algebra import DiffOp, OperatorMatrix, Scalar, SingularMatrixError, matrix_inverse
from .jet import apply_operator, as_jet, field, frechet, total_derivative, vec_scale, vec_sub
from .scheme import Linear, SchemeSpec, builtin, compile_scheme

__all__ = [
    "Check",
    "lambda_d2q9_table",
    "heat_flux_equilibria",
    "viscous_stress_divergence",
    "cubic_residuals",
    "random_linear_scheme",
    "random_linear_schemes",
    "validation_suite",
    "third_order_difference",
    "d2q9_viscosities",
]


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"[{tag}] {self.name}{extra}  [{self.seconds:.2f}s]"


# ---------------------------------------------------------------------------
# hand transcriptions


def lambda_d2q9_table() -> OperatorMatrix:
    """Operator matrix Lambda for D2Q9 with the Lallemand-Luo moments, typed in by hand."""
    lam = Scalar.symbol("lambda")
    l2 = lam**2
    F = Fraction

    def dx(c=1):
        return DiffOp(2, {(1, 0): c})

    def dy(c=1):
        return DiffOp(2, {(0, 1): c})

    z = DiffOp(2, {})
    rows = [
        [z, dx(), dy(), z, z, z, z, z, z],
        [dx(2 * l2 / 3), z, z, dx(F(1, 6)), dx(F(1, 2)), dy(), z, z, z],
        [dy(2 * l2 / 3), z, z, dy(F(1, 6)), dy(F(-1, 2)), dx(), z, z, z],
        [z, dx(l2), dy(l2), z, z, z, dx(), dy(), z],
        [z, dx(l2 / 3), dy(-l2 / 3), z, z, z, dx(F(-1, 3)), dy(F(1, 3)), z],
        [z, dy(2 * l2 / 3), dx(2 * l2 / 3), z, z, z, dy(F(1, 3)), dx(F(1, 3)), z],
        [z, z, z, dx(l2 / 3), dx(-l2), dy(l2), z, z, dx(F(1, 3))],
        [z, z, z, dy(l2 / 3), dy(l2), dx(l2), z, z, dy(F(1, 3))],
        [z, z, z, z, z, z, dx(l2), dy(l2), z],
    ]
    return OperatorMatrix(rows, 2)


def _uv():
    rho, jx, jy = field(0, 2), field(1, 2), field(2, 2)
    return rho, jx / rho, jy / rho


def heat_flux_equilibria():
    """(Phi_qx, Phi_qy) = -rho lambda^2 u + 3 rho |u|^2 u (and likewise in y)."""
    lam = Scalar.symbol("lambda")
    rho, u, v = _uv()
    return (
        as_jet(-rho * lam**2 * u + 3 * rho * (u**2 + v**2) * u),
        as_jet(-rho * lam**2 * v + 3 * rho * (u**2 + v**2) * v),
    )


def _dx(e):
    return total_derivative(e, 0)


def _dy(e):
    return total_derivative(e, 1)


def viscous_stress_divergence(mu, zeta):
    """(d_j tau_xj, d_j tau_yj) of the compressible Navier-Stokes stress."""
    rho, u, v = _uv()
    div = _dx(u) + _dy(v)
    tx = _dx(2 * mu * _dx(u) + (zeta - mu) * div) + _dy(mu * (_dx(v) + _dy(u)))
    ty = _dx(mu * (_dx(v) + _dy(u))) + _dy((zeta - mu) * div + 2 * mu * _dy(v))
    return as_jet(tx), as_jet(ty)


def cubic_residuals():
    """Cubic momentum residuals divided by dt (one factor sigma_x each)."""
    sx = Scalar.symbol("sigma_x")
    rho, u, v = _uv()
    rx, ry = _dx(rho), _dy(rho)
    px = _dx(u**3 * rx - v**3 * ry + 3 * rho * (u**2 * _dx(u) - v**2 * _dy(v))) + _dy(
        -(v**3) * rx - u**3 * ry - 3 * rho * (u**2 * _dy(u) + v**2 * _dx(v))
    )
    py = _dx(-(v**3) * rx - u**3 * ry - 3 * rho * (u**2 * _dy(u) + v**2 * _dx(v))) + _dy(
        -(u**3) * rx + v**3 * ry + 3 * rho * (-(u**2) * _dx(u) + v**2 * _dy(v))
    )
    return as_jet(sx * px), as_jet(sx * py)


def d2q9_viscosities():
    """mu/dt and zeta/dt: lambda^2 rho sigma / 3 (with dx = lambda dt)."""
    lam = Scalar.symbol("lambda")
    rho = field(0, 2)
    return lam**2 * rho * Scalar.symbol("sigma_x") / 3, lam**2 * rho * Scalar.symbol("sigma_e") / 3


# ---------------------------------------------------------------------------
# random linear schemes


def _rand_frac(rng, lo, hi, den=(1, 2, 3, 4)):
    d = rng.choice(den)
    return Fraction(rng.randint(lo * d, hi * d), d)


def random_linear_scheme(rng: random.Random, d: int | None = None, q: int | None = None) -> SchemeSpec:
    """Random linear scheme: d <= 2, q <= 9, rational invertible M, random E, s in (0, 2).

    The stencil is a random set of distinct integer velocities with entries
    in -1..1 (d = 2) or -2..2 (d = 1).
    """
    d = d or rng.choice((1, 2))
    pool = [(a,) for a in range(-2, 3)] if d == 1 else [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1)]
    q = q or rng.randint(2, len(pool))
    stencil = tuple(rng.sample(pool, q))
    N = rng.randint(1, min(3, q - 1))
    while True:
        rows = [[Fraction(rng.randint(-3, 3)) for _ in range(q)] for _ in range(q)]
        rows[0] = [Fraction(1)] * q  # keep a mass-like first row
        M = OperatorMatrix([[Scalar(x) for x in r] for r in rows], d)
        try:
            matrix_inverse(M)
        except SingularMatrixError:
            continue
        break
    E = tuple(tuple(Scalar(_rand_frac(rng, -2, 2)) for _ in range(N)) for _ in range(q - N))
    s = []
    for _ in range(q - N):
        x = Fraction(rng.randint(1, 19), 10)  # in (0, 2)
        s.append(Scalar(x))
    return SchemeSpec(
        name=f"random-d{d}q{q}n{N}",
        d=d,
        stencil=stencil,
        M=tuple(tuple(Scalar(x) for x in r) for r in rows),
        N=N,
        s=tuple(s),
        equilibrium=Linear(E),
        moment_names=tuple(f"m{i}" for i in range(q)),
        defaults={"lambda": 1.0},
    )


def random_linear_schemes(count: int = 50, seed: int = 20240601):
    rng = random.Random(seed)
    return [random_linear_scheme(rng) for _ in range(count)]


# ---------------------------------------------------------------------------
# checklist


def _timed(name, fn):
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failed check, reported with its message
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return Check(name, bool(ok), detail, time.perf_counter() - t0)


def third_order_difference(spec, tay, ce):
    """taylor Gamma_3 - ce Gamma_3 (tau -> sigma) and (1/12) B_2 Psi_1 - (1/6) B dPsi_1.Gamma_1."""
    from .expand import ce_to_taylor

    comp = compile_scheme(spec)
    B = comp.B
    B2 = comp.blocks(2)[1]
    G1, P1 = tay.gamma_vectors()[0], tay.psi_vectors()[0]
    lhs = vec_sub(tay.gamma_vectors()[2], ce_to_taylor(spec, ce.gammas[2]))
    rhs = vec_sub(
        vec_scale(Fraction(1, 12), apply_operator(B2, P1)),
        vec_scale(Fraction(1, 6), apply_operator(B, frechet(P1, G1))),
    )
    return lhs, rhs


def validation_suite(include_numeric: bool = True) -> list[Check]:
    """Run every identity check; returns the list of Check results."""
    from .expand import (
        ce_to_taylor,
        chapman_enskog,
        conservation_defect,
        mass_third_order,
        second_order_form,
        taylor_expand,
        taylor_expand_linear,
        third_order_form,
    )
    from .jet import differential_orders

    d2q9 = builtin("d2q9-isothermal")
    d1q3 = builtin("d1q3")
    cache = {}

    def tay(spec, order):
        key = ("t", spec.name, order)
        if key not in cache:
            cache[key] = taylor_expand(spec, order)
        return cache[key]

    out = []

    def lam_table():
        L = compile_scheme(d2q9).Lambda
        ref = lambda_d2q9_table()
        bad = [(i, j) for i in range(9) for j in range(9) if L.entries[i][j] != ref.entries[i][j]]
        return not bad, "9x9 exact" if not bad else f"entries differ: {bad[:5]}"

    out.append(_timed("D2Q9 operator matrix Lambda matches the hand-typed table", lam_table))

    def blocks():
        comp = compile_scheme(d2q9)
        A, B, C, D = comp.blocks(1)
        A2, B2, C2, D2 = comp.blocks(2)
        return (B2 == A @ B + B @ D and A2 == A @ A + B @ C and C2 == C @ A + D @ C and D2 == C @ B + D @ D), \
            "Lambda^2 blocks"

    out.append(_timed("block identities A2 = AA + BC, B2 = AB + BD, ...", blocks))

    def equilibria():
        qx, qy = heat_flux_equilibria()
        phi = d2q9.phi()
        return phi[3] == qx and phi[4] == qy, "Phi_qx, Phi_qy"

    out.append(_timed("D2Q9 heat-flux equilibria", equilibria))

    def mass_line():
        g = tay(d2q9, 2).gammas[0][0]
        ref = as_jet(field(1, 2, (1, 0)) + field(2, 2, (0, 1)))
        return g == ref, "Gamma_1[rho] = Jx_x + Jy_y"

    out.append(_timed("D2Q9 first-order mass flux", mass_line))

    def viscous():
        G2 = tay(d2q9, 2).gammas[1]
        mu, zeta = d2q9_viscosities()
        tx, ty = viscous_stress_divergence(mu, zeta)
        px, py = cubic_residuals()
        # stress divergence minus (-dt Gamma_2), per unit dt
        diff_ok = (tx + G2[1]) == px and (ty + G2[2]) == py
        literal = (-G2[1]) == tx + px and (-G2[2]) == ty + py
        return diff_ok and G2[0] == 0, (
            "div(tau) - (-dt Gamma_2) = residuals exactly; "
            f"form -dt Gamma_2 = div(tau) + residuals holds: {literal}"
        )

    out.append(_timed("D2Q9 second order: viscous stress and cubic residuals", viscous))

    def phi_h():
        from .scheme import Nonlinear, d2q9_equilibrium
        from dataclasses import replace

        h = Scalar.symbol("phi_h0") * field(0, 2) + Scalar.symbol("phi_h1") * field(1, 2) ** 2 / field(0, 2)
        alt = replace(d2q9, equilibrium=Nonlinear(d2q9_equilibrium(phi_h=h)))
        return taylor_expand(alt, 2).gammas[1] == tay(d2q9, 2).gammas[1], "Gamma_2 independent of Phi_h"

    out.append(_timed("D2Q9 Phi_h has no effect at second order", phi_h))

    def defect():
        ok = True
        for sp in (d2q9, d1q3):
            th = conservation_defect(sp)
            ok &= all(a == -b for a, b in zip(th, tay(sp, 2).psis[0]))
        return ok, "theta = -Psi_1 on D2Q9 and D1Q3"

    out.append(_timed("conservation defect identity", defect))

    def second_form():
        ok = all(a == b for a, b in zip(second_order_form(d2q9), tay(d2q9, 2).gammas[1]))
        ok &= all(a == b for a, b in zip(second_order_form(d1q3), tay(d1q3, 2).gammas[1]))
        return ok, "D2Q9 and D1Q3"

    out.append(_timed("second-order defect form equals Gamma_2", second_form))

    def ce_vs_taylor():
        ok = True
        for sp in (d2q9, d1q3):
            ce = chapman_enskog(sp, 2)
            t = tay(sp, 2)
            for a, b in ((ce.gammas[0], t.gammas[0]), (ce.psis[0], t.psis[0]), (ce.gammas[1], t.gammas[1]),
                         (ce.psis[1], t.psis[1])):
                ok &= all(x == y for x, y in zip(ce_to_taylor(sp, a), b))
        return ok, "Gamma_1, Psi_1, Gamma_2, Psi_2 with tau -> sigma"

    out.append(_timed("Chapman-Enskog and Taylor agree to second order", ce_vs_taylor))

    def third_delta():
        ce = chapman_enskog(d1q3, 3)
        lhs, rhs = third_order_difference(d1q3, tay(d1q3, 3), ce)
        return all(a == b for a, b in zip(lhs, rhs)), "D1Q3"

    out.append(_timed("third-order Taylor/Chapman-Enskog difference", third_delta))

    def third_forms():
        t3 = tay(d1q3, 3)
        ok1 = all(a == b for a, b in zip(third_order_form(d1q3), t3.gammas[2]))
        ok2 = mass_third_order(d2q9) == tay(d2q9, 3).gammas[2][0]
        return ok1 and ok2, f"D1Q3 scalar form {ok1}, D2Q9 mass line {ok2}"

    out.append(_timed("third-order defect forms", third_forms))

    def linear_consistency():
        t = tay(d1q3, 4)
        lin = taylor_expand_linear(d1q3, 4)
        g = all(a == b for a, b in zip(t.gammas, lin.gamma_vectors()))
        p = all(a == b for a, b in zip(t.psis, lin.psi_vectors()))
        return g and p, "D1Q3, Gamma_1..4 and Psi_1..3"

    out.append(_timed("nonlinear and linear engines agree on D1Q3", linear_consistency))

    def homogeneity():
        t = tay(d2q9, 3)
        ok = True
        for j, g in enumerate(t.gammas, start=1):
            for e in g:
                o = differential_orders(e)
                ok &= o <= {j}
        return ok, "every monomial of Gamma_j has derivative order j"

    out.append(_timed("homogeneity of D2Q9 Gamma_1..3", homogeneity))

    def random_set():
        ok = True
        for sp in random_linear_schemes(5, seed=7):
            t = taylor_expand(sp, 3)
            lin = taylor_expand_linear(sp, 3)
            ok &= all(a == b for a, b in zip(t.gammas, lin.gamma_vectors()))
            ok &= all(a == b for a, b in zip(second_order_form(sp), t.gammas[1]))
            ok &= all(a == -b for a, b in zip(conservation_defect(sp), t.psis[0]))
        return ok, "5 random linear schemes, order 3"

    out.append(_timed("random linear schemes: engines and defect forms", random_set))

    if include_numeric:
        def symbol_check():
            from .fourier import order_check

            lin = taylor_expand_linear(d1q3, 4)
            oc = order_check(d1q3, lin, (2.5,))
            return oc.slope >= 3.7, f"D1Q3 slope {oc.slope:.2f}"

        out.append(_timed("Fourier symbol check, fourth order", symbol_check))

    return out
