"""Equivalent-equation engines.

Three engines produce the terms of

    d_t W + Gamma_1 + dt Gamma_2 + dt^2 Gamma_3 + dt^3 Gamma_4 = O(dt^4)

for a compiled scheme:

* ``chapman_enskog``: continuous-time recurrence with Z^-1 = diag(tau),
* ``taylor_expand``: discrete-time nonlinear recurrence with the Henon
  matrix Sigma and the Taylor correction terms,
* ``taylor_expand_linear``: the same recurrence for ``Phi(W) = E W`` written
  on operator matrices (alpha_j, beta_j) so that Gamma_j = alpha_j W.

``conservation_defect``, ``second_order_form`` and ``third_order_form``
rebuild the low-order terms from the coefficient matrices of Lambda and the
defect of conservation, as independent cross-checks.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from .algebra import OperatorMatrix, Scalar, as_scalar
from .jet import (
    apply_operator,
    as_jet,
    derivative,
    fields,
    frechet,
    vec_add,
    vec_scale,
    vec_sub,
)
from .scheme import (
    SchemeSpec,
    compile_scheme,
    lambda_coefficients,
    tau_symbols,
)

__all__ = [
    "Expansion",
    "ExpansionError",
    "chapman_enskog",
    "taylor_expand",
    "taylor_expand_linear",
    "conservation_defect",
    "second_order_form",
    "third_order_form",
    "mass_third_order",
    "ce_to_taylor",
    "MAX_EXPANSION_ORDER",
]

MAX_EXPANSION_ORDER = 4

ENGINES = ("chapman-enskog", "taylor-nonlinear", "taylor-linear")


class ExpansionError(ValueError):
    pass


@dataclass
class Expansion:
    """Output of one engine run.

    ``gammas[j-1]`` is Gamma_j and ``psis[j-1]`` is Psi_j.  For the linear
    engine these are operator matrices (alpha_j, beta_j); otherwise vectors of
    jet expressions.
    """

    engine: str
    order: int
    gammas: list
    psis: list
    spec: SchemeSpec | None = None
    notes: list[str] = dc_field(default_factory=list)
    timings: dict = dc_field(default_factory=dict)

    @property
    def is_operator(self) -> bool:
        return self.engine == "taylor-linear"

    def gamma_vectors(self):
        """Gamma_j as jet vectors (alpha_j W for the linear engine)."""
        if not self.is_operator:
            return self.gammas
        W = fields(self.spec.N, self.spec.d)
        return [apply_operator(a, W) for a in self.gammas]

    def psi_vectors(self):
        if not self.is_operator:
            return self.psis
        W = fields(self.spec.N, self.spec.d)
        return [apply_operator(b, W) for b in self.psis]


def _check_order(order):
    if not isinstance(order, int) or not 1 <= order <= MAX_EXPANSION_ORDER:
        raise ExpansionError(f"order must be an integer in 1..{MAX_EXPANSION_ORDER}, got {order!r}")


def _diag(values, v):
    return [c * x for c, x in zip(values, v)]


def _lin(*pairs):
    """Sum of c * vector over (c, vector) pairs."""
    out = None
    for c, v in pairs:
        term = v if c == 1 else vec_scale(c, v)
        out = term if out is None else vec_add(out, term)
    return out


def _first_order(comp, W, Phi):
    A, B, C, D = comp.blocks(1)
    G1 = vec_add(apply_operator(A, W), apply_operator(B, Phi))
    g1 = frechet(Phi, G1)
    P1 = vec_sub(g1, vec_add(apply_operator(C, W), apply_operator(D, Phi)))
    return G1, g1, P1


# ---------------------------------------------------------------------------
# Chapman-Enskog


def chapman_enskog(spec: SchemeSpec, order: int = 2, tau=None) -> Expansion:
    """Continuous-time expansion with Z^-1 = diag(tau).

    ``tau`` defaults to one symbol ``tau_<moment>`` per nonconserved moment.
    """
    _check_order(order)
    comp = compile_scheme(spec)
    A, B, C, D = comp.blocks(1)
    T = tau_symbols(spec) if tau is None else [as_scalar(t) for t in tau]
    W = fields(spec.N, spec.d)
    Phi = spec.phi()
    t0 = time.perf_counter()
    G1, g1, P1 = _first_order(comp, W, Phi)
    gammas, psis = [G1], [P1]
    if order >= 2:
        TP1 = _diag(T, P1)
        G2 = apply_operator(B, TP1)
        gammas.append(G2)
        dP1G1 = frechet(P1, G1)
        P2 = _lin((1, _diag(T, dP1G1)), (1, frechet(Phi, G2)), (-1, apply_operator(D, TP1)))
        psis.append(P2)
    if order >= 3:
        TP2 = _diag(T, P2)
        G3 = apply_operator(B, TP2)
        gammas.append(G3)
    if order >= 4:
        P3 = _lin(
            (1, _diag(T, frechet(P1, G2))),
            (1, frechet(Phi, G3)),
            (-1, apply_operator(D, TP2)),
            (1, _diag(T, frechet(P2, G1))),
        )
        psis.append(P3)
        gammas.append(apply_operator(B, _diag(T, P3)))
    exp = Expansion("chapman-enskog", order, gammas, psis, spec)
    exp.timings["total"] = time.perf_counter() - t0
    exp.notes.append(
        "nonconserved moments expand as Y = Phi + eps Z^-1 Psi_1 + eps^2 Z^-1 Psi_2"
        " + eps^3 Z^-1 Psi_3 (the third coefficient is Psi_3)"
    )
    return exp


def ce_to_taylor(spec: SchemeSpec, vec):
    """Substitute tau_j -> sigma_j in a Chapman-Enskog result."""
    comp = compile_scheme(spec)
    mapping = {}
    for t, s in zip(tau_symbols(spec), comp.sigma):
        mapping[str(t)] = s
    return [as_jet(e).subs(mapping) for e in vec]


# ---------------------------------------------------------------------------
# discrete Taylor expansion


def taylor_expand(spec: SchemeSpec, order: int = 2) -> Expansion:
    """Nonlinear discrete expansion up to ``order`` (at most 4)."""
    _check_order(order)
    comp = compile_scheme(spec)
    A, B, C, D = comp.blocks(1)
    Sg = comp.sigma
    W = fields(spec.N, spec.d)
    Phi = spec.phi()
    timings = {}
    t0 = time.perf_counter()
    G1, g1, P1 = _first_order(comp, W, Phi)
    gammas, psis = [G1], [P1]
    timings["order1"] = time.perf_counter() - t0
    if order >= 2:
        SP1 = _diag(Sg, P1)
        G2 = apply_operator(B, SP1)
        gammas.append(G2)
        g2 = frechet(Phi, G2)
        dP1G1 = frechet(P1, G1)
        P2 = _lin((1, _diag(Sg, dP1G1)), (1, g2), (-1, apply_operator(D, SP1)))
        psis.append(P2)
        timings["order2"] = time.perf_counter() - t0
    if order >= 3:
        A2, B2, C2, D2 = comp.blocks(2)
        SP2 = _diag(Sg, P2)
        # B (Sigma Psi_2 - dPsi_1.Gamma_1 / 6) + B_2 Psi_1 / 12
        G3 = vec_add(
            apply_operator(B, vec_sub(SP2, vec_scale(Fraction(1, 6), dP1G1))),
            vec_scale(Fraction(1, 12), apply_operator(B2, P1)),
        )
        gammas.append(G3)
        timings["order3"] = time.perf_counter() - t0
    if order >= 4:
        g3 = frechet(Phi, G3)
        d2P1 = frechet(dP1G1, G1)
        P3 = _lin(
            (1, _diag(Sg, frechet(P1, G2))),
            (1, g3),
            (-1, apply_operator(D, SP2)),
            (1, _diag(Sg, frechet(P2, G1))),
            (Fraction(1, 6), apply_operator(D, dP1G1)),
            (Fraction(-1, 12), apply_operator(D2, P1)),
            (Fraction(-1, 12), d2P1),
        )
        psis.append(P3)
        inner = _lin(
            (1, _diag(Sg, P3)),
            (Fraction(1, 6), apply_operator(D2, SP1)),
            (Fraction(-1, 6), vec_add(frechet(g1, G2), frechet(g2, G1))),
            (Fraction(-1, 6), _diag(Sg, d2P1)),
        )
        G4 = _lin(
            (1, apply_operator(B, inner)),
            (Fraction(1, 4), apply_operator(B2, P2)),
            (Fraction(-1, 6), apply_operator(A @ B, P2)),
        )
        gammas.append(G4)
        timings["order4"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t0
    return Expansion("taylor-nonlinear", order, gammas, psis, spec, timings=timings)


def _equilibrium_matrix(spec: SchemeSpec) -> OperatorMatrix:
    if not spec.is_linear:
        raise ExpansionError(
            f"scheme {spec.name!r} has a nonlinear equilibrium; linearize it first"
        )
    return OperatorMatrix([list(r) for r in spec.equilibrium.E], spec.d)


def taylor_expand_linear(spec: SchemeSpec, order: int = 4) -> Expansion:
    """Linear recurrence on operator matrices alpha_j (N x N) and beta_j ((q-N) x N)."""
    _check_order(order)
    comp = compile_scheme(spec)
    A, B, C, D = comp.blocks(1)
    E = _equilibrium_matrix(spec)
    S = comp.Sigma()
    t0 = time.perf_counter()
    a1 = A + B @ E
    b1 = E @ a1 - C - D @ E
    alphas, betas = [a1], [b1]
    if order >= 2:
        Sb1 = S @ b1
        a2 = B @ Sb1
        alphas.append(a2)
        b1a1 = b1 @ a1
        b2 = S @ b1a1 + E @ a2 - D @ Sb1
        betas.append(b2)
    if order >= 3:
        A2, B2, C2, D2 = comp.blocks(2)
        a3 = B @ (S @ b2) + Fraction(1, 12) * (B2 @ b1) - Fraction(1, 6) * (B @ b1a1)
        alphas.append(a3)
    if order >= 4:
        b1a1a1 = b1a1 @ a1
        b3 = (
            S @ (b1 @ a2)
            + E @ a3
            - D @ (S @ b2)
            + S @ (b2 @ a1)
            + Fraction(1, 6) * (D @ b1a1)
            - Fraction(1, 12) * (D2 @ b1)
            - Fraction(1, 12) * b1a1a1
        )
        betas.append(b3)
        BE = B @ E
        a4 = (
            B @ (S @ b3)
            + Fraction(1, 4) * (B2 @ b2)
            + Fraction(1, 6) * (B @ (D2 @ Sb1))
            - Fraction(1, 6) * (A @ (B @ b2))
            - Fraction(1, 6) * (BE @ (a1 @ a2))
            - Fraction(1, 6) * (BE @ (a2 @ a1))
            - Fraction(1, 6) * (B @ (S @ b1a1a1))
        )
        alphas.append(a4)
    exp = Expansion("taylor-linear", order, alphas, betas, spec)
    exp.timings["total"] = time.perf_counter() - t0
    return exp


# ---------------------------------------------------------------------------
# defect of conservation and coefficient forms


def _moments_eq(spec):
    return fields(spec.N, spec.d) + spec.phi()


def _axis(d, b):
    return tuple(1 if a == b else 0 for a in range(d))


def _lambda_apply(L, rows, meq, d, cache=None):
    """sum_{l,beta} L[beta][i][l] d_beta meq_l for i in rows."""
    out = []
    for i in rows:
        acc = as_jet(0)
        for b in range(d):
            for l, c in enumerate(L[b][i]):
                if c and meq[l]:
                    acc = acc + c * derivative(meq[l], _axis(d, b))
        out.append(acc)
    return out


def conservation_defect(spec: SchemeSpec):
    """Leading-order defect of conservation of the nonconserved moments.

    theta_k = d_t m_k^eq + sum_{l,beta} L^beta_{kl} d_beta m_l^eq, k >= N,
    with d_t W replaced by -(first-order flux).  The result equals -Psi_1.
    """
    comp = compile_scheme(spec)
    L = lambda_coefficients(comp)
    d, N, q = spec.d, spec.N, spec.q
    meq = _moments_eq(spec)
    flux = _lambda_apply(L, range(N), meq, d)
    dtW = [-f for f in flux]
    dt_phi = frechet(spec.phi(), dtW)
    transport = _lambda_apply(L, range(N, q), meq, d)
    return [a + b for a, b in zip(dt_phi, transport)]


def _sigma_tilde(comp):
    return [Scalar(0)] * comp.N + list(comp.sigma)


def second_order_form(spec: SchemeSpec, check: bool = False):
    """Gamma_2 rebuilt as -sum_{k>=N} L^beta_{ik} sigma_k d_beta theta_k.

    With ``check=True`` the result is compared against the Taylor engine's
    Gamma_2 and an ``AssertionError`` is raised on mismatch.
    """
    comp = compile_scheme(spec)
    L = lambda_coefficients(comp)
    d, N, q = spec.d, spec.N, spec.q
    theta = [as_jet(0)] * N + conservation_defect(spec)
    st = _sigma_tilde(comp)
    weighted = [st[k] * theta[k] for k in range(q)]
    out = [-x for x in _lambda_apply(L, range(N), weighted, d)]
    if check:
        g2 = taylor_expand(spec, 2).gammas[1]
        if any(a != b for a, b in zip(out, g2)):
            raise AssertionError("second-order form differs from Gamma_2")
    return out


def third_order_form(spec: SchemeSpec):
    """Gamma_3 rebuilt from the defect of conservation and its time derivative.

    Writing theta = theta_0 + dt theta_1 + O(dt^2) for the defect (theta_1
    comes from the dt Gamma_2 correction of d_t W) and sigma_k = 0 on the
    conserved indices,

        Gamma_3,i = - L^b_{ik} s_k d_b theta_1,k
                    + L^b_{ik} L^g_{kl} (s_k s_l - 1/12) d_b d_g theta_0,l
                    + L^b_{ik} (s_k^2 - 1/6) d_b d_t theta_0,k

    where d_t theta_0 = d theta_0 . (-Gamma_1).
    """
    comp = compile_scheme(spec)
    L = lambda_coefficients(comp)
    d, N, q = spec.d, spec.N, spec.q
    st = _sigma_tilde(comp)
    zero = as_jet(0)
    meq = _moments_eq(spec)
    flux = _lambda_apply(L, range(N), meq, d)
    theta0 = [zero] * N + conservation_defect(spec)
    G2 = second_order_form(spec)
    theta1 = [zero] * N + [-x for x in frechet(spec.phi(), G2)]
    dt_theta0 = [zero] * N + frechet(theta0[N:], [-f for f in flux])

    def lam_rows(rows, vec):
        return _lambda_apply(L, rows, vec, d)

    t1 = [-x for x in lam_rows(range(N), [st[k] * theta1[k] for k in range(q)])]
    # inner_k = sum_l L^g_{kl} (s_k s_l - 1/12) d_g theta0_l, for every k
    inner = []
    for k in range(q):
        acc = zero
        for g in range(d):
            for l in range(N, q):
                c = L[g][k][l]
                if c and theta0[l]:
                    acc = acc + c * (st[k] * st[l] - Fraction(1, 12)) * derivative(theta0[l], _axis(d, g))
        inner.append(acc)
    t2 = lam_rows(range(N), inner)
    t3 = lam_rows(range(N), [(st[k] * st[k] - Fraction(1, 6)) * dt_theta0[k] for k in range(q)])
    return [a + b + c for a, b, c in zip(t1, t2, t3)]


def mass_third_order(spec: SchemeSpec):
    """-1/12 sum L^g_{bl} d_b d_g theta_l over momentum rows b (mass equation)."""
    comp = compile_scheme(spec)
    L = lambda_coefficients(comp)
    d, N, q = spec.d, spec.N, spec.q
    theta0 = [as_jet(0)] * N + conservation_defect(spec)
    acc = as_jet(0)
    for b in range(1, d + 1):
        for g in range(d):
            for l in range(N, q):
                c = L[g][b][l]
                if c and theta0[l]:
                    mu = tuple(int(a == b - 1) + int(a == g) for a in range(d))
                    acc = acc + c * derivative(theta0[l], mu)
    return Fraction(-1, 12) * acc
