"""MRT scheme description, validation and moment-space compilation.

A scheme is given by an integer velocity stencil (physical velocities are
``lambda`` times the stencil), an invertible moment matrix ``M`` whose first
``N`` rows are the conserved moments, one relaxation rate per nonconserved
moment and an equilibrium for the nonconserved moments.  ``compile_scheme``
produces the operator matrix ``Lambda = M diag(v . grad) M^-1``, its blocks
and the diagonal of ``Sigma = S^-1 - I/2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace
from fractions import Fraction
from typing import Sequence

from .algebra import (
    AlgebraError,
    DiffOp,
    OperatorMatrix,
    Scalar,
    SingularMatrixError,
    as_scalar,
    block_split,
    matrix_inverse,
)
from .jet import JetExpr, JetVar, as_jet, field, jet_substitute, partial

__all__ = [
    "Linear",
    "Nonlinear",
    "SchemeSpec",
    "MomentCompilation",
    "Diagnostic",
    "SchemeError",
    "build_lambda",
    "compile_scheme",
    "validate",
    "builtin",
    "BUILTINS",
    "linearize",
    "lambda_coefficients",
    "tau_symbols",
]


class SchemeError(ValueError):
    """Invalid scheme definition."""


@dataclass(frozen=True)
class Linear:
    """Equilibrium Y_eq = E W with E a (q-N) x N matrix of Scalars."""

    E: tuple[tuple[Scalar, ...], ...]

    def phi(self, d: int) -> list[JetExpr]:
        W = [field(k, d) for k in range(len(self.E[0]) if self.E else 0)]
        out = []
        for row in self.E:
            acc = as_jet(0)
            for c, w in zip(row, W):
                if c:
                    acc = acc + c * w
            out.append(acc)
        return out


@dataclass(frozen=True)
class Nonlinear:
    """Equilibrium given by one jet expression per nonconserved moment."""

    phi_exprs: tuple[JetExpr, ...]

    def phi(self, d: int) -> list[JetExpr]:
        return list(self.phi_exprs)


@dataclass(frozen=True, eq=False)
class SchemeSpec:
    """Full description of one MRT lattice Boltzmann scheme.

    Parameters
    ----------
    name : str
    d : int
        Spatial dimension.
    stencil : tuple of int tuples
        Velocities in lattice units; ``v_j = lambda * stencil[j]``.
    M : tuple of Scalar tuples
        Moment matrix, q x q, degree-0 entries.
    N : int
        Number of conserved moments (the first N rows of M).
    s : tuple of Scalar
        Relaxation rates of the q - N nonconserved moments.
    equilibrium : Linear or Nonlinear
    moment_names : tuple of str
    velocity : str
        Name of the lattice velocity parameter.
    defaults : dict
        Numeric bindings used when a numeric command gets none.
    """

    name: str
    d: int
    stencil: tuple[tuple[int, ...], ...]
    M: tuple[tuple[Scalar, ...], ...]
    N: int
    s: tuple[Scalar, ...]
    equilibrium: Linear | Nonlinear
    moment_names: tuple[str, ...] = ()
    velocity: str = "lambda"
    defaults: dict = dc_field(default_factory=dict)

    @property
    def q(self) -> int:
        return len(self.stencil)

    @property
    def field_names(self) -> tuple[str, ...]:
        names = self.moment_names or tuple(f"m{i}" for i in range(self.q))
        return tuple(names[: self.N])

    @property
    def is_linear(self) -> bool:
        return isinstance(self.equilibrium, Linear)

    def phi(self) -> list[JetExpr]:
        return self.equilibrium.phi(self.d)

    def naming(self):
        from .render import Naming

        return Naming(fields=self.field_names)

    def free_parameters(self) -> set[str]:
        names = set()
        for row in self.M:
            for c in row:
                names |= c.free_parameters()
        for c in self.s:
            names |= c.free_parameters()
        for e in self.phi():
            names |= e.free_parameters()
        names.add(self.velocity)
        return names

    def with_relaxation(self, s: Sequence) -> "SchemeSpec":
        return replace(self, s=tuple(as_scalar(x) for x in s))


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" or "warning"
    message: str

    def __str__(self):
        return f"{self.level}: {self.message}"


# ---------------------------------------------------------------------------
# compilation


def build_lambda(spec: SchemeSpec) -> OperatorMatrix:
    """Lambda = M diag(sum_alpha v_j^alpha d_alpha) M^-1, exact."""
    d, q = spec.d, spec.q
    lam = Scalar.symbol(spec.velocity)
    Mop = OperatorMatrix([list(r) for r in spec.M], d)
    Minv = matrix_inverse(Mop)
    V = OperatorMatrix.zeros(q, q, d)
    for j, c in enumerate(spec.stencil):
        op = DiffOp(d, {})
        for a, n in enumerate(c):
            if n:
                op = op + DiffOp.partial(d, a, lam * n)
        V.entries[j][j] = op
    return Mop @ V @ Minv


def sigma_of(s) -> Scalar:
    """Henon coefficient 1/s - 1/2."""
    s = as_scalar(s)
    if not s:
        raise SchemeError("relaxation rate s = 0: Sigma = S^-1 - I/2 is undefined")
    return 1 / s - Fraction(1, 2)


def rate_of_sigma(sigma) -> Scalar:
    """Relaxation rate s = 1/(sigma + 1/2)."""
    return 1 / (as_scalar(sigma) + Fraction(1, 2))


class MomentCompilation:
    """Lambda, its N-block decomposition, Sigma and cached block powers."""

    def __init__(self, spec: SchemeSpec):
        self.spec = spec
        self.N = spec.N
        self.Lambda = build_lambda(spec)
        self.A, self.B, self.C, self.D = block_split(self.Lambda, spec.N)
        self.sigma = [sigma_of(s) for s in spec.s]
        self._powers = {}

    @property
    def d(self):
        return self.spec.d

    def blocks(self, power: int):
        """(A_p, B_p, C_p, D_p) for Lambda^p, built from the block recursion."""
        if power == 1:
            return self.A, self.B, self.C, self.D
        hit = self._powers.get(power)
        if hit is None:
            Ap, Bp, Cp, Dp = self.blocks(power - 1)
            A, B, C, D = self.A, self.B, self.C, self.D
            hit = (Ap @ A + Bp @ C, Ap @ B + Bp @ D, Cp @ A + Dp @ C, Cp @ B + Dp @ D)
            self._powers[power] = hit
        return hit

    def Sigma(self) -> OperatorMatrix:
        return OperatorMatrix.diag(self.sigma, self.d)


_compiled: dict[int, MomentCompilation] = {}


def compile_scheme(spec: SchemeSpec) -> MomentCompilation:
    """Compile a scheme; results are cached per spec object."""
    key = id(spec)
    hit = _compiled.get(key)
    if hit is not None and hit.spec is spec:
        return hit
    errs = [x for x in validate(spec) if x.level == "error"]
    if errs:
        raise SchemeError("; ".join(x.message for x in errs))
    out = MomentCompilation(spec)
    _compiled[key] = out
    return out


def lambda_coefficients(comp: MomentCompilation):
    """Coefficient matrices of Lambda: Lambda = sum_beta L[beta] d_beta."""
    d = comp.d
    out = []
    for b in range(d):
        mu = tuple(1 if a == b else 0 for a in range(d))
        out.append(
            [[e.terms.get(mu, Scalar(0)) for e in row] for row in comp.Lambda.entries]
        )
    return out


# ---------------------------------------------------------------------------
# validation


def _numeric(x: Scalar):
    return x.to_fraction() if x.is_constant() else None


def validate(spec: SchemeSpec) -> list[Diagnostic]:
    """Diagnostics for a scheme; never raises."""
    out = []

    def err(msg):
        out.append(Diagnostic("error", msg))

    q = spec.q
    if q == 0:
        err("empty velocity stencil")
        return out
    for j, c in enumerate(spec.stencil):
        if len(c) != spec.d:
            err(f"velocity {j} has {len(c)} components, expected d = {spec.d}")
        elif not all(isinstance(x, int) and not isinstance(x, bool) for x in c):
            err(f"velocity {j} is not a lattice vector (non-integer component)")
    if len(set(map(tuple, spec.stencil))) != q:
        err("velocity stencil has repeated vectors")
    if len(spec.M) != q or any(len(r) != q for r in spec.M):
        err(f"moment matrix must be {q} x {q}")
        return out
    if not 1 <= spec.N < q:
        err(f"number of conserved moments N = {spec.N} outside 1..{q - 1}")
        return out
    if spec.moment_names and len(spec.moment_names) != q:
        err(f"{len(spec.moment_names)} moment names given for q = {q}")
    for i, row in enumerate(spec.M):
        for c in row:
            if isinstance(c, JetExpr) and c.has_jets():
                err(f"moment matrix row {i} depends on conserved fields")
    try:
        matrix_inverse(OperatorMatrix([list(r) for r in spec.M], spec.d))
    except SingularMatrixError as exc:
        err(f"moment matrix is singular ({exc})")
    if len(spec.s) != q - spec.N:
        err(f"{len(spec.s)} relaxation rates given, expected q - N = {q - spec.N}")
    for j, s in enumerate(spec.s):
        v = _numeric(s)
        name = spec.moment_names[spec.N + j] if len(spec.moment_names) == q else str(spec.N + j)
        if v is None:
            continue
        if v == 0:
            err(f"relaxation rate of {name} is 0 (Sigma undefined)")
        elif v < 0 or v > 2:
            err(f"relaxation rate of {name} = {v} violates the stability bound 0 <= s <= 2")
        elif v == 2:
            out.append(Diagnostic("warning", f"relaxation rate of {name} = 2 (zero dissipation)"))
    eq = spec.equilibrium
    if isinstance(eq, Linear):
        if len(eq.E) != q - spec.N or any(len(r) != spec.N for r in eq.E):
            err(f"linear equilibrium matrix must be {q - spec.N} x {spec.N}")
        elif any(c.has_jets() for r in eq.E for c in r):
            err("linear equilibrium coefficients depend on conserved fields")
    else:
        if len(eq.phi_exprs) != q - spec.N:
            err(f"{len(eq.phi_exprs)} equilibria given, expected q - N = {q - spec.N}")
        for e in eq.phi_exprs:
            for v in as_jet(e).jet_vars():
                if v.k >= spec.N:
                    err(f"equilibrium uses field index {v.k} >= N")
                elif v.order:
                    err("equilibrium depends on derivatives of the conserved fields")
            if not as_jet(e).denominator_is_order0():
                err("equilibrium denominator involves derivatives")
    return out


# ---------------------------------------------------------------------------
# linearization


def linearize(spec: SchemeSpec, state: Sequence) -> SchemeSpec:
    """Linear scheme with E = dPhi evaluated at the constant state ``state``."""
    if spec.is_linear:
        return spec
    W0 = {JetVar(k, (0,) * spec.d): as_scalar(v) for k, v in enumerate(state)}
    rows = []
    for e in spec.phi():
        row = []
        for k in range(spec.N):
            dk = partial(e, JetVar(k, (0,) * spec.d))
            val = jet_substitute(dk, W0)
            row.append(Scalar._raw(*val.pair()) if not val.has_jets() else val)
        rows.append(tuple(row))
    return replace(spec, name=spec.name + "-linearized", equilibrium=Linear(tuple(rows)))


def tau_symbols(spec: SchemeSpec) -> list[Scalar]:
    """Relaxation times tau_j (entries of Z^-1) used by the continuous expansion."""
    names = spec.moment_names[spec.N :] if len(spec.moment_names) == spec.q else None
    out = []
    for j in range(spec.q - spec.N):
        tag = names[j] if names else str(spec.N + j)
        out.append(Scalar.symbol(f"tau_{tag}"))
    return out


# ---------------------------------------------------------------------------
# built-in schemes


def _d1q3(symbolic: bool = True) -> SchemeSpec:
    lam = Scalar.symbol("lambda")
    M = (
        (Scalar(1), Scalar(1), Scalar(1)),
        (Scalar(0), lam, -lam),
        (-2 * lam**2, lam**2, lam**2),
    )
    V, alpha = Scalar.symbol("V"), Scalar.symbol("alpha")
    E = ((V,), (alpha * lam**2,))
    if symbolic:
        s = (rate_of_sigma(Scalar.symbol("sigma_J")), rate_of_sigma(Scalar.symbol("sigma_e")))
    else:
        s = (Scalar(1), Scalar(1))
    return SchemeSpec(
        name="d1q3",
        d=1,
        stencil=((0,), (1,), (-1,)),
        M=M,
        N=1,
        s=s,
        equilibrium=Linear(E),
        moment_names=("rho", "J", "e"),
        defaults={
            "lambda": 1.0,
            "V": 0.2,
            "alpha": -1.0,
            "sigma_J": 0.5,
            "sigma_e": 0.5,
        },
    )


def d2q9_moment_matrix():
    lam = Scalar.symbol("lambda")
    l2, l3, l4 = lam**2, lam**3, lam**4
    rows = [
        [1, 1, 1, 1, 1, 1, 1, 1, 1],
        [0, lam, 0, -lam, 0, lam, -lam, -lam, lam],
        [0, 0, lam, 0, -lam, lam, lam, -lam, -lam],
        [-4 * l2, -l2, -l2, -l2, -l2, 2 * l2, 2 * l2, 2 * l2, 2 * l2],
        [0, l2, -l2, l2, -l2, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, l2, -l2, l2, -l2],
        [0, -2 * l3, 0, 2 * l3, 0, l3, -l3, -l3, l3],
        [0, 0, -2 * l3, 0, 2 * l3, l3, l3, -l3, -l3],
        [4 * l4, -2 * l4, -2 * l4, -2 * l4, -2 * l4, l4, l4, l4, l4],
    ]
    return tuple(tuple(as_scalar(x) for x in r) for r in rows)


D2Q9_STENCIL = ((0, 0), (1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1))


def d2q9_equilibrium(sound_speed2=None, phi_h=None) -> tuple[JetExpr, ...]:
    """Isothermal equilibria with p = c^2 rho (c^2 = lambda^2/3 unless given)."""
    lam = Scalar.symbol("lambda")
    rho, jx, jy = field(0, 2), field(1, 2), field(2, 2)
    u, v = jx / rho, jy / rho
    c2 = lam**2 / 3 if sound_speed2 is None else as_scalar(sound_speed2)
    p = c2 * rho
    q2 = u * u + v * v
    phi = [
        6 * p - 4 * lam**2 * rho + 3 * rho * q2,
        rho * (u * u - v * v),
        rho * u * v,
        -rho * lam**2 * u + 3 * rho * q2 * u,
        -rho * lam**2 * v + 3 * rho * q2 * v,
        as_jet(0) if phi_h is None else as_jet(phi_h),
    ]
    return tuple(as_jet(e) for e in phi)


def _d2q9(sound_speed2=None, symbolic: bool = True) -> SchemeSpec:
    if symbolic:
        sig = [Scalar.symbol(n) for n in ("sigma_e", "sigma_x", "sigma_x", "sigma_q", "sigma_q", "sigma_h")]
        s = tuple(rate_of_sigma(x) for x in sig)
    else:
        s = tuple(Scalar(1) for _ in range(6))
    return SchemeSpec(
        name="d2q9-isothermal",
        d=2,
        stencil=D2Q9_STENCIL,
        M=d2q9_moment_matrix(),
        N=3,
        s=s,
        equilibrium=Nonlinear(d2q9_equilibrium(sound_speed2)),
        moment_names=("rho", "Jx", "Jy", "e", "xx", "xy", "qx", "qy", "h"),
        defaults={
            "lambda": 1.0,
            "sigma_e": 0.5,
            "sigma_x": 0.5,
            "sigma_q": 0.5,
            "sigma_h": 0.5,
        },
    )


BUILTINS = {
    "d1q3": _d1q3,
    "d2q9-isothermal": _d2q9,
}

_ALIASES = {"d2q9": "d2q9-isothermal", "D2Q9": "d2q9-isothermal", "D1Q3": "d1q3",
            "D2Q9-isothermal": "d2q9-isothermal"}  # fmt: skip


def builtin(name: str, **options) -> SchemeSpec:
    """Built-in scheme by name (``d1q3`` or ``d2q9-isothermal``).

    Relaxation is symbolic by default: D1Q3 uses ``sigma_J``, ``sigma_e``;
    D2Q9 uses ``sigma_e``, ``sigma_x``, ``sigma_q``, ``sigma_h``.
    """
    key = _ALIASES.get(name, name)
    if key not in BUILTINS:
        raise SchemeError(f"unknown built-in scheme {name!r}; known: {', '.join(sorted(BUILTINS))}")
    return BUILTINS[key](**options)
