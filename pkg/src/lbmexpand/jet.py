"""Jet-space calculus: total derivatives, operator application, Frechet derivatives.

A :class:`JetExpr` is a rational function whose generators may include jet
variables ``W_k`` with derivative multi-index ``mu``.  Denominators are kept
free of differentiated variables; every operation below preserves that.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

from .algebra import (
    AlgebraError,
    DimensionError,
    OperatorMatrix,
    Scalar,
    registry,
)

__all__ = [
    "JetVar",
    "JetExpr",
    "field",
    "fields",
    "total_derivative",
    "derivative",
    "apply_operator",
    "frechet",
    "second_directional",
    "jet_substitute",
    "differential_orders",
    "vec_add",
    "vec_sub",
    "vec_scale",
    "diag_apply",
]

MAX_ORDER = 6


@dataclass(frozen=True, order=True)
class JetVar:
    k: int
    mu: tuple[int, ...]

    def __post_init__(self):
        if sum(self.mu) > MAX_ORDER:
            raise AlgebraError(f"jet variable order {sum(self.mu)} exceeds {MAX_ORDER}")

    @property
    def order(self):
        return sum(self.mu)

    def expr(self) -> "JetExpr":
        idx = registry.jet(self.k, self.mu)
        ring = registry.ring
        return JetExpr._raw(ring.gens[idx], ring.one)


class JetExpr(Scalar):
    """Rational function in jet variables with Scalar coefficients."""

    __slots__ = ()

    def jet_vars(self) -> set[JetVar]:
        return {JetVar(*registry.jet_of[i]) for i in self.generators() if not registry.is_param(i)}

    def denominator_is_order0(self) -> bool:
        for m in self.den.keys():
            for i, e in enumerate(m):
                if e and i in registry.jet_of and any(registry.jet_of[i][1]):
                    return False
        return True


def as_jet(x) -> JetExpr:
    if isinstance(x, JetExpr):
        return x
    s = x if isinstance(x, Scalar) else Scalar(x)
    return JetExpr._raw(s.num, s.den)


def field(k: int, d: int, mu=None) -> JetExpr:
    """The jet variable W_k (or its derivative ``mu``) as an expression."""
    return JetVar(k, tuple(mu) if mu is not None else (0,) * d).expr()


def fields(n: int, d: int) -> list[JetExpr]:
    return [field(k, d) for k in range(n)]


# ---------------------------------------------------------------------------
# differentiation


def _poly_partial(p, idx):
    out = p.ring.zero.copy()
    for m, c in p.items():
        e = m[idx]
        if e:
            mm = list(m)
            mm[idx] = e - 1
            dict.__setitem__(out, tuple(mm), c * e)
    return out


def _poly_total(p, axis, succ):
    """Total derivative of a polynomial: chain rule over every jet variable."""
    ring = p.ring
    acc = {}
    for m, c in p.items():
        for i, e in enumerate(m):
            if e and i in succ:
                mm = list(m)
                mm[i] = e - 1
                j = succ[i]
                mm[j] += 1
                mm = tuple(mm)
                v = acc.get(mm)
                v = c * e if v is None else v + c * e
                acc[mm] = v
    out = ring.zero.copy()
    dict.update(out, {m: c for m, c in acc.items() if c})
    return out


def _successors(gens, axis):
    """Map each jet generator index to the index of its derivative along axis."""
    succ = {}
    new = []
    for i in gens:
        if i in registry.jet_of:
            k, mu = registry.jet_of[i]
            nu = list(mu)
            nu[axis] += 1
            key = (k, tuple(nu))
            if key not in registry.jet_index:
                new.append(key)
            succ[i] = key
    for k, nu in new:
        if sum(nu) > MAX_ORDER:
            raise AlgebraError(f"jet variable order {sum(nu)} exceeds {MAX_ORDER}")
        registry.jet(k, nu)
    return {i: registry.jet_index[key] for i, key in succ.items()}


def total_derivative(e, axis: int) -> JetExpr:
    """Total derivative of ``e`` along ``axis`` (Leibniz and quotient rules)."""
    e = as_jet(e)
    gens = e.generators()
    succ = _successors(gens, axis)
    if not succ:
        return as_jet(0)
    num, den = e.pair()
    dn = _poly_total(num, axis, succ)
    if den.is_ground:
        return JetExpr._new(dn, den) if dn else as_jet(0)
    dd = _poly_total(den, axis, succ)
    if not dd:
        return JetExpr._new(dn, den)
    return JetExpr._new(dn * den - num * dd, den * den)


def derivative(e, mu) -> JetExpr:
    """Iterated total derivative D^mu e."""
    out = as_jet(e)
    for axis, n in enumerate(mu):
        for _ in range(n):
            if not out:
                return out
            out = total_derivative(out, axis)
    return out


def partial(e, var: JetVar) -> JetExpr:
    """Partial derivative with respect to one jet variable."""
    e = as_jet(e)
    idx = registry.jet_index.get((var.k, var.mu))
    if idx is None or idx not in e.generators():
        return as_jet(0)
    num, den = e.pair()
    dn = _poly_partial(num, idx)
    dd = _poly_partial(den, idx)
    if not dd:
        return JetExpr._new(dn, den) if dn else as_jet(0)
    return JetExpr._new(dn * den - num * dd, den * den)


class _DerivCache:
    """Memoized D^mu of a fixed vector of expressions."""

    def __init__(self, vec):
        self.vec = [as_jet(v) for v in vec]
        self.cache = {}

    def get(self, k, mu):
        key = (k, mu)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        if not any(mu):
            val = self.vec[k]
        else:
            axis = max(a for a, n in enumerate(mu) if n)
            prev = list(mu)
            prev[axis] -= 1
            val = total_derivative(self.get(k, tuple(prev)), axis)
        self.cache[key] = val
        return val


def apply_operator(P: OperatorMatrix, v) -> list[JetExpr]:
    """Apply an operator matrix entrywise to a vector of jet expressions."""
    if P.cols != len(v):
        raise DimensionError(f"operator has {P.cols} columns, vector has {len(v)} entries")
    cache = _DerivCache(v)
    out = []
    for row in P.entries:
        acc = as_jet(0)
        for j, op in enumerate(row):
            for mu, c in op.terms.items():
                term = cache.get(j, mu)
                if term:
                    acc = acc + c * term
        out.append(acc)
    return out


def frechet(F, G) -> list[JetExpr]:
    """Directional derivative dF(W).G summed over every jet variable of F."""
    G = list(G)
    cache = _DerivCache(G)
    out = []
    for f in F:
        f = as_jet(f)
        acc = as_jet(0)
        for var in sorted(f.jet_vars()):
            if var.k >= len(G):
                raise DimensionError(f"field index {var.k} outside direction of length {len(G)}")
            dg = cache.get(var.k, var.mu)
            if dg:
                acc = acc + partial(f, var) * dg
        out.append(acc)
    return out


def second_directional(Psi, Gamma) -> list[JetExpr]:
    """d(dPsi.Gamma).Gamma, the nested Frechet derivative."""
    return frechet(frechet(Psi, Gamma), Gamma)


# ---------------------------------------------------------------------------
# vector helpers


def vec_add(*vs):
    return [reduce(lambda a, b: a + b, parts) for parts in zip(*vs)]


def vec_sub(a, b):
    return [x - y for x, y in zip(a, b)]


def vec_scale(c, v):
    return [c * x for x in v]


def diag_apply(diag, v):
    return [c * x for c, x in zip(diag, v)]


# ---------------------------------------------------------------------------
# structure


def differential_orders(e) -> set[int]:
    """Set of total derivative orders carried by the monomials of the numerator.

    For a homogeneous term of differential order j every monomial has jet
    variables whose multi-indices add up to j.
    """
    e = as_jet(e)
    if not e:
        return set()
    num, den = e.pair()
    jet_of = registry.jet_of
    orders = set()
    for m in num.keys():
        total = 0
        for i, x in enumerate(m):
            if x and i in jet_of:
                total += x * sum(jet_of[i][1])
        orders.add(total)
    return orders


def jet_substitute(e, mapping) -> JetExpr:
    """Replace order-0 jet variables or parameters by expressions.

    ``mapping`` keys are ``JetVar`` (order 0, with their derivatives following
    by total differentiation) or parameter names.
    """
    e = as_jet(e)
    names = {}
    for key, val in mapping.items():
        if isinstance(key, JetVar):
            if key.order:
                raise AlgebraError("only order-0 jet variables can be substituted")
            names[registry.names[registry.jet(key.k, key.mu)]] = as_jet(val)
        else:
            names[key] = val
    d = None
    for var in e.jet_vars():
        d = len(var.mu)
        break
    if d is not None:
        for key, val in list(mapping.items()):
            if isinstance(key, JetVar):
                for var in e.jet_vars():
                    if var.k == key.k and var.order:
                        names[registry.names[registry.jet(var.k, var.mu)]] = derivative(val, var.mu)
    out = e.subs(names)
    return as_jet(out)
