"""Exact scalar field and constant-coefficient differential operator matrices.

Every symbolic quantity in the package is a rational function over the
rationals in a single, append-only list of generators.  Generators are either
named parameters (``lambda``, ``sigma_x``, ...) or jet variables (conserved
fields and their spatial derivatives, see :mod:`lbmexpand.jet`).  Polynomials
are sympy sparse ``PolyElement`` objects in graded-lex order; the fraction
layer on top of them is ours, because sympy's own field elements run a full
multivariate gcd on every operation and almost all of our denominators are
monomials.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from numbers import Rational

from sympy import Symbol
from sympy.polys.domains import QQ
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyRing

__all__ = [
    "AlgebraError",
    "SingularMatrixError",
    "DimensionError",
    "Scalar",
    "DiffOp",
    "OperatorMatrix",
    "registry",
    "scalar_arith",
    "matrix_inverse",
    "opmatrix_mul",
    "block_split",
    "block_join",
]


class AlgebraError(ArithmeticError):
    """Base class for exact-algebra failures."""


class SingularMatrixError(AlgebraError):
    pass


class DimensionError(AlgebraError, ValueError):
    pass


# ---------------------------------------------------------------------------
# generator registry


class _Registry:
    """Append-only list of polynomial generators shared by all expressions."""

    def __init__(self):
        self.names: list[str] = []
        self.index: dict[str, int] = {}
        self.jet_of: dict[int, tuple[int, tuple[int, ...]]] = {}
        self.jet_index: dict[tuple[int, tuple[int, ...]], int] = {}
        self.ring = PolyRing((), QQ, grlex)
        self._dirty = False

    @property
    def ngens(self):
        return len(self.names)

    def _append(self, name):
        self.index[name] = len(self.names)
        self.names.append(name)
        self._dirty = True
        return self.index[name]

    def _commit(self):
        if self._dirty:
            self.ring = PolyRing([Symbol(n) for n in self.names], QQ, grlex)
            self._dirty = False

    def param(self, name: str) -> int:
        if name not in self.index:
            if not name.isidentifier():
                raise AlgebraError(f"invalid parameter name {name!r}")
            self._append(name)
            self._commit()
        return self.index[name]

    def jet(self, k: int, mu: tuple[int, ...]) -> int:
        key = (k, tuple(mu))
        idx = self.jet_index.get(key)
        if idx is None:
            name = f"W{k}[{','.join(map(str, mu))}]"
            idx = self._append(name)
            self.jet_of[idx] = key
            self.jet_index[key] = idx
            self._commit()
        return idx

    def ensure_jets(self, nfields: int, d: int, max_order: int):
        """Register every jet variable up to total order ``max_order`` at once."""
        for order in range(max_order + 1):
            for mu in multi_indices(d, order):
                for k in range(nfields):
                    key = (k, mu)
                    if key not in self.jet_index:
                        name = f"W{k}[{','.join(map(str, mu))}]"
                        idx = self._append(name)
                        self.jet_of[idx] = key
                        self.jet_index[key] = idx
        self._commit()

    def is_param(self, idx: int) -> bool:
        return idx not in self.jet_of

    def promote(self, p):
        """Pad a polynomial from an older (shorter) ring to the current one."""
        ring = self.ring
        if p.ring is ring:
            return p
        pad = (0,) * (ring.ngens - p.ring.ngens)
        out = ring.zero.copy()
        dict.update(out, {m + pad: c for m, c in p.items()})
        return out


registry = _Registry()


def multi_indices(d: int, order: int):
    """All d-tuples of nonnegative integers summing to ``order``, in lex order."""
    if d == 0:
        if order == 0:
            yield ()
        return
    for first in range(order, -1, -1):
        for rest in multi_indices(d - 1, order - first):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# polynomial helpers


def _monomial_gcd(num, den_monom):
    g = list(den_monom)
    for m in num.keys():
        for i, e in enumerate(g):
            if e and m[i] < e:
                g[i] = m[i]
        if not any(g):
            break
    return tuple(g)


def _divide_monomial(p, mono):
    out = p.ring.zero.copy()
    dict.update(out, {tuple(a - b for a, b in zip(m, mono)): c for m, c in p.items()})
    return out


def _normalize(num, den):
    """Canonical (num, den): gcd removed, denominator monic in grlex order."""
    if not num:
        return num.ring.zero, num.ring.one
    if not den:
        raise ZeroDivisionError("division by zero Scalar")
    ring = num.ring
    if den.is_ground:
        c = den.LC
        if c != 1:
            num = num.quo_ground(c)
        return num, ring.one
    if len(den) == 1:
        (mono, c), = den.items()
        g = _monomial_gcd(num, mono)
        if any(g):
            num = _divide_monomial(num, g)
            mono = tuple(a - b for a, b in zip(mono, g))
        if c != 1:
            num = num.quo_ground(c)
        if not any(mono):
            return num, ring.one
        den = ring.zero.copy()
        dict.__setitem__(den, mono, QQ.one)
        return num, den
    num, den = num.cancel(den)
    c = den.LC
    if c != 1:
        num = num.quo_ground(c)
        den = den.quo_ground(c)
    return num, den


def _coerce_rational(value):
    if isinstance(value, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(value, int):
        return QQ(value)
    if isinstance(value, Fraction):
        return QQ(value.numerator, value.denominator)
    if isinstance(value, Rational):
        return QQ(int(value.numerator), int(value.denominator))
    if type(value).__name__ == "mpq":
        return value
    return None


# ---------------------------------------------------------------------------
# rational functions


class Scalar:
    """Exact rational function in the registered generators.

    Instances are immutable.  ``Scalar`` proper holds parameters only; the
    subclass :class:`lbmexpand.jet.JetExpr` may also contain jet variables.
    Binary operations return the more general of the two operand classes.
    """

    __slots__ = ("num", "den")

    def __init__(self, value=0):
        if isinstance(value, Scalar):
            num, den = value.num, value.den
        elif isinstance(value, str):
            num, den = Scalar.symbol(value).pair()
        else:
            q = _coerce_rational(value)
            if q is None:
                raise TypeError(f"cannot build a Scalar from {value!r}")
            ring = registry.ring
            num, den = ring.ground_new(q), ring.one
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, name, value):
        raise AttributeError("Scalar is immutable")

    @classmethod
    def _raw(cls, num, den):
        obj = object.__new__(cls)
        object.__setattr__(obj, "num", num)
        object.__setattr__(obj, "den", den)
        return obj

    @classmethod
    def _new(cls, num, den):
        return cls._raw(*_normalize(num, den))

    @classmethod
    def symbol(cls, name: str) -> "Scalar":
        idx = registry.param(name)
        ring = registry.ring
        return Scalar._raw(ring.gens[idx], ring.one)

    def pair(self):
        """Numerator and denominator promoted to the current ring."""
        return registry.promote(self.num), registry.promote(self.den)

    # -- coercion ---------------------------------------------------------
    def _other(self, other):
        if isinstance(other, Scalar):
            return other
        q = _coerce_rational(other) if not isinstance(other, (float, complex, str)) else None
        if q is None:
            return None
        ring = registry.ring
        return Scalar._raw(ring.ground_new(q), ring.one)

    @staticmethod
    def _cls(a, b):
        return type(a) if issubclass(type(a), type(b)) else type(b)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        a_num, a_den = self.pair()
        b_num, b_den = o.pair()
        cls = self._cls(self, o)
        if a_den == b_den:
            if a_den.is_ground:
                return cls._raw(a_num + b_num, a_den)
            return cls._new(a_num + b_num, a_den)
        return cls._new(a_num * b_den + b_num * a_den, a_den * b_den)

    __radd__ = __add__

    def __neg__(self):
        return type(self)._raw(-self.num, self.den)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        a_num, a_den = self.pair()
        b_num, b_den = o.pair()
        cls = self._cls(self, o)
        if not a_num or not b_num:
            ring = registry.ring
            return cls._raw(ring.zero, ring.one)
        if a_den.is_ground and b_den.is_ground:
            return cls._raw(a_num * b_num, a_den)
        return cls._new(a_num * b_num, a_den * b_den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        num, den = self.pair()
        return type(self)._raw(num**n, den**n)

    def inverse(self):
        if not self.num:
            raise ZeroDivisionError("division by zero Scalar")
        num, den = self.pair()
        return type(self)._new(den, num)

    # -- comparison -------------------------------------------------------
    def __eq__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        a_num, a_den = self.pair()
        b_num, b_den = o.pair()
        return a_num == b_num and a_den == b_den

    def __hash__(self):
        def key(p):
            return frozenset(
                (tuple((i, e) for i, e in enumerate(m) if e), c) for m, c in p.items()
            )

        return hash((key(self.num), key(self.den)))

    def __bool__(self):
        return bool(self.num)

    # -- inspection -------------------------------------------------------
    def is_zero(self):
        return not self.num

    def is_constant(self):
        return self.num.is_ground and self.den.is_ground

    def to_fraction(self) -> Fraction:
        if not self.is_constant():
            raise AlgebraError(f"{self} is not a numeric constant")
        q = self.num.LC if self.num else QQ.zero
        return Fraction(int(q.numerator), int(q.denominator))

    def generators(self) -> set[int]:
        """Indices of generators with nonzero exponent anywhere in the fraction."""
        used = set()
        for p in (self.num, self.den):
            for m in p.keys():
                used.update(i for i, e in enumerate(m) if e)
        return used

    def free_parameters(self) -> set[str]:
        return {registry.names[i] for i in self.generators() if registry.is_param(i)}

    def has_jets(self) -> bool:
        return any(not registry.is_param(i) for i in self.generators())

    def evaluate(self, bindings):
        """Numeric value with every parameter bound (name -> number)."""
        if self.has_jets():
            raise AlgebraError("cannot evaluate an expression with jet variables")
        values = {}
        for i in self.generators():
            name = registry.names[i]
            if name not in bindings:
                raise KeyError(f"unbound parameter {name!r}")
            values[i] = bindings[name]
        return _eval_poly(self.num, values) / _eval_poly(self.den, values)

    def subs(self, mapping):
        """Substitute parameters (name -> Scalar or number) and return a new expression."""
        idx_map = {}
        for name, value in mapping.items():
            if name in registry.index:
                v = value if isinstance(value, Scalar) else Scalar(value)
                idx_map[registry.index[name]] = v
        if not idx_map or not (self.generators() & set(idx_map)):
            return self
        num = _subs_poly(self.num, idx_map)
        den = _subs_poly(self.den, idx_map)
        out = num / den
        if out.has_jets():
            from .jet import JetExpr

            return JetExpr._raw(out.num, out.den)
        return type(self)._raw(out.num, out.den)

    def __repr__(self):
        from .render import to_text

        return f"{type(self).__name__}({to_text(self)})"

    def __str__(self):
        from .render import to_text

        return to_text(self)


def _eval_poly(p, values):
    total = 0
    for m, c in p.items():
        term = Fraction(int(c.numerator), int(c.denominator))
        term = float(term) if values else term
        for i, e in enumerate(m):
            if e:
                term = term * values[i] ** e
        total = total + term
    return total


def _subs_poly(p, idx_map):
    ring = registry.ring
    p = registry.promote(p)
    result = Scalar._raw(ring.zero, ring.one)
    cache = {}
    rest = ring.zero.copy()
    for m, c in p.items():
        hit = [i for i in idx_map if m[i]]
        if not hit:
            dict.__setitem__(rest, m, c)
            continue
        m_rest = list(m)
        factor = None
        for i in hit:
            e = m[i]
            m_rest[i] = 0
            key = (i, e)
            if key not in cache:
                cache[key] = idx_map[i] ** e
            factor = cache[key] if factor is None else factor * cache[key]
        mono = ring.zero.copy()
        dict.__setitem__(mono, tuple(m_rest), c)
        result = result + factor * _wrap(mono)
    return result + _wrap(rest)


def _wrap(poly):
    """Return a Scalar or JetExpr for a bare polynomial depending on its content."""
    s = Scalar._raw(poly, registry.ring.one)
    if s.has_jets():
        from .jet import JetExpr

        return JetExpr._raw(poly, registry.ring.one)
    return s


def scalar_arith(a: Scalar, b: Scalar, op: str) -> Scalar:
    """Functional form of the four field operations."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def _zero():
    ring = registry.ring
    return Scalar._raw(ring.zero, ring.one)


def _one():
    ring = registry.ring
    return Scalar._raw(ring.one, ring.one)


def as_scalar(x) -> Scalar:
    return x if isinstance(x, Scalar) else Scalar(x)


# ---------------------------------------------------------------------------
# differential operators


class DiffOp:
    """Constant-coefficient polynomial in the commuting symbols d_1..d_d.

    ``terms`` maps a derivative multi-index to its nonzero Scalar coefficient.
    """

    __slots__ = ("d", "terms")

    def __init__(self, d: int, terms=None):
        self.d = d
        clean = {}
        for mu, c in (terms or {}).items():
            mu = tuple(mu)
            if len(mu) != d:
                raise DimensionError(f"multi-index {mu} does not have length {d}")
            c = as_scalar(c)
            if c:
                clean[mu] = c
        self.terms = clean

    @classmethod
    def _raw(cls, d, terms):
        obj = object.__new__(cls)
        obj.d = d
        obj.terms = terms
        return obj

    @classmethod
    def constant(cls, d, value):
        return cls(d, {(0,) * d: value})

    @classmethod
    def partial(cls, d, axis, coeff=1):
        mu = [0] * d
        mu[axis] = 1
        return cls(d, {tuple(mu): coeff})

    def __add__(self, other):
        if not isinstance(other, DiffOp):
            other = DiffOp.constant(self.d, other)
        out = dict(self.terms)
        for mu, c in other.terms.items():
            s = out.get(mu)
            s = c if s is None else s + c
            if s:
                out[mu] = s
            else:
                out.pop(mu, None)
        return DiffOp._raw(self.d, out)

    __radd__ = __add__

    def __neg__(self):
        return DiffOp._raw(self.d, {mu: -c for mu, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, DiffOp):
            other = as_scalar(other)
            if not other:
                return DiffOp._raw(self.d, {})
            return DiffOp._raw(self.d, {mu: c * other for mu, c in self.terms.items()})
        out = {}
        for (m1, c1), (m2, c2) in itertools.product(self.terms.items(), other.terms.items()):
            mu = tuple(a + b for a, b in zip(m1, m2))
            s = out.get(mu)
            p = c1 * c2
            out[mu] = p if s is None else s + p
        return DiffOp._raw(self.d, {mu: c for mu, c in out.items() if c})

    def __rmul__(self, other):
        return self * other

    def __pow__(self, n):
        out = DiffOp.constant(self.d, 1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, DiffOp):
            return self.d == other.d and self.terms == other.terms
        if not self.terms:
            return other == 0
        if set(self.terms) == {(0,) * self.d}:
            return self.terms[(0,) * self.d] == other
        return False

    def __hash__(self):
        return hash((self.d, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self):
        return all(not any(mu) for mu in self.terms)

    def constant_value(self) -> Scalar:
        if not self.is_constant():
            raise AlgebraError("operator has derivative terms")
        return self.terms.get((0,) * self.d, _zero())

    def orders(self):
        return {sum(mu) for mu in self.terms}

    def map_coeffs(self, fn):
        return DiffOp(self.d, {mu: fn(c) for mu, c in self.terms.items()})

    def symbol(self, k, bindings):
        """Complex value with each d_alpha replaced by i*k_alpha."""
        total = 0j
        for mu, c in self.terms.items():
            v = complex(c.evaluate(bindings))
            for a, e in enumerate(mu):
                if e:
                    v *= (1j * k[a]) ** e
            total += v
        return total

    def __repr__(self):
        from .render import diffop_text

        return f"DiffOp({diffop_text(self)})"


class OperatorMatrix:
    """Dense rows x cols matrix of DiffOp entries."""

    __slots__ = ("rows", "cols", "d", "entries")

    def __init__(self, entries, d: int):
        self.d = d
        self.entries = [
            [e if isinstance(e, DiffOp) else DiffOp.constant(d, e) for e in row] for row in entries
        ]
        self.rows = len(self.entries)
        self.cols = len(self.entries[0]) if self.entries else 0
        if any(len(r) != self.cols for r in self.entries):
            raise DimensionError("ragged operator matrix")

    @classmethod
    def zeros(cls, rows, cols, d):
        return cls([[DiffOp._raw(d, {}) for _ in range(cols)] for _ in range(rows)], d)

    @classmethod
    def identity(cls, n, d):
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], d)

    @classmethod
    def diag(cls, values, d):
        n = len(values)
        return cls([[values[i] if i == j else 0 for j in range(n)] for i in range(n)], d)

    @property
    def shape(self):
        return self.rows, self.cols

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other):
        return (
            isinstance(other, OperatorMatrix)
            and self.shape == other.shape
            and all(a == b for ra, rb in zip(self.entries, other.entries) for a, b in zip(ra, rb))
        )

    def __add__(self, other):
        if self.shape != other.shape:
            raise DimensionError(f"cannot add {self.shape} and {other.shape}")
        return OperatorMatrix(
            [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.entries, other.entries)], self.d
        )

    def __neg__(self):
        return OperatorMatrix([[-a for a in r] for r in self.entries], self.d)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, OperatorMatrix):
            return opmatrix_mul(self, other)
        return OperatorMatrix([[a * other for a in r] for r in self.entries], self.d)

    def __rmul__(self, other):
        return OperatorMatrix([[a * other for a in r] for r in self.entries], self.d)

    def __matmul__(self, other):
        return opmatrix_mul(self, other)

    def is_constant(self):
        return all(e.is_constant() for r in self.entries for e in r)

    def scalar_rows(self):
        return [[e.constant_value() for e in r] for r in self.entries]

    def submatrix(self, r0, r1, c0, c1):
        return OperatorMatrix([row[c0:c1] for row in self.entries[r0:r1]], self.d)

    def transpose(self):
        return OperatorMatrix([list(col) for col in zip(*self.entries)], self.d)

    def map_coeffs(self, fn):
        return OperatorMatrix([[e.map_coeffs(fn) for e in r] for r in self.entries], self.d)

    def symbol(self, k, bindings):
        import numpy as np

        out = np.zeros((self.rows, self.cols), dtype=complex)
        for i, r in enumerate(self.entries):
            for j, e in enumerate(r):
                if e:
                    out[i, j] = e.symbol(k, bindings)
        return out

    def __repr__(self):
        from .render import diffop_text

        body = "\n".join("  [" + ", ".join(diffop_text(e) for e in r) + "]" for r in self.entries)
        return f"OperatorMatrix({self.rows}x{self.cols},\n{body})"


def opmatrix_mul(P: OperatorMatrix, Q: OperatorMatrix) -> OperatorMatrix:
    if P.cols != Q.rows:
        raise DimensionError(f"inner dimensions differ: {P.shape} @ {Q.shape}")
    d = P.d
    out = []
    Qcols = list(zip(*Q.entries)) if Q.rows else [() for _ in range(Q.cols)]
    for row in P.entries:
        new_row = []
        for col in Qcols:
            acc = DiffOp._raw(d, {})
            for a, b in zip(row, col):
                if a and b:
                    acc = acc + a * b
            new_row.append(acc)
        out.append(new_row)
    if not Q.cols:
        out = [[] for _ in P.entries]
    return OperatorMatrix(out, d)


def matrix_inverse(M: OperatorMatrix) -> OperatorMatrix:
    """Inverse of a square matrix of degree-0 entries by Bareiss elimination.

    The elimination is fraction-free on the augmented matrix ``[M | det I]``;
    the inverse is recovered at the end by a single division by the
    determinant.
    """
    if M.rows != M.cols:
        raise DimensionError(f"matrix_inverse needs a square matrix, got {M.shape}")
    if not M.is_constant():
        raise AlgebraError("matrix_inverse needs degree-0 (pure Scalar) entries")
    n = M.rows
    rows = M.scalar_rows()
    aug = [row[:] + [_one() if i == j else _zero() for j in range(n)] for i, row in enumerate(rows)]
    prev = _one()
    for k in range(n):
        piv = next((r for r in range(k, n) if aug[r][k]), None)
        if piv is None:
            raise SingularMatrixError(f"singular matrix: no nonzero pivot in column {k}")
        if piv != k:
            aug[k], aug[piv] = aug[piv], aug[k]
        pk = aug[k][k]
        row_k = aug[k]
        for i in range(n):
            if i == k:
                continue
            f = aug[i][k]
            row_i = aug[i]
            # Jordan form of Bareiss: every off-pivot row, division by the
            # previous pivot is exact
            aug[i] = [(pk * row_i[j] - f * row_k[j]) / prev for j in range(2 * n)]
        prev = pk
    inv = [[aug[i][n + j] / aug[i][i] for j in range(n)] for i in range(n)]
    return OperatorMatrix(inv, M.d)


def block_split(L: OperatorMatrix, N: int):
    """Split a square operator matrix into (A, B, C, D) with A of size N x N."""
    q = L.rows
    if L.cols != q:
        raise DimensionError("block_split needs a square matrix")
    if not 1 <= N < q:
        raise DimensionError(f"N = {N} out of range 1..{q - 1}")
    return (
        L.submatrix(0, N, 0, N),
        L.submatrix(0, N, N, q),
        L.submatrix(N, q, 0, N),
        L.submatrix(N, q, N, q),
    )


def block_join(A, B, C, D) -> OperatorMatrix:
    top = [ra + rb for ra, rb in zip(A.entries, B.entries)]
    bottom = [rc + rd for rc, rd in zip(C.entries, D.entries)]
    return OperatorMatrix(top + bottom, A.d)
