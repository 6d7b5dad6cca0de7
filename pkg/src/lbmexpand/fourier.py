"""Fourier-symbol oracle for linear schemes.

For a plane wave exp(i k.x) one step of a linear scheme acts on the moments
by the amplification matrix

    G(k) = exp(-dt * Lambda(ik)) @ J,    J = [[I, 0], [S E, I - S]],

(relaxation first, then exact transport).  Its N conserved eigenvalues g
satisfy log(g)/dt = -a + O(dt^m) where a runs over the eigenvalues of the
symbol of alpha_1 + dt alpha_2 + ... + dt^(m-1) alpha_m.  ``order_check`` fits
the exponent m from a geometric sequence of time steps.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .algebra import OperatorMatrix
from .linalg import eigvals, expm
from .scheme import SchemeSpec, compile_scheme

__all__ = [
    "SymbolEvaluation",
    "AmplificationReport",
    "OrderCheck",
    "symbol",
    "amplification",
    "order_check",
    "defect_table_csv",
    "FourierError",
]

DEFECT_FLOOR = 1e-13


class FourierError(ValueError):
    pass


@dataclass(frozen=True)
class SymbolEvaluation:
    """Wavevector, parameter bindings and time step for one symbol evaluation."""

    k: tuple[float, ...]
    bindings: dict
    dt: float = 1.0

    @property
    def dx(self) -> float:
        return self.bindings.get("lambda", 1.0) * self.dt


@dataclass
class AmplificationReport:
    G: np.ndarray
    eigenvalues: np.ndarray
    conserved: np.ndarray
    defect: float | None = None
    table: list = dc_field(default_factory=list)


@dataclass
class OrderCheck:
    """Per-dt defects and the fitted log-log slope."""

    dts: np.ndarray
    defects: np.ndarray
    slope: float
    used: np.ndarray
    terms: int

    def rows(self):
        return [(float(t), float(e), bool(u)) for t, e, u in zip(self.dts, self.defects, self.used)]


def _bindings_for(spec: SchemeSpec, bindings):
    b = dict(spec.defaults)
    b.update(bindings or {})
    return b


def symbol(P: OperatorMatrix, ev: SymbolEvaluation) -> np.ndarray:
    """Complex matrix with every d_alpha replaced by i k_alpha."""
    try:
        return P.symbol(ev.k, ev.bindings)
    except KeyError as exc:
        raise FourierError(f"unbound parameter in symbol: {exc.args[0]}") from None


def _numeric(x, bindings):
    try:
        return complex(x.evaluate(bindings))
    except KeyError as exc:
        raise FourierError(f"unbound parameter: {exc.args[0]}") from None


def relaxation_matrix(spec: SchemeSpec, bindings) -> np.ndarray:
    """J = [[I, 0], [S E, I - S]] in moment space."""
    if not spec.is_linear:
        raise FourierError("amplification needs a linear equilibrium (linearize the scheme first)")
    N, q = spec.N, spec.q
    s = np.array([_numeric(x, bindings) for x in spec.s])
    E = np.array([[_numeric(c, bindings) for c in row] for row in spec.equilibrium.E])
    J = np.zeros((q, q), dtype=complex)
    J[:N, :N] = np.eye(N)
    J[N:, :N] = s[:, None] * E
    J[N:, N:] = np.diag(1.0 - s)
    return J


def amplification(spec: SchemeSpec, ev: SymbolEvaluation, dtype=complex) -> AmplificationReport:
    """Exact one-step amplification matrix and its eigenvalues at wavevector k.

    ``dtype=np.clongdouble`` runs the exponential and the eigenvalue
    iteration in extended precision, which lowers the rounding floor of
    log(g)/dt at small dt.
    """
    bindings = _bindings_for(spec, ev.bindings)
    ev = SymbolEvaluation(tuple(ev.k), bindings, ev.dt)
    comp = compile_scheme(spec)
    L = symbol(comp.Lambda, ev)
    J = relaxation_matrix(spec, bindings).astype(dtype)
    G = expm(-ev.dt * L.astype(dtype), dtype=dtype) @ J
    lam = eigvals(G, dtype=dtype)
    idx = np.argsort(np.abs(lam - 1.0), kind="stable")[: spec.N]
    return AmplificationReport(G=G, eigenvalues=lam, conserved=lam[idx])


def _match(a, b):
    """Permutation of b minimizing the total distance to a."""
    cost = np.abs(a[:, None] - b[None, :]).astype(float)
    rows, cols = linear_sum_assignment(cost)
    out = np.empty_like(b)
    out[rows] = b[cols]
    return out


def series_symbol(alphas, ev: SymbolEvaluation, terms: int) -> np.ndarray:
    """Symbol of alpha_1 + dt alpha_2 + ... truncated after ``terms`` terms."""
    S = None
    for j, a in enumerate(alphas[:terms]):
        sj = symbol(a, ev) * ev.dt**j
        S = sj if S is None else S + sj
    return S


def conserved_defect(spec, alphas, ev: SymbolEvaluation, terms: int, dtype=np.clongdouble) -> float:
    rep = amplification(spec, ev, dtype=dtype)
    bindings = _bindings_for(spec, ev.bindings)
    ev = SymbolEvaluation(tuple(ev.k), bindings, ev.dt)
    pde = eigvals(series_symbol(alphas, ev, terms).astype(dtype), dtype=dtype)
    rates = np.log(rep.conserved) / ev.dt
    matched = _match(rates, -pde)
    return float(np.sqrt(np.sum(np.abs(rates - matched) ** 2)))


def order_check(
    spec: SchemeSpec,
    expansion,
    k: Sequence[float],
    dts: Sequence[float] | None = None,
    bindings=None,
    terms: int | None = None,
    T0: float = 1.0,
) -> OrderCheck:
    """Fit the convergence order of the truncated symbol series.

    Parameters
    ----------
    spec : SchemeSpec
        Linear scheme.
    expansion : Expansion
        Output of ``taylor_expand_linear``.
    k : sequence of float
        Physical wavevector, fixed while dt is refined.
    dts : sequence of float, optional
        Time steps; default ``T0 * 2**-j`` for j = 4..10.
    terms : int, optional
        Number of alpha_j kept (default: all of them).
    """
    if expansion.engine != "taylor-linear":
        raise FourierError("order_check needs the linear engine's operator matrices")
    alphas = expansion.gammas
    terms = len(alphas) if terms is None else terms
    if not 1 <= terms <= len(alphas):
        raise FourierError(f"terms = {terms} outside 1..{len(alphas)}")
    if dts is None:
        dts = [T0 * 2.0**-j for j in range(4, 11)]
    dts = np.asarray(dts, dtype=float)
    b = _bindings_for(spec, bindings)
    defects = np.array(
        [conserved_defect(spec, alphas, SymbolEvaluation(tuple(k), b, float(dt)), terms) for dt in dts]
    )
    used = defects > DEFECT_FLOOR
    if used.sum() < 2:
        raise FourierError("fewer than two defects above the rounding floor")
    slope = float(np.polyfit(np.log(dts[used]), np.log(defects[used]), 1)[0])
    return OrderCheck(dts=dts, defects=defects, slope=slope, used=used, terms=terms)


def defect_table_csv(check: OrderCheck, delimiter: str = ",") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(["dt", "defect", "used_in_fit"])
    for dt, e, u in check.rows():
        w.writerow([f"{dt:.17g}", f"{e:.17g}", int(u)])
    w.writerow(["slope", f"{check.slope:.6f}", ""])
    return buf.getvalue()
