"""Text, LaTeX and JSON-tree rendering of scalars, jet expressions and operators.

Term order is canonical: monomials are sorted by total degree (descending),
then by their generator names and exponents, so identical inputs give
byte-identical output regardless of the order in which generators were
registered during a run.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from .algebra import DiffOp, OperatorMatrix, Scalar, registry

__all__ = [
    "Naming",
    "to_text",
    "to_latex",
    "diffop_text",
    "diffop_latex",
    "expr_to_tree",
    "expr_from_tree",
    "diffop_to_tree",
    "diffop_from_tree",
    "opmatrix_to_tree",
    "opmatrix_from_tree",
]

AXES = ("x", "y", "z")

_GREEK = {
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota",
    "kappa", "lambda", "mu", "nu", "xi", "pi", "rho", "sigma", "tau", "upsilon",
    "phi", "chi", "psi", "omega",
}  # fmt: skip


@dataclass(frozen=True)
class Naming:
    """Display names for conserved fields and axes."""

    fields: tuple[str, ...] = ()
    axes: tuple[str, ...] = AXES

    def field_name(self, k: int) -> str:
        return self.fields[k] if k < len(self.fields) else f"W{k}"


DEFAULT = Naming()


def _frac(c) -> Fraction:
    return Fraction(int(c.numerator), int(c.denominator))


def _gen_info(i, naming):
    """(sort key, text, latex) for generator index i."""
    if i in registry.jet_of:
        k, mu = registry.jet_of[i]
        base = naming.field_name(k)
        suffix = "".join(naming.axes[a] * n for a, n in enumerate(mu))
        text = f"{base}_{suffix}" if suffix else base
        lbase = _latex_name(base)
        if suffix:
            latex = r"\partial_{" + suffix + "}" + lbase
        else:
            latex = lbase
        return (1, k, tuple(mu)), text, latex
    name = registry.names[i]
    return (0, name), name, _latex_name(name)


def _latex_name(name: str) -> str:
    if name in _GREEK:
        return "\\" + name
    m = re.fullmatch(r"([A-Za-z]+)_(\w+)", name)
    if m:
        head, sub = m.groups()
        if head == "Delta":
            return r"\Delta " + sub
        head = "\\" + head if head in _GREEK else head
        sub = "\\" + sub if sub in _GREEK else sub
        return f"{head}_{{{sub}}}"
    return name


def _sorted_terms(p, naming):
    items = []
    for m, c in p.items():
        factors = [(_gen_info(i, naming), e) for i, e in enumerate(m) if e]
        factors.sort(key=lambda t: t[0][0])
        key = (-sum(m), tuple((f[0][0], -e) for f, e in factors))
        items.append((key, _frac(c), factors))
    items.sort(key=lambda t: t[0])
    return [(c, f) for _, c, f in items]


def _poly_text(p, naming) -> str:
    if not p:
        return "0"
    out = []
    for idx, (c, factors) in enumerate(_sorted_terms(p, naming)):
        sign = "-" if c < 0 else "+"
        a = abs(c)
        parts = []
        if a != 1 or not factors:
            parts.append(str(a))
        for (_, text, _), e in factors:
            parts.append(text if e == 1 else f"{text}^{e}")
        body = "*".join(parts)
        if idx == 0:
            out.append(body if sign == "+" else "-" + body)
        else:
            out.append(f" {sign} {body}")
    return "".join(out)


def _poly_latex(p, naming) -> str:
    if not p:
        return "0"
    out = []
    for idx, (c, factors) in enumerate(_sorted_terms(p, naming)):
        sign = "-" if c < 0 else "+"
        a = abs(c)
        parts = []
        if a != 1 or not factors:
            parts.append(str(a) if a.denominator == 1 else rf"\frac{{{a.numerator}}}{{{a.denominator}}}")
        for (_, _, latex), e in factors:
            parts.append(latex if e == 1 else f"{{{latex}}}^{{{e}}}")
        body = " ".join(parts)
        if idx == 0:
            out.append(body if sign == "+" else "-" + body)
        else:
            out.append(f" {sign} {body}")
    return "".join(out)


def _nterms(p):
    return len(p)


def to_text(e, naming: Naming = DEFAULT) -> str:
    """Plain-text form, e.g. ``2*rho*rho_x`` or ``(Jx^2)/(rho)``."""
    s = e if isinstance(e, Scalar) else Scalar(e)
    num, den = s.pair()
    nt = _poly_text(num, naming)
    if den == den.ring.one:
        return nt
    dt = _poly_text(den, naming)
    if _nterms(num) > 1:
        nt = f"({nt})"
    if _nterms(den) > 1 or "*" in dt or "^" in dt:
        dt = f"({dt})"
    return f"{nt}/{dt}"


def to_latex(e, naming: Naming = DEFAULT) -> str:
    s = e if isinstance(e, Scalar) else Scalar(e)
    num, den = s.pair()
    nt = _poly_latex(num, naming)
    if den == den.ring.one:
        return nt
    return rf"\frac{{{nt}}}{{{_poly_latex(den, naming)}}}"


def _mu_text(mu, naming):
    parts = []
    for a, n in enumerate(mu):
        if n:
            parts.append(f"d{naming.axes[a]}" + (f"^{n}" if n > 1 else ""))
    return "*".join(parts)


def _sorted_ops(op):
    return sorted(op.terms.items(), key=lambda t: (-sum(t[0]), tuple(-x for x in t[0])))


def diffop_text(op: DiffOp, naming: Naming = DEFAULT) -> str:
    """Text form of an operator, e.g. ``2/3*lambda^2*dx``."""
    if not op.terms:
        return "0"
    out = []
    for idx, (mu, c) in enumerate(_sorted_ops(op)):
        ct = to_text(c, naming)
        dt = _mu_text(mu, naming)
        neg = ct.startswith("-") and "(" not in ct and " " not in ct
        if neg:
            ct = ct[1:]
        if " " in ct:
            ct = f"({ct})"
        if dt:
            body = dt if ct == "1" else f"{ct}*{dt}"
        else:
            body = ct
        if idx == 0:
            out.append("-" + body if neg else body)
        else:
            out.append(f" {'-' if neg else '+'} {body}")
    return "".join(out)


def diffop_latex(op: DiffOp, naming: Naming = DEFAULT) -> str:
    if not op.terms:
        return "0"
    out = []
    for idx, (mu, c) in enumerate(_sorted_ops(op)):
        ct = to_latex(c, naming)
        d = "".join(
            r"\partial_{" + naming.axes[a] + "}" + (f"^{{{n}}}" if n > 1 else "")
            for a, n in enumerate(mu)
            if n
        )
        neg = ct.startswith("-") and " + " not in ct and " - " not in ct[1:]
        if neg:
            ct = ct[1:]
        if " + " in ct or " - " in ct:
            ct = rf"\left({ct}\right)"
        body = d if (ct == "1" and d) else (f"{ct} {d}".strip())
        if idx == 0:
            out.append("-" + body if neg else body)
        else:
            out.append(f" {'-' if neg else '+'} {body}")
    return "".join(out)


# ---------------------------------------------------------------------------
# JSON tree


def _poly_tree(p):
    terms = []
    for c, factors in _sorted_terms(p, DEFAULT):
        fl = []
        for (key, _, _), e in factors:
            if key[0] == 1:
                fl.append({"field": key[1], "mu": list(key[2]), "exp": e})
            else:
                fl.append({"param": key[1], "exp": e})
        terms.append({"coeff": str(c), "factors": fl})
    return terms


def expr_to_tree(e) -> dict:
    """Machine-readable tree of a Scalar or JetExpr (exact rational coefficients)."""
    s = e if isinstance(e, Scalar) else Scalar(e)
    num, den = s.pair()
    return {"num": _poly_tree(num), "den": _poly_tree(den)}


def _poly_from_tree(terms):
    from .jet import JetVar

    acc = Scalar(0)
    for t in terms:
        term = Scalar(Fraction(t["coeff"]))
        for f in t["factors"]:
            if "param" in f:
                base = Scalar.symbol(f["param"])
            else:
                base = JetVar(int(f["field"]), tuple(int(x) for x in f["mu"])).expr()
            term = term * base ** int(f["exp"])
        acc = acc + term
    return acc


def expr_from_tree(tree):
    out = _poly_from_tree(tree["num"]) / _poly_from_tree(tree["den"])
    if out.has_jets():
        from .jet import as_jet

        return as_jet(out)
    return out


def diffop_to_tree(op: DiffOp) -> dict:
    return {
        "d": op.d,
        "terms": [{"mu": list(mu), "coeff": expr_to_tree(c)} for mu, c in _sorted_ops(op)],
    }


def diffop_from_tree(tree) -> DiffOp:
    d = int(tree["d"])
    return DiffOp(d, {tuple(t["mu"]): expr_from_tree(t["coeff"]) for t in tree["terms"]})


def opmatrix_to_tree(P: OperatorMatrix) -> dict:
    return {
        "rows": P.rows,
        "cols": P.cols,
        "d": P.d,
        "entries": [[diffop_to_tree(e) for e in row] for row in P.entries],
    }


def opmatrix_from_tree(tree) -> OperatorMatrix:
    d = int(tree["d"])
    entries = [[diffop_from_tree(e) for e in row] for row in tree["entries"]]
    if not entries:
        return OperatorMatrix.zeros(int(tree["rows"]), int(tree["cols"]), d)
    return OperatorMatrix(entries, d)


def matrix_text(P: OperatorMatrix, naming: Naming = DEFAULT) -> str:
    return "\n".join("[" + ", ".join(diffop_text(e, naming) for e in row) + "]" for row in P.entries)


def matrix_latex(P: OperatorMatrix, naming: Naming = DEFAULT) -> str:
    rows = [" & ".join(diffop_latex(e, naming) for e in row) for row in P.entries]
    return "\\begin{pmatrix}\n" + " \\\\\n".join(rows) + "\n\\end{pmatrix}"
