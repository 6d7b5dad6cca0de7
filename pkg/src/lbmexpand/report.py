"""Expansion reports: plain text, LaTeX and a JSON tree that round-trips.

The tree form is

    {"format": "lbmexpand-expansion", "version": 1, "engine": ..., "order": ...,
     "scheme": name, "fields": [...], "d": d,
     "gammas": [...], "psis": [...], "notes": [...]}

where each entry of ``gammas``/``psis`` is either a list of expression trees
(jet-vector engines) or an operator-matrix tree (linear engine).  Timings
are left out so identical inputs give byte-identical output.
"""

from __future__ import annotations

import json

from .algebra import OperatorMatrix, Scalar
from .expand import Expansion
from .jet import JetVar, as_jet, jet_substitute, partial
from .render import (
    Naming,
    expr_from_tree,
    expr_to_tree,
    matrix_latex,
    matrix_text,
    opmatrix_from_tree,
    opmatrix_to_tree,
    to_latex,
    to_text,
)

__all__ = [
    "expansion_to_tree",
    "expansion_from_tree",
    "expansion_json",
    "expansion_text",
    "expansion_latex",
    "expansions_equal",
    "transport_coefficients",
    "substitute_expansion",
]

TREE_FORMAT = "lbmexpand-expansion"


def _naming(exp: Expansion) -> Naming:
    if exp.spec is not None:
        return exp.spec.naming()
    return Naming()


def expansion_to_tree(exp: Expansion) -> dict:
    def enc(x):
        if isinstance(x, OperatorMatrix):
            return {"operator": opmatrix_to_tree(x)}
        return {"vector": [expr_to_tree(e) for e in x]}

    spec = exp.spec
    return {
        "format": TREE_FORMAT,
        "version": 1,
        "engine": exp.engine,
        "order": exp.order,
        "scheme": spec.name if spec is not None else None,
        "d": spec.d if spec is not None else None,
        "fields": list(spec.field_names) if spec is not None else None,
        "gammas": [enc(g) for g in exp.gammas],
        "psis": [enc(p) for p in exp.psis],
        "notes": list(exp.notes),
    }


def expansion_from_tree(tree: dict, spec=None) -> Expansion:
    """Inverse of ``expansion_to_tree``; ``spec`` is reattached if given."""
    if tree.get("format") != TREE_FORMAT:
        raise ValueError("not an expansion tree")

    def dec(x):
        if "operator" in x:
            return opmatrix_from_tree(x["operator"])
        return [as_jet(expr_from_tree(t)) for t in x["vector"]]

    return Expansion(
        engine=tree["engine"],
        order=int(tree["order"]),
        gammas=[dec(g) for g in tree["gammas"]],
        psis=[dec(p) for p in tree["psis"]],
        spec=spec,
        notes=list(tree.get("notes", [])),
    )


def expansion_json(exp: Expansion, indent: int = 1) -> str:
    return json.dumps(expansion_to_tree(exp), indent=indent, sort_keys=True) + "\n"


def expansions_equal(a: Expansion, b: Expansion) -> bool:
    if (a.engine, a.order, len(a.gammas), len(a.psis)) != (b.engine, b.order, len(b.gammas), len(b.psis)):
        return False
    for xs, ys in ((a.gammas, b.gammas), (a.psis, b.psis)):
        for x, y in zip(xs, ys):
            if isinstance(x, OperatorMatrix) != isinstance(y, OperatorMatrix):
                return False
            if isinstance(x, OperatorMatrix):
                if x != y:
                    return False
            elif len(x) != len(y) or any(p != q for p, q in zip(x, y)):
                return False
    return True


def substitute_expansion(exp: Expansion, values: dict) -> Expansion:
    """Expansion with parameters replaced by exact values (name -> Scalar)."""
    if not values:
        return exp

    def sub(x):
        if isinstance(x, OperatorMatrix):
            from .algebra import DiffOp

            rows = [[DiffOp(e.d, {mu: c.subs(values) for mu, c in e.terms.items()}) for e in row] for row in x.entries]
            return OperatorMatrix(rows, x.d) if rows else x
        return [as_jet(e).subs(values) for e in x]

    return Expansion(exp.engine, exp.order, [sub(g) for g in exp.gammas], [sub(p) for p in exp.psis], exp.spec,
                     list(exp.notes))


# ---------------------------------------------------------------------------
# transport coefficients


def transport_coefficients(exp: Expansion) -> dict:
    """Identify diffusion coefficients from Gamma_2 (symbolic, with dt).

    * one conserved field: ``kappa`` with d_t W = kappa d_xx W (1D) read
      off the coefficient of W_xx,
    * d = 2 and three conserved fields (rho, Jx, Jy): shear and bulk
      viscosities ``mu`` and ``zeta`` of the stress
      d_j (mu (d_i u_j + d_j u_i) + (zeta - mu) div u delta_ij), read off
      the coefficients of Jx_yy and Jx_xx at zero momentum.

    Values are multiplied by the symbol ``dt``.  Returns {} when neither
    pattern applies.
    """
    spec = exp.spec
    if spec is None or exp.order < 2:
        return {}
    G2 = exp.gamma_vectors()[1]
    dt = Scalar.symbol("dt")
    d = spec.d
    if spec.N == 1:
        mu = tuple(2 if a == 0 else 0 for a in range(d))
        c = partial(G2[0], JetVar(0, mu))
        if c.has_jets():
            return {}
        return {"kappa": -dt * c}
    if d == 2 and spec.N == 3:
        zero = {JetVar(1, (0, 0)): 0, JetVar(2, (0, 0)): 0}
        rho = as_jet(JetVar(0, (0, 0)).expr())
        cyy = jet_substitute(partial(G2[1], JetVar(1, (0, 2))), zero)
        cxx = jet_substitute(partial(G2[1], JetVar(1, (2, 0))), zero)
        mu = as_jet(-dt * rho * cyy)
        zeta = as_jet(-dt * rho * cxx - mu)
        return {"mu": mu, "zeta": zeta}
    return {}


# ---------------------------------------------------------------------------
# text / LaTeX


def _pde_text(exp, naming):
    names = naming.fields
    lines = []
    for i in range(exp.spec.N if exp.spec else 0):
        parts = [f"d_t {names[i]}"]
        for j in range(1, len(exp.gammas) + 1):
            parts.append(f"{'' if j == 1 else f'dt^{j - 1} ' if j > 2 else 'dt '}Gamma_{j}[{i}]")
        lines.append(" + ".join(parts) + f" = O(dt^{len(exp.gammas)})")
    return lines


def expansion_text(exp: Expansion) -> str:
    naming = _naming(exp)
    spec = exp.spec
    out = [f"# expansion: engine={exp.engine} order={exp.order} scheme={spec.name if spec else '?'}"]
    if spec is not None:
        out.append("# conserved fields: " + ", ".join(naming.fields))
        out.append("# equivalent equations:")
        out += ["#   " + x for x in _pde_text(exp, naming)]
    for j, g in enumerate(exp.gammas, start=1):
        out.append(f"alpha_{j} (Gamma_{j} = alpha_{j} W):" if isinstance(g, OperatorMatrix) else f"Gamma_{j}:")
        if isinstance(g, OperatorMatrix):
            out.append(matrix_text(g, naming))
        else:
            for i, e in enumerate(g):
                out.append(f"  [{naming.fields[i] if i < len(naming.fields) else i}] {to_text(e, naming)}")
    for j, p in enumerate(exp.psis, start=1):
        out.append(f"beta_{j} (Psi_{j} = beta_{j} W):" if isinstance(p, OperatorMatrix) else f"Psi_{j}:")
        if isinstance(p, OperatorMatrix):
            out.append(matrix_text(p, naming))
        else:
            ynames = spec.moment_names[spec.N :] if spec is not None and spec.moment_names else None
            for i, e in enumerate(p):
                tag = ynames[i] if ynames else str(i)
                out.append(f"  [{tag}] {to_text(e, naming)}")
    tc = transport_coefficients(exp)
    if tc:
        out.append("transport coefficients:")
        for k, v in tc.items():
            out.append(f"  {k} = {to_text(v, naming)}")
    for n in exp.notes:
        out.append(f"note: {n}")
    return "\n".join(out) + "\n"


def expansion_latex(exp: Expansion) -> str:
    naming = _naming(exp)
    spec = exp.spec
    out = [f"% expansion: engine={exp.engine} order={exp.order} scheme={spec.name if spec else '?'}"]
    for j, g in enumerate(exp.gammas, start=1):
        if isinstance(g, OperatorMatrix):
            out.append(f"\\alpha_{{{j}}} = {matrix_latex(g, naming)}")
            continue
        out.append("\\begin{align*}")
        rows = []
        for i, e in enumerate(g):
            rows.append(f"\\Gamma_{{{j}}}^{{({i})}} &= {to_latex(e, naming)}")
        out.append(" \\\\\n".join(rows))
        out.append("\\end{align*}")
    for j, p in enumerate(exp.psis, start=1):
        if isinstance(p, OperatorMatrix):
            out.append(f"\\beta_{{{j}}} = {matrix_latex(p, naming)}")
            continue
        out.append("\\begin{align*}")
        rows = [f"\\Psi_{{{j}}}^{{({i})}} &= {to_latex(e, naming)}" for i, e in enumerate(p)]
        out.append(" \\\\\n".join(rows))
        out.append("\\end{align*}")
    tc = transport_coefficients(exp)
    if tc:
        sym = {"mu": "\\mu", "zeta": "\\zeta", "kappa": "\\kappa"}
        out.append("\\begin{align*}")
        out.append(" \\\\\n".join(f"{sym[k]} &= {to_latex(v, naming)}" for k, v in tc.items()))
        out.append("\\end{align*}")
    for n in exp.notes:
        out.append(f"% note: {n}")
    return "\n".join(out) + "\n"
