"""Text format for scheme definitions.

A scheme file is a sequence of ``[section]`` headers followed by
``key = value`` lines.  ``#`` starts a comment; blank lines are ignored.
Keys may repeat only where noted (``row``).

Grammar::

    file       := { line }
    line       := blank | comment | "[" section "]" | key "=" value
    section    := "lattice" | "moments" | "relaxation" | "equilibrium" | "bindings"

    [lattice]
      name     = <identifier or dashed word>     optional, default: file stem
      d        = <int>                            spatial dimension
      q        = <int>                            optional, checked against stencil
      velocity = <identifier>                     optional, default: lambda
      stencil  = (c1,..,cd) (c1,..,cd) ...        integer velocities, one tuple each

    [moments]
      names     = name0 name1 ...                 optional, q identifiers
      conserved = <int>                           N (alias: N)
      row       = e1, e2, ..., eq                 repeated q times, in order

    [relaxation]                                  one line per nonconserved moment
      <moment>  = s: <expr>                       relaxation rate
      <moment>  = sigma: <expr>                   Henon coefficient, s = 1/(sigma + 1/2)
      <moment>  = <expr>                          same as "s:"

    [equilibrium]
      type      = linear | nonlinear
      <moment>  = <expr>                          one per nonconserved moment; may use
                                                  the conserved moment names
      row       = e1, ..., eN                     linear only: rows of E instead of
                                                  per-moment expressions (q - N rows)

    [bindings]                                    default numeric values
      <parameter> = <number>

    expr := numbers (integers, decimals, a/b), parameter names, conserved
            field names (equilibrium only), + - * / ( ), and ^ or ** with an
            integer exponent.

Unnamed moments are called ``m0``, ``m1``, ...  For ``type = linear`` given by
expressions, every expression must be linear in the conserved fields; the
matrix E is extracted exactly.  Errors carry the 1-based line and column of
the offending token.
"""

from __future__ import annotations

import ast
import keyword
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .algebra import Scalar, as_scalar
from .jet import JetVar, as_jet, field, partial
from .scheme import Linear, Nonlinear, SchemeError, SchemeSpec, rate_of_sigma, validate

__all__ = ["SchemeFileError", "parse_scheme", "load_scheme", "parse_expression", "dump_scheme"]

SECTIONS = ("lattice", "moments", "relaxation", "equilibrium", "bindings")


class SchemeFileError(SchemeError):
    """Parse or validation error located in a scheme file."""

    def __init__(self, message, line=None, col=None, source="<scheme>"):
        self.message = message
        self.line = line
        self.col = col
        self.source = source
        super().__init__(str(self))

    def __str__(self):
        loc = self.source
        if self.line is not None:
            loc += f":{self.line}"
            if self.col is not None:
                loc += f":{self.col}"
        return f"{loc}: {self.message}"


@dataclass
class _Entry:
    key: str
    value: str
    line: int
    col: int  # 1-based column where the value starts


# ---------------------------------------------------------------------------
# expressions


def _caret_to_pow(text):
    """Replace ``^`` by ``**``; return new text and a column map new -> old."""
    out, cmap = [], []
    for i, ch in enumerate(text):
        if ch == "^":
            out.append("**")
            cmap.extend((i, i))
        else:
            out.append(ch)
            cmap.append(i)
    cmap.append(len(text))
    return "".join(out), cmap


_WORD_RE = re.compile(r"[A-Za-z_]\w*")


def _mask_keywords(text):
    """Rename Python keywords (``lambda``...) to same-length identifiers."""
    back = {}

    def sub(m):
        w = m.group(0)
        if not keyword.iskeyword(w):
            return w
        alias = "_" + w[1:]
        back[alias] = w
        return alias

    masked = _WORD_RE.sub(sub, text)
    return masked, back


class _ExprBuilder:
    def __init__(self, fields, d, line, col0, cmap, source, renamed=None):
        self.renamed = renamed or {}
        self.fields = fields or {}
        self.d = d
        self.line = line
        self.col0 = col0
        self.cmap = cmap
        self.source = source

    def fail(self, node, msg):
        off = getattr(node, "col_offset", 0) or 0
        off = self.cmap[min(off, len(self.cmap) - 1)]
        raise SchemeFileError(msg, self.line, self.col0 + off, self.source)

    def build(self, node):
        if isinstance(node, ast.Expression):
            return self.build(node.body)
        if isinstance(node, ast.Constant):
            v = node.value
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                self.fail(node, f"unexpected constant {v!r}")
            return as_scalar(Fraction(repr(v)) if isinstance(v, float) else v)
        if isinstance(node, ast.Name):
            name = self.renamed.get(node.id, node.id)
            if name in self.fields:
                return field(self.fields[name], self.d)
            return Scalar.symbol(name)
        if isinstance(node, ast.UnaryOp):
            x = self.build(node.operand)
            if isinstance(node.op, ast.USub):
                return -x
            if isinstance(node.op, ast.UAdd):
                return x
            self.fail(node, "unsupported unary operator")
        if isinstance(node, ast.BinOp):
            op = node.op
            if isinstance(op, ast.Pow):
                e = self._int_exponent(node.right)
                base = self.build(node.left)
                if e < 0 and not base:
                    self.fail(node, "zero raised to a negative power")
                return base**e
            a, b = self.build(node.left), self.build(node.right)
            if isinstance(op, ast.Add):
                return a + b
            if isinstance(op, ast.Sub):
                return a - b
            if isinstance(op, ast.Mult):
                return a * b
            if isinstance(op, ast.Div):
                if not b:
                    self.fail(node.right, "division by zero")
                return a / b
            self.fail(node, f"unsupported operator {type(op).__name__}")
        self.fail(node, f"unsupported syntax ({type(node).__name__})")

    def _int_exponent(self, node):
        sign = 1
        while isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            if isinstance(node.op, ast.USub):
                sign = -sign
            node = node.operand
        if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
            return sign * node.value
        self.fail(node, "exponent must be an integer literal")


def parse_expression(text, fields=None, d=1, line=None, col=1, source="<expr>"):
    """Exact Scalar / JetExpr from an arithmetic expression string.

    ``fields`` maps names to conserved-field indices; any other identifier
    becomes a symbolic parameter.
    """
    stripped = text.lstrip()
    col += len(text) - len(stripped)
    body = stripped.rstrip()
    if not body:
        raise SchemeFileError("empty expression", line, col, source)
    masked, renamed = _mask_keywords(body)
    for alias in renamed:
        if re.search(rf"\b{alias}\b", body):
            raise SchemeFileError(f"identifier {alias!r} is reserved", line, col + body.index(alias), source)
    conv, cmap = _caret_to_pow(masked)
    try:
        tree = ast.parse(conv, mode="eval")
    except SyntaxError as exc:
        if not exc.offset:  # CPython reports offset 0 when the input ends early
            raise SchemeFileError("unexpected end of expression", line, col + len(body), source) from None
        off = cmap[min(exc.offset - 1, len(cmap) - 1)]
        raise SchemeFileError(f"syntax error in expression: {exc.msg}", line, col + off, source) from None
    return _ExprBuilder(fields, d, line, col, cmap, source, renamed).build(tree)


# ---------------------------------------------------------------------------
# file structure


_SECTION_RE = re.compile(r"^\s*\[\s*([A-Za-z_][\w-]*)\s*\]\s*$")


def _strip_comment(raw):
    i = raw.find("#")
    return raw if i < 0 else raw[:i]


def _tokenize(text, source):
    sections: dict[str, list[_Entry]] = {}
    headers: dict[str, int] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        m = _SECTION_RE.match(line)
        if m:
            name = m.group(1).lower()
            if name not in SECTIONS:
                col = line.index(m.group(1)) + 1
                raise SchemeFileError(f"unknown section [{m.group(1)}]; expected one of {', '.join(SECTIONS)}",
                                      lineno, col, source)
            if name in sections:
                raise SchemeFileError(f"duplicate section [{name}]", lineno, line.index("[") + 1, source)
            sections[name] = []
            headers[name] = lineno
            current = name
            continue
        if line.lstrip().startswith("["):
            raise SchemeFileError("malformed section header", lineno, line.index("[") + 1, source)
        if "=" not in line:
            col = len(line) - len(line.lstrip()) + 1
            raise SchemeFileError("expected 'key = value'", lineno, col, source)
        if current is None:
            col = len(line) - len(line.lstrip()) + 1
            raise SchemeFileError("entry outside of any section", lineno, col, source)
        k, v = line.split("=", 1)
        key = k.strip()
        kcol = len(k) - len(k.lstrip()) + 1
        if not re.fullmatch(r"[A-Za-z_][\w-]*", key):
            raise SchemeFileError(f"invalid key {key!r}", lineno, kcol, source)
        sections[current].append(_Entry(key, v, lineno, len(k) + 2))
    return sections, headers


def _single(entries, key, section, source, required=True, header_line=None):
    hits = [e for e in entries if e.key == key]
    if len(hits) > 1:
        e = hits[1]
        raise SchemeFileError(f"duplicate key '{key}' in [{section}]", e.line, 1, source)
    if not hits:
        if required:
            raise SchemeFileError(f"missing key '{key}' in [{section}]", header_line, None, source)
        return None
    return hits[0]


def _int_value(e, source):
    v = e.value.strip()
    if not re.fullmatch(r"[+-]?\d+", v):
        raise SchemeFileError(f"'{e.key}' must be an integer", e.line, e.col + len(e.value) - len(e.value.lstrip()),
                              source)
    return int(v)


def _split_commas(e):
    """Split a value on commas, keeping the column of every piece."""
    out, start = [], 0
    depth = 0
    for i, ch in enumerate(e.value + ","):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            piece = e.value[start:i]
            out.append((piece, e.col + start + len(piece) - len(piece.lstrip())))
            start = i + 1
    return out


_TUPLE_RE = re.compile(r"\(([^()]*)\)")


def _parse_stencil(e, d, source):
    text = e.value
    vecs = []
    pos = 0
    for m in _TUPLE_RE.finditer(text):
        gap = text[pos : m.start()]
        if gap.strip(" \t,"):
            off = pos + len(gap) - len(gap.lstrip(" \t,"))
            raise SchemeFileError("expected '(' starting a velocity tuple", e.line, e.col + off, source)
        parts = m.group(1).split(",")
        vec = []
        for p in parts:
            if not re.fullmatch(r"\s*[+-]?\d+\s*", p):
                raise SchemeFileError("stencil components must be integers", e.line, e.col + m.start() + 1, source)
            vec.append(int(p))
        if len(vec) != d:
            raise SchemeFileError(f"velocity has {len(vec)} components, expected d = {d}", e.line,
                                  e.col + m.start(), source)
        vecs.append(tuple(vec))
        pos = m.end()
    rest = text[pos:]
    if rest.strip(" \t,\r\n"):
        off = pos + len(rest) - len(rest.lstrip(" \t,"))
        raise SchemeFileError("unexpected text in stencil", e.line, e.col + off, source)
    if not vecs:
        raise SchemeFileError("empty stencil", e.line, e.col, source)
    return tuple(vecs)


def parse_scheme(text: str, source: str = "<scheme>", name: str | None = None) -> SchemeSpec:
    """Build a SchemeSpec from scheme-file text (see the module docstring)."""
    sections, headers = _tokenize(text, source)
    for req in ("lattice", "moments", "relaxation", "equilibrium"):
        if req not in sections:
            raise SchemeFileError(f"missing section [{req}]", None, None, source)

    # [lattice]
    lat = sections["lattice"]
    known = {"name", "d", "q", "velocity", "stencil"}
    for e in lat:
        if e.key not in known:
            raise SchemeFileError(f"unknown key '{e.key}' in [lattice]", e.line, 1, source)
    hl = headers["lattice"]
    d = _int_value(_single(lat, "d", "lattice", source, header_line=hl), source)
    if d < 1:
        raise SchemeFileError("d must be positive", _single(lat, "d", "lattice", source).line, None, source)
    st_entry = _single(lat, "stencil", "lattice", source, header_line=hl)
    stencil = _parse_stencil(st_entry, d, source)
    q = len(stencil)
    qe = _single(lat, "q", "lattice", source, required=False)
    if qe is not None and _int_value(qe, source) != q:
        raise SchemeFileError(f"q = {_int_value(qe, source)} but the stencil has {q} velocities", qe.line, qe.col,
                              source)
    ve = _single(lat, "velocity", "lattice", source, required=False)
    velocity = ve.value.strip() if ve is not None else "lambda"
    if not velocity.isidentifier():
        raise SchemeFileError("velocity must be an identifier", ve.line, ve.col, source)
    ne = _single(lat, "name", "lattice", source, required=False)
    scheme_name = ne.value.strip() if ne is not None else (name or "scheme")

    # [moments]
    mom = sections["moments"]
    hm = headers["moments"]
    for e in mom:
        if e.key not in {"names", "conserved", "N", "row"}:
            raise SchemeFileError(f"unknown key '{e.key}' in [moments]", e.line, 1, source)
    names_e = _single(mom, "names", "moments", source, required=False)
    if names_e is not None:
        names = tuple(names_e.value.split())
        if len(names) != q:
            raise SchemeFileError(f"{len(names)} moment names for q = {q}", names_e.line, names_e.col, source)
        for nm in names:
            if not nm.isidentifier():
                raise SchemeFileError(f"invalid moment name {nm!r}", names_e.line,
                                      names_e.col + names_e.value.index(nm), source)
        if len(set(names)) != q:
            raise SchemeFileError("duplicate moment names", names_e.line, names_e.col, source)
    else:
        names = tuple(f"m{i}" for i in range(q))
    ce = [e for e in mom if e.key in ("conserved", "N")]
    if len(ce) != 1:
        raise SchemeFileError("[moments] needs exactly one 'conserved' entry", ce[1].line if ce else hm, None, source)
    N = _int_value(ce[0], source)
    if not 1 <= N < q:
        raise SchemeFileError(f"conserved = {N} outside 1..{q - 1}", ce[0].line, ce[0].col, source)
    rows = [e for e in mom if e.key == "row"]
    if len(rows) != q:
        where = rows[q] if len(rows) > q else None
        raise SchemeFileError(f"{len(rows)} matrix rows for q = {q}", where.line if where else hm, None, source)
    all_names = {n: k for k, n in enumerate(names)}
    M = []
    for e in rows:
        pieces = _split_commas(e)
        if len(pieces) != q:
            raise SchemeFileError(f"row has {len(pieces)} entries, expected {q}", e.line, e.col, source)
        row = []
        for txt, c in pieces:
            x = parse_expression(txt, all_names, d, e.line, c, source)
            if x.has_jets():
                raise SchemeFileError("moment matrix entries cannot use moment names", e.line, c, source)
            row.append(x)
        M.append(tuple(row))
    M = tuple(M)
    fields = {names[k]: k for k in range(N)}
    nonconserved = names[N:]

    # [relaxation]
    rel = sections["relaxation"]
    s_by_name = {}
    for e in rel:
        if e.key not in nonconserved:
            raise SchemeFileError(f"'{e.key}' is not a nonconserved moment (expected one of {', '.join(nonconserved)})",
                                  e.line, 1, source)
        if e.key in s_by_name:
            raise SchemeFileError(f"duplicate relaxation for '{e.key}'", e.line, 1, source)
        m = re.match(r"\s*(s|sigma)\s*:", e.value)
        kind, body, col = "s", e.value, e.col
        if m:
            kind = m.group(1)
            body = e.value[m.end():]
            col = e.col + m.end()
        x = parse_expression(body, None, d, e.line, col, source)
        if kind == "sigma":
            if x == Scalar(Fraction(-1, 2)):
                raise SchemeFileError("sigma = -1/2 gives an infinite relaxation rate", e.line, col, source)
            x = rate_of_sigma(x)
        if x.is_constant() and not 0 < x.to_fraction() <= 2:
            col += len(body) - len(body.lstrip())
            raise SchemeFileError(f"relaxation rate s = {x.to_fraction()} outside 0 < s <= 2", e.line, col, source)
        s_by_name[e.key] = x
    missing = [n for n in nonconserved if n not in s_by_name]
    if missing:
        raise SchemeFileError(f"no relaxation given for {', '.join(missing)}", headers["relaxation"], None, source)
    s = tuple(s_by_name[n] for n in nonconserved)

    # [equilibrium]
    eq = sections["equilibrium"]
    he = headers["equilibrium"]
    te = _single(eq, "type", "equilibrium", source, required=False)
    kind = te.value.strip().lower() if te is not None else "nonlinear"
    if kind not in ("linear", "nonlinear"):
        raise SchemeFileError("type must be 'linear' or 'nonlinear'", te.line, te.col, source)
    erows = [e for e in eq if e.key == "row"]
    exprs = {}
    for e in eq:
        if e.key in ("type", "row"):
            continue
        if e.key not in nonconserved:
            raise SchemeFileError(f"'{e.key}' is not a nonconserved moment", e.line, 1, source)
        if e.key in exprs:
            raise SchemeFileError(f"duplicate equilibrium for '{e.key}'", e.line, 1, source)
        exprs[e.key] = (parse_expression(e.value, fields, d, e.line, e.col, source), e)
    if erows and kind != "linear":
        raise SchemeFileError("'row' entries are only allowed for type = linear", erows[0].line, 1, source)
    if erows and exprs:
        raise SchemeFileError("give either E rows or per-moment expressions, not both", erows[0].line, 1, source)
    if kind == "linear":
        if erows:
            if len(erows) != q - N:
                raise SchemeFileError(f"{len(erows)} rows of E, expected {q - N}", he, None, source)
            E = []
            for e in erows:
                pieces = _split_commas(e)
                if len(pieces) != N:
                    raise SchemeFileError(f"E row has {len(pieces)} entries, expected {N}", e.line, e.col, source)
                row = []
                for t, c in pieces:
                    x = parse_expression(t, fields, d, e.line, c, source)
                    if x.has_jets():
                        raise SchemeFileError("entries of E are coefficients and cannot use field names", e.line, c,
                                              source)
                    row.append(x)
                E.append(tuple(row))
        else:
            E = []
            for n in nonconserved:
                if n not in exprs:
                    raise SchemeFileError(f"no equilibrium given for '{n}'", he, None, source)
                expr, e = exprs[n]
                E.append(_linear_row(as_jet(expr), N, d, e, source))
        equilibrium = Linear(tuple(tuple(as_scalar(c) for c in r) for r in E))
    else:
        missing = [n for n in nonconserved if n not in exprs]
        if missing:
            raise SchemeFileError(f"no equilibrium given for {', '.join(missing)}", he, None, source)
        equilibrium = Nonlinear(tuple(as_jet(exprs[n][0]) for n in nonconserved))

    # [bindings]
    defaults = {}
    for e in sections.get("bindings", []):
        v = e.value.strip()
        try:
            val = float(Fraction(v))
        except (ValueError, ZeroDivisionError):
            raise SchemeFileError(f"binding '{e.key}' must be a number", e.line, e.col, source) from None
        if e.key in defaults:
            raise SchemeFileError(f"duplicate binding '{e.key}'", e.line, 1, source)
        defaults[e.key] = val

    spec = SchemeSpec(
        name=scheme_name,
        d=d,
        stencil=stencil,
        M=M,
        N=N,
        s=s,
        equilibrium=equilibrium,
        moment_names=names,
        velocity=velocity,
        defaults=defaults,
    )
    errs = [x for x in validate(spec) if x.level == "error"]
    if errs:
        msg = errs[0].message
        where = None
        for word, sec in (("moment", "moments"), ("relaxation", "relaxation"), ("equilibri", "equilibrium"),
                          ("velocit", "lattice"), ("stencil", "lattice")):
            if word in msg:
                where = headers.get(sec)
                break
        raise SchemeFileError("invalid scheme: " + "; ".join(x.message for x in errs), where, None, source)
    return spec


def _linear_row(expr, N, d, entry, source):
    zero = (0,) * d
    row = []
    for k in range(N):
        c = partial(expr, JetVar(k, zero))
        if c.has_jets():
            raise SchemeFileError(f"equilibrium for '{entry.key}' is not linear in the conserved fields",
                                  entry.line, entry.col, source)
        row.append(as_scalar(c))
    rest = expr
    for k, c in enumerate(row):
        rest = rest - c * field(k, d)
    if rest:
        raise SchemeFileError(f"equilibrium for '{entry.key}' has a constant or nonlinear part", entry.line,
                              entry.col, source)
    return row


def load_scheme(path) -> SchemeSpec:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise SchemeFileError(f"cannot read scheme file: {exc.strerror}", None, None, str(path)) from None
    return parse_scheme(text, source=str(path), name=p.stem)


# ---------------------------------------------------------------------------
# writing


def dump_scheme(spec: SchemeSpec) -> str:
    """Scheme-file text for ``spec``; parse_scheme(dump_scheme(s)) rebuilds it."""
    from .render import Naming, to_text

    names = spec.moment_names or tuple(f"m{i}" for i in range(spec.q))
    fnames = Naming(fields=tuple(names[: spec.N]))

    def ex(x):
        return to_text(as_jet(x), fnames).replace(" ", "")

    lines = ["[lattice]", f"name = {spec.name}", f"d = {spec.d}", f"velocity = {spec.velocity}",
             "stencil = " + " ".join("(" + ",".join(map(str, c)) + ")" for c in spec.stencil), "",
             "[moments]", "names = " + " ".join(names), f"conserved = {spec.N}"]
    for row in spec.M:
        lines.append("row = " + ", ".join(ex(c) for c in row))
    lines += ["", "[relaxation]"]
    for n, x in zip(names[spec.N:], spec.s):
        lines.append(f"{n} = s: {ex(x)}")
    lines += ["", "[equilibrium]"]
    if spec.is_linear:
        lines.append("type = linear")
        for r in spec.equilibrium.E:
            lines.append("row = " + ", ".join(ex(c) for c in r))
    else:
        lines.append("type = nonlinear")
        for n, e in zip(names[spec.N:], spec.phi()):
            lines.append(f"{n} = {ex(e)}")
    if spec.defaults:
        lines += ["", "[bindings]"]
        for k in sorted(spec.defaults):
            lines.append(f"{k} = {spec.defaults[k]!r}")
    return "\n".join(lines) + "\n"
