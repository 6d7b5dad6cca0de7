"""Command-line front end.

    lbmexpand derive         --scheme S [--engine ce|taylor|linear] [--order 1..4] [--format text|latex|json]
    lbmexpand symbol-check   --scheme S [--order 1..4] [--k K1,K2] [--format text|csv|json]
    lbmexpand simulate       --scheme S [--benchmark shear-wave|scalar-decay|conservation] ...
    lbmexpand validate-paper [--format text|json]

Every command accepts ``--bind name=value`` (repeatable) and ``--out PATH``.
``--scheme`` is a built-in name (d2q9-isothermal, d1q3) or a scheme file.
Exit status: 0 success, 1 failed check, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__

EXIT_OK, EXIT_CHECK, EXIT_INPUT = 0, 1, 2

ENGINE_NAMES = {"ce": "chapman-enskog", "taylor": "taylor-nonlinear", "linear": "taylor-linear"}


class InputError(Exception):
    """Bad flags, files or bindings (exit status 2)."""


# ---------------------------------------------------------------------------
# helpers


def _parse_binding(text):
    if "=" not in text:
        raise InputError(f"--bind expects name=value, got {text!r}")
    name, value = (x.strip() for x in text.split("=", 1))
    if not name.isidentifier():
        raise InputError(f"--bind: invalid parameter name {name!r}")
    try:
        val = Fraction(value)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"--bind {name}: {value!r} is not a number") from None
    return name, val


def _bindings(args):
    out = {}
    for b in args.bind or []:
        name, val = _parse_binding(b)
        if name in out:
            raise InputError(f"--bind {name} given twice")
        out[name] = val
    return out


def load_spec(source: str):
    """Built-in scheme by name, or a scheme file by path."""
    from .scheme import BUILTINS, builtin, validate, _ALIASES
    from .schemefile import load_scheme

    if source in BUILTINS or source in _ALIASES:
        return builtin(source)
    p = Path(source)
    if not p.exists():
        known = ", ".join(sorted(BUILTINS))
        raise InputError(f"--scheme {source!r}: no such built-in ({known}) or file")
    spec = load_scheme(p)
    for diag in validate(spec):
        if diag.level == "warning":
            print(f"{source}: {diag}", file=sys.stderr)
    return spec


def _numeric_bindings(spec, given, extra_allowed=()):
    """Defaults overlaid with --bind values; every free parameter must be bound."""
    free = spec.free_parameters()
    unknown = [n for n in given if n not in free and n not in extra_allowed]
    if unknown:
        raise InputError(f"--bind: {', '.join(sorted(unknown))} not a parameter of {spec.name}"
                         f" (parameters: {', '.join(sorted(free))})")
    b = dict(spec.defaults)
    b.update({k: float(v) for k, v in given.items()})
    missing = sorted(n for n in free if n not in b)
    if missing:
        raise InputError(f"unbound parameter(s) for a numeric command: {', '.join(missing)}")
    return b


def _emit(text: str, args):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _check_format(args, allowed):
    fmt = args.format or allowed[0]
    if fmt not in allowed:
        raise InputError(f"--format {fmt!r} not available for {args.command} (choose from {', '.join(allowed)})")
    return fmt


# ---------------------------------------------------------------------------
# commands


def cmd_derive(args) -> int:
    from .expand import chapman_enskog, taylor_expand, taylor_expand_linear
    from .report import expansion_json, expansion_latex, expansion_text, substitute_expansion

    fmt = _check_format(args, ("text", "latex", "json"))
    spec = load_spec(args.scheme)
    given = _bindings(args)
    free = spec.free_parameters()
    unknown = [n for n in given if n not in free]
    if unknown:
        raise InputError(f"--bind: {', '.join(sorted(unknown))} not a parameter of {spec.name}")
    engine = args.engine or "taylor"
    order = args.order or 2
    if engine == "linear":
        if not spec.is_linear:
            raise InputError(f"engine 'linear' needs a linear equilibrium; {spec.name} is nonlinear")
        exp = taylor_expand_linear(spec, order)
    elif engine == "ce":
        exp = chapman_enskog(spec, order)
    else:
        exp = taylor_expand(spec, order)
    exp = substitute_expansion(exp, given)
    render = {"text": expansion_text, "latex": expansion_latex, "json": expansion_json}[fmt]
    _emit(render(exp), args)
    return EXIT_OK


def _wavevector(args, d):
    if not args.k:
        return (2.5,) if d == 1 else (2.0, 1.3)
    try:
        k = tuple(float(x) for x in args.k.split(","))
    except ValueError:
        raise InputError(f"--k {args.k!r}: expected comma-separated numbers") from None
    if len(k) != d:
        raise InputError(f"--k has {len(k)} components, scheme has d = {d}")
    return k


def cmd_symbol_check(args) -> int:
    from .expand import taylor_expand_linear
    from .fourier import defect_table_csv, order_check
    from .scheme import linearize

    fmt = _check_format(args, ("text", "csv", "json"))
    if args.engine not in (None, "linear"):
        raise InputError("symbol-check uses the linear engine only (--engine linear)")
    spec = load_spec(args.scheme)
    if not spec.is_linear:
        state = [Fraction(1)] + [Fraction(0)] * (spec.N - 1)
        if args.state:
            try:
                state = [Fraction(x) for x in args.state.split(",")]
            except ValueError:
                raise InputError(f"--state {args.state!r}: expected comma-separated numbers") from None
            if len(state) != spec.N:
                raise InputError(f"--state needs {spec.N} values")
        spec = linearize(spec, state)
    b = _numeric_bindings(spec, _bindings(args))
    order = args.order or 4
    k = _wavevector(args, spec.d)
    lin = taylor_expand_linear(spec, 4)
    oc = order_check(spec, lin, k, bindings=b, terms=order)
    ok = abs(oc.slope - order) <= 0.3 if order < 4 else oc.slope >= 3.7
    if fmt == "csv":
        text = defect_table_csv(oc)
    elif fmt == "json":
        text = json.dumps({"scheme": spec.name, "terms": order, "k": list(k), "slope": oc.slope, "passed": ok,
                           "rows": [{"dt": t, "defect": e, "used": u} for t, e, u in oc.rows()]},
                          indent=1, sort_keys=True) + "\n"
    else:
        lines = [f"# symbol check: scheme={spec.name} terms={order} k={k}", f"{'dt':>12} {'defect':>12} used"]
        for t, e, u in oc.rows():
            lines.append(f"{t:12.6g} {e:12.4e} {'yes' if u else 'no'}")
        target = f">= 3.7" if order == 4 else f"within 0.3 of {order}"
        lines.append(f"slope {oc.slope:.3f} (expected {target}): {'PASS' if ok else 'FAIL'}")
        text = "\n".join(lines) + "\n"
    _emit(text, args)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_simulate(args) -> int:
    from .sim import (
        SimulationError,
        conservation_run,
        scalar_decay_benchmark,
        shear_wave_benchmark,
        timeseries_csv,
        write_snapshot,
    )

    fmt = _check_format(args, ("text", "csv", "json"))
    spec = load_spec(args.scheme)
    b = _numeric_bindings(spec, _bindings(args))
    bench = args.benchmark or ("shear-wave" if spec.d == 2 else "scalar-decay")
    tol = args.tolerance
    if args.resolution is not None and args.resolution < 4:
        raise InputError("--resolution must be at least 4")
    if args.amplitude is not None and not args.amplitude > 0:
        raise InputError("--amplitude must be positive")
    if args.steps is not None and args.steps < 1:
        raise InputError("--steps must be positive")
    try:
        if bench == "conservation":
            shape = (args.resolution or 32,) * spec.d
            drift, before, after, state = conservation_run(spec, shape, args.steps or 10_000, b, seed=args.seed)
            if args.snapshot:
                write_snapshot(args.snapshot, state, spec)
            ok = bool((drift < 1e-12).all())
            rows = {"benchmark": bench, "steps": args.steps or 10_000, "drift": [float(x) for x in drift],
                    "passed": ok}
            if fmt == "json":
                text = json.dumps(rows, indent=1, sort_keys=True) + "\n"
            elif fmt == "csv":
                text = "field,initial,final,relative_drift\n" + "".join(
                    f"{n},{x:.17g},{y:.17g},{z:.3e}\n" for n, x, y, z in zip(spec.field_names, before, after, drift))
            else:
                text = "".join(f"{n}: relative drift {z:.3e}\n" for n, z in zip(spec.field_names, drift))
                text += f"conservation: {'PASS' if ok else 'FAIL'}\n"
            _emit(text, args)
            return EXIT_OK if ok else EXIT_CHECK
        if bench == "shear-wave":
            if spec.d != 2 or spec.N != 3:
                raise InputError("shear-wave needs a 2D scheme with conserved (rho, Jx, Jy)")
            amp = args.amplitude or 1e-3
            mach = amp * 3**0.5 / float(b.get(spec.velocity, 1.0))
            if mach > 0.05:
                raise InputError(f"--amplitude {amp} gives Mach {mach:.3f}; the benchmark needs Mach <= 0.05")
            res = shear_wave_benchmark(spec, args.resolution or 128, amp, b)
        elif bench == "scalar-decay":
            if spec.d != 1 or not spec.is_linear or spec.N != 1:
                raise InputError("scalar-decay needs a linear 1D scheme with one conserved field")
            res = scalar_decay_benchmark(spec, args.resolution or 1024, bindings=b)
        else:
            raise InputError(f"unknown benchmark {bench!r}")
    except SimulationError as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    ok = res.accepted and res.rel_error <= tol
    if args.timeseries and res.series:
        Path(args.timeseries).write_text(timeseries_csv(res.series))
    if args.snapshot and res.final_state is not None:
        write_snapshot(args.snapshot, res.final_state, spec)
    summary = {
        "benchmark": res.name,
        "resolution": list(res.resolution),
        "measured": res.measured,
        "predicted": res.predicted,
        "relative_error": res.rel_error,
        "r2": res.r2,
        "steps": res.steps,
        "passed": ok,
    }
    if fmt == "json":
        text = json.dumps(summary, indent=1, sort_keys=True) + "\n"
    elif fmt == "csv":
        text = ",".join(summary) + "\n" + ",".join(
            "x".join(map(str, v)) if isinstance(v, list) else (f"{v:.17g}" if isinstance(v, float) else str(v))
            for v in summary.values()) + "\n"
    else:
        text = (f"{res.name} at {'x'.join(map(str, res.resolution))}: measured {res.measured:.10g}, "
                f"predicted {res.predicted:.10g}, relative error {res.rel_error:.3e}, R^2 {res.r2:.6f}, "
                f"{res.steps} steps: {'PASS' if ok else 'FAIL'}\n")
    _emit(text, args)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_validate(args) -> int:
    from .checks import validation_suite

    fmt = _check_format(args, ("text", "json"))
    checks = validation_suite()
    ok = all(c.passed for c in checks)
    if fmt == "json":
        text = json.dumps([{"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks], indent=1) + "\n"
    else:
        text = "\n".join(c.line() for c in checks) + "\n"
        text += f"{sum(c.passed for c in checks)}/{len(checks)} checks passed\n"
    _emit(text, args)
    return EXIT_OK if ok else EXIT_CHECK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scheme", default="d2q9-isothermal", help="built-in name or scheme file path")
    common.add_argument("--engine", choices=sorted(ENGINE_NAMES), help="expansion engine")
    common.add_argument("--order", type=int, choices=(1, 2, 3, 4), help="expansion order / retained terms")
    common.add_argument("--bind", action="append", metavar="NAME=VALUE", help="parameter value (repeatable)")
    common.add_argument("--format", help="output format")
    common.add_argument("--out", help="write the report here instead of stdout")

    p = argparse.ArgumentParser(prog="lbmexpand", description="Equivalent equations of MRT lattice Boltzmann schemes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("derive", parents=[common], help="derive the equivalent equations")
    sc = sub.add_parser("symbol-check", parents=[common], help="Fourier order check of the linear expansion")
    sc.add_argument("--k", help="wavevector, comma separated (physical units)")
    sc.add_argument("--state", help="linearization state for nonlinear schemes (default rho=1, rest 0)")
    sm = sub.add_parser("simulate", parents=[common], help="run a benchmark simulation")
    sm.add_argument("--benchmark", choices=("shear-wave", "scalar-decay", "conservation"))
    sm.add_argument("--resolution", type=int)
    sm.add_argument("--amplitude", type=float)
    sm.add_argument("--steps", type=int, help="steps for the conservation run")
    sm.add_argument("--seed", type=int, default=0)
    sm.add_argument("--tolerance", type=float, default=0.02, help="accepted relative error")
    sm.add_argument("--timeseries", help="write the amplitude/totals time series as CSV")
    sm.add_argument("--snapshot", help="write the final populations as a binary snapshot")
    sub.add_parser("validate-paper", parents=[common], help="run the reference identity checklist")
    return p


COMMANDS = {"derive": cmd_derive, "symbol-check": cmd_symbol_check, "simulate": cmd_simulate,
            "validate-paper": cmd_validate}


def main(argv=None) -> int:
    from .algebra import AlgebraError
    from .expand import ExpansionError
    from .fourier import FourierError
    from .scheme import SchemeError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help, 2 for bad flags
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SchemeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ExpansionError, FourierError, AlgebraError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
