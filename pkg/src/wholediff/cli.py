"""Command-line front end: derivatives, operator commutators, scenario
presets, and numeric identity verification.

Exit codes: 0 success/verified, 1 verification failed, 2 parse or usage
error, 3 context-validation error, 4 numeric failure.  JSON output is a
stable tree {"command", "context", "result"}; identical invocation and
seed produce byte-identical JSON.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from typing import Dict, Optional

from .depctx import DependencyContext, ORDERING_MODES
from .diffop import DifferentialOperator, apply, commutator
from .errors import (
    ContextError,
    EvaluationError,
    ParseError,
    RootSolveError,
    WholediffError,
)
from .numcheck import SamplerSpec, shipped_closures, verify_identity
from .physcases import (
    MassShellScenario,
    RetardedScenario,
    build_mass_shell,
    build_retarded,
    position_commutator_table,
)
from .symexpr import Expr, SymbolKind
from .textio import (
    parse_context,
    parse_expr,
    parse_expr_in_context,
    parse_operator,
    print_expr,
    print_operator,
    serialize_context,
)
from .wholederiv import plain_partial, whole_partial, whole_partial_wrt_dependent

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_PARSE = 2
EXIT_CONTEXT = 3
EXIT_NUMERIC = 4


class _UsageError(Exception):
    pass


def _load_context(path: str) -> DependencyContext:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_context(fh.read())
    except OSError as exc:
        raise _UsageError(f"cannot read context file: {exc}") from None


def _emit(args, command: str, context_name: str, result, text_lines) -> None:
    if args.format == "json":
        doc = {"command": command, "context": context_name, "result": result}
        print(json.dumps(doc, separators=(", ", ": ")))
    else:
        for line in text_lines:
            print(line)


def _apply_target(text: str, ctx: DependencyContext) -> Expr:
    """An opaque function named bare (e.g. just `f`) means its declared
    application."""
    name = text.strip()
    for fn, fargs in ctx.opaques:
        if fn.name == name:
            return Expr.opaque(fn, fargs)
    return parse_expr_in_context(text, ctx)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_derive(args) -> int:
    ctx = _load_context(args.ctx)
    e = _apply_target(args.expr, ctx)
    v = ctx.find_symbol(args.wrt)
    if v is None:
        raise ParseError(f"unknown identifier '{args.wrt}'", _span_of(args.wrt))
    if args.plain:
        out = plain_partial(e, v)
    elif ctx.is_dependent(v):
        out = whole_partial_wrt_dependent(e, v, ctx)
    elif ctx.is_independent(v):
        out = whole_partial(e, v, ctx)
    else:
        out = plain_partial(e, v)
    rendered = print_expr(out, args.format if args.format != "json" else "text")
    _emit(args, "derive", args.ctx, {"expression": print_expr(out, "text")}, [rendered])
    return EXIT_OK


def cmd_commutator(args) -> int:
    ctx = _load_context(args.ctx)
    mode = args.ordering or ctx.ordering_mode
    if args.feynman:
        dim = 0
        while ctx.find_symbol(f"p{dim + 1}") is not None:
            dim += 1
        ctx = build_mass_shell(
            MassShellScenario(dimension=dim or 3, ordering_mode=mode, feynman=True)
        )
    elif args.ordering and args.ordering != ctx.ordering_mode:
        ctx = dataclasses.replace(ctx, ordering_mode=mode)
    A = parse_operator(args.a, ctx)
    B = parse_operator(args.b, ctx)
    C = commutator(A, B)
    if args.apply is not None:
        out = apply(C, _apply_target(args.apply, ctx))
        rendered = print_expr(out, args.format if args.format != "json" else "text")
        _emit(
            args,
            "commutator",
            args.ctx,
            {"expression": print_expr(out, "text")},
            [rendered],
        )
    else:
        rendered = print_operator(C)
        _emit(args, "commutator", args.ctx, {"operator": rendered}, [rendered])
    return EXIT_OK


def cmd_scenario(args) -> int:
    if args.name == "mass-shell":
        s = MassShellScenario(
            dimension=args.dim,
            sign=args.sign,
            ordering_mode=args.ordering or "operator",
            feynman=args.feynman,
        )
        ctx = build_mass_shell(s)
        ctx_path = os.path.join(args.out, "mass-shell.ctx")
        with open(ctx_path, "w", encoding="utf-8") as fh:
            fh.write(serialize_context(ctx))
        table = position_commutator_table(ctx)
        entries = [
            [print_operator(table.entries[mu][nu]) for nu in range(args.dim + 1)]
            for mu in range(args.dim + 1)
        ]
        result = {"ctx_file": ctx_path, "position_commutators": entries}
        lines = [f"wrote {ctx_path}", "position commutator table:"]
        for mu in range(args.dim + 1):
            for nu in range(args.dim + 1):
                lines.append(f"  [{mu}][{nu}] = {entries[mu][nu]}")
        _emit(args, "scenario", args.name, result, lines)
        return EXIT_OK
    if args.name == "retarded":
        if args.trajectory is None:
            raise _UsageError("scenario retarded requires --trajectory")
        from .physcases import RETARDED_TP

        table: Dict[str, object] = {"tp": RETARDED_TP}
        traj = parse_expr(args.trajectory, list(table.values()), lenient=True)
        params = tuple(
            s for s in traj.symbols() if s.name != "tp"
        )
        ctx = build_retarded(RetardedScenario(trajectory=traj, parameters=params))
        ctx_path = os.path.join(args.out, "retarded.ctx")
        with open(ctx_path, "w", encoding="utf-8") as fh:
            fh.write(serialize_context(ctx))
        reps = {
            f"d{dep}/d{indep}": print_expr(rep.expr, "text")
            for (dep, indep), rep in sorted(ctx.representations.items())
        }
        result = {"ctx_file": ctx_path, "representations": reps}
        lines = [f"wrote {ctx_path}"] + [f"  {k} = {v}" for k, v in reps.items()]
        _emit(args, "scenario", args.name, result, lines)
        return EXIT_OK
    raise _UsageError(f"unknown scenario '{args.name}'")


def cmd_verify(args) -> int:
    ctx = _load_context(args.ctx)
    lhs = _apply_target(args.lhs, ctx)
    rhs = _apply_target(args.rhs, ctx)
    if args.sampler == "box":
        spec = SamplerSpec(kind="box", sign=args.sign)
    else:
        spec = SamplerSpec(kind="on-shell", sign=args.sign)
    closures = shipped_closures(len(ctx.independents))
    closure = closures.get(args.closure)
    if closure is None:
        raise _UsageError(f"unknown closure '{args.closure}'")
    opaques = {fn.name: closure for fn, _ in ctx.opaques}
    report = verify_identity(
        lhs,
        rhs,
        ctx,
        spec,
        tol_rel=args.tol,
        tol_abs=args.tol_abs,
        seed=args.seed,
        samples=args.samples,
        opaques=opaques,
    )
    result = report.to_json_dict()
    lines = [
        f"samples: {report.samples}",
        f"failures: {report.failures}",
        f"max_abs_err: {result['max_abs_err']}",
        f"max_rel_err: {result['max_rel_err']}",
        f"verdict: {report.verdict}",
    ]
    _emit(args, "verify", args.ctx, result, lines)
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _span_of(text: str):
    from .textio import SourceSpan

    return SourceSpan(0, len(text))


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _ArgumentParser(prog="wholediff", description=__doc__)
    sub = p.add_subparsers(dest="subcommand")

    def common(sp):
        sp.add_argument("--format", choices=("text", "json", "latex"), default="text")
        sp.add_argument("--seed", type=int, default=0)

    d = sub.add_parser("derive", help="whole or plain partial derivative")
    d.add_argument("ctx")
    d.add_argument("--expr", required=True)
    d.add_argument("--wrt", required=True)
    d.add_argument("--plain", action="store_true")
    common(d)
    d.set_defaults(fn=cmd_derive)

    c = sub.add_parser("commutator", help="commutator of two operator literals")
    c.add_argument("ctx")
    c.add_argument("--a", required=True)
    c.add_argument("--b", required=True)
    c.add_argument("--apply", default=None)
    c.add_argument("--ordering", choices=ORDERING_MODES, default=None)
    c.add_argument("--feynman", action="store_true")
    common(c)
    c.set_defaults(fn=cmd_commutator)

    s = sub.add_parser("scenario", help="prebuilt scenario bundles")
    s.add_argument("name")
    s.add_argument("--dim", type=int, default=3)
    s.add_argument("--sign", type=int, choices=(1, -1), default=1)
    s.add_argument("--ordering", choices=ORDERING_MODES, default=None)
    s.add_argument("--feynman", action="store_true")
    s.add_argument("--trajectory", default=None)
    s.add_argument("--out", default=".")
    common(s)
    s.set_defaults(fn=cmd_scenario)

    v = sub.add_parser("verify", help="numeric identity verification")
    v.add_argument("ctx")
    v.add_argument("--lhs", required=True)
    v.add_argument("--rhs", required=True)
    v.add_argument("--samples", type=int, default=100)
    v.add_argument("--tol", type=float, default=1e-9)
    v.add_argument("--tol-abs", type=float, default=1e-8)
    v.add_argument("--sampler", choices=("on-shell", "box"), default="on-shell")
    v.add_argument("--sign", type=int, choices=(1, -1), default=1)
    v.add_argument("--closure", default="poly")
    common(v)
    v.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "subcommand", None):
            raise _UsageError("a subcommand is required")
        return args.fn(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ContextError as exc:
        print(f"context error: {exc}", file=sys.stderr)
        return EXIT_CONTEXT
    except (EvaluationError, RootSolveError, ZeroDivisionError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except WholediffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTEXT


if __name__ == "__main__":
    sys.exit(main())
