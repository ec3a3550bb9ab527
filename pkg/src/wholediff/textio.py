"""Text formats: expression grammar, operator literals, dependency-context
files, and printers (text, json, latex).

Expression grammar (precedence loosest to tightest): `+ -`, `* /`, unary
minus, `^` (right-associative).  Identifiers are [A-Za-z_][A-Za-z0-9_]*;
numbers are exact decimal rationals; `i` is the imaginary unit; `sqrt(x)`
is x^(1/2); `f(a,b,...)` applies an opaque function to symbol arguments;
`D[f,v,...]` is a plain partial of an opaque function (repeat a variable
for higher order).

Operator grammar: `W[v]` whole derivative, `D[v]` plain derivative,
parenthesized expressions (or numbers) as coefficients; juxtaposition or
`*` composes left-to-right with the leftmost factor acting last; `+`/`-`
form sums.

Context files are line-based statements with `#` comments:
  independent <id>+            param <id>+             dependent <id>
  representation d<dep>/d<indep> = <expr>
  constraint <expr> = 0 solves <dep>
  opaque <id>(<id>,...)        commutator [<id>,<id>] = <expr>
  ordering <commuting|operator|paper>
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .depctx import ORDERING_MODES, DependencyContext
from .errors import ContextError, ParseError
from .scalars import QC
from .symexpr import (
    CommutatorTable,
    Expr,
    OpaqueAtom,
    PartialAtom,
    PowAtom,
    RepAtom,
    Symbol,
    SymbolAtom,
    SymbolKind,
)


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError("span start exceeds end")

    def shifted(self, offset: int) -> "SourceSpan":
        return SourceSpan(self.start + offset, self.end + offset)


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()\[\],=]))"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "num" | "id" | "op" | "end"
    text: str
    span: SourceSpan


def _lex(text: str) -> List[Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            rest = text[pos:].lstrip()
            if not rest:
                break
            at = len(text) - len(rest)
            raise ParseError(
                f"unexpected character {rest[0]!r}", SourceSpan(at, at + 1)
            )
        for kind in ("num", "id", "op"):
            tok = m.group(kind)
            if tok is not None:
                out.append(Token(kind, tok, SourceSpan(m.start(kind), m.end(kind))))
                break
        pos = m.end()
    out.append(Token("end", "", SourceSpan(len(text), len(text))))
    return out


def _decimal_fraction(text: str) -> Fraction:
    return Fraction(text)


# ---------------------------------------------------------------------------
# Expression parser
# ---------------------------------------------------------------------------


class _ExprParser:
    def __init__(
        self,
        tokens: List[Token],
        symbols: Dict[str, Symbol],
        opaques: Dict[str, Tuple[Symbol, ...]],
        lenient: bool,
    ):
        self.toks = tokens
        self.pos = 0
        self.symbols = symbols
        self.opaques = opaques
        self.lenient = lenient

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect_op(self, text: str) -> Token:
        t = self.peek()
        if t.kind != "op" or t.text != text:
            raise ParseError(f"expected {text!r}", t.span)
        return self.next()

    def at_op(self, *texts: str) -> bool:
        t = self.peek()
        return t.kind == "op" and t.text in texts

    def parse(self) -> Expr:
        e = self.sum_()
        t = self.peek()
        if t.kind != "end":
            raise ParseError(f"unexpected {t.text!r}", t.span)
        return e

    def sum_(self) -> Expr:
        e = self.term()
        while self.at_op("+", "-"):
            op = self.next().text
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.at_op("*", "/"):
            op = self.next().text
            rhs = self.unary()
            e = e * rhs if op == "*" else e / rhs
        return e

    def unary(self) -> Expr:
        if self.at_op("-"):
            self.next()
            return -self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if not self.at_op("^"):
            return base
        caret = self.next()
        exp_expr = self.unary() if self.at_op("-") else self.power_operand()
        exp = _as_rational(exp_expr, caret.span)
        return base ** (int(exp) if exp.denominator == 1 else exp)

    def power_operand(self) -> Expr:
        # right-associative: the exponent may itself carry a ^
        return self.power()

    def atom(self) -> Expr:
        t = self.peek()
        if t.kind == "num":
            self.next()
            return Expr.const(QC(_decimal_fraction(t.text)))
        if self.at_op("("):
            self.next()
            e = self.sum_()
            self.expect_op(")")
            return e
        if t.kind == "id":
            return self.identifier()
        raise ParseError(f"expected an expression, found {t.text or 'end of input'!r}", t.span)

    def identifier(self) -> Expr:
        t = self.next()
        name = t.text
        if name == "i":
            return Expr.imaginary_unit()
        if name == "sqrt":
            self.expect_op("(")
            inner = self.sum_()
            self.expect_op(")")
            return inner ** Fraction(1, 2)
        if name == "D" and self.at_op("["):
            return self.partial_literal(t)
        if self.at_op("("):
            return self.application(t)
        return Expr.symbol(self.resolve(name, t.span))

    def resolve(self, name: str, span: SourceSpan) -> Symbol:
        sym = self.symbols.get(name)
        if sym is None:
            if self.lenient:
                sym = Symbol(name, SymbolKind.PARAMETER)
                self.symbols[name] = sym
            else:
                raise ParseError(f"unknown identifier '{name}'", span)
        return sym

    def symbol_arg(self) -> Symbol:
        t = self.peek()
        if t.kind != "id":
            raise ParseError("expected a symbol name", t.span)
        self.next()
        return self.resolve(t.text, t.span)

    def application(self, fn_tok: Token) -> Expr:
        fn = self.resolve(fn_tok.text, fn_tok.span)
        if fn.kind != SymbolKind.OPAQUE:
            raise ParseError(
                f"'{fn.name}' is not an opaque function", fn_tok.span
            )
        self.expect_op("(")
        args = [self.symbol_arg()]
        while self.at_op(","):
            self.next()
            args.append(self.symbol_arg())
        close = self.expect_op(")")
        declared = self.opaques.get(fn.name)
        if declared is not None and len(args) != len(declared):
            raise ParseError(
                f"'{fn.name}' takes {len(declared)} arguments, got {len(args)}",
                SourceSpan(fn_tok.span.start, close.span.end),
            )
        return Expr.opaque(fn, tuple(args))

    def partial_literal(self, d_tok: Token) -> Expr:
        self.expect_op("[")
        fn_tok = self.peek()
        fn = self.symbol_arg()
        if fn.kind != SymbolKind.OPAQUE:
            raise ParseError(
                f"D[...] needs an opaque function, got '{fn.name}'", fn_tok.span
            )
        args = self.opaques.get(fn.name)
        if args is None:
            raise ParseError(
                f"argument list of opaque '{fn.name}' is not declared", fn_tok.span
            )
        orders = []
        while self.at_op(","):
            self.next()
            vtok = self.peek()
            v = self.symbol_arg()
            if v not in args:
                raise ParseError(
                    f"'{v.name}' is not an argument of '{fn.name}'", vtok.span
                )
            orders.append((v, 1))
        self.expect_op("]")
        if not orders:
            raise ParseError("D[...] needs at least one variable", d_tok.span)
        return Expr.atom(PartialAtom(fn, args, tuple(orders)))


def _as_rational(e: Expr, span: SourceSpan) -> Fraction:
    c = e.as_constant()
    if c is None or c.im != 0:
        raise ParseError("exponent must be a rational constant", span)
    return c.re


def parse_expr(
    text: str,
    symbols: Sequence[Symbol] = (),
    opaques: Optional[Dict[str, Tuple[Symbol, ...]]] = None,
    lenient: bool = False,
) -> Expr:
    """Parse an expression over the given symbols into canonical form."""
    table = {s.name: s for s in symbols}
    p = _ExprParser(_lex(text), table, dict(opaques or {}), lenient)
    return p.parse()


def context_symbol_table(ctx: DependencyContext):
    """(symbols, opaques) parser inputs drawn from a dependency context."""
    syms = list(ctx.all_symbols())
    opaques = {f.name: args for f, args in ctx.opaques}
    return syms, opaques


def parse_expr_in_context(text: str, ctx: DependencyContext, lenient=False) -> Expr:
    syms, opaques = context_symbol_table(ctx)
    return parse_expr(text, syms, opaques, lenient)


# ---------------------------------------------------------------------------
# Operator parser
# ---------------------------------------------------------------------------


def parse_operator(text: str, ctx: DependencyContext):
    """Parse an operator literal; products compose left-to-right with the
    leftmost factor acting last."""
    from .diffop import DifferentialOperator, compose

    syms, opaques = context_symbol_table(ctx)
    toks = _lex(text)
    pos = [0]

    def peek():
        return toks[pos[0]]

    def advance():
        t = toks[pos[0]]
        pos[0] += 1
        return t

    def at_op(*texts):
        t = peek()
        return t.kind == "op" and t.text in texts

    def generator(name_tok: Token):
        mode = "whole" if name_tok.text == "W" else "plain"
        advance()  # '['
        vtok = peek()
        if vtok.kind != "id":
            raise ParseError("expected a variable name", vtok.span)
        advance()
        v = ctx.find_symbol(vtok.text)
        if v is None:
            raise ParseError(
                f"derivative variable '{vtok.text}' is not in the context", vtok.span
            )
        if mode == "whole" and not ctx.is_independent(v):
            raise ParseError(
                f"whole derivative needs an independent variable, '{v.name}' is not",
                vtok.span,
            )
        t = peek()
        if t.kind != "op" or t.text != "]":
            raise ParseError("expected ']'", t.span)
        advance()
        return DifferentialOperator.generator(ctx, v, mode)

    def factor():
        t = peek()
        if t.kind == "id" and t.text in ("W", "D"):
            nxt = toks[pos[0] + 1]
            if nxt.kind == "op" and nxt.text == "[":
                advance()
                return generator(t)
        if t.kind == "num":
            advance()
            coeff = Expr.const(QC(_decimal_fraction(t.text)))
            return DifferentialOperator.multiplication(ctx, coeff)
        if t.kind == "op" and t.text == "(":
            advance()
            depth = 1
            start = pos[0]
            while depth:
                u = advance()
                if u.kind == "end":
                    raise ParseError("unbalanced '('", t.span)
                if u.kind == "op" and u.text == "(":
                    depth += 1
                elif u.kind == "op" and u.text == ")":
                    depth -= 1
            inner = toks[start : pos[0] - 1] + [toks[-1]]
            sub = _ExprParser(
                [Token(k.kind, k.text, k.span) for k in inner],
                {s.name: s for s in syms},
                dict(opaques),
                False,
            )
            e = sub.sum_()
            nxt = sub.peek()
            if nxt.kind != "end":
                raise ParseError(f"unexpected {nxt.text!r}", nxt.span)
            return DifferentialOperator.multiplication(ctx, e)
        raise ParseError(
            f"expected an operator factor, found {t.text or 'end of input'!r}", t.span
        )

    from .diffop import DifferentialOperator as DO

    def term():
        acc = factor()
        while True:
            if at_op("*"):
                advance()
                acc = compose(acc, factor())
                continue
            t = peek()
            if (t.kind == "id" and (t.text in ("W", "D") or True)) or (
                t.kind == "op" and t.text == "("
            ) or t.kind == "num":
                acc = compose(acc, factor())
                continue
            return acc

    total = None
    negate = False
    if at_op("-"):
        advance()
        negate = True
    while True:
        tm = term()
        if negate:
            tm = -tm
        total = tm if total is None else total + tm
        if at_op("+", "-"):
            negate = advance().text == "-"
            continue
        break
    t = peek()
    if t.kind != "end":
        raise ParseError(f"unexpected {t.text!r}", t.span)
    return total


# ---------------------------------------------------------------------------
# Context file parser
# ---------------------------------------------------------------------------

_REP_RE = re.compile(r"^representation\s+d([A-Za-z_]\w*)\s*/\s*d([A-Za-z_]\w*)\s*=\s*(.+)$")
_CON_RE = re.compile(r"^constraint\s+(.+?)=\s*0\s+solves\s+([A-Za-z_]\w*)\s*$")
_OPQ_RE = re.compile(r"^opaque\s+([A-Za-z_]\w*)\s*\(\s*([A-Za-z_]\w*(?:\s*,\s*[A-Za-z_]\w*)*)\s*\)\s*$")
_COMM_RE = re.compile(r"^commutator\s+\[\s*([A-Za-z_]\w*)\s*,\s*([A-Za-z_]\w*)\s*\]\s*=\s*(.+)$")
_IDLIST_RE = re.compile(r"^(independent|param|dependent)\s+([A-Za-z_]\w*(?:\s+[A-Za-z_]\w*)*)\s*$")
_ORD_RE = re.compile(r"^ordering\s+(\w+)\s*$")


def parse_context(text: str) -> DependencyContext:
    """Parse a context file and validate it; error-level diagnostics raise."""
    independents: List[str] = []
    params: List[str] = []
    dependents: List[str] = []
    reps: List[Tuple[str, str, str, int]] = []
    cons: List[Tuple[str, str, int]] = []
    opqs: List[Tuple[str, List[str], int]] = []
    comms: List[Tuple[str, str, str, int]] = []
    ordering = None

    offset = 0
    for raw_line in text.split("\n"):
        line = raw_line.split("#", 1)[0]
        stripped = line.strip()
        start = offset + line.index(stripped[0]) if stripped else offset
        offset += len(raw_line) + 1
        if not stripped:
            continue
        m = _IDLIST_RE.match(stripped)
        if m:
            bucket = {"independent": independents, "param": params, "dependent": dependents}[m.group(1)]
            names = m.group(2).split()
            if m.group(1) == "dependent" and len(names) != 1:
                raise ParseError(
                    "one dependent per statement", SourceSpan(start, start + len(stripped))
                )
            bucket.extend(names)
            continue
        m = _REP_RE.match(stripped)
        if m:
            reps.append((m.group(1), m.group(2), m.group(3), start + m.start(3)))
            continue
        m = _CON_RE.match(stripped)
        if m:
            cons.append((m.group(1), m.group(2), start + m.start(1)))
            continue
        m = _OPQ_RE.match(stripped)
        if m:
            opqs.append((m.group(1), [a.strip() for a in m.group(2).split(",")], start))
            continue
        m = _COMM_RE.match(stripped)
        if m:
            comms.append((m.group(1), m.group(2), m.group(3), start + m.start(3)))
            continue
        m = _ORD_RE.match(stripped)
        if m:
            if m.group(1) not in ORDERING_MODES:
                raise ParseError(
                    f"unknown ordering mode '{m.group(1)}'",
                    SourceSpan(start, start + len(stripped)),
                )
            ordering = m.group(1)
            continue
        raise ParseError(
            f"unrecognized statement: {stripped.split()[0]!r}",
            SourceSpan(start, start + len(stripped)),
        )

    nc_names = {n for a, b, _, _ in comms for n in (a, b)}

    def make(name, kind):
        klass = 1 if name in nc_names and kind == SymbolKind.INDEPENDENT else 0
        return Symbol(name, kind, klass=klass)

    table: Dict[str, Symbol] = {}
    sym_independents = []
    for n in independents:
        table[n] = make(n, SymbolKind.INDEPENDENT)
        sym_independents.append(table[n])
    sym_params = []
    for n in params:
        table.setdefault(n, make(n, SymbolKind.PARAMETER))
        sym_params.append(table[n])
    sym_dependents = []
    for n in dependents:
        table.setdefault(n, make(n, SymbolKind.DEPENDENT))
        sym_dependents.append(table[n])
    sym_opaques = []
    for fname, argnames, at in opqs:
        fsym = table.setdefault(fname, Symbol(fname, SymbolKind.OPAQUE))
        args = []
        for a in argnames:
            if a not in table:
                raise ParseError(
                    f"opaque argument '{a}' is not a declared symbol",
                    SourceSpan(at, at + len(a)),
                )
            args.append(table[a])
        sym_opaques.append((fsym, tuple(args)))

    opq_map = {f.name: args for f, args in sym_opaques}

    def parse_sub(src: str, at: int, lenient_comm=False) -> Expr:
        try:
            tbl = dict(table)
            p = _ExprParser(_lex(src), tbl, opq_map, False)
            if lenient_comm:
                p.lenient = True
            e = p.parse()
            if lenient_comm:
                for name, s in tbl.items():
                    if name not in table:
                        table[name] = Symbol(name, SymbolKind.COMMUTATOR)
                e = parse_expr(src, table.values(), opq_map)
            return e
        except ParseError as exc:
            raise ParseError(exc.message, exc.span.shifted(at)) from None

    ctable = CommutatorTable()
    for a, b, src, at in comms:
        for n in (a, b):
            if n not in table:
                raise ParseError(f"unknown identifier '{n}'", SourceSpan(at, at + len(n)))
        ctable.declare(table[a], table[b], parse_sub(src, at, lenient_comm=True))

    constraints = []
    for src, dep, at in cons:
        if dep not in table:
            raise ParseError(f"unknown dependent '{dep}'", SourceSpan(at, at + len(dep)))
        constraints.append((parse_sub(src, at), table[dep]))

    if ordering is None:
        ordering = "operator" if comms else "commuting"

    ctx = DependencyContext(
        independents=tuple(sym_independents),
        parameters=tuple(sym_params),
        dependents=tuple(sym_dependents),
        constraints=tuple(constraints),
        opaques=tuple(sym_opaques),
        commutators=ctable,
        ordering_mode=ordering,
    )
    for dep, indep, src, at in reps:
        for n in (dep, indep):
            if n not in table:
                raise ParseError(f"unknown identifier '{n}'", SourceSpan(at, at + len(n)))
        ctx.declare_representation(table[dep], table[indep], parse_sub(src, at))

    errors = [d for d in ctx.validate() if d.level == "error"]
    if errors:
        raise ContextError("; ".join(d.message for d in errors))
    return ctx


# ---------------------------------------------------------------------------
# Printers
# ---------------------------------------------------------------------------


def _frac_str(f: Fraction) -> str:
    return str(f)


def _coeff_text(c: QC) -> Tuple[str, bool]:
    """(rendered coefficient, needs-parens-when-multiplied)"""
    if c.im == 0:
        return _frac_str(c.re), False
    if c.re == 0:
        if c.im == 1:
            return "i", False
        if c.im == -1:
            return "-i", False
        return f"{_frac_str(c.im)}*i", False
    return f"({_frac_str(c.re)} + {_frac_str(c.im)}*i)", False


def _atom_text(a) -> str:
    if isinstance(a, SymbolAtom):
        return a.symbol.name
    if isinstance(a, OpaqueAtom):
        return f"{a.fn.name}({','.join(s.name for s in a.args)})"
    if isinstance(a, PartialAtom):
        vars_ = []
        for s, n in a.orders:
            vars_.extend([s.name] * n)
        return f"D[{a.fn.name},{','.join(vars_)}]"
    if isinstance(a, PowAtom):
        if a.exp == Fraction(1, 2):
            return f"sqrt({_expr_text(a.base)})"
        return f"({_expr_text(a.base)})^({a.exp})"
    if isinstance(a, RepAtom):
        return f"({_expr_text(a.expansion)})"
    raise TypeError(f"unprintable atom {a!r}")


def _mono_text(c: QC, word) -> str:
    nums, dens = [], []
    for a, e in word:
        text = _atom_text(a)
        if e >= 0:
            nums.append(text if e == 1 else f"{text}^{e}")
        else:
            dens.append(text if e == -1 else f"{text}^{-e}")
    cs, _ = _coeff_text(c)
    if not nums:
        head = cs
    elif cs == "1":
        head = "*".join(nums)
    elif cs == "-1":
        head = "-" + "*".join(nums)
    else:
        head = "*".join([cs] + nums)
    for d in dens:
        head += f"/{d}"
    return head


def _poly_text(monos) -> str:
    if not monos:
        return "0"
    parts = [_mono_text(c, w) for c, w in monos]
    out = parts[0]
    for p in parts[1:]:
        if p.startswith("-"):
            out += f" - {p[1:]}"
        else:
            out += f" + {p}"
    return out


def _expr_text(e: Expr) -> str:
    num = _poly_text(e._num)
    if e.den_is_one():
        return num
    den = _poly_text(e._den)
    return f"({num})/({den})"


def _expr_json(e: Expr):
    def const_node(c: QC):
        return {"const": {"re": _frac_str(c.re), "im": _frac_str(c.im)}}

    def atom_node(a):
        if isinstance(a, SymbolAtom):
            return {"sym": a.symbol.name}
        if isinstance(a, OpaqueAtom):
            return {"opaque": {"fn": a.fn.name, "args": [s.name for s in a.args]}}
        if isinstance(a, PartialAtom):
            return {
                "partial": {
                    "fn": a.fn.name,
                    "args": [s.name for s in a.args],
                    "orders": [[s.name, n] for s, n in a.orders],
                }
            }
        if isinstance(a, PowAtom):
            return {"pow": {"base": poly_or_frac(a.base), "exp": str(a.exp)}}
        if isinstance(a, RepAtom):
            return poly_or_frac(a.expansion)
        raise TypeError(f"unprintable atom {a!r}")

    def mono_node(c, word):
        factors = []
        if c != QC(1):
            factors.append(const_node(c))
        for a, n in word:
            node = atom_node(a)
            if n != 1:
                node = {"pow": {"base": node, "exp": str(n)}}
            factors.append(node)
        if not factors:
            return const_node(QC(1))
        if len(factors) == 1:
            return factors[0]
        return {"mul": factors}

    def poly_node(monos):
        if not monos:
            return const_node(QC(0))
        terms = [mono_node(c, w) for c, w in monos]
        return terms[0] if len(terms) == 1 else {"add": terms}

    def poly_or_frac(x: Expr):
        if x.den_is_one():
            return poly_node(x._num)
        return {"div": {"num": poly_node(x._num), "den": poly_node(x._den)}}

    return poly_or_frac(e)


def _atom_latex(a) -> str:
    if isinstance(a, SymbolAtom):
        return _name_latex(a.symbol.name)
    if isinstance(a, OpaqueAtom):
        return f"{_name_latex(a.fn.name)}({', '.join(_name_latex(s.name) for s in a.args)})"
    if isinstance(a, PartialAtom):
        total = a.total_order
        top = r"\partial" + (f"^{{{total}}}" if total > 1 else "") + " " + _name_latex(a.fn.name)
        bottom = r"\,".join(
            r"\partial " + _name_latex(s.name) + (f"^{{{n}}}" if n > 1 else "")
            for s, n in a.orders
        )
        return rf"\frac{{{top}}}{{{bottom}}}"
    if isinstance(a, PowAtom):
        if a.exp == Fraction(1, 2):
            return rf"\sqrt{{{_expr_latex(a.base)}}}"
        return rf"\left({_expr_latex(a.base)}\right)^{{{a.exp}}}"
    if isinstance(a, RepAtom):
        return rf"\left({_expr_latex(a.expansion)}\right)"
    raise TypeError(f"unprintable atom {a!r}")


def _name_latex(name: str) -> str:
    m = re.match(r"^([A-Za-z]+)(\d+)$", name)
    if m:
        return f"{m.group(1)}_{{{m.group(2)}}}"
    return name


def _coeff_latex(c: QC) -> str:
    def frac(f: Fraction) -> str:
        if f.denominator == 1:
            return str(f.numerator)
        sign = "-" if f < 0 else ""
        return rf"{sign}\frac{{{abs(f.numerator)}}}{{{f.denominator}}}"

    if c.im == 0:
        return frac(c.re)
    if c.re == 0:
        if c.im == 1:
            return "i"
        if c.im == -1:
            return "-i"
        return frac(c.im) + "i"
    return rf"\left({frac(c.re)} + {frac(c.im)}i\right)"


def _mono_latex(c: QC, word) -> str:
    factors, inverse = [], []
    for a, e in word:
        t = _atom_latex(a)
        if e >= 1:
            factors.append(t if e == 1 else f"{t}^{{{e}}}")
        else:
            inverse.append(t if e == -1 else f"{t}^{{{-e}}}")
    cs = _coeff_latex(c)
    body = r"\,".join(factors) if factors else "1"
    if inverse:
        body = rf"\frac{{{body}}}{{{_join_latex(inverse)}}}"
    elif not factors:
        return cs
    if cs == "1":
        return body
    if cs == "-1":
        return "-" + body
    return rf"{cs}\,{body}"


def _join_latex(parts) -> str:
    return r"\,".join(parts)


def _poly_latex(monos) -> str:
    if not monos:
        return "0"
    parts = [_mono_latex(c, w) for c, w in monos]
    out = parts[0]
    for p in parts[1:]:
        out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return out


def _expr_latex(e: Expr) -> str:
    if e.den_is_one():
        return _poly_latex(e._num)
    return rf"\frac{{{_poly_latex(e._num)}}}{{{_poly_latex(e._den)}}}"


def print_expr(e: Expr, format: str = "text") -> str:
    e = Expr._coerce(e)
    if format == "text":
        return _expr_text(e)
    if format == "json":
        return json.dumps(_expr_json(e), separators=(", ", ": "))
    if format == "latex":
        return _expr_latex(e)
    raise ValueError(f"unknown format {format!r}")


def print_operator(op) -> str:
    if op.is_zero():
        return "0"
    parts = []
    for coeff, gens in op.terms:
        gen_text = "*".join(g.label() for g in gens)
        c = coeff.as_constant()
        if c is not None and c == QC(1) and gen_text:
            parts.append(gen_text)
        elif gen_text:
            parts.append(f"({_expr_text(coeff)})*{gen_text}")
        else:
            parts.append(f"({_expr_text(coeff)})")
    out = parts[0]
    for p in parts[1:]:
        out += f" + {p}"
    return out


# ---------------------------------------------------------------------------
# Context serializer
# ---------------------------------------------------------------------------


def serialize_context(ctx: DependencyContext) -> str:
    lines = []
    if ctx.independents:
        lines.append("independent " + " ".join(s.name for s in ctx.independents))
    if ctx.parameters:
        lines.append("param " + " ".join(s.name for s in ctx.parameters))
    for s in ctx.dependents:
        lines.append(f"dependent {s.name}")
    for g, dep in ctx.constraints:
        lines.append(f"constraint {_expr_text(g)} = 0 solves {dep.name}")
    for (depn, indepn), rep in sorted(ctx.representations.items()):
        lines.append(f"representation d{depn}/d{indepn} = {_expr_text(rep.expr)}")
    for f, args in ctx.opaques:
        lines.append(f"opaque {f.name}({','.join(a.name for a in args)})")
    for a, b, v in sorted(ctx.commutators.pairs(), key=lambda t: (t[0].name, t[1].name)):
        lines.append(f"commutator [{a.name},{b.name}] = {_expr_text(v)}")
    lines.append(f"ordering {ctx.ordering_mode}")
    return "\n".join(lines) + "\n"
