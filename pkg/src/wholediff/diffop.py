"""Differential operators as first-class values: application, composition,
commutators, and term-level simplification.

An operator is a finite sum of terms, each a coefficient expression times
an ordered product of derivative generators; generators apply
right-to-left (the rightmost acts first) and the coefficient multiplies
from the left.  Application semantics define correctness; composition is
required to agree with nested application and pushes derivatives through
coefficients via the product rule."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from .depctx import DependencyContext
from .errors import ContextError, ContextMismatchError
from .symexpr import Expr, Symbol, equals_canonical
from .wholederiv import derive_raw, finalize

PLAIN = "plain"
WHOLE = "whole"


@dataclass(frozen=True)
class DerivativeGenerator:
    variable: Symbol
    mode: str  # "plain" | "whole"

    def __post_init__(self):
        if self.mode not in (PLAIN, WHOLE):
            raise ValueError(f"unknown generator mode {self.mode!r}")

    def label(self) -> str:
        return ("W" if self.mode == WHOLE else "D") + f"[{self.variable.name}]"


class DifferentialOperator:
    """Immutable operator tied to one dependency context."""

    __slots__ = ("context", "terms")

    def __init__(
        self,
        context: DependencyContext,
        terms: Sequence[Tuple[Expr, Tuple[DerivativeGenerator, ...]]],
    ):
        for _coeff, gens in terms:
            for g in gens:
                if g.mode == WHOLE and not context.is_independent(g.variable):
                    raise ContextError(
                        f"whole-derivative generator variable {g.variable.name} "
                        "is not independent in this context"
                    )
        object.__setattr__(self, "context", context)
        object.__setattr__(self, "terms", _merge_terms(terms))

    def __setattr__(self, name, value):
        raise AttributeError("DifferentialOperator is immutable")

    # -- constructors ----------------------------------------------------

    @classmethod
    def zero(cls, ctx: DependencyContext) -> "DifferentialOperator":
        return cls(ctx, [])

    @classmethod
    def identity(cls, ctx: DependencyContext) -> "DifferentialOperator":
        return cls(ctx, [(Expr.one(), ())])

    @classmethod
    def multiplication(cls, ctx: DependencyContext, coeff) -> "DifferentialOperator":
        return cls(ctx, [(Expr._coerce(coeff), ())])

    @classmethod
    def generator(
        cls, ctx: DependencyContext, variable: Symbol, mode: str
    ) -> "DifferentialOperator":
        return cls(ctx, [(Expr.one(), (DerivativeGenerator(variable, mode),))])

    @classmethod
    def whole(cls, ctx, variable) -> "DifferentialOperator":
        return cls.generator(ctx, variable, WHOLE)

    @classmethod
    def plain(cls, ctx, variable) -> "DifferentialOperator":
        return cls.generator(ctx, variable, PLAIN)

    def is_zero(self) -> bool:
        return not self.terms

    # -- linear structure ------------------------------------------------

    def __add__(self, other: "DifferentialOperator") -> "DifferentialOperator":
        self._check(other)
        return DifferentialOperator(self.context, list(self.terms) + list(other.terms))

    def __sub__(self, other: "DifferentialOperator") -> "DifferentialOperator":
        return self + (-other)

    def __neg__(self) -> "DifferentialOperator":
        return DifferentialOperator(
            self.context, [(-c, g) for c, g in self.terms]
        )

    def scale(self, coeff) -> "DifferentialOperator":
        coeff = Expr._coerce(coeff)
        return DifferentialOperator(
            self.context, [(coeff * c, g) for c, g in self.terms]
        )

    def _check(self, other: "DifferentialOperator"):
        if other.context is not self.context:
            raise ContextMismatchError(
                "operators belong to different dependency contexts"
            )

    def __repr__(self):
        from .textio import print_operator

        try:
            return f"DifferentialOperator({print_operator(self)})"
        except Exception:
            return "DifferentialOperator(...)"


def _merge_terms(terms) -> Tuple[Tuple[Expr, Tuple[DerivativeGenerator, ...]], ...]:
    buckets: Dict[tuple, Expr] = {}
    order: List[tuple] = []
    for coeff, gens in terms:
        gens = tuple(gens)
        key = tuple((g.mode, g.variable.name) for g in gens)
        if key in buckets:
            buckets[key] = (buckets[key][0] + coeff, gens)
        else:
            buckets[key] = (coeff, gens)
            order.append(key)
    out = []
    for key in sorted(order, key=lambda k: (len(k), k)):
        coeff, gens = buckets[key]
        if not coeff.is_zero():
            out.append((coeff, gens))
    return tuple(out)


def apply(A: DifferentialOperator, e) -> Expr:
    """Apply the operator to an expression; generators act right-to-left,
    representation markers are resolved per the context's ordering mode at
    the end of each term."""
    ctx = A.context
    total = Expr.zero()
    for coeff, gens in A.terms:
        cur = Expr._coerce(e)
        for g in reversed(gens):
            cur = derive_raw(cur, g.variable, g.mode, ctx)
        total = total + finalize(coeff * cur, ctx)
    if ctx.commutators:
        from .symexpr import normal_order

        total = normal_order(total, ctx.commutators)
    return total


def compose(A: DifferentialOperator, B: DifferentialOperator) -> DifferentialOperator:
    """Operator such that apply(compose(A, B), e) = apply(A, apply(B, e)):
    A's generators are pushed through B's coefficients by the product rule."""
    A._check(B)
    ctx = A.context
    terms = []
    for ca, ga in A.terms:
        for cb, gb in B.terms:
            for c2, g2 in _push(ga, cb, ctx):
                terms.append((ca * c2, tuple(g2) + tuple(gb)))
    return DifferentialOperator(ctx, terms)


def _push(gens, coeff: Expr, ctx) -> List[Tuple[Expr, Tuple[DerivativeGenerator, ...]]]:
    """Rewrite gens∘(coeff·) as a sum of (coeff'·)∘gens' via the Leibniz
    rule, innermost generator first."""
    if not gens:
        return [(coeff, ())]
    front, last = gens[:-1], gens[-1]
    out = []
    dcoeff = finalize(derive_raw(coeff, last.variable, last.mode, ctx), ctx)
    if not dcoeff.is_zero():
        out.extend(_push(front, dcoeff, ctx))
    for c2, g2 in _push(front, coeff, ctx):
        out.append((c2, tuple(g2) + (last,)))
    return out


def commutator(A: DifferentialOperator, B: DifferentialOperator) -> DifferentialOperator:
    return compose(A, B) - compose(B, A)


def expand_to_plain(A: DifferentialOperator) -> DifferentialOperator:
    """Normal form with only plain generators: every whole generator is
    expanded into its plain derivative plus representation chain terms,
    coefficients are pushed to the left, and each term's plain-generator
    product is sorted (plain partials commute)."""
    ctx = A.context
    total = DifferentialOperator.zero(ctx)
    for c, gens in A.terms:
        acc = DifferentialOperator.multiplication(ctx, c)
        for g in gens:
            acc = compose(acc, _elementary_plain(g, ctx))
        total = total + acc
    sorted_terms = [
        (c, tuple(sorted(g, key=lambda d: d.variable.name)))
        for c, g in total.terms
    ]
    return DifferentialOperator(ctx, sorted_terms)


def _elementary_plain(g: DerivativeGenerator, ctx) -> DifferentialOperator:
    if g.mode == PLAIN:
        return DifferentialOperator.plain(ctx, g.variable)
    terms = [(Expr.one(), (DerivativeGenerator(g.variable, PLAIN),))]
    for u in ctx.dependents:
        rep = ctx.representation(u, g.variable)
        if rep is not None:
            terms.append((rep, (DerivativeGenerator(u, PLAIN),)))
    return DifferentialOperator(ctx, terms)


def op_equals(A: DifferentialOperator, B: DifferentialOperator) -> bool:
    """Equality of the plain-generator normal forms, term by term."""
    A._check(B)
    diff = expand_to_plain(A) - expand_to_plain(B)
    return all(equals_canonical(c, Expr.zero()) for c, _ in diff.terms)
