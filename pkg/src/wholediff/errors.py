"""Exception types shared across the package."""


class WholediffError(Exception):
    """Base class for all package errors."""


class ExpressionError(WholediffError):
    pass


class SubstitutionCycleError(ExpressionError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cyclic substitution: " + " -> ".join(s.name for s in self.cycle))


class NormalOrderError(ExpressionError):
    def __init__(self, a, b):
        self.pair = (a, b)
        super().__init__(f"no commutator declared for noncommuting pair ({a}, {b})")


class UnsupportedExpressionError(ExpressionError):
    pass


class ContextError(WholediffError):
    pass


class MissingRepresentationError(ContextError):
    def __init__(self, dependent, independent):
        self.dependent = dependent
        self.independent = independent
        super().__init__(f"missing representation d{dependent.name}/d{independent.name}")


class DegenerateConstraintError(ContextError):
    pass


class ContextMismatchError(WholediffError):
    pass


class ParseError(WholediffError):
    """Parse failure carrying the byte span of the offending text."""

    def __init__(self, message, span):
        self.span = span
        super().__init__(f"{message} (at {span.start}..{span.end})")


class EvaluationError(WholediffError):
    pass


class UnboundSymbolError(EvaluationError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"symbol '{name}' has no numeric binding")


class SingularityError(EvaluationError):
    pass


class RootSolveError(WholediffError):
    def __init__(self, message, sample=None):
        self.sample = sample
        super().__init__(message)
