"""Exception hierarchy shared by every module.

Errors that signal a broken theorem hypothesis derive from
:class:`HypothesisViolation`; the CLI maps that family to exit code 1.
"""


class VarprinError(Exception):
    """Base class for all package errors."""


class BadParameter(VarprinError, ValueError):
    pass


class UnknownPoint(VarprinError, LookupError):
    def __init__(self, point):
        super().__init__(f"unknown point {point!r}")
        self.point = point

    def __str__(self):
        return self.args[0]


class DomainViolation(VarprinError, ValueError):
    """Coordinates outside the domain of a distance family (e.g. KL on a zero entry)."""


class AxiomViolation(VarprinError, ValueError):
    """A table breaks the identity axiom d(x, y) = 0 <=> x = y."""

    def __init__(self, message, element=None):
        super().__init__(message)
        self.element = element


class BudgetExceeded(VarprinError):
    pass


class HypothesisViolation(VarprinError):
    """A precondition of one of the theorems fails on the given instance."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class EmptyGraph(HypothesisViolation):
    pass


class EstimateViolation(HypothesisViolation):
    pass


class NonSingleton(VarprinError):
    pass


class IterationLimit(VarprinError):
    pass


class TraceMismatch(VarprinError):
    pass


class NoConvergence(VarprinError):
    pass


class ProblemError(VarprinError):
    """Base for problem-file failures (CLI exit code 3)."""


class ParseError(ProblemError):
    def __init__(self, message, locus=None):
        super().__init__(f"{message} (at {locus})" if locus else message)
        self.locus = locus


class ValidationError(ProblemError):
    def __init__(self, message, kind=None, element=None):
        super().__init__(message)
        self.kind = kind
        self.element = element
