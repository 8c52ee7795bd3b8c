"""Exception hierarchy.

Every error a user can provoke through a program text derives from
:class:`ProgramError`; the CLI maps those to exit status 1.
"""


class ProgramError(Exception):
    """The input program is rejected."""


class ParseError(ProgramError):
    def __init__(self, message: str, line: int, column: int, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(set(expected)))
        detail = f"line {line}, column {column}: {message}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)


class RewriteError(ProgramError):
    pass


class StratificationError(ProgramError):
    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        names = ", ".join(f"{name}/{arity}" for name, arity in self.cycle)
        super().__init__(f"program is not stratified: negation or aggregate inside cycle {{{names}}}")


class NestingExceeded(ProgramError):
    """A term would exceed the configured maxNesting bound."""

    def __init__(self, symbol: str, level: int, bound: int, context: str = ""):
        self.symbol = symbol
        self.level = level
        self.bound = bound
        message = f"term with function symbol {symbol!r} has nesting level {level} > maxNesting={bound}"
        if context:
            message = f"{context}: {message}"
        super().__init__(message)


class GroundingError(ProgramError):
    pass


class OracleTooLarge(ProgramError):
    pass


class TermStoreError(ValueError):
    """Misuse of the term store API (bad arity, unknown id, non-LIFO marks)."""
