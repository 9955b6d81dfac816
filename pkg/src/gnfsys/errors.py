from __future__ import annotations


class GNFError(Exception):
    """Base class for all errors raised by gnfsys."""


class ElementSyntaxError(GNFError, ValueError):
    def __init__(self, msg: str, text: str = "", pos: int = 0):
        self.msg = msg
        self.text = text
        self.pos = pos
        super().__init__(f"{msg} at position {pos}")


class TermSyntaxError(GNFError, ValueError):
    def __init__(self, msg: str, text: str = "", pos: int = 0):
        self.msg = msg
        self.text = text
        self.pos = pos
        super().__init__(f"{msg} at position {pos} in {text!r}")


class SystemLoadError(GNFError, ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.msg = msg
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class StrippingError(GNFError):
    """A template is not strippable (C1 or C2 does not hold)."""

    def __init__(self, condition: str, msg: str, path: tuple[int, ...] = ()):
        self.condition = condition
        self.path = path
        super().__init__(f"{condition}: {msg}")


class UnboundVariable(GNFError, KeyError):
    pass


class EvaluationError(GNFError):
    """Aborts an evaluation.  Distinct from a ``false`` result."""


class DomainError(EvaluationError):
    """A base operation was applied outside its domain."""


class RuntimeViolation(EvaluationError):
    """A C4/C5 bound failed on a concrete instance."""

    def __init__(self, condition: str, symbol: int, term: str, lhs: int, rhs: int, detail: str = ""):
        self.condition = condition
        self.symbol = symbol
        self.term = term
        self.lhs = lhs
        self.rhs = rhs
        self.detail = detail
        msg = f"{condition} runtime violation in f{symbol}: {term}: {lhs} > {rhs}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class RankDescentError(EvaluationError):
    pass


class InternalDefect(EvaluationError):
    """An emitted term failed an instance check that static checking should have ruled out."""


class UniverseTooLarge(GNFError, ValueError):
    pass


class NotAccepted(GNFError):
    """Evaluation was requested on a system that failed static checking."""
