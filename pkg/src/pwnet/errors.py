"""Exception hierarchy shared by all pwnet modules."""

from __future__ import annotations


class PwnError(Exception):
    """Base class for every error raised by pwnet."""


# -- net-core ---------------------------------------------------------------

class NotEnabled(PwnError):
    pass


class UnsafeFiring(PwnError):
    """Firing would put a second token on a place."""


class NotFreeChoice(PwnError):
    pass


class InvalidStructure(PwnError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations) or "invalid structure")


# -- reduction --------------------------------------------------------------

class GuardViolated(PwnError):
    pass


class DivergentLoop(GuardViolated):
    """Self-loop transition that is alone in its cluster: it can never be left."""


class ReductionInconclusive(PwnError):
    pass


# -- oracle -----------------------------------------------------------------

class StateCapExceeded(PwnError):
    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"state space exceeds cap of {cap} states")


class UnsafeNet(PwnError):
    pass


class ConfusionDetected(PwnError):
    def __init__(self, marking, message: str):
        self.marking = marking
        super().__init__(message)


class StepBoundExceeded(PwnError):
    pass


class NotIndependent(PwnError):
    pass


class NotFirable(PwnError):
    pass


# -- io ---------------------------------------------------------------------

class NetSyntaxError(PwnError):
    def __init__(self, message: str, line: int, column: int = 1):
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}")


class SemanticError(PwnError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"{line}: {message}" if line is not None else message)


class XmlError(PwnError):
    pass


class UnsupportedFeature(PwnError):
    pass
