"""Exception hierarchy shared by every module."""


class SasGraphError(Exception):
    """Base class for all checked failures raised by the package."""


class IndexOutOfRange(SasGraphError):
    pass


class SizeGuardExceeded(SasGraphError):
    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class NotPartialAutomorphism(SasGraphError):
    pass


class BaseMismatch(SasGraphError):
    pass


class NotYetPresent(SasGraphError):
    """A vertex or branch lies beyond the built depth."""


class NotPartialIso(SasGraphError):
    pass


class KBudgetExceeded(SasGraphError):
    pass


class StabilityViolation(SasGraphError):
    """An edge value changed between two built stages of a tower."""


class BudgetExhausted(SasGraphError):
    """A bounded search ran out of candidates.

    ``found`` is the number of hits produced before giving up; ``partial``
    carries whatever partial result the caller had assembled.
    """

    def __init__(self, message, found=0, partial=None):
        super().__init__(message)
        self.found = found
        self.partial = partial


class StreamExhausted(SasGraphError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class FunctionsAgree(SasGraphError):
    pass


class ComplementarityFails(SasGraphError):
    def __init__(self, x):
        super().__init__(f"complementarity fails at {x}")
        self.x = x


class ParseError(SasGraphError):
    def __init__(self, message, location=None):
        if location is not None:
            message = f"{message} (at {location})"
        super().__init__(message)
        self.location = location
