"""Exception hierarchy shared by every module of the package."""


class CompidentError(Exception):
    """Base class for all errors raised by compident."""


class MalformedInput(CompidentError, ValueError):
    """Input text is not valid JSON or does not follow the model schema."""


class InvalidModel(CompidentError, ValueError):
    """Structurally invalid compartment model (self-loop, duplicate edge, ...)."""


class BadSize(CompidentError, ValueError):
    pass


class NotATree(InvalidModel):
    pass


class NotBidirectionalTree(InvalidModel):
    pass


class EdgeNotInModel(InvalidModel, KeyError):
    def __str__(self):  # KeyError would quote the message
        return str(self.args[0]) if self.args else ""


class PreconditionViolated(CompidentError, ValueError):
    """A hypothesis required for input-output equations does not hold."""


class MissingVariable(CompidentError, KeyError):
    pass


class NotDivisible(CompidentError, ArithmeticError):
    pass


class NotSquare(CompidentError, ValueError):
    pass


class IndexOutOfRange(CompidentError, IndexError):
    pass


class MinorLimitExceeded(CompidentError, RuntimeError):
    """Enumerating the requested minors would exceed the configured cap."""


class RankDeficient(CompidentError, ValueError):
    """The model is not generically locally identifiable."""


class NoSingleMinor(CompidentError):
    """No maximal minor divides all the others.

    The full list of maximal minors is kept on ``minors`` for inspection.
    """

    def __init__(self, message, minors=()):
        super().__init__(message)
        self.minors = list(minors)


class DegenerateSample(CompidentError, ArithmeticError):
    """A random parameter sample hit a non-generic point (e.g. repeated roots)."""
