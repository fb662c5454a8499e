"""Exception taxonomy shared across the package.

Validation of net structure reports problems as returned error lists, not
exceptions; everything here signals misuse or runtime failure.
"""


class MMNetError(Exception):
    """Base class for all errors raised by this package."""


# -- type system ------------------------------------------------------------

class NoCastRule(MMNetError):
    """No conversion registered between the two type kinds."""


class CastFailure(MMNetError):
    """A registered conversion exists but the payload cannot be converted."""


class UnknownPredicate(MMNetError):
    pass


class UnknownFunction(MMNetError):
    pass


class ArityMismatch(MMNetError):
    pass


class TypeMismatch(MMNetError):
    pass


class EmptySetAccess(MMNetError):
    """getL/rem applied to an empty set."""


class NotSubset(MMNetError):
    """Multiset difference requires the subtrahend to be contained."""


# -- object store -----------------------------------------------------------

class DanglingAddress(MMNetError):
    """An address resolves to no stored object."""


class OutOfBounds(MMNetError):
    """A segment exceeds the image canvas."""


class UnknownShape(MMNetError):
    pass


# -- parsing ----------------------------------------------------------------

class ParseError(MMNetError):
    """Syntax error with position info, for query and net-definition text."""

    def __init__(self, message, line=None, col=None):
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)
        self.line = line
        self.col = col


class UnboundAnswerVariable(MMNetError):
    """A SELECT answer variable does not occur in the query pattern."""


# -- actions ----------------------------------------------------------------

class MissingParameter(MMNetError):
    pass


class StoreRequired(MMNetError):
    """A template/argument term reads the object store but none was given."""


# -- runtime ----------------------------------------------------------------

class NotEnabled(MMNetError):
    """fire() called with a binding that is not enabled."""


class NoSupply(MMNetError):
    """An external-input variable has no configured value supply."""


class UnknownTransition(MMNetError):
    pass


class UnknownPlace(MMNetError):
    pass


class ChannelTypeMismatch(MMNetError):
    """Channel fusion attempted between places of different colors."""
