"""Exception types shared across the package."""


class NxwlanError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(NxwlanError, ValueError):
    """A numeric argument is outside the domain of the model."""


class InvariantViolation(NxwlanError, ValueError):
    """A frame or record breaks one of its type invariants."""


class Malformed(NxwlanError, ValueError):
    """A byte string could not be decoded.

    ``offset`` is the byte position at which decoding gave up and
    ``reason`` a short machine-readable tag (``truncated``,
    ``unknown_kind``, ``length_mismatch`` ...).
    """

    def __init__(self, offset: int, reason: str):
        super().__init__(f"malformed input at offset {offset}: {reason}")
        self.offset = offset
        self.reason = reason


class BadRule(NxwlanError, ValueError):
    """A switch rule violates a table invariant."""


class UnexpectedMsg(NxwlanError):
    """A control message arrived in a state that does not accept it."""


class UnknownSta(NxwlanError, KeyError):
    """Operation on a station the controller does not know."""

    def __str__(self) -> str:
        return Exception.__str__(self)


class ScenarioError(NxwlanError, ValueError):
    """Invalid scenario; ``path`` points at the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message
