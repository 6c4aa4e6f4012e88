class InvalidInputError(ValueError):
    """Raised when an argument has the wrong shape (length, range, type)."""


class CapacityError(ValueError):
    """Raised when a plaintext is empty or larger than CCM with L=2 can carry."""


class MalformedEnvelopeError(ValueError):
    """Raised when envelope wire bytes cannot be parsed."""


class CounterExhaustedError(RuntimeError):
    """Raised when a sender counter would pass 2**64 - 1."""


class AuthenticationError(Exception):
    """
    Raised when a MIC or signature does not verify.

    Deliberately carries no information about the plaintext.
    """
