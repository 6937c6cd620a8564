"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes; see cli.EXIT_CODES.
"""


class PrivalignError(Exception):
    """Base class for all errors raised by this package."""


class InputError(PrivalignError):
    """Malformed or out-of-range caller input (values, files, CLI args)."""


class ConfigurationError(PrivalignError):
    """Session parameters that cannot work together (e.g. bound policy
    exceeding the plaintext space of the negotiated key size)."""


class KeygenError(PrivalignError):
    """Prime generation exhausted its retry budget (practically unreachable)."""


class NoInverseError(PrivalignError):
    """Requested multiplicative inverse does not exist (gcd != 1)."""


class MalformedCiphertextError(PrivalignError):
    """Ciphertext value outside the multiplicative group Z*_{n^2}."""


class NegotiationError(PrivalignError):
    """The two parties disagree on session parameters."""


class TransportError(PrivalignError):
    """Channel-level failure."""


class ChannelClosedError(TransportError):
    """Peer closed the connection (or never opened it)."""


class FramingError(TransportError):
    """Byte stream does not parse as a valid frame or payload."""


class ProtocolError(PrivalignError):
    """Peer violated the protocol state machine."""


class OracleCheckError(PrivalignError):
    """Protocol result disagrees with the plaintext reference score."""
