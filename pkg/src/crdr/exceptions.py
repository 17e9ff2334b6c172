"""Error types shared across the codec.

The CLI maps these onto exit codes: DomainError -> 3, everything else
derived from CodecError -> 4. Usage errors are argparse's business (exit 2).
"""


class CodecError(Exception):
    """Base class for all codec errors."""


class DomainError(CodecError):
    """An input value is outside its documented range (q, beta, fraction...)."""


class DimensionError(CodecError):
    """Tensor dimensions violate an operation's contract."""


class NumericError(CodecError):
    """Non-finite values where finite ones are required."""


class ParameterError(CodecError):
    """Invalid distribution or model parameters (e.g. nonpositive scale)."""


class EncodeError(CodecError):
    """Symbols cannot be entropy-coded (out of table bounds)."""


class DecodeError(CodecError):
    """The coded payload is truncated or internally inconsistent."""


class FormatError(CodecError):
    """A container/header/checkpoint is malformed."""


class CompatibilityError(CodecError):
    """A stream and a model checkpoint do not belong together."""


class SizeError(CodecError):
    """Image dimensions outside the representable range."""
