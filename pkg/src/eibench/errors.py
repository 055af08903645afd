"""Exception taxonomy shared by all eibench modules.

The CLI maps these onto its exit codes: data/validation problems and
degenerate numerical inputs exit 1, stream/file format problems exit 2,
usage problems exit 3.
"""


class EibenchError(Exception):
    """Base class for all errors raised by this package."""


class ValidationFailure(EibenchError):
    """A prediction set violates one or more format invariants.

    Carries the full report so callers can surface every violation,
    not just the first.
    """

    def __init__(self, report):
        self.report = report
        super().__init__(str(report))


class PairingMismatchError(EibenchError):
    """Two prediction sets cannot be paired; names the differing field."""

    def __init__(self, field, detail):
        self.field = field
        super().__init__(f"cannot pair prediction sets: {field} mismatch ({detail})")


class DegenerateInputError(EibenchError):
    """Statistical input with no usable signal (zero variance, too few points)."""


class ConfigError(EibenchError):
    """Synthetic population config is invalid or targets are infeasible."""


class FormatError(EibenchError):
    """Base class for stream-level problems in the EIPRED1 format."""


class BadMagicError(FormatError):
    """Stream does not start with the EIPRED1 magic bytes."""


class TruncatedStreamError(FormatError):
    """Stream ends before the declared payload is complete."""


class HeaderPayloadMismatchError(FormatError):
    """Declared header sizes disagree with the actual payload length."""
