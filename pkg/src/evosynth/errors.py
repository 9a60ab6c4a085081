"""Exception hierarchy shared across the package.

ConfigError and DataError map to CLI exit codes 2 and 3 respectively;
everything else is an ordinary failure.
"""


class EvoSynthError(Exception):
    """Base class for all package errors."""


class ConfigError(EvoSynthError):
    """Invalid parameter value or malformed experiment configuration."""


class DataError(EvoSynthError):
    """Empty or unusable dataset."""


class FormatError(DataError):
    """Malformed IDX file. ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ShapeError(DataError):
    """Input batch does not match the expected image shape."""


class MalformedAncestorError(EvoSynthError):
    """Ancestor network unfit for gene tagging (empty layer or cluster, dead synapse)."""


class AlignmentError(EvoSynthError):
    """Mismatched list lengths or incompatible genome tag spaces."""


class ArchMismatchError(EvoSynthError):
    """Genome tag space does not fit the network architecture."""


class StateError(EvoSynthError):
    """Evolution loop invoked in an invalid state (e.g. empty population)."""


class InvariantError(EvoSynthError):
    """Internal invariant violated; indicates a bug, not a user error."""
