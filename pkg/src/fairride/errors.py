"""Exception hierarchy shared across the package.

The CLI maps these to stable exit codes: InputError and subclasses -> 3,
PolicyValidationError and simulation aborts -> 4, anything argparse
rejects -> 2.
"""


class InputError(ValueError):
    """Malformed or inconsistent input data (bad row, dangling reference, ...)."""


class UnknownNodeError(InputError):
    """A node id was referenced that does not exist in the network."""


class UnreachableError(Exception):
    """No directed path exists between the requested nodes."""


class PolicyValidationError(RuntimeError):
    """A matching policy returned an infeasible assignment; the run is aborted."""


class RunLogError(Exception):
    """Base class for event-log format violations."""


class LogVersionError(RunLogError):
    """The log declares a format version this reader does not support."""


class TruncatedRecordError(RunLogError):
    """A record could not be parsed; carries the byte offset of the bad line."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


class OrderingError(RunLogError):
    """An appended event violates the canonical event ordering."""
