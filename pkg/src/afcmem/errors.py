"""Exception hierarchy.

``InvalidArgumentError`` covers malformed inputs and violated type invariants.
``NumericalPreconditionError`` and its subclasses cover inputs that are valid
in form but cannot be simulated faithfully (under-resolved grids, truncated
pulses, overlapping echo windows, missing cavity resonances). The CLI maps the
two families to different exit codes.
"""


class AfcError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(AfcError, ValueError):
    pass


class NumericalPreconditionError(AfcError):
    pass


class ResolutionError(NumericalPreconditionError):
    pass


class TruncationError(NumericalPreconditionError):
    pass


class WindowOverlapError(NumericalPreconditionError):
    pass


class ConfigurationError(NumericalPreconditionError):
    pass
