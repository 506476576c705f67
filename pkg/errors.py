"""
Exception hierarchy for the unitary design toolkit
"""


class DesignToolkitError(Exception):
    """Base class for every error raised by the toolkit"""


class DimensionError(DesignToolkitError, ValueError):
    """Operands disagree on qubit count or have an unusable shape"""


class CapacityError(DesignToolkitError, ValueError):
    """Requested size is beyond what a dense or exhaustive computation allows"""


class DomainError(DesignToolkitError, ValueError):
    """Argument lies outside the mathematical domain of an operation"""


class ValidationError(DesignToolkitError, ValueError):
    """Input fails a physical validity check (unitarity, CPTP, normalization)"""
