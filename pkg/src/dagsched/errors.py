"""Shared exception types."""


class DagschedError(Exception):
    """Base class for workbench errors."""


class CycleError(DagschedError):
    """An operation that requires an acyclic graph found a cycle."""


class InfeasibleInstanceError(DagschedError):
    """No constraint-satisfying device assignment exists."""


class InstanceTooLargeError(DagschedError):
    """The exact solver refused the instance size."""


class UnreachableLinkError(DagschedError):
    """A positive-volume transfer was requested over a zero-bandwidth link."""


class InstanceFormatError(DagschedError):
    """An instance or assignment file could not be parsed."""
