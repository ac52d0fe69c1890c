"""Exception hierarchy.

Every error that can cross the wire carries a protocol ``code``; the eight
codes below are the complete error vocabulary of the session protocol
(see docs/protocol.md). Library-level subclasses refine a code without
adding new wire classes.
"""


class MidifillError(Exception):
    """Base class for all library errors."""

    code = "INTERNAL"


class SchemaError(MidifillError):
    """Request body fails schema validation (bad field, level out of 0-9,
    oversized MIDI payload)."""

    code = "SCHEMA_ERROR"


class MalformedMidi(MidifillError):
    """Input bytes are not a parseable standard MIDI file (format 0/1)."""

    code = "MALFORMED_MIDI"


class NoNotes(MidifillError):
    """No sounding notes in the first three eligible tracks."""

    code = "NO_NOTES"


class UnsupportedMetre(MidifillError):
    """Bar length is not an integer number of ticks, or the file changes
    time signature mid-stream."""

    code = "UNSUPPORTED_METRE"


class RoleError(MidifillError):
    code = "ROLE_ERROR"


class DuplicateRole(RoleError):
    """A non-empty track role was assigned to more than one track."""


class RoleCountMismatch(RoleError):
    """Number of roles does not match the number of tracks."""


class RangeError(MidifillError):
    code = "RANGE_ERROR"


class BarOutOfRange(RangeError):
    """Window origin bar outside the piece."""


class CellOutOfRange(RangeError):
    """Region cell addresses a track or bar outside the window."""


class EmptyRegion(RangeError):
    """Region contains no cells."""


class StateError(MidifillError):
    code = "STATE_ERROR"


class UnknownSession(StateError):
    """No session with the given id."""


class NothingPending(StateError):
    """resolve called while no infill result is pending."""


class ConcurrentRequest(StateError):
    """infill requested while a pending result is unresolved."""


class RolesNotSet(StateError):
    """analyze/infill requested before track roles were assigned."""


class GeneratorFailure(MidifillError):
    """The generator could not produce valid content; the input window is
    left unchanged."""

    code = "GENERATOR_FAILURE"


class RemoteTimeout(GeneratorFailure):
    """Remote generator endpoint did not answer within the timeout."""


class ProtocolError(GeneratorFailure):
    """Remote generator endpoint answered outside the wire protocol."""


class InvalidRemoteOutput(GeneratorFailure):
    """Remote generator returned events outside the region or register."""


class EmptyCloud(MidifillError):
    """Cloud centre requested for a bar with no notes."""
