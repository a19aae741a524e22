"""Exception hierarchy shared across the package."""

from __future__ import annotations


class PhonePilotError(Exception):
    """Base class for all package errors."""


class MemoryFormatError(PhonePilotError):
    """A long-term memory file could not be decoded.

    ``field`` names the offending record key or line where known.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class ActionParseError(PhonePilotError):
    """An action call expression could not be parsed or resolved."""


class ShortcutValidationError(PhonePilotError):
    """A shortcut definition violates a schema rule.

    ``rule`` is a stable machine-readable identifier for the violated rule.
    """

    def __init__(self, rule: str, message: str):
        super().__init__(message)
        self.rule = rule


class BindingError(PhonePilotError):
    """Shortcut argument binding failed. ``argument`` names the culprit."""

    def __init__(self, argument: str, message: str):
        super().__init__(message)
        self.argument = argument


class AppGraphError(PhonePilotError):
    """An app graph file is structurally invalid."""


class DeviceError(PhonePilotError):
    """A device operation failed (transport failure, invalid coordinates)."""


class PerceptionError(PhonePilotError):
    """A perception backend could not produce an element list."""


class TransportError(PhonePilotError):
    """A model HTTP call failed after exhausting its retry budget."""


class ScriptMissError(PhonePilotError):
    """A scripted model backend had no entry for a request (a test bug)."""


class ScriptAmbiguityError(PhonePilotError):
    """More than one scripted entry matched a request (a test bug)."""


class ResponseParseError(PhonePilotError):
    """An agent response did not follow its output grammar."""

    def __init__(self, message: str, section: str | None = None):
        super().__init__(message)
        self.section = section


class UndefinedMetricError(PhonePilotError):
    """A metric has no applicable data points (not the same as zero)."""


class AnnotationFormatError(PhonePilotError):
    """A rubric or annotation file is malformed or inconsistent."""


class DegenerateFitError(PhonePilotError):
    """Least squares has no unique solution (all x identical)."""
