"""Exception types shared across the package."""

from __future__ import annotations


class ChipscoreError(Exception):
    """Base class for all package errors."""


class MidiParseError(ChipscoreError):
    """Malformed standard MIDI data. Carries the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class ScoreError(ChipscoreError):
    """Violation of a score invariant (pitch range, monophony, note length)."""


class VoiceIdentificationError(ChipscoreError):
    """Tracks of a multi-track score could not be assigned to the four voices."""


class TokenFormatError(ChipscoreError):
    """Bad token or likelihood text file."""


class ModelFormatError(ChipscoreError):
    """Bad serialized model data."""


class BadMagicError(ModelFormatError):
    pass


class VersionMismatchError(ModelFormatError):
    pass


class TruncatedModelError(ModelFormatError):
    pass
