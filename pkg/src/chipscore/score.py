"""Score types for the four-voice chip ensemble.

Timing is integer ticks at 44100 per second throughout. The four voices
(two pulse channels, triangle, noise) are strictly monophonic; pitch ranges
are enforced at construction and never silently repaired. On the noise
voice the ``pitch`` field holds the noise type (1-16) instead of a MIDI
pitch.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable

from .errors import ScoreError

TICKS_PER_SECOND = 44100


class VoiceKind(Enum):
    P1 = "p1"
    P2 = "p2"
    TR = "tr"
    NO = "no"


VOICE_ORDER: tuple[VoiceKind, ...] = (
    VoiceKind.P1,
    VoiceKind.P2,
    VoiceKind.TR,
    VoiceKind.NO,
)

MELODIC_KINDS: tuple[VoiceKind, ...] = (VoiceKind.P1, VoiceKind.P2, VoiceKind.TR)

# Inclusive playable range per voice; noise "pitches" are the 16 noise types.
PITCH_RANGES: dict[VoiceKind, tuple[int, int]] = {
    VoiceKind.P1: (33, 108),
    VoiceKind.P2: (33, 108),
    VoiceKind.TR: (21, 108),
    VoiceKind.NO: (1, 16),
}


@dataclass(frozen=True, slots=True)
class Note:
    """A single note: integer pitch (or noise type) with onset/offset ticks."""

    pitch: int
    on: int
    off: int

    def __post_init__(self) -> None:
        if self.on < 0:
            raise ScoreError(f"note onset must be >= 0, got {self.on}")
        if self.off <= self.on:
            raise ScoreError(
                f"note must have positive length, got on={self.on} off={self.off}"
            )


@dataclass(frozen=True, slots=True)
class Voice:
    """One monophonic voice: notes ordered by onset, never overlapping."""

    kind: VoiceKind
    notes: tuple[Note, ...] = ()

    def __post_init__(self) -> None:
        lo, hi = PITCH_RANGES[self.kind]
        prev: Note | None = None
        for note in self.notes:
            if not lo <= note.pitch <= hi:
                raise ScoreError(
                    f"voice {self.kind.value}: pitch {note.pitch} at tick {note.on} "
                    f"outside range [{lo}, {hi}]"
                )
            if prev is not None:
                if note.on < prev.on:
                    raise ScoreError(
                        f"voice {self.kind.value}: notes not ordered by onset "
                        f"at tick {note.on}"
                    )
                if prev.off > note.on:
                    raise ScoreError(
                        f"voice {self.kind.value}: overlapping notes at tick {note.on} "
                        f"(previous note ends at {prev.off})"
                    )
            prev = note

    def __len__(self) -> int:
        return len(self.notes)


def _as_notes(notes: Iterable[Note]) -> tuple[Note, ...]:
    return tuple(sorted(notes, key=lambda n: (n.on, n.off, n.pitch)))


@dataclass(frozen=True, slots=True)
class Score:
    """Exactly one voice of each kind; voices may be empty."""

    p1: Voice
    p2: Voice
    tr: Voice
    no: Voice

    def __post_init__(self) -> None:
        expected = dict(zip(("p1", "p2", "tr", "no"), VOICE_ORDER))
        for field_name, kind in expected.items():
            voice = getattr(self, field_name)
            if voice.kind is not kind:
                raise ScoreError(
                    f"field {field_name} holds a voice of kind {voice.kind.value}"
                )

    @classmethod
    def empty(cls) -> Score:
        return cls.from_parts()

    @classmethod
    def from_parts(
        cls,
        p1: Iterable[Note] = (),
        p2: Iterable[Note] = (),
        tr: Iterable[Note] = (),
        no: Iterable[Note] = (),
    ) -> Score:
        """Build a score from per-voice note iterables, sorting by onset."""
        return cls(
            p1=Voice(VoiceKind.P1, _as_notes(p1)),
            p2=Voice(VoiceKind.P2, _as_notes(p2)),
            tr=Voice(VoiceKind.TR, _as_notes(tr)),
            no=Voice(VoiceKind.NO, _as_notes(no)),
        )

    def voice(self, kind: VoiceKind) -> Voice:
        return getattr(self, kind.value)

    def voices(self) -> tuple[Voice, Voice, Voice, Voice]:
        return (self.p1, self.p2, self.tr, self.no)

    def with_voice(self, kind: VoiceKind, notes: Iterable[Note]) -> Score:
        """Return a copy with one voice's notes replaced."""
        return replace(self, **{kind.value: Voice(kind, _as_notes(notes))})

    def non_empty_kinds(self) -> tuple[VoiceKind, ...]:
        return tuple(v.kind for v in self.voices() if v.notes)

    def note_count(self) -> int:
        return sum(len(v) for v in self.voices())


@dataclass(frozen=True, slots=True)
class Track:
    """One instrument track of an arbitrary-ensemble score."""

    name: str
    program: int
    is_percussion: bool
    notes: tuple[Note, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= self.program <= 127:
            raise ScoreError(f"program must be in [0, 127], got {self.program}")


@dataclass(frozen=True, slots=True)
class MultiTrackScore:
    """Arbitrary-ensemble content with timing already at 44100 ticks/s."""

    tracks: tuple[Track, ...] = ()

    def note_count(self) -> int:
        return sum(len(t.notes) for t in self.tracks)
