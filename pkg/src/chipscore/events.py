"""The 631-event vocabulary and the score <-> event-sequence codec.

Event IDs partition as: 0 boundary; 1-100 time shifts of 1..100 ticks;
101-190 shifts of 110..1000 in steps of 10; 191-370 shifts of 1100..19000
in steps of 100; then per-voice note off/on blocks (P1 371-447, P2 448-524,
TR 525-613, NO 614-630). Encoding a score is lossless except for snapping
each inter-event gap to the nearest representable shift.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ChipscoreError, TokenFormatError
from .score import PITCH_RANGES, VOICE_ORDER, Note, Score, VoiceKind

VOCAB_SIZE = 631
BOUNDARY_ID = 0
MAX_SHIFT_TICKS = 19_000
MELODIC_ID_LO = 371  # first P1 event
MELODIC_ID_HI = 613  # last TR event
NOISE_ID_LO = 614
NOISE_ID_HI = 630


@dataclass(frozen=True, slots=True)
class Boundary:
    pass


@dataclass(frozen=True, slots=True)
class TimeShift:
    ticks: int


@dataclass(frozen=True, slots=True)
class NoteOff:
    voice: VoiceKind


@dataclass(frozen=True, slots=True)
class NoteOn:
    voice: VoiceKind
    pitch: int


EventDesc = Boundary | TimeShift | NoteOff | NoteOn


@dataclass(frozen=True)
class Vocab:
    """Bijection between the 631 event IDs and their descriptions."""

    id_to_desc: tuple[EventDesc, ...]
    desc_to_id: dict[EventDesc, int] = field(repr=False)
    shift_ticks: tuple[int, ...] = field(repr=False)  # ticks of IDs 1..370, ascending

    def describe(self, event_id: int) -> EventDesc:
        if not 0 <= event_id < len(self.id_to_desc):
            raise ChipscoreError(f"event id {event_id} out of range [0, {VOCAB_SIZE - 1}]")
        return self.id_to_desc[event_id]

    def id_of(self, desc: EventDesc) -> int:
        return self.desc_to_id[desc]

    def note_on_id(self, voice: VoiceKind, pitch: int) -> int:
        return self.desc_to_id[NoteOn(voice, pitch)]

    def note_off_id(self, voice: VoiceKind) -> int:
        return self.desc_to_id[NoteOff(voice)]

    def __len__(self) -> int:
        return len(self.id_to_desc)


def build_vocab() -> Vocab:
    """Construct the fixed 631-event vocabulary."""
    descs: list[EventDesc] = [Boundary()]
    for ticks in range(1, 101):
        descs.append(TimeShift(ticks))
    for ticks in range(110, 1001, 10):
        descs.append(TimeShift(ticks))
    for ticks in range(1100, 19_001, 100):
        descs.append(TimeShift(ticks))
    for voice in VOICE_ORDER:
        lo, hi = PITCH_RANGES[voice]
        descs.append(NoteOff(voice))
        for pitch in range(lo, hi + 1):
            descs.append(NoteOn(voice, pitch))
    assert len(descs) == VOCAB_SIZE
    desc_to_id = {desc: event_id for event_id, desc in enumerate(descs)}
    shift_ticks = tuple(d.ticks for d in descs if isinstance(d, TimeShift))
    return Vocab(tuple(descs), desc_to_id, shift_ticks)


@lru_cache(maxsize=1)
def get_vocab() -> Vocab:
    """The shared read-only vocabulary instance."""
    return build_vocab()


def quantize_gap(gap: int, vocab: Vocab | None = None) -> list[int]:
    """Encode a positive tick gap as one or more time-shift event IDs.

    Gaps above 19000 ticks are emitted greedily as maximal shifts; the
    remainder snaps to the nearest representable value, ties rounding up.
    """
    if gap <= 0:
        raise ValueError(f"gap must be positive, got {gap}")
    vocab = vocab or get_vocab()
    ticks = vocab.shift_ticks
    max_id = len(ticks)  # ID of the largest shift
    out: list[int] = []
    while gap > MAX_SHIFT_TICKS:
        out.append(max_id)
        gap -= MAX_SHIFT_TICKS
    if gap == 0:
        return out
    i = bisect.bisect_left(ticks, gap)
    if i == len(ticks) or (i > 0 and gap - ticks[i - 1] < ticks[i] - gap):
        i -= 1
    out.append(i + 1)  # shift IDs start at 1
    return out


def shift_value(event_id: int, vocab: Vocab | None = None) -> int:
    """Tick value of a time-shift event ID."""
    vocab = vocab or get_vocab()
    desc = vocab.describe(event_id)
    if not isinstance(desc, TimeShift):
        raise ChipscoreError(f"event id {event_id} is not a time shift")
    return desc.ticks


def encode(score: Score, vocab: Vocab | None = None) -> list[int]:
    """Flatten a score into its boundary-delimited event-ID sequence.

    Simultaneous events are ordered P1, P2, TR, NO with note-offs before
    note-ons per voice; an initial shift is emitted when the first activity
    falls after tick 0 so decoding preserves absolute timing.
    """
    vocab = vocab or get_vocab()
    by_tick: dict[int, list[int]] = {}

    def push(tick: int, event_id: int) -> None:
        by_tick.setdefault(tick, []).append(event_id)

    for voice in score.voices():
        for note in voice.notes:
            push(note.on, vocab.note_on_id(voice.kind, note.pitch))
            push(note.off, vocab.note_off_id(voice.kind))

    out = [BOUNDARY_ID]
    prev_tick = 0
    for tick in sorted(by_tick):
        if tick > prev_tick:
            out.extend(quantize_gap(tick - prev_tick, vocab))
        # Ascending ID order is exactly P1, P2, TR, NO with off before on.
        out.extend(sorted(by_tick[tick]))
        prev_tick = tick
    out.append(BOUNDARY_ID)
    return out


@dataclass
class DecodeDiagnostics:
    """Counters for imperfections tolerated while decoding."""

    orphan_note_offs: int = 0
    legato_rearticulations: int = 0
    dropped_zero_length: int = 0


def decode(
    events: Sequence[int],
    vocab: Vocab | None = None,
    *,
    diagnostics: DecodeDiagnostics | None = None,
) -> Score:
    """Reconstruct a score from event IDs.

    Tolerates model output: a note-on over an active note closes it at the
    current tick (legato), orphan note-offs are counted and skipped, leading
    boundary tokens are ignored and an interior one stops decoding. Notes
    still open at the end are closed at the final tick.
    """
    vocab = vocab or get_vocab()
    diag = diagnostics if diagnostics is not None else DecodeDiagnostics()
    parts: dict[VoiceKind, list[Note]] = {kind: [] for kind in VOICE_ORDER}
    active: dict[VoiceKind, tuple[int, int]] = {}  # voice -> (pitch, onset)
    tick = 0
    started = False

    def close(voice: VoiceKind, at: int) -> None:
        pitch, onset = active.pop(voice)
        if at <= onset:
            diag.dropped_zero_length += 1
            return
        parts[voice].append(Note(pitch, onset, at))

    for position, event_id in enumerate(events):
        if not 0 <= event_id < VOCAB_SIZE:
            raise ChipscoreError(f"event id {event_id} at position {position} out of range")
        if event_id == BOUNDARY_ID:
            if started:
                break
            continue
        started = True
        desc = vocab.id_to_desc[event_id]
        if isinstance(desc, TimeShift):
            tick += desc.ticks
        elif isinstance(desc, NoteOff):
            if desc.voice in active:
                close(desc.voice, tick)
            else:
                diag.orphan_note_offs += 1
        else:
            assert isinstance(desc, NoteOn)
            if desc.voice in active:
                diag.legato_rearticulations += 1
                close(desc.voice, tick)
            active[desc.voice] = (desc.pitch, tick)

    for voice in list(active):
        close(voice, tick)
    return Score.from_parts(
        p1=parts[VoiceKind.P1],
        p2=parts[VoiceKind.P2],
        tr=parts[VoiceKind.TR],
        no=parts[VoiceKind.NO],
    )


@dataclass(frozen=True, slots=True)
class CodecReport:
    """Static census of a token sequence's rule violations."""

    orphan_note_offs: int = 0
    legato_rearticulations: int = 0
    interior_boundaries: int = 0
    ordering_violations: int = 0
    out_of_range: int = 0

    def clean(self) -> bool:
        return self == CodecReport()


def validate(events: Sequence[int], vocab: Vocab | None = None) -> CodecReport:
    """Count codec-convention violations without mutating or raising."""
    vocab = vocab or get_vocab()
    orphan = legato = interior = ordering = out_of_range = 0

    lead = 0
    while lead < len(events) and events[lead] == BOUNDARY_ID:
        lead += 1
    trail = len(events)
    while trail > lead and events[trail - 1] == BOUNDARY_ID:
        trail -= 1

    active: set[VoiceKind] = set()
    prev_key: tuple[int, int] | None = None
    for position in range(lead, trail):
        event_id = events[position]
        if not 0 <= event_id < VOCAB_SIZE:
            out_of_range += 1
            prev_key = None
            continue
        if event_id == BOUNDARY_ID:
            interior += 1
            prev_key = None
            continue
        desc = vocab.id_to_desc[event_id]
        if isinstance(desc, TimeShift):
            prev_key = None
            continue
        if isinstance(desc, NoteOff):
            key = (VOICE_ORDER.index(desc.voice), 0)
            if desc.voice in active:
                active.discard(desc.voice)
            else:
                orphan += 1
        else:
            assert isinstance(desc, NoteOn)
            key = (VOICE_ORDER.index(desc.voice), 1)
            if desc.voice in active:
                legato += 1
            active.add(desc.voice)
        if prev_key is not None and key < prev_key:
            ordering += 1
        prev_key = key
    return CodecReport(
        orphan_note_offs=orphan,
        legato_rearticulations=legato,
        interior_boundaries=interior,
        ordering_violations=ordering,
        out_of_range=out_of_range,
    )


# ---------------------------------------------------------------------------
# Token text files: one sequence per line, space-separated decimal IDs.


def format_token_line(events: Iterable[int]) -> str:
    return " ".join(str(e) for e in events)


def parse_token_line(line: str, line_number: int = 0) -> list[int]:
    out = []
    for piece in line.split():
        try:
            out.append(int(piece))
        except ValueError:
            raise TokenFormatError(
                f"line {line_number}: token {piece!r} is not a decimal integer"
            ) from None
    return out


def read_token_file(path: str | Path) -> list[list[int]]:
    sequences = []
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            if line.strip():
                sequences.append(parse_token_line(line, number))
    return sequences


def write_token_file(path: str | Path, sequences: Iterable[Iterable[int]]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for seq in sequences:
            handle.write(format_token_line(seq))
            handle.write("\n")
