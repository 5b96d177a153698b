"""Standard MIDI file reading and writing at 44100 ticks per second.

Reading converts note events of an SMF format 0/1 file to absolute ticks at
audio rate using the file's tempo map (or SMPTE division); conversion is done
in exact rational arithmetic so that files written by :func:`write_midi`
round-trip bit-exactly. Writing emits format 1 with a fixed division of
22050 PPQ and a single tempo of 500000 us/quarter, which makes one MIDI tick
exactly 1/44100 s.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import MidiParseError, ScoreError, VoiceIdentificationError
from .score import (
    PITCH_RANGES,
    VOICE_ORDER,
    MultiTrackScore,
    Note,
    Score,
    Track,
    VoiceKind,
)

logger = logging.getLogger(__name__)

OUTPUT_PPQ = 22050
OUTPUT_TEMPO_US = 500_000  # 500000/22050 us per MIDI tick == 1/44100 s exactly
DEFAULT_TEMPO_US = 500_000
PERCUSSION_CHANNEL = 9  # MIDI channel 10, 0-indexed

_NOTE_VELOCITY = 64
_OUTPUT_CHANNELS = {
    VoiceKind.P1: 0,
    VoiceKind.P2: 1,
    VoiceKind.TR: 2,
    VoiceKind.NO: 3,
}


@dataclass
class MidiDiagnostics:
    """Counters filled by parse_midi when passed in by the caller."""

    dropped_zero_length: int = 0
    orphan_note_offs: int = 0
    unterminated_notes: int = 0


# ---------------------------------------------------------------------------
# Reading


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def need(self, n: int, what: str) -> None:
        if self.pos + n > len(self.data):
            raise MidiParseError(f"unexpected end of data while reading {what}", self.pos)

    def bytes(self, n: int, what: str) -> bytes:
        self.need(n, what)
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self, what: str) -> int:
        return self.bytes(1, what)[0]

    def u16(self, what: str) -> int:
        return struct.unpack(">H", self.bytes(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack(">I", self.bytes(4, what))[0]

    def vlq(self, what: str) -> int:
        """Variable-length quantity, at most 4 bytes."""
        value = 0
        for i in range(4):
            byte = self.u8(what)
            value = (value << 7) | (byte & 0x7F)
            if not byte & 0x80:
                return value
        raise MidiParseError(f"variable-length quantity too long in {what}", self.pos)


@dataclass
class _RawNote:
    pitch: int
    on_midi: int
    off_midi: int
    channel: int
    program: int


@dataclass
class _RawTrack:
    name: str = ""
    notes: list[_RawNote] = field(default_factory=list)
    tempos: list[tuple[int, int]] = field(default_factory=list)  # (midi_tick, us/quarter)
    end_tick: int = 0


def _parse_track(r: _Reader, length: int, diagnostics: MidiDiagnostics) -> _RawTrack:
    track = _RawTrack()
    end_pos = r.pos + length
    abs_tick = 0
    running_status: int | None = None
    # (channel, pitch) -> (onset midi tick, program at onset)
    open_notes: dict[tuple[int, int], tuple[int, int]] = {}
    program: dict[int, int] = {ch: 0 for ch in range(16)}

    def close_note(channel: int, pitch: int, off_tick: int) -> None:
        key = (channel, pitch)
        started = open_notes.pop(key, None)
        if started is None:
            diagnostics.orphan_note_offs += 1
            return
        on_tick, prog = started
        if off_tick <= on_tick:
            diagnostics.dropped_zero_length += 1
            return
        track.notes.append(_RawNote(pitch, on_tick, off_tick, channel, prog))

    while r.pos < end_pos:
        abs_tick += r.vlq("delta time")
        status = r.u8("event status")
        if status < 0x80:
            if running_status is None:
                raise MidiParseError("data byte with no running status", r.pos - 1)
            r.pos -= 1
            status = running_status

        if status == 0xFF:
            running_status = None
            meta_type = r.u8("meta type")
            meta_len = r.vlq("meta length")
            payload = r.bytes(meta_len, "meta payload")
            if meta_type == 0x03 and not track.name:
                track.name = payload.decode("latin-1", errors="replace")
            elif meta_type == 0x51:
                if meta_len != 3:
                    raise MidiParseError("set-tempo meta event must carry 3 bytes", r.pos)
                track.tempos.append((abs_tick, int.from_bytes(payload, "big")))
            elif meta_type == 0x2F:
                break
        elif status in (0xF0, 0xF7):
            running_status = None
            sysex_len = r.vlq("sysex length")
            r.bytes(sysex_len, "sysex payload")
        elif status >= 0xF0:
            raise MidiParseError(f"unsupported system message 0x{status:02x}", r.pos - 1)
        else:
            running_status = status
            kind = status & 0xF0
            channel = status & 0x0F
            if kind == 0x90:
                pitch = r.u8("note pitch")
                velocity = r.u8("note velocity")
                if velocity == 0:
                    close_note(channel, pitch, abs_tick)
                else:
                    if (channel, pitch) in open_notes:
                        # Same-pitch re-onset: close the earlier note here.
                        close_note(channel, pitch, abs_tick)
                    open_notes[(channel, pitch)] = (abs_tick, program[channel])
            elif kind == 0x80:
                pitch = r.u8("note pitch")
                r.u8("note velocity")
                close_note(channel, pitch, abs_tick)
            elif kind == 0xC0:
                program[channel] = r.u8("program number")
            elif kind == 0xD0:
                r.u8("channel pressure")
            else:  # 0xA0 / 0xB0 / 0xE0 carry two data bytes
                r.bytes(2, "event data")

    if r.pos > end_pos:
        raise MidiParseError("event ran past the end of its track chunk", r.pos)
    r.pos = end_pos
    track.end_tick = abs_tick
    for (channel, pitch), (on_tick, _prog) in list(open_notes.items()):
        diagnostics.unterminated_notes += 1
        close_note(channel, pitch, max(abs_tick, on_tick))
    return track


class _TempoMap:
    """Maps absolute MIDI ticks to absolute ticks at 44100/s, exactly."""

    def __init__(self, division: int, tempos: list[tuple[int, int]]):
        if division & 0x8000:
            # SMPTE division: frames/s * ticks/frame, tempo events irrelevant.
            fps = 256 - ((division >> 8) & 0xFF)
            tpf = division & 0xFF
            if fps not in (24, 25, 29, 30) or tpf == 0:
                raise MidiParseError(f"bad SMPTE division 0x{division:04x}", 12)
            self._segments = [(0, Fraction(0), Fraction(44100, fps * tpf))]
            return
        ppq = division
        if ppq == 0:
            raise MidiParseError("division of zero ticks per quarter", 12)
        merged: dict[int, int] = {}
        for tick, tempo in sorted(tempos, key=lambda t: t[0]):
            merged[tick] = tempo  # same-tick changes: last one wins
        if 0 not in merged:
            merged[0] = DEFAULT_TEMPO_US
        # (midi_tick, cumulative 44100-ticks, 44100-ticks per MIDI tick)
        self._segments = []
        cum = Fraction(0)
        prev_tick = 0
        prev_rate = Fraction(0)
        for tick in sorted(merged):
            cum += (tick - prev_tick) * prev_rate
            prev_rate = Fraction(merged[tick] * 44100, ppq * 1_000_000)
            self._segments.append((tick, cum, prev_rate))
            prev_tick = tick

    def to_ticks(self, midi_tick: int) -> int:
        """Nearest 44100-rate tick for an absolute MIDI tick (ties round up)."""
        seg_tick, cum, rate = self._segments[0]
        for candidate in self._segments:
            if candidate[0] > midi_tick:
                break
            seg_tick, cum, rate = candidate
        exact = cum + (midi_tick - seg_tick) * rate
        return (exact.numerator * 2 + exact.denominator) // (2 * exact.denominator)


def parse_midi(data: bytes, *, diagnostics: MidiDiagnostics | None = None) -> MultiTrackScore:
    """Parse SMF format 0/1 bytes into a MultiTrackScore at 44100 ticks/s.

    Tracks are split per MIDI channel; channel 10 tracks are flagged as
    percussion. Zero-length notes are dropped and counted in ``diagnostics``.
    """
    diag = diagnostics if diagnostics is not None else MidiDiagnostics()
    r = _Reader(data)
    magic = r.bytes(4, "header chunk id")
    if magic != b"MThd":
        raise MidiParseError("not a standard MIDI file (missing MThd)", 0)
    header_len = r.u32("header length")
    if header_len < 6:
        raise MidiParseError(f"header chunk too short ({header_len} bytes)", r.pos - 4)
    fmt = r.u16("format")
    ntrks = r.u16("track count")
    division = r.u16("division")
    r.bytes(header_len - 6, "header padding")
    if fmt not in (0, 1):
        raise MidiParseError(f"unsupported SMF format {fmt}", 8)

    raw_tracks: list[_RawTrack] = []
    while len(raw_tracks) < ntrks:
        chunk_start = r.pos
        chunk_id = r.bytes(4, "chunk id")
        chunk_len = r.u32("chunk length")
        if chunk_id == b"MTrk":
            raw_tracks.append(_parse_track(r, chunk_len, diag))
        else:
            # Alien chunks are skipped per the SMF spec.
            if not chunk_id.isalnum():
                raise MidiParseError(f"malformed chunk id {chunk_id!r}", chunk_start)
            r.bytes(chunk_len, "alien chunk")

    tempo_events = [ev for t in raw_tracks for ev in t.tempos]
    tempo_map = _TempoMap(division, tempo_events)

    tracks: list[Track] = []
    for raw in raw_tracks:
        by_channel: dict[int, list[_RawNote]] = {}
        for raw_note in raw.notes:
            by_channel.setdefault(raw_note.channel, []).append(raw_note)
        if not by_channel:
            # Note-less tracks are kept so voice layout survives a round trip.
            tracks.append(Track(name=raw.name, program=0, is_percussion=False))
            continue
        for channel in sorted(by_channel):
            notes = []
            program = by_channel[channel][0].program
            for raw_note in by_channel[channel]:
                on = tempo_map.to_ticks(raw_note.on_midi)
                off = tempo_map.to_ticks(raw_note.off_midi)
                if off <= on:
                    diag.dropped_zero_length += 1
                    continue
                notes.append(Note(raw_note.pitch, on, off))
            notes.sort(key=lambda n: (n.on, n.off, n.pitch))
            tracks.append(
                Track(
                    name=raw.name,
                    program=program,
                    is_percussion=channel == PERCUSSION_CHANNEL,
                    notes=tuple(notes),
                )
            )
    if diag.dropped_zero_length:
        logger.debug("dropped %d zero-length notes", diag.dropped_zero_length)
    return MultiTrackScore(tracks=tuple(tracks))


# ---------------------------------------------------------------------------
# Writing


def _vlq(value: int) -> bytes:
    if value < 0:
        raise ValueError("cannot encode negative delta time")
    chunks = [value & 0x7F]
    value >>= 7
    while value:
        chunks.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(chunks))


def _meta(delta: int, meta_type: int, payload: bytes) -> bytes:
    return _vlq(delta) + bytes((0xFF, meta_type)) + _vlq(len(payload)) + payload


def write_midi(score: Score) -> bytes:
    """Serialize a Score as SMF format 1: four note tracks, 22050 PPQ.

    The fixed tempo makes one MIDI tick exactly one 44100-rate tick, so
    ``load_nes_score(parse_midi(write_midi(s)))`` recovers ``s`` unchanged.
    """
    chunks = [struct.pack(">4sIHHH", b"MThd", 6, 1, 4, OUTPUT_PPQ)]
    for index, voice in enumerate(score.voices()):
        channel = _OUTPUT_CHANNELS[voice.kind]
        body = bytearray()
        name = voice.kind.value.encode("ascii")
        body += _meta(0, 0x03, name)
        if index == 0:
            body += _meta(0, 0x51, OUTPUT_TEMPO_US.to_bytes(3, "big"))
        events: list[tuple[int, int, int]] = []  # (tick, 0=off/1=on, pitch)
        for note in voice.notes:
            events.append((note.on, 1, note.pitch))
            events.append((note.off, 0, note.pitch))
        events.sort(key=lambda e: (e[0], e[1]))
        tick = 0
        for ev_tick, is_on, pitch in events:
            body += _vlq(ev_tick - tick)
            status = (0x90 if is_on else 0x80) | channel
            body += bytes((status, pitch, _NOTE_VELOCITY if is_on else 0))
            tick = ev_tick
        body += _meta(0, 0x2F, b"")
        chunks.append(struct.pack(">4sI", b"MTrk", len(body)) + bytes(body))
    return b"".join(chunks)


# ---------------------------------------------------------------------------
# Voice identification


def _identify_voices(mts: MultiTrackScore) -> dict[int, VoiceKind]:
    by_prefix: dict[int, VoiceKind] = {}
    claimed: set[VoiceKind] = set()
    for index, track in enumerate(mts.tracks):
        name = track.name.strip().lower()
        for kind in VOICE_ORDER:
            if name.startswith(kind.value):
                if kind in claimed:
                    raise VoiceIdentificationError(
                        f"two tracks claim voice {kind.value}: "
                        f"{[t.name for t in mts.tracks]}"
                    )
                by_prefix[index] = kind
                claimed.add(kind)
                break
    if len(by_prefix) == len(mts.tracks) and mts.tracks:
        return by_prefix
    if len(mts.tracks) == 4:
        return dict(enumerate(VOICE_ORDER))
    raise VoiceIdentificationError(
        "cannot identify voices from track names "
        f"{[t.name for t in mts.tracks]}; pass an explicit voice_map"
    )


def load_nes_score(
    mts: MultiTrackScore,
    voice_map: dict[int, VoiceKind] | None = None,
) -> Score:
    """Assemble a four-voice Score from a parsed multi-track file.

    Voices are identified from ``voice_map`` (track index -> kind), else by
    the name prefixes p1/p2/tr/no, else by track order when exactly four
    tracks exist. Range and monophony violations raise, naming the voice,
    pitch, and tick.
    """
    if voice_map is not None:
        seen: set[VoiceKind] = set()
        for index, kind in voice_map.items():
            if not 0 <= index < len(mts.tracks):
                raise VoiceIdentificationError(f"voice_map track index {index} out of range")
            if kind in seen:
                raise VoiceIdentificationError(f"voice_map assigns {kind.value} twice")
            seen.add(kind)
        assignment = dict(voice_map)
    else:
        assignment = _identify_voices(mts)

    parts: dict[VoiceKind, tuple[Note, ...]] = {kind: () for kind in VOICE_ORDER}
    for index, kind in assignment.items():
        notes = mts.tracks[index].notes
        lo, hi = PITCH_RANGES[kind]
        prev: Note | None = None
        for note in notes:
            if not lo <= note.pitch <= hi:
                raise ScoreError(
                    f"voice {kind.value}: pitch {note.pitch} at tick {note.on} "
                    f"outside range [{lo}, {hi}]"
                )
            if prev is not None and prev.off > note.on:
                raise ScoreError(
                    f"voice {kind.value}: overlapping notes at tick {note.on}"
                )
            prev = note
        parts[kind] = notes
    return Score.from_parts(
        p1=parts[VoiceKind.P1],
        p2=parts[VoiceKind.P2],
        tr=parts[VoiceKind.TR],
        no=parts[VoiceKind.NO],
    )
