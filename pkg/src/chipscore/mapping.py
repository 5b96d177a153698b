"""Map arbitrary-ensemble multi-track scores onto the four-voice ensemble.

Monophonic melodic tracks are assigned uniformly at random (injectively,
respecting pitch ranges) to a random subset of the three melodic voices;
each distinct percussion pitch is assigned a random noise type. Multiple
randomized assignments per input grow a corpus for transfer learning.
"""

from __future__ import annotations

import hashlib
import itertools
from collections import Counter
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .score import (
    MELODIC_KINDS,
    PITCH_RANGES,
    MultiTrackScore,
    Note,
    Score,
    Track,
    Voice,
    VoiceKind,
)

NOISE_TYPES = 16


@dataclass(frozen=True, slots=True)
class MapperConfig:
    max_outputs_per_input: int = 5
    rng_seed: int = 0
    melodic_range_policy: str = "strict"

    def __post_init__(self) -> None:
        if self.max_outputs_per_input < 1:
            raise ValueError("max_outputs_per_input must be >= 1")
        if self.melodic_range_policy != "strict":
            raise ValueError(f"unknown range policy {self.melodic_range_policy!r}")


@dataclass(frozen=True, slots=True)
class Provenance:
    source_id: str
    melodic_assignment: tuple[tuple[VoiceKind, int], ...]  # (voice, track index)
    percussion_assignment: tuple[tuple[int, int], ...]  # (percussion pitch, noise type)


@dataclass(frozen=True, slots=True)
class MappedExample:
    score: Score
    provenance: Provenance


def derive_seed(global_seed: int, identifier: str) -> int:
    """Stable per-file seed so parallel and serial corpus runs agree."""
    digest = hashlib.blake2b(
        identifier.encode("utf-8"),
        digest_size=8,
        key=global_seed.to_bytes(8, "little", signed=True),
    ).digest()
    return int.from_bytes(digest, "little")


def _is_monophonic(notes: Sequence[Note]) -> bool:
    ordered = sorted(notes, key=lambda n: (n.on, n.off))
    return all(a.off <= b.on for a, b in zip(ordered, ordered[1:]))


def find_monophonic_melodic(mts: MultiTrackScore) -> list[int]:
    """Indices of non-percussion tracks with notes and zero overlap."""
    return [
        index
        for index, track in enumerate(mts.tracks)
        if not track.is_percussion and track.notes and _is_monophonic(track.notes)
    ]


def eligible_for(track: Track, kind: VoiceKind) -> bool:
    """True when every pitch of the track fits the melodic voice's range."""
    if kind not in MELODIC_KINDS:
        raise ValueError(f"eligibility applies to melodic voices, not {kind.value}")
    lo, hi = PITCH_RANGES[kind]
    return all(lo <= note.pitch <= hi for note in track.notes)


def _assignment_weights(
    subset: tuple[VoiceKind, ...],
    mask_counts: Counter,
) -> list[tuple[tuple[frozenset, ...], int]]:
    """Complete injective assignments grouped by per-voice eligibility mask.

    Weight of a mask tuple is the number of ordered candidate choices
    realizing it (falling factorial within repeated masks).
    """
    weighted = []
    for combo in itertools.product(mask_counts, repeat=len(subset)):
        if any(voice not in mask for voice, mask in zip(subset, combo)):
            continue
        used: Counter = Counter()
        weight = 1
        for mask in combo:
            weight *= mask_counts[mask] - used[mask]
            used[mask] += 1
            if weight <= 0:
                break
        if weight > 0:
            weighted.append((combo, weight))
    return weighted


def assign_melodic(
    tracks: Sequence[Track],
    candidates: Sequence[int],
    rng: np.random.Generator,
) -> dict[VoiceKind, int] | None:
    """Uniform random injective assignment of candidate tracks to voices.

    The target is a uniformly chosen feasible subset of the melodic voices of
    size min(3, eligible candidates); returns None when no eligible
    assignment exists at all.
    """
    masks: dict[int, frozenset] = {}
    for index in candidates:
        mask = frozenset(k for k in MELODIC_KINDS if eligible_for(tracks[index], k))
        if mask:
            masks[index] = mask
    if not masks:
        return None
    size = min(3, len(masks))
    mask_counts = Counter(masks.values())
    per_subset = {
        subset: _assignment_weights(subset, mask_counts)
        for subset in itertools.combinations(MELODIC_KINDS, size)
    }
    feasible = [s for s, weighted in per_subset.items() if weighted]
    if not feasible:
        return None
    subset = feasible[int(rng.integers(len(feasible)))]
    weighted = per_subset[subset]
    totals = np.array([w for _, w in weighted], dtype=float)
    combo = weighted[int(rng.choice(len(weighted), p=totals / totals.sum()))][0]
    assignment: dict[VoiceKind, int] = {}
    used: set[int] = set()
    for voice, mask in zip(subset, combo):
        pool = sorted(i for i, m in masks.items() if m == mask and i not in used)
        choice = pool[int(rng.integers(len(pool)))]
        assignment[voice] = choice
        used.add(choice)
    return assignment


def _map_percussion(
    mts: MultiTrackScore,
    rng: np.random.Generator,
) -> tuple[Voice, tuple[tuple[int, int], ...]]:
    hits = [
        note
        for track in mts.tracks
        if track.is_percussion
        for note in track.notes
    ]
    if not hits:
        return Voice(VoiceKind.NO), ()
    pitches = sorted({note.pitch for note in hits})
    type_of = {p: int(rng.integers(1, NOISE_TYPES + 1)) for p in pitches}
    notes = sorted(
        (Note(type_of[n.pitch], n.on, n.off) for n in hits),
        key=lambda n: (n.on, n.pitch, n.off),
    )
    # Equal onsets: keep the lowest noise type only.
    deduped: list[Note] = []
    for note in notes:
        if deduped and deduped[-1].on == note.on:
            continue
        deduped.append(note)
    # Truncate any note still sounding at the next onset.
    survivors: list[Note] = []
    for note in deduped:
        if survivors and survivors[-1].off > note.on:
            survivors[-1] = replace(survivors[-1], off=note.on)
        survivors.append(note)
    return Voice(VoiceKind.NO, tuple(survivors)), tuple(sorted(type_of.items()))


def map_percussion(mts: MultiTrackScore, rng: np.random.Generator) -> Voice:
    """Monophonic noise voice from all percussion tracks."""
    voice, _ = _map_percussion(mts, rng)
    return voice


def map_file(
    mts: MultiTrackScore,
    cfg: MapperConfig,
    rng: np.random.Generator,
    source_id: str = "",
) -> list[MappedExample]:
    """Up to cfg.max_outputs_per_input distinct randomized mappings.

    Returns an empty list when the input has no monophonic melodic tracks,
    or none that fit any voice.
    """
    candidates = find_monophonic_melodic(mts)
    if not candidates:
        return []
    outputs: list[MappedExample] = []
    seen: set[tuple[tuple[VoiceKind, int], ...]] = set()
    attempts = cfg.max_outputs_per_input * 10 + 10
    for _ in range(attempts):
        if len(outputs) >= cfg.max_outputs_per_input:
            break
        assignment = assign_melodic(mts.tracks, candidates, rng)
        if assignment is None:
            return []
        key = tuple(sorted(assignment.items(), key=lambda kv: kv[0].value))
        if key in seen:
            continue
        seen.add(key)
        no_voice, percussion = _map_percussion(mts, rng)
        parts: dict[str, Sequence[Note]] = {k.value: () for k in MELODIC_KINDS}
        for voice_kind, track_index in assignment.items():
            parts[voice_kind.value] = mts.tracks[track_index].notes
        score = Score.from_parts(no=no_voice.notes, **parts)
        outputs.append(
            MappedExample(
                score=score,
                provenance=Provenance(
                    source_id=source_id,
                    melodic_assignment=key,
                    percussion_assignment=percussion,
                ),
            )
        )
    return outputs
