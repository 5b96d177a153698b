"""Seeded score-to-score data augmentation transforms.

Four transforms, applied in a fixed order by :func:`augment`: transposition
of the melodic voices, uniform time stretching, random instrument removal
(half the time), and shuffling of the melodic part-to-voice alignment (half
the time). Notes pushed out of range are dropped, never clamped.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .score import (
    MELODIC_KINDS,
    PITCH_RANGES,
    Note,
    Score,
    VoiceKind,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class AugmentConfig:
    transpose_min: int = -6
    transpose_max: int = 5
    speed_pct: float = 0.05
    p_remove: float = 0.5
    p_shuffle: float = 0.5
    rng_seed: int | None = None

    def __post_init__(self) -> None:
        if self.transpose_min > self.transpose_max:
            raise ValueError("empty transposition range")
        if not 0 < self.speed_pct < 1:
            raise ValueError("speed_pct must lie in (0, 1)")
        for name in ("p_remove", "p_shuffle"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")


def transpose(score: Score, semitones: int) -> Score:
    """Shift melodic pitches; out-of-range notes are dropped. Noise untouched."""
    if semitones == 0:
        return score
    out = score
    dropped = 0
    for kind in MELODIC_KINDS:
        lo, hi = PITCH_RANGES[kind]
        kept = []
        for note in score.voice(kind).notes:
            pitch = note.pitch + semitones
            if lo <= pitch <= hi:
                kept.append(Note(pitch, note.on, note.off))
            else:
                dropped += 1
        out = out.with_voice(kind, kept)
    if dropped:
        logger.debug("transpose by %+d dropped %d notes", semitones, dropped)
    return out


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def stretch(score: Score, factor: float) -> Score:
    """Scale all note boundaries by a factor, rounding to the nearest tick.

    Rounding a monotone scaling cannot reorder boundaries, so monophony is
    preserved; notes collapsing to zero length are dropped.
    """
    if factor <= 0:
        raise ValueError(f"stretch factor must be positive, got {factor}")
    if factor == 1.0:
        return score
    out = score
    dropped = 0
    for voice in score.voices():
        kept = []
        for note in voice.notes:
            on = _round_half_up(note.on * factor)
            off = _round_half_up(note.off * factor)
            if off > on:
                kept.append(Note(note.pitch, on, off))
            else:
                dropped += 1
        out = out.with_voice(voice.kind, kept)
    if dropped:
        logger.debug("stretch by %.4f dropped %d zero-length notes", factor, dropped)
    return out


def remove_instruments(score: Score, rng: np.random.Generator) -> Score:
    """Empty a random nonzero number of non-empty voices, leaving at least one."""
    populated = score.non_empty_kinds()
    if len(populated) <= 1:
        return score
    count = int(rng.integers(1, len(populated)))
    victims = rng.choice(len(populated), size=count, replace=False)
    out = score
    for index in victims:
        out = out.with_voice(populated[int(index)], ())
    return out


def shuffle_melodic(score: Score, rng: np.random.Generator) -> Score:
    """Permute which melodic voice performs which part (identity allowed).

    Notes out of range in their new voice are dropped; noise is untouched.
    """
    perm = rng.permutation(len(MELODIC_KINDS))
    out = score
    dropped = 0
    for dest_index, src_index in enumerate(perm):
        dest = MELODIC_KINDS[dest_index]
        src = MELODIC_KINDS[int(src_index)]
        lo, hi = PITCH_RANGES[dest]
        kept = [n for n in score.voice(src).notes if lo <= n.pitch <= hi]
        dropped += len(score.voice(src).notes) - len(kept)
        out = out.with_voice(dest, kept)
    if dropped:
        logger.debug("shuffle dropped %d out-of-range notes", dropped)
    return out


def augment(
    score: Score,
    cfg: AugmentConfig,
    rng: np.random.Generator | None = None,
) -> Score:
    """Apply the full augmentation policy with all randomness from one rng."""
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    shift = int(rng.integers(cfg.transpose_min, cfg.transpose_max + 1))
    out = transpose(score, shift)
    factor = float(rng.uniform(1 - cfg.speed_pct, 1 + cfg.speed_pct))
    out = stretch(out, factor)
    if rng.random() < cfg.p_remove:
        out = remove_instruments(out, rng)
    if rng.random() < cfg.p_shuffle:
        out = shuffle_melodic(out, rng)
    return out
