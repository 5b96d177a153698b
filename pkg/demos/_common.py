"""Tiny random-score builder shared by the demo scripts."""

from __future__ import annotations

import numpy as np

from chipscore import Note, Score
from chipscore.score import PITCH_RANGES, VOICE_ORDER


def random_score(rng: np.random.Generator, notes_per_voice: int = 20) -> Score:
    parts = {}
    for kind in VOICE_ORDER:
        lo, hi = PITCH_RANGES[kind]
        notes = []
        tick = int(rng.integers(0, 4000))
        for _ in range(notes_per_voice):
            duration = int(rng.integers(1000, 9000))
            notes.append(Note(int(rng.integers(lo, hi + 1)), tick, tick + duration))
            tick += duration + int(rng.integers(0, 4000))
        parts[kind.value] = notes
    return Score.from_parts(**parts)
