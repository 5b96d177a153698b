"""Autoregressive generation with temperature and top-k controls.

Works against any model exposing ``next_dist``. Temperature raises
probabilities to the power 1/T before the top-k cut; ties at the cut keep
the lower event ID so runs are reproducible. Rhythm-conditioned generation
interleaves sampled melodic events with a forced skeleton of time-shift and
noise events, which the output reproduces verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .events import (
    BOUNDARY_ID,
    MELODIC_ID_HI,
    MELODIC_ID_LO,
    NOISE_ID_HI,
    NOISE_ID_LO,
    VOCAB_SIZE,
)
from .evaluate import SequenceModel

DEFAULT_MELODIC_CAP = 8
DEFAULT_MELODIC_MIN_MASS = 0.05


@dataclass(frozen=True, slots=True)
class SamplingParams:
    temperature: float = 0.95
    top_k: int = 32
    max_events: int = 512
    rng_seed: int | None = None

    def __post_init__(self) -> None:
        if self.temperature <= 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if not 1 <= self.top_k <= VOCAB_SIZE:
            raise ValueError(f"top_k must be in [1, {VOCAB_SIZE}], got {self.top_k}")
        if self.max_events < 1:
            raise ValueError(f"max_events must be positive, got {self.max_events}")


def _rng_from(params: SamplingParams, rng: np.random.Generator | None) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng(params.rng_seed)


def sample_next(
    dist: np.ndarray,
    params: SamplingParams,
    rng: np.random.Generator,
) -> int:
    """Draw one event ID from a normalized distribution."""
    p = np.asarray(dist, dtype=float)
    weights = np.power(p, 1.0 / params.temperature)
    # Sort by weight descending, lower ID first on ties.
    order = np.lexsort((np.arange(len(weights)), -weights))
    keep = order[: params.top_k]
    kept = weights[keep]
    kept = kept / kept.sum()
    return int(keep[rng.choice(len(keep), p=kept)])


def is_rhythm_event(event_id: int) -> bool:
    """Time-shift or noise-voice event: the IDs a rhythm template may hold."""
    return 1 <= event_id <= 370 or NOISE_ID_LO <= event_id <= NOISE_ID_HI


def generate(
    model: SequenceModel,
    prime: Sequence[int],
    params: SamplingParams,
    rng: np.random.Generator | None = None,
) -> list[int]:
    """Continue a prime (or start fresh from the boundary token).

    Stops after emitting the boundary token or max_events new events.
    """
    rng = _rng_from(params, rng)
    history = list(prime) if prime else [BOUNDARY_ID]
    emitted = 0
    while emitted < params.max_events:
        event = sample_next(model.next_dist(history), params, rng)
        history.append(event)
        emitted += 1
        if event == BOUNDARY_ID:
            break
    return history


def generate_rhythm_conditioned(
    model: SequenceModel,
    template: Sequence[int],
    params: SamplingParams,
    rng: np.random.Generator | None = None,
    *,
    melodic_cap: int = DEFAULT_MELODIC_CAP,
    melodic_min_mass: float = DEFAULT_MELODIC_MIN_MASS,
) -> list[int]:
    """Fill melodic material around a fixed rhythm skeleton.

    Before each forced template event, up to ``melodic_cap`` melodic events
    (P1/P2/TR note events only) are sampled from the masked, renormalized
    model distribution; a slot ends early when the model puts less than
    ``melodic_min_mass`` on melodic events. Filtering the result to
    time-shift and noise IDs reproduces the template exactly.
    """
    if not template:
        raise ValueError("rhythm template must not be empty")
    for position, event_id in enumerate(template):
        if not is_rhythm_event(event_id):
            raise ValueError(
                f"template entry {event_id} at position {position} is not a "
                "time-shift or noise event"
            )
    rng = _rng_from(params, rng)
    history = [BOUNDARY_ID]
    out: list[int] = []
    melodic = slice(MELODIC_ID_LO, MELODIC_ID_HI + 1)
    for forced in template:
        for _ in range(melodic_cap):
            dist = model.next_dist(history)
            mass = float(dist[melodic].sum())
            if mass < melodic_min_mass:
                break
            masked = np.zeros_like(dist)
            masked[melodic] = dist[melodic] / mass
            event = sample_next(masked, params, rng)
            out.append(event)
            history.append(event)
        out.append(forced)
        history.append(forced)
    return out
