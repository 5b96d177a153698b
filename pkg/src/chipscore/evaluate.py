"""Negative log-likelihood traces and perplexity.

Perplexity is the exponentiated token-weighted mean NLL across a corpus; a
uniform model over the 631 events therefore scores exactly 631. The leading
boundary token of each sequence is conditioned on, never predicted. External
models plug in through line-aligned likelihood files of natural logs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import TokenFormatError
from .events import BOUNDARY_ID, parse_token_line

NllTrace = np.ndarray


class SequenceModel(Protocol):
    def next_dist(self, context: Sequence[int]) -> np.ndarray: ...


def nll(model: SequenceModel, seq: Sequence[int]) -> NllTrace:
    """Per-token negative log-likelihoods for predicting seq[1:]."""
    if len(seq) < 2:
        raise ValueError("need at least two tokens to score predictions")
    if seq[0] != BOUNDARY_ID:
        raise ValueError(f"sequence must start with the boundary token, got {seq[0]}")
    out = np.empty(len(seq) - 1)
    for i in range(1, len(seq)):
        dist = model.next_dist(seq[:i])
        out[i - 1] = -np.log(dist[seq[i]])
    return out


def perplexity(traces: Iterable[NllTrace]) -> float:
    """exp of the token-weighted mean NLL over all traces."""
    arrays = [np.asarray(t, dtype=float) for t in traces]
    total = sum(a.size for a in arrays)
    if total == 0:
        raise ValueError("cannot compute perplexity of zero tokens")
    mean = float(np.sum([np.sum(a) for a in arrays]) / total)
    return float(np.exp(mean))


def _read_lines(path: str | Path) -> list[str]:
    with open(path, encoding="utf-8") as handle:
        return handle.read().splitlines()


def eval_external(token_path: str | Path, likelihood_path: str | Path) -> float:
    """Perplexity of an external model from its likelihood file.

    Line i of the likelihood file must hold exactly (token count of line i)
    minus one natural-log likelihoods, each <= 0.
    """
    token_lines = _read_lines(token_path)
    lik_lines = _read_lines(likelihood_path)
    if len(token_lines) != len(lik_lines):
        raise TokenFormatError(
            f"line count mismatch: {len(token_lines)} token lines vs "
            f"{len(lik_lines)} likelihood lines (first missing line "
            f"{min(len(token_lines), len(lik_lines)) + 1})"
        )
    traces = []
    for number, (tok_line, lik_line) in enumerate(zip(token_lines, lik_lines), start=1):
        tokens = parse_token_line(tok_line, number)
        if not tokens:
            raise TokenFormatError(f"line {number}: empty token line")
        values = []
        for piece in lik_line.split():
            try:
                values.append(float(piece))
            except ValueError:
                raise TokenFormatError(
                    f"line {number}: {piece!r} is not a number"
                ) from None
        if len(values) != len(tokens) - 1:
            raise TokenFormatError(
                f"line {number}: expected {len(tokens) - 1} likelihood values, "
                f"found {len(values)}"
            )
        for value in values:
            if value > 0:
                raise TokenFormatError(
                    f"line {number}: log-likelihood {value} is positive"
                )
        traces.append(-np.asarray(values))
    return perplexity(traces)
