"""N-gram language models over the 631-event vocabulary.

The conditional distribution interpolates maximum-likelihood estimates of
every order whose context was observed, with weights renormalized over the
observed orders, plus a small uniform floor so no event ever has zero
probability. Sequences are left-padded with the boundary token 0, which is
also the corpus delimiter.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    BadMagicError,
    ModelFormatError,
    TruncatedModelError,
    VersionMismatchError,
)
from .events import BOUNDARY_ID, VOCAB_SIZE

MAGIC = b"NGLM"
FORMAT_VERSION = 1
DEFAULT_EPSILON = 0.01


def default_lambdas(order: int) -> tuple[float, ...]:
    """Interpolation weights proportional to 1, 2, 4, ... (highest order largest)."""
    raw = [float(2**k) for k in range(order)]
    total = sum(raw)
    return tuple(w / total for w in raw)


@dataclass
class NgramModel:
    """Count tables for orders 1..N and the interpolated conditional."""

    order: int
    vocab_size: int = VOCAB_SIZE
    epsilon: float = DEFAULT_EPSILON
    lambdas: tuple[float, ...] = ()
    # counts[k-1][context][event] = occurrences of context+event, len(context) == k-1
    counts: list[dict[tuple[int, ...], dict[int, int]]] = field(default_factory=list)
    context_totals: list[dict[tuple[int, ...], int]] = field(default_factory=list)
    total_tokens: int = 0

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        if not self.lambdas:
            self.lambdas = default_lambdas(self.order)
        if len(self.lambdas) != self.order:
            raise ValueError("need one interpolation weight per order")
        if any(w < 0 for w in self.lambdas):
            raise ValueError("interpolation weights must be non-negative")
        if not np.isclose(sum(self.lambdas), 1.0):
            raise ValueError("interpolation weights must sum to 1")
        if not 0 < self.epsilon < 1:
            raise ValueError("uniform floor must lie in (0, 1)")
        if not self.counts:
            self.counts = [dict() for _ in range(self.order)]
            self.context_totals = [dict() for _ in range(self.order)]

    def _padded_context(self, context: Sequence[int]) -> tuple[int, ...]:
        need = self.order - 1
        ctx = tuple(context[-need:]) if need else ()
        if len(ctx) < need:
            ctx = (BOUNDARY_ID,) * (need - len(ctx)) + ctx
        return ctx

    def next_dist(self, context: Sequence[int]) -> np.ndarray:
        """Probability over all events given the (possibly short) context."""
        if self.total_tokens == 0:
            raise ValueError("model has no training counts")
        ctx = self._padded_context(context)
        observed: list[tuple[float, dict[int, int], int]] = []
        for k in range(1, self.order + 1):
            sub_ctx = ctx[len(ctx) - (k - 1) :] if k > 1 else ()
            total = self.context_totals[k - 1].get(sub_ctx)
            if total:
                observed.append((self.lambdas[k - 1], self.counts[k - 1][sub_ctx], total))
        weight_norm = sum(w for w, _, _ in observed)
        dist = np.full(self.vocab_size, self.epsilon / self.vocab_size)
        scale = 1.0 - self.epsilon
        for weight, table, total in observed:
            factor = scale * weight / weight_norm / total
            for event, count in table.items():
                dist[event] += factor * count
        return dist

    def prob(self, context: Sequence[int], event: int) -> float:
        return float(self.next_dist(context)[event])


def train(
    corpus: Sequence[Sequence[int]],
    order: int,
    *,
    epsilon: float = DEFAULT_EPSILON,
    lambdas: tuple[float, ...] | None = None,
) -> NgramModel:
    """Count all k-grams (k = 1..order) with boundary padding at line starts."""
    model = NgramModel(order=order, epsilon=epsilon, lambdas=lambdas or ())
    tokens_seen = 0
    for seq in corpus:
        for position, event in enumerate(seq):
            if not 0 <= event < model.vocab_size:
                raise ValueError(f"token {event} at position {position} out of range")
            tokens_seen += 1
            for k in range(1, order + 1):
                lo = position - (k - 1)
                if lo >= 0:
                    ctx = tuple(seq[lo:position])
                else:
                    ctx = (BOUNDARY_ID,) * -lo + tuple(seq[0:position])
                table = model.counts[k - 1].setdefault(ctx, {})
                table[event] = table.get(event, 0) + 1
                totals = model.context_totals[k - 1]
                totals[ctx] = totals.get(ctx, 0) + 1
    if tokens_seen == 0:
        raise ValueError("cannot train on an empty corpus")
    model.total_tokens = tokens_seen
    return model


# ---------------------------------------------------------------------------
# Binary serialization (documented bit-exactly in docs/file_formats.md)


def serialize(model: NgramModel) -> bytes:
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<HHI", FORMAT_VERSION, model.order, model.vocab_size))
    out.write(struct.pack("<d", model.epsilon))
    out.write(struct.pack(f"<{model.order}d", *model.lambdas))
    for k in range(1, model.order + 1):
        table = model.counts[k - 1]
        records = [
            (ctx, event, count)
            for ctx in sorted(table)
            for event, count in sorted(table[ctx].items())
        ]
        out.write(struct.pack("<Q", len(records)))
        for ctx, event, count in records:
            out.write(struct.pack("<H", len(ctx)))
            out.write(struct.pack(f"<{len(ctx)}H", *ctx) if ctx else b"")
            out.write(struct.pack("<HQ", event, count))
    return out.getvalue()


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise TruncatedModelError(
                f"model data ends at byte {len(self.data)}, "
                f"needed {size} more at offset {self.pos}"
            )
        values = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return values


def deserialize(data: bytes) -> NgramModel:
    if data[:4] != MAGIC:
        raise BadMagicError(f"expected magic {MAGIC!r}, found {data[:4]!r}")
    cur = _Cursor(data)
    cur.pos = 4
    version, order, vocab_size = cur.take("<HHI")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"model format version {version}, expected {FORMAT_VERSION}")
    if order < 1:
        raise ModelFormatError(f"bad order {order}")
    (epsilon,) = cur.take("<d")
    lambdas = cur.take(f"<{order}d")
    try:
        model = NgramModel(
            order=order, vocab_size=vocab_size, epsilon=epsilon, lambdas=tuple(lambdas)
        )
    except ValueError as exc:
        raise ModelFormatError(f"bad model parameters: {exc}") from None
    total = 0
    for k in range(1, order + 1):
        (record_count,) = cur.take("<Q")
        table = model.counts[k - 1]
        totals = model.context_totals[k - 1]
        for _ in range(record_count):
            (ctx_len,) = cur.take("<H")
            if ctx_len != k - 1:
                raise ModelFormatError(
                    f"record in order-{k} table has context length {ctx_len}"
                )
            ctx = cur.take(f"<{ctx_len}H") if ctx_len else ()
            event, count = cur.take("<HQ")
            if event >= vocab_size:
                raise ModelFormatError(f"event {event} outside vocabulary {vocab_size}")
            table.setdefault(ctx, {})[event] = count
            totals[ctx] = totals.get(ctx, 0) + count
            if k == 1:
                total += count
    if cur.pos != len(data):
        raise ModelFormatError(f"{len(data) - cur.pos} bytes of trailing data")
    model.total_tokens = total
    return model
