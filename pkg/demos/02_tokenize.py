# The 631-event representation: boundary, time shifts, per-voice note events.
#
# Time shifts come in three gratings (1-tick up to 100, 10-tick to 1000,
# 100-tick to 19000); longer gaps are emitted greedily. Note IDs group by
# voice so that sorting same-tick events by ID yields the canonical
# P1, P2, TR, NO order with offs before ons.

from chipscore import Note, Score, decode, encode, get_vocab, quantize_gap

vocab = get_vocab()
print("vocabulary size:", len(vocab))
for event_id in (0, 1, 100, 101, 190, 191, 370, 371, 399, 448, 525, 614, 630):
    print(f"  id {event_id:3d} -> {vocab.describe(event_id)}")

# Gap quantization snaps to the nearest representable value, ties upward.
for gap in (100, 105, 1234, 40000):
    ids = quantize_gap(gap)
    ticks = [vocab.describe(e).ticks for e in ids]
    print(f"gap {gap} ticks -> events {ids} (tick values {ticks})")

score = Score.from_parts(
    p1=[Note(60, 0, 4410), Note(62, 4410, 8820)],
    tr=[Note(40, 0, 8820)],
    no=[Note(8, 0, 1000)],
)
tokens = encode(score)
print("encoded:", tokens)

recovered = decode(tokens)
print("decode(encode(s)) == s:", recovered == score)
print("re-encode stable:", encode(recovered) == tokens)
