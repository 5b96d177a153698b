"""Command-line pipeline: convert, map, augment, excerpt, train, eval, generate, stats.

Every command is deterministic given its flags and seed. Exit codes: 0 on
success, 1 when some (or all) inputs failed, 2 for usage errors. File-level
work runs in up to CHIPSCORE_THREADS threads with output order fixed by
lexicographically sorted inputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from . import evaluate, events, mapping, midi_io, ngram, sampling
from .augment import AugmentConfig, augment as apply_augment
from .errors import ChipscoreError
from .score import TICKS_PER_SECOND

T = TypeVar("T")
U = TypeVar("U")

DEFAULT_EXCERPT_LEN = 512


# ---------------------------------------------------------------------------
# Dataset manifest


@dataclass(frozen=True)
class DatasetManifest:
    """Named train/valid/test splits of file identifiers."""

    splits: dict[str, tuple[str, ...]]

    VALID_SPLITS = ("train", "valid", "test")

    def __post_init__(self) -> None:
        for name in self.splits:
            if name not in self.VALID_SPLITS:
                raise ValueError(f"unknown split {name!r}")
        seen: dict[str, str] = {}
        for name, members in self.splits.items():
            for member in members:
                if member in seen:
                    raise ValueError(
                        f"file {member!r} appears in splits {seen[member]!r} and {name!r}"
                    )
                seen[member] = name

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(splits={name: tuple(members) for name, members in raw.items()})

    def members(self, split: str) -> frozenset[str]:
        return frozenset(self.splits.get(split, ()))


# ---------------------------------------------------------------------------
# Helpers


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("CHIPSCORE_THREADS", "1")))
    except ValueError:
        return 1


def _parallel_map(fn: Callable[[T], U], items: Sequence[T]) -> list[U]:
    workers = _thread_count()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _collect_midi_paths(inputs: Iterable[str]) -> list[Path]:
    paths: list[Path] = []
    for raw in inputs:
        p = Path(raw)
        if p.is_dir():
            paths.extend(
                q for q in p.rglob("*") if q.suffix.lower() in (".mid", ".midi")
            )
        else:
            paths.append(p)
    return sorted(set(paths))


def _print_err(message: str) -> None:
    print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# Commands


def cmd_convert(args: argparse.Namespace) -> int:
    paths = _collect_midi_paths(args.inputs)
    if args.manifest:
        manifest = DatasetManifest.load(args.manifest)
        wanted = manifest.members(args.split)
        paths = [p for p in paths if p.stem in wanted or p.name in wanted]

    def one(path: Path) -> tuple[Path, list[int] | None, str | None]:
        try:
            mts = midi_io.parse_midi(path.read_bytes())
            score = midi_io.load_nes_score(mts)
            return path, events.encode(score), None
        except (ChipscoreError, OSError) as exc:
            return path, None, str(exc)

    results = _parallel_map(one, paths)
    failures = 0
    with open(args.out, "w", encoding="utf-8") as handle:
        for path, seq, error in results:
            if error is not None:
                failures += 1
                _print_err(f"convert: {path}: {error}")
            else:
                handle.write(events.format_token_line(seq) + "\n")
    return 1 if failures else 0


def cmd_map_lakh(args: argparse.Namespace) -> int:
    paths = _collect_midi_paths(args.inputs)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = mapping.MapperConfig(max_outputs_per_input=args.cap, rng_seed=args.seed)

    def one(path: Path) -> tuple[Path, list[mapping.MappedExample] | None, int, str | None]:
        seed = mapping.derive_seed(args.seed, path.name)
        try:
            mts = midi_io.parse_midi(path.read_bytes())
            out = mapping.map_file(mts, cfg, np.random.default_rng(seed), path.name)
            return path, out, seed, None
        except (ChipscoreError, OSError) as exc:
            return path, None, seed, str(exc)

    results = _parallel_map(one, paths)
    failures = 0
    written = 0
    with open(out_dir / "provenance.txt", "w", encoding="utf-8") as sidecar:
        for path, examples, seed, error in results:
            if error is not None:
                failures += 1
                _print_err(f"map-lakh: {path}: {error}")
                continue
            for index, example in enumerate(examples):
                name = f"{path.stem}.{index:03d}.mid"
                (out_dir / name).write_bytes(midi_io.write_midi(example.score))
                melodic = ",".join(
                    f"{voice.value}={track}"
                    for voice, track in example.provenance.melodic_assignment
                )
                percussion = ",".join(
                    f"{pitch}={noise_type}"
                    for pitch, noise_type in example.provenance.percussion_assignment
                )
                sidecar.write(
                    f"{example.provenance.source_id}\t{melodic}\t{percussion}\t{seed}\n"
                )
                written += 1
    print(f"wrote {written} examples from {len(paths) - failures} files")
    return 1 if failures else 0


def cmd_excerpt(args: argparse.Namespace) -> int:
    sequences = events.read_token_file(args.input)
    short = 0
    excerpts: list[list[int]] = []
    for seq in sequences:
        for start in range(0, len(seq), args.excerpt_len):
            piece = seq[start : start + args.excerpt_len]
            if len(piece) < args.excerpt_len:
                short += 1
            excerpts.append(piece)
    events.write_token_file(args.out, excerpts)
    print(f"{len(excerpts)} excerpts ({short} short remainders kept)")
    return 0


def cmd_augment(args: argparse.Namespace) -> int:
    cfg = AugmentConfig(
        transpose_min=args.transpose_min,
        transpose_max=args.transpose_max,
        speed_pct=args.speed_pct,
        p_remove=args.p_remove,
        p_shuffle=args.p_shuffle,
        rng_seed=args.seed,
    )
    sequences = events.read_token_file(args.input)
    out: list[list[int]] = []
    for line_number, seq in enumerate(sequences):
        score = events.decode(seq)
        for copy in range(args.copies):
            rng = np.random.default_rng(
                mapping.derive_seed(args.seed, f"augment:{line_number}:{copy}")
            )
            out.append(events.encode(apply_augment(score, cfg, rng)))
    events.write_token_file(args.out, out)
    return 0


def cmd_train_ngram(args: argparse.Namespace) -> int:
    corpus: list[list[int]] = []
    for path in args.inputs:
        corpus.extend(events.read_token_file(path))
    lambdas = None
    if args.lambdas:
        weights = [float(x) for x in args.lambdas.split(",")]
        total = sum(weights)
        lambdas = tuple(w / total for w in weights)
    model = ngram.train(corpus, args.order, epsilon=args.epsilon, lambdas=lambdas)
    Path(args.out).write_bytes(ngram.serialize(model))
    print(f"trained order-{args.order} model on {model.total_tokens} tokens")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    if args.likelihoods:
        ppl = evaluate.eval_external(args.tokens, args.likelihoods)
    else:
        model = ngram.deserialize(Path(args.model).read_bytes())
        traces = [
            evaluate.nll(model, seq) for seq in events.read_token_file(args.tokens)
        ]
        ppl = evaluate.perplexity(traces)
    print(f"{ppl:.6f}")
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    model = ngram.deserialize(Path(args.model).read_bytes())
    params = sampling.SamplingParams(
        temperature=args.temperature,
        top_k=args.top_k,
        max_events=args.max_events,
        rng_seed=args.seed,
    )
    out: list[list[int]] = []
    if args.template_file:
        for index, template in enumerate(events.read_token_file(args.template_file)):
            rng = np.random.default_rng(mapping.derive_seed(args.seed, f"tmpl:{index}"))
            out.append(
                sampling.generate_rhythm_conditioned(model, template, params, rng)
            )
    elif args.prime_file:
        for index, prime in enumerate(events.read_token_file(args.prime_file)):
            rng = np.random.default_rng(mapping.derive_seed(args.seed, f"prime:{index}"))
            out.append(sampling.generate(model, prime, params, rng))
    else:
        for index in range(args.num):
            rng = np.random.default_rng(mapping.derive_seed(args.seed, f"gen:{index}"))
            out.append(sampling.generate(model, [], params, rng))
    events.write_token_file(args.out, out)
    return 0


@dataclass(frozen=True)
class StatsReport:
    sequences: int
    total_events: int
    shift_events: int
    total_seconds: float
    excerpts: int
    mean_seconds_per_excerpt: float


def compute_stats(
    sequences: Sequence[Sequence[int]], excerpt_len: int = DEFAULT_EXCERPT_LEN
) -> StatsReport:
    """Corpus census: event counts plus wall-clock seconds from shift ticks."""
    vocab = events.get_vocab()
    total_events = 0
    shift_events = 0
    excerpt_seconds: list[float] = []
    for seq in sequences:
        total_events += len(seq)
        for start in range(0, len(seq), excerpt_len):
            piece = seq[start : start + excerpt_len]
            ticks = 0
            for event_id in piece:
                desc = vocab.describe(event_id)
                if isinstance(desc, events.TimeShift):
                    shift_events += 1
                    ticks += desc.ticks
            excerpt_seconds.append(ticks / TICKS_PER_SECOND)
    mean = float(np.mean(excerpt_seconds)) if excerpt_seconds else 0.0
    return StatsReport(
        sequences=len(sequences),
        total_events=total_events,
        shift_events=shift_events,
        total_seconds=float(sum(excerpt_seconds)),
        excerpts=len(excerpt_seconds),
        mean_seconds_per_excerpt=mean,
    )


def cmd_stats(args: argparse.Namespace) -> int:
    report = compute_stats(events.read_token_file(args.tokens), args.excerpt_len)
    print(f"sequences: {report.sequences}")
    print(f"events: {report.total_events}")
    print(f"shift_events: {report.shift_events}")
    print(f"total_seconds: {report.total_seconds:.6f}")
    print(f"excerpts: {report.excerpts}")
    print(f"mean_seconds_per_excerpt: {report.mean_seconds_per_excerpt:.6f}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chipscore",
        description="Four-voice chiptune score pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="encode NES-layout MIDI files to token lines")
    p.add_argument("inputs", nargs="*", help="MIDI files or directories")
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", help="JSON manifest with train/valid/test splits")
    p.add_argument("--split", default="train", choices=DatasetManifest.VALID_SPLITS)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("map-lakh", help="map arbitrary-ensemble MIDI onto the four voices")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--cap", type=int, default=5, help="max outputs per input")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_map_lakh)

    p = sub.add_parser("excerpt", help="slice token lines into fixed-length excerpts")
    p.add_argument("input")
    p.add_argument("out")
    p.add_argument("--excerpt-len", type=int, default=DEFAULT_EXCERPT_LEN)
    p.set_defaults(func=cmd_excerpt)

    p = sub.add_parser("augment", help="augment token sequences (decode, transform, re-encode)")
    p.add_argument("input")
    p.add_argument("out")
    p.add_argument("--copies", type=int, default=1, help="fresh draws per input line")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--transpose-min", type=int, default=-6)
    p.add_argument("--transpose-max", type=int, default=5)
    p.add_argument("--speed-pct", type=float, default=0.05)
    p.add_argument("--p-remove", type=float, default=0.5)
    p.add_argument("--p-shuffle", type=float, default=0.5)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train-ngram", help="train an n-gram model on token files")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--order", type=int, default=5)
    p.add_argument("--epsilon", type=float, default=ngram.DEFAULT_EPSILON)
    p.add_argument("--lambdas", help="comma-separated weights, renormalized")
    p.set_defaults(func=cmd_train_ngram)

    p = sub.add_parser("eval", help="perplexity of a model or external likelihood file")
    p.add_argument("tokens")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--model")
    group.add_argument("--likelihoods")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("generate", help="sample new token sequences")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--num", type=int, default=1)
    p.add_argument("--temperature", type=float, default=0.95)
    p.add_argument("--top-k", type=int, default=32)
    p.add_argument("--max-events", type=int, default=512)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prime-file")
    p.add_argument("--template-file")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("stats", help="corpus statistics from a token file")
    p.add_argument("tokens")
    p.add_argument("--excerpt-len", type=int, default=DEFAULT_EXCERPT_LEN)
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ChipscoreError, ValueError, OSError) as exc:
        _print_err(f"chipscore {args.command}: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
