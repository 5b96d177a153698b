"""chipscore: four-voice chiptune scores, event tokens, n-gram models, sampling."""

from .augment import AugmentConfig, augment, remove_instruments, shuffle_melodic, stretch, transpose
from .errors import ChipscoreError, MidiParseError, ModelFormatError, ScoreError
from .evaluate import eval_external, nll, perplexity
from .events import (
    BOUNDARY_ID,
    VOCAB_SIZE,
    CodecReport,
    Vocab,
    build_vocab,
    decode,
    encode,
    get_vocab,
    quantize_gap,
    read_token_file,
    validate,
    write_token_file,
)
from .mapping import MappedExample, MapperConfig, derive_seed, map_file
from .midi_io import load_nes_score, parse_midi, write_midi
from .ngram import NgramModel, deserialize, serialize, train
from .sampling import SamplingParams, generate, generate_rhythm_conditioned, sample_next
from .score import (
    MELODIC_KINDS,
    PITCH_RANGES,
    TICKS_PER_SECOND,
    VOICE_ORDER,
    MultiTrackScore,
    Note,
    Score,
    Track,
    Voice,
    VoiceKind,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentConfig",
    "BOUNDARY_ID",
    "ChipscoreError",
    "CodecReport",
    "MELODIC_KINDS",
    "MappedExample",
    "MapperConfig",
    "MidiParseError",
    "ModelFormatError",
    "MultiTrackScore",
    "NgramModel",
    "Note",
    "PITCH_RANGES",
    "SamplingParams",
    "Score",
    "ScoreError",
    "TICKS_PER_SECOND",
    "Track",
    "VOCAB_SIZE",
    "VOICE_ORDER",
    "Vocab",
    "Voice",
    "VoiceKind",
    "augment",
    "build_vocab",
    "decode",
    "derive_seed",
    "deserialize",
    "encode",
    "eval_external",
    "generate",
    "generate_rhythm_conditioned",
    "get_vocab",
    "load_nes_score",
    "map_file",
    "nll",
    "parse_midi",
    "perplexity",
    "quantize_gap",
    "read_token_file",
    "remove_instruments",
    "sample_next",
    "serialize",
    "shuffle_melodic",
    "stretch",
    "train",
    "transpose",
    "validate",
    "write_midi",
    "write_token_file",
]
