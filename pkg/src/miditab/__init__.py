"""miditab: symbolic guitar music to playable tablature."""

__version__ = "0.1.0"

from .core import (
    DROP_D,
    FULL_STEP_DOWN,
    GuitarConfig,
    HALF_STEP_DOWN,
    NoteEvent,
    Piece,
    Position,
    STANDARD,
    TUNINGS,
    Tuning,
    candidate_positions,
    sounding_pitch,
    strip_positions,
)
from .difficulty import (
    DifficultyParams,
    piece_difficulty,
    transition_difficulty,
)
from .encodings import (
    ENCODINGS,
    TokenSequence,
    Vocabulary,
    decode,
    encode,
    split_sequences,
)
from .arranger import (
    arrange_baseline,
    arrange_chunked,
    arrange_optimal,
    arrangement_cost,
    chunk_notes,
    postprocess_neighbor_search,
    postprocess_overlap,
)
from .midi_io import parse_midi, read_interchange, write_interchange

__all__ = [
    "DROP_D",
    "DifficultyParams",
    "ENCODINGS",
    "FULL_STEP_DOWN",
    "GuitarConfig",
    "HALF_STEP_DOWN",
    "NoteEvent",
    "Piece",
    "Position",
    "STANDARD",
    "TUNINGS",
    "TokenSequence",
    "Tuning",
    "Vocabulary",
    "arrange_baseline",
    "arrange_chunked",
    "arrange_optimal",
    "arrangement_cost",
    "candidate_positions",
    "chunk_notes",
    "decode",
    "encode",
    "parse_midi",
    "piece_difficulty",
    "postprocess_neighbor_search",
    "postprocess_overlap",
    "read_interchange",
    "sounding_pitch",
    "split_sequences",
    "strip_positions",
    "transition_difficulty",
    "write_interchange",
]
