"""Core value types: tunings, guitar configuration, positions, notes, pieces.

Conventions used throughout the package:

* Strings are numbered 1..6 where string 1 is the highest-pitched string.
* Frets are counted relative to the capo; fret 0 is an open string (or a
  string stopped by the capo when one is set).
* A position (string s, fret f) under config c sounds MIDI pitch
  ``open_pitch(s) + c.capo + f``.
* Times are integer ticks at the piece's PPQ.
"""

from dataclasses import dataclass, field
from functools import lru_cache

from .errors import EmptyPieceError, InvalidPositionError, UnplayablePitchError

# MIDI note numbers of the open strings, string 1 first (E4 B3 G3 D3 A2 E2).
STANDARD_OPEN_PITCHES = (64, 59, 55, 50, 45, 40)


@dataclass(frozen=True, order=True)
class Position:
    """A fretboard location: string 1..6, fret relative to the capo."""

    string: int
    fret: int

    def __post_init__(self):
        if not 1 <= self.string <= 6:
            raise InvalidPositionError(self.string, self.fret, "string out of range")
        if self.fret < 0:
            raise InvalidPositionError(self.string, self.fret, "negative fret")


@dataclass(frozen=True)
class Tuning:
    """Open-string pitches, index 0 = string 1 (highest) .. index 5 = string 6."""

    name: str
    open_pitches: tuple[int, int, int, int, int, int]

    def open_pitch(self, string: int) -> int:
        return self.open_pitches[string - 1]


STANDARD = Tuning("standard", STANDARD_OPEN_PITCHES)
HALF_STEP_DOWN = Tuning("half-step-down", tuple(p - 1 for p in STANDARD_OPEN_PITCHES))
FULL_STEP_DOWN = Tuning("full-step-down", tuple(p - 2 for p in STANDARD_OPEN_PITCHES))
DROP_D = Tuning("drop-d", STANDARD_OPEN_PITCHES[:5] + (38,))

TUNINGS = {t.name: t for t in (STANDARD, HALF_STEP_DOWN, FULL_STEP_DOWN, DROP_D)}


@dataclass(frozen=True)
class GuitarConfig:
    """Instrument setup a piece is played on."""

    tuning: Tuning = STANDARD
    capo: int = 0
    num_frets: int = 24
    num_strings: int = 6

    def __post_init__(self):
        if not 0 <= self.capo < self.num_frets:
            raise InvalidPositionError(0, self.capo, "capo outside fret range")
        if self.num_strings != len(self.tuning.open_pitches):
            raise InvalidPositionError(0, 0, "tuning does not match string count")

    @property
    def max_fret(self) -> int:
        """Highest playable capo-relative fret."""
        return self.num_frets - self.capo


@dataclass(frozen=True)
class NoteEvent:
    """One note: half-open tick interval [start, end), MIDI pitch, optional position."""

    start: int
    end: int
    pitch: int
    position: Position | None = None

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError(f"note end {self.end} not after start {self.start}")
        if not 0 <= self.pitch <= 127:
            raise ValueError(f"pitch {self.pitch} outside MIDI range")


def note_sort_key(note: NoteEvent) -> tuple[int, int, int]:
    string = note.position.string if note.position is not None else 0
    return (note.start, string, note.pitch)


@dataclass(frozen=True)
class Piece:
    """An ordered collection of notes on one instrument configuration.

    ``source_id`` is bookkeeping for dataset deduplication and does not
    participate in equality.
    """

    config: GuitarConfig
    ppq: int
    notes: tuple[NoteEvent, ...]
    source_id: str = field(default="", compare=False)

    @classmethod
    def build(
        cls,
        config: GuitarConfig,
        ppq: int,
        notes,
        source_id: str = "",
        check_positions: bool = True,
    ) -> "Piece":
        """Sort notes into canonical order and validate them against config.

        Canonical order is (start, string, pitch) ascending; notes without a
        position sort as string 0. ``check_positions=False`` admits pieces
        whose positions may not sound their stated pitch (model output before
        post-processing).
        """
        ordered = tuple(sorted(notes, key=note_sort_key))
        if check_positions:
            for i, note in enumerate(ordered):
                if note.position is not None:
                    sounded = sounding_pitch(config, note.position)
                    if sounded != note.pitch:
                        raise InvalidPositionError(
                            note.position.string,
                            note.position.fret,
                            f"note {i} sounds {sounded}, expected {note.pitch}",
                        )
        return cls(config=config, ppq=ppq, notes=ordered, source_id=source_id)

    @property
    def final_tick(self) -> int:
        return max((n.end for n in self.notes), default=0)

    def is_annotated(self) -> bool:
        return all(n.position is not None for n in self.notes)


def sounding_pitch(config: GuitarConfig, position: Position) -> int:
    """MIDI pitch produced by playing ``position`` under ``config``."""
    if position.fret > config.max_fret:
        raise InvalidPositionError(
            position.string, position.fret, f"beyond fret {config.max_fret}"
        )
    return config.tuning.open_pitch(position.string) + config.capo + position.fret


@lru_cache(maxsize=4096)
def candidate_positions(config: GuitarConfig, pitch: int) -> tuple[Position, ...]:
    """All positions sounding ``pitch``, ordered by ascending fret then string.

    Empty when the pitch is unplayable on this configuration.
    """
    found = []
    for string in range(1, config.num_strings + 1):
        fret = pitch - config.capo - config.tuning.open_pitch(string)
        if 0 <= fret <= config.max_fret:
            found.append(Position(string, fret))
    found.sort(key=lambda p: (p.fret, p.string))
    return tuple(found)


def require_candidates(config: GuitarConfig, pitch: int, note_index: int | None = None):
    cands = candidate_positions(config, pitch)
    if not cands:
        raise UnplayablePitchError(pitch, note_index)
    return cands


def rescale_ppq(piece: Piece, new_ppq: int) -> Piece:
    """Rescale note times to a new ticks-per-quarter resolution.

    Rounds to the nearest tick; a note collapsed to zero length keeps a
    minimum length of one tick.
    """
    if new_ppq == piece.ppq:
        return piece
    factor = new_ppq / piece.ppq
    notes = []
    for n in piece.notes:
        start = round(n.start * factor)
        end = max(round(n.end * factor), start + 1)
        notes.append(NoteEvent(start, end, n.pitch, n.position))
    return Piece.build(
        piece.config, new_ppq, notes, piece.source_id, check_positions=False
    )


def strip_positions(piece: Piece) -> Piece:
    """Copy of the piece with all positions removed."""
    notes = [NoteEvent(n.start, n.end, n.pitch) for n in piece.notes]
    return Piece.build(piece.config, piece.ppq, notes, piece.source_id)


def require_notes(piece: Piece) -> Piece:
    if not piece.notes:
        raise EmptyPieceError(f"piece {piece.source_id or '<unnamed>'} has no notes")
    return piece
