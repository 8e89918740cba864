"""Accuracy metrics and report emission.

Reference and predicted pieces are aligned note-by-note. Both sides carry
the same onsets and pitches (timing and pitch travel on the input side of
every encoding), so notes are matched after sorting by (start, pitch);
string re-assignments cannot shuffle the pairing.

* pitch accuracy: the predicted position sounds the reference pitch;
* tab accuracy: the predicted position equals the reference position.

A tab match implies a pitch match at the same index, but aggregate tab
accuracy is not bounded by pitch accuracy in any other way.
"""

import json
from dataclasses import dataclass
from pathlib import Path

from .core import Piece, Position, strip_positions
from .difficulty import DEFAULT_PARAMS, DifficultyParams, piece_difficulty
from .errors import AlignmentError


def _aligned(piece: Piece) -> list:
    return sorted(
        piece.notes,
        key=lambda n: (
            n.start,
            n.pitch,
            n.position.string if n.position else 0,
            n.position.fret if n.position else 0,
        ),
    )


def _pairs(reference: Piece, predicted: Piece):
    if len(reference.notes) != len(predicted.notes):
        raise AlignmentError(len(reference.notes), len(predicted.notes))
    ref = _aligned(reference)
    pred = _aligned(predicted)
    for i, (r, p) in enumerate(zip(ref, pred)):
        if (r.start, r.pitch) != (p.start, p.pitch):
            raise AlignmentError(len(ref), i)
        yield r, p


def _sounds(piece: Piece, pos: Position | None, pitch: int) -> bool:
    config = piece.config
    if pos is None or pos.fret > config.max_fret:
        return False
    return config.tuning.open_pitch(pos.string) + config.capo + pos.fret == pitch


def pitch_accuracy(reference: Piece, predicted: Piece) -> float:
    """Percentage of notes whose predicted position sounds the reference
    pitch. Empty pieces score 100."""
    if not reference.notes:
        return 100.0
    hits = sum(
        1 for r, p in _pairs(reference, predicted) if _sounds(reference, p.position, r.pitch)
    )
    return 100.0 * hits / len(reference.notes)


def tab_accuracy(reference: Piece, predicted: Piece) -> float:
    """Percentage of notes placed on exactly the reference position."""
    if not reference.notes:
        return 100.0
    hits = sum(
        1
        for r, p in _pairs(reference, predicted)
        if p.position is not None and p.position == r.position
    )
    return 100.0 * hits / len(reference.notes)


@dataclass(frozen=True)
class PieceScore:
    name: str
    note_count: int
    pitch_matches: int
    tab_matches: int
    difficulty: float | None

    @property
    def pitch_accuracy(self) -> float:
        return 100.0 if self.note_count == 0 else 100.0 * self.pitch_matches / self.note_count

    @property
    def tab_accuracy(self) -> float:
        return 100.0 if self.note_count == 0 else 100.0 * self.tab_matches / self.note_count


def score_piece(
    reference: Piece,
    predicted: Piece,
    name: str = "",
    with_difficulty: bool = False,
    params: DifficultyParams = DEFAULT_PARAMS,
) -> PieceScore:
    pitch_hits = 0
    tab_hits = 0
    for r, p in _pairs(reference, predicted):
        if _sounds(reference, p.position, r.pitch):
            pitch_hits += 1
        if p.position is not None and p.position == r.position:
            tab_hits += 1
    difficulty = None
    if with_difficulty and predicted.is_annotated():
        difficulty = piece_difficulty(predicted, params)
    return PieceScore(
        name=name or reference.source_id,
        note_count=len(reference.notes),
        pitch_matches=pitch_hits,
        tab_matches=tab_hits,
        difficulty=difficulty,
    )


def aggregate(scores) -> dict:
    """Note-weighted (micro) and per-piece mean (macro) accuracies."""
    scores = list(scores)
    total_notes = sum(s.note_count for s in scores)
    micro_pitch = (
        100.0
        if total_notes == 0
        else 100.0 * sum(s.pitch_matches for s in scores) / total_notes
    )
    micro_tab = (
        100.0
        if total_notes == 0
        else 100.0 * sum(s.tab_matches for s in scores) / total_notes
    )
    macro_pitch = (
        100.0 if not scores else sum(s.pitch_accuracy for s in scores) / len(scores)
    )
    macro_tab = (
        100.0 if not scores else sum(s.tab_accuracy for s in scores) / len(scores)
    )
    difficulties = [s.difficulty for s in scores if s.difficulty is not None]
    return {
        "pieces": len(scores),
        "notes": total_notes,
        "micro_pitch_accuracy": micro_pitch,
        "micro_tab_accuracy": micro_tab,
        "macro_pitch_accuracy": macro_pitch,
        "macro_tab_accuracy": macro_tab,
        "mean_difficulty": (
            sum(difficulties) / len(difficulties) if difficulties else None
        ),
    }


def compare(reference: Piece, arrangers) -> list[PieceScore]:
    """Score several arrangers against one annotated reference piece.

    ``arrangers`` is an iterable of (name, callable) pairs; each callable
    maps an unannotated piece to an annotated one.
    """
    stripped = strip_positions(reference)
    rows = []
    for name, fn in arrangers:
        predicted = fn(stripped)
        rows.append(score_piece(reference, predicted, name=name, with_difficulty=True))
    return rows


def write_report(scores, tsv_path, summary_path=None):
    """Write per-piece TSV rows plus a machine-readable JSON summary."""
    tsv_path = Path(tsv_path)
    lines = ["piece\tnotes\tpitch_accuracy\ttab_accuracy\tdifficulty"]
    for s in scores:
        diff = "" if s.difficulty is None else f"{s.difficulty:.4f}"
        lines.append(
            f"{s.name}\t{s.note_count}\t{s.pitch_accuracy:.2f}\t{s.tab_accuracy:.2f}\t{diff}"
        )
    agg = aggregate(scores)
    lines.append(
        "TOTAL(micro)\t{notes}\t{micro_pitch_accuracy:.2f}\t{micro_tab_accuracy:.2f}\t".format(
            **agg
        )
    )
    lines.append(
        "TOTAL(macro)\t{notes}\t{macro_pitch_accuracy:.2f}\t{macro_tab_accuracy:.2f}\t".format(
            **agg
        )
    )
    tsv_path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    if summary_path is None:
        summary_path = tsv_path.with_suffix(".json")
    per_piece = [
        {
            "piece": s.name,
            "notes": s.note_count,
            "pitch_accuracy": s.pitch_accuracy,
            "tab_accuracy": s.tab_accuracy,
            "difficulty": s.difficulty,
        }
        for s in scores
    ]
    Path(summary_path).write_text(
        json.dumps({"aggregate": agg, "pieces": per_piece}, indent=2, sort_keys=True)
        + "\n",
        encoding="utf-8",
    )
    return agg
