"""Heuristic playing-difficulty model for transitions between fret positions.

The cost of moving from position (s1, p) to (s2, q) is the sum of three
terms:

* fret stretch: ascending moves cost 0.50 per fret, descending 0.75 per
  fret (moving down the neck is harder);
* locality: 0.25 * (p + q), penalising passages high up the neck;
* vertical stretch: 0 for the same string, 0.25 for adjacent strings,
  0.50 for anything wider.

With 24 frets the transition (6, 0) -> (1, 24) scores the model maximum
of 18.5; repeating the same open string scores 0.
"""

from dataclasses import dataclass

from .core import NoteEvent, Piece, Position


@dataclass(frozen=True)
class DifficultyParams:
    ascending_weight: float = 0.50
    descending_weight: float = 0.75
    locality_alpha: float = 0.25
    adjacent_string_cost: float = 0.25
    far_string_cost: float = 0.50


DEFAULT_PARAMS = DifficultyParams()


def fret_stretch(from_fret: int, to_fret: int, params: DifficultyParams = DEFAULT_PARAMS) -> float:
    delta = to_fret - from_fret
    if delta > 0:
        return params.ascending_weight * delta
    return params.descending_weight * -delta


def locality(from_fret: int, to_fret: int, params: DifficultyParams = DEFAULT_PARAMS) -> float:
    return params.locality_alpha * (from_fret + to_fret)


def vertical_stretch(
    from_string: int, to_string: int, params: DifficultyParams = DEFAULT_PARAMS
) -> float:
    delta = abs(to_string - from_string)
    if delta == 0:
        return 0.0
    if delta == 1:
        return params.adjacent_string_cost
    return params.far_string_cost


def transition_difficulty(
    a: Position, b: Position, params: DifficultyParams = DEFAULT_PARAMS
) -> float:
    """Cost of moving from position ``a`` to position ``b``."""
    return (
        fret_stretch(a.fret, b.fret, params)
        + locality(a.fret, b.fret, params)
        + vertical_stretch(a.string, b.string, params)
    )


def piece_difficulty(piece: Piece, params: DifficultyParams = DEFAULT_PARAMS) -> float:
    """Mean transition cost over consecutive note pairs in canonical order.

    Pieces with fewer than two notes score 0.0. All notes must carry
    positions.
    """
    positions = [n.position for n in piece.notes]
    if any(p is None for p in positions):
        raise ValueError("piece_difficulty requires positions on every note")
    if len(positions) < 2:
        return 0.0
    total = 0.0
    for a, b in zip(positions, positions[1:]):
        total += transition_difficulty(a, b, params)
    return total / (len(positions) - 1)


def pairwise_sum(notes: tuple[NoteEvent, ...], params: DifficultyParams = DEFAULT_PARAMS) -> float:
    """Sum (not mean) of transition costs over consecutive annotated notes."""
    total = 0.0
    for a, b in zip(notes, notes[1:]):
        total += transition_difficulty(a.position, b.position, params)
    return total
