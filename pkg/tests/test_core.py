import pytest

from miditab.core import (
    DROP_D,
    GuitarConfig,
    NoteEvent,
    Piece,
    Position,
    STANDARD,
    candidate_positions,
    rescale_ppq,
    sounding_pitch,
    strip_positions,
)
from miditab.errors import InvalidPositionError

from conftest import make_piece, note


def test_standard_tuning_open_pitches():
    assert STANDARD.open_pitches == (64, 59, 55, 50, 45, 40)
    assert STANDARD.open_pitch(1) == 64
    assert STANDARD.open_pitch(6) == 40


def test_sounding_pitch_open_and_fretted():
    config = GuitarConfig()
    assert sounding_pitch(config, Position(3, 0)) == 55
    assert sounding_pitch(config, Position(6, 15)) == 55
    assert sounding_pitch(config, Position(1, 24)) == 88


def test_sounding_pitch_with_capo():
    config = GuitarConfig(capo=2)
    assert sounding_pitch(config, Position(3, 2)) == 59
    assert sounding_pitch(config, Position(6, 0)) == 42


def test_sounding_pitch_rejects_out_of_range_fret():
    config = GuitarConfig(capo=4)
    with pytest.raises(InvalidPositionError):
        sounding_pitch(config, Position(1, 21))


def test_candidate_positions_pitch_55():
    config = GuitarConfig()
    assert candidate_positions(config, 55) == (
        Position(3, 0),
        Position(4, 5),
        Position(5, 10),
        Position(6, 15),
    )


def test_candidate_positions_below_range_empty():
    assert candidate_positions(GuitarConfig(), 39) == ()


def test_candidate_positions_lowest_note():
    assert candidate_positions(GuitarConfig(), 40) == (Position(6, 0),)


def test_candidate_positions_ordering_and_count():
    cands = candidate_positions(GuitarConfig(), 64)
    assert cands == (
        Position(1, 0),
        Position(2, 5),
        Position(3, 9),
        Position(4, 14),
        Position(5, 19),
        Position(6, 24),
    )
    frets = [p.fret for p in cands]
    assert frets == sorted(frets)


def test_candidate_positions_against_exhaustive_scan():
    for config in (GuitarConfig(), GuitarConfig(capo=3), GuitarConfig(tuning=DROP_D)):
        for pitch in range(30, 100):
            expected = [
                Position(s, f)
                for f in range(0, config.max_fret + 1)
                for s in range(1, 7)
                if config.tuning.open_pitch(s) + config.capo + f == pitch
            ]
            assert list(candidate_positions(config, pitch)) == expected


def test_capo_shrinks_fret_range():
    config = GuitarConfig(capo=7)
    assert config.max_fret == 17
    assert all(p.fret <= 17 for p in candidate_positions(config, 70))


def test_position_validation():
    with pytest.raises(InvalidPositionError):
        Position(0, 3)
    with pytest.raises(InvalidPositionError):
        Position(7, 3)
    with pytest.raises(InvalidPositionError):
        Position(2, -1)


def test_note_event_validation():
    with pytest.raises(ValueError):
        NoteEvent(100, 100, 60)
    with pytest.raises(ValueError):
        NoteEvent(0, 10, 128)


def test_config_validation():
    with pytest.raises(InvalidPositionError):
        GuitarConfig(capo=24)
    with pytest.raises(InvalidPositionError):
        GuitarConfig(capo=-1)


def test_piece_canonical_order():
    piece = make_piece(
        [
            note(480, 960, 50, 4, 0),
            note(0, 480, 50, 4, 0),
            note(0, 480, 55, 3, 0),
        ]
    )
    keyed = [(n.start, n.position.string) for n in piece.notes]
    assert keyed == [(0, 3), (0, 4), (480, 4)]


def test_piece_build_checks_position_pitch():
    with pytest.raises(InvalidPositionError):
        make_piece([note(0, 480, 56, 3, 0)])
    # the permissive path admits model estimates
    piece = make_piece([note(0, 480, 56, 3, 0)], check=False)
    assert piece.notes[0].position == Position(3, 0)


def test_rescale_ppq():
    piece = make_piece([note(0, 960, 55, 3, 0)], ppq=960)
    scaled = rescale_ppq(piece, 480)
    assert scaled.ppq == 480
    assert scaled.notes[0].end == 480


def test_rescale_keeps_minimum_length():
    piece = make_piece([note(0, 1, 55, 3, 0)], ppq=960)
    scaled = rescale_ppq(piece, 480)
    assert scaled.notes[0].end == scaled.notes[0].start + 1


def test_strip_positions():
    piece = make_piece([note(0, 480, 55, 3, 0)])
    bare = strip_positions(piece)
    assert bare.notes[0].position is None
    assert bare.notes[0].pitch == 55


def test_final_tick():
    assert make_piece([]).final_tick == 0
    assert make_piece([note(0, 480, 55, 3, 0), note(0, 240, 50, 4, 0)]).final_tick == 480
