import itertools
import random

import pytest

from miditab.arranger import (
    ChunkContext,
    MAX_CHORD_SPAN,
    _optimal_positions,
    arrange_baseline,
    arrange_chunked,
    arrange_optimal,
    arrangement_cost,
    chunk_notes,
    postprocess_neighbor_search,
    postprocess_overlap,
)
from miditab.core import GuitarConfig, Position, candidate_positions, strip_positions
from miditab.difficulty import DEFAULT_PARAMS, transition_difficulty
from miditab.encodings import encode, group_spans
from miditab.errors import InfeasibleChordError, UnplayablePitchError

from conftest import make_piece, note, random_annotated_piece, random_mono_piece


def melody(pitches, ppq=480):
    return make_piece(
        [note(i * ppq, (i + 1) * ppq, p) for i, p in enumerate(pitches)], check=False
    )


def chord(pitches, dur=480):
    return make_piece([note(0, dur, p) for p in pitches], check=False)


def positions_of(piece):
    return [n.position for n in piece.notes]


# --- baseline ---


def test_baseline_single_notes_take_lowest_fret():
    piece = arrange_baseline(melody([55, 40, 64]))
    assert positions_of(piece) == [Position(3, 0), Position(6, 0), Position(1, 0)]


def test_baseline_chord_collision_moves_to_next_free_string():
    piece = arrange_baseline(chord([55, 59, 60]))
    # notes are processed in ascending pitch; 60 finds strings 2 and 3 taken
    assert {n.pitch: n.position for n in piece.notes} == {
        55: Position(3, 0),
        59: Position(2, 0),
        60: Position(4, 10),
    }


def test_baseline_unplayable_pitch():
    with pytest.raises(UnplayablePitchError) as err:
        arrange_baseline(melody([39]))
    assert err.value.pitch == 39


def test_baseline_chord_with_no_free_string():
    with pytest.raises(InfeasibleChordError):
        arrange_baseline(chord([40, 40]))


def timeline(piece):
    return sorted((n.start, n.end, n.pitch) for n in piece.notes)


def test_baseline_output_sounds_input_pitches():
    rng = random.Random(5)
    for _ in range(10):
        piece = strip_positions(random_annotated_piece(rng, max_notes=32))
        try:
            arranged = arrange_baseline(piece)  # Piece.build re-checks sounding
        except InfeasibleChordError:
            continue
        assert timeline(arranged) == timeline(piece)


# --- optimal ---


def test_optimal_single_note_tie_breaks_to_lowest_fret_then_string():
    assert positions_of(arrange_optimal(melody([55]))) == [Position(3, 0)]
    assert positions_of(arrange_optimal(melody([59]))) == [Position(2, 0)]


def test_optimal_chord_beats_baseline():
    piece = chord([55, 59, 60])
    best = arrange_optimal(piece)
    assert {n.pitch: n.position for n in best.notes} == {
        55: Position(4, 5),
        59: Position(3, 4),
        60: Position(2, 1),
    }
    assert arrangement_cost(best) == 6.0
    assert arrangement_cost(arrange_baseline(piece)) == 8.0


def test_wide_chord_is_infeasible_for_both_arrangers():
    # 41 sits only at (6,1); every fingering of 70 is at fret 6 or higher,
    # so no fingering keeps the fretted span within 4 frets
    with pytest.raises(InfeasibleChordError) as err:
        arrange_optimal(chord([41, 70]))
    assert err.value.note_indices == (0, 1)
    with pytest.raises(InfeasibleChordError):
        arrange_baseline(chord([41, 70]))


def test_optimal_melody_prefers_cheap_open_string():
    piece = arrange_optimal(melody([55, 57, 59]))
    # (2,0) beats (3,4) for the last note: 0.75*2 + 0.5 + 0.25 < 0.5*2 + 1.5
    assert positions_of(piece) == [Position(3, 0), Position(3, 2), Position(2, 0)]
    assert arrangement_cost(piece) == 3.75


def test_optimal_empty_piece():
    assert arrange_optimal(make_piece([])).notes == ()


def brute_force(piece, params=DEFAULT_PARAMS):
    """Enumerate every feasible assignment; min cost, then lexicographic."""
    config = piece.config
    groups = []
    for n in piece.notes:
        if groups and groups[-1][0].start == n.start:
            groups[-1].append(n)
        else:
            groups.append([n])

    def layer_options(group):
        opts = []
        for combo in itertools.product(
            *(candidate_positions(config, n.pitch) for n in group)
        ):
            strings = [p.string for p in combo]
            if len(set(strings)) != len(strings):
                continue
            fretted = [p.fret for p in combo if p.fret > 0]
            if len(fretted) >= 2 and max(fretted) - min(fretted) > MAX_CHORD_SPAN:
                continue
            opts.append(combo)
        return opts

    def intra(combo):
        ordered = sorted(combo, key=lambda p: (p.string, p.fret))
        return sum(
            transition_difficulty(a, b, params) for a, b in zip(ordered, ordered[1:])
        )

    def edge(u, v):
        return sum(
            transition_difficulty(a, b, params) for a in u for b in v
        ) / (len(u) * len(v))

    best = None
    for path in itertools.product(*(layer_options(g) for g in groups)):
        cost = sum(intra(c) for c in path)
        for u, v in zip(path, path[1:]):
            cost += edge(u, v)
        key = tuple(
            tuple((p.fret, p.string) for p in sorted(c, key=lambda p: p.string))
            for c in path
        )
        if best is None or (cost, key) < (best[0], best[1]):
            best = (cost, key, path)
    return best


def test_optimal_matches_brute_force_on_melodies():
    rng = random.Random(17)
    for _ in range(40):
        piece = random_mono_piece(rng, rng.randint(1, 6))
        got = arrange_optimal(piece)
        cost, key, _ = brute_force(piece)
        assert arrangement_cost(got) == cost
        assert tuple((p.fret, p.string) for p in positions_of(got)) == tuple(
            k[0] for k in key
        )


def test_optimal_matches_brute_force_on_small_chords():
    rng = random.Random(23)
    for _ in range(15):
        piece = strip_positions(random_annotated_piece(rng, max_notes=6, max_voices=3))
        got = arrange_optimal(piece)
        cost, _, _ = brute_force(piece)
        assert arrangement_cost(got) == cost


def test_optimal_never_beaten_by_baseline():
    rng = random.Random(29)
    for _ in range(20):
        piece = strip_positions(random_annotated_piece(rng, max_notes=24))
        try:
            base = arrange_baseline(piece)
        except InfeasibleChordError:
            continue
        assert arrangement_cost(arrange_optimal(piece)) <= arrangement_cost(base)


def test_optimal_is_deterministic():
    piece = strip_positions(random_annotated_piece(random.Random(31), max_notes=48))
    assert arrange_optimal(piece) == arrange_optimal(piece)


def test_pinned_positions_are_kept():
    piece = melody([55, 57])
    pinned = {0: Position(6, 15)}
    got = _optimal_positions(piece.notes, piece.config, DEFAULT_PARAMS, pinned)
    assert got[0] == Position(6, 15)
    # continuation is optimal w.r.t. the pin, not the global optimum
    assert got[1] == min(
        candidate_positions(piece.config, 57),
        key=lambda c: (
            transition_difficulty(Position(6, 15), c),
            (c.fret, c.string),
        ),
    )


def test_arrangement_cost_requires_positions():
    with pytest.raises(ValueError):
        arrangement_cost(melody([55, 57]))


def test_arrangement_cost_sums_intra_and_mean_edges():
    piece = make_piece(
        [
            note(0, 480, 55, 3, 0),
            note(0, 480, 50, 4, 0),
            note(480, 960, 57, 3, 2),
        ]
    )
    intra = transition_difficulty(Position(3, 0), Position(4, 0))
    e = (
        transition_difficulty(Position(3, 0), Position(3, 2))
        + transition_difficulty(Position(4, 0), Position(3, 2))
    ) / 2
    assert arrangement_cost(piece) == intra + e


# --- chunking ---


def test_chunk_notes_structure():
    piece = arrange_optimal(melody(list(range(44, 89))))  # 45 single-note groups
    chunks = chunk_notes(piece, chunk_size=20)
    assert [len(c.notes) for c in chunks] == [20, 20, 5]
    assert chunks[0].context is None
    for prev, cur in zip(chunks, chunks[1:]):
        assert cur.context.notes == prev.notes[-1:]
    inp, tgt = encode(piece, "v3")
    _, spans = group_spans(inp, tgt)
    a, b, ta, tb = spans[19]
    assert chunks[1].context.input_tokens == inp.tokens[a:b]
    assert chunks[1].context.target_tokens == tgt.tokens[ta:tb]


def test_chunk_notes_unannotated_has_no_target_tokens():
    chunks = chunk_notes(melody(list(range(44, 89))), chunk_size=20)
    assert all(
        c.context is None or c.context.target_tokens is None for c in chunks
    )


def test_chunk_notes_chords_stay_whole():
    # the chord is one note group: a window boundary cannot divide it
    notes = [
        note(0, 480, 55),
        note(0, 480, 59),
        note(480, 960, 57),
        note(960, 1440, 60),
        note(1440, 1920, 62),
    ]
    chunks = chunk_notes(make_piece(notes, check=False), chunk_size=2)
    assert [len(c.notes) for c in chunks] == [3, 2]
    assert chunks[1].context.notes == tuple(make_piece(notes, check=False).notes[2:3])


def test_chunk_notes_empty_piece():
    assert chunk_notes(make_piece([])) == []


def test_chunked_equals_optimal_when_single_chunk():
    rng = random.Random(37)
    for _ in range(10):
        piece = strip_positions(random_annotated_piece(rng, max_notes=18))
        assert arrange_chunked(piece, chunk_size=20) == arrange_optimal(piece)


def test_chunked_reassembly_preserves_notes():
    rng = random.Random(41)
    for size in (2, 3, 20):
        piece = strip_positions(random_annotated_piece(rng, max_notes=64))
        got = arrange_chunked(piece, chunk_size=size)
        assert got.is_annotated()
        assert timeline(got) == timeline(piece)


def test_chunked_baseline_matches_plain_baseline():
    piece = strip_positions(random_annotated_piece(random.Random(43), max_notes=50))
    assert arrange_chunked(piece, chunk_size=7, method="baseline") == arrange_baseline(
        piece
    )


# --- overlap pass ---


def test_overlap_truncates_when_no_alternative():
    piece = make_piece(
        [note(0, 480, 40, 6, 0), note(240, 720, 40, 6, 0)], check=False
    )
    fixed = postprocess_overlap(piece)
    assert [(n.start, n.end) for n in fixed.notes] == [(0, 240), (240, 720)]
    assert positions_of(fixed) == [Position(6, 0), Position(6, 0)]


def test_overlap_moves_later_note_to_free_string():
    piece = make_piece([note(0, 480, 55, 3, 0), note(240, 720, 55, 3, 0)])
    fixed = postprocess_overlap(piece)
    assert positions_of(fixed) == [Position(3, 0), Position(4, 5)]
    assert [(n.start, n.end) for n in fixed.notes] == [(0, 480), (240, 720)]


def test_overlap_ignores_disjoint_and_other_strings():
    piece = make_piece(
        [note(0, 240, 55, 3, 0), note(240, 480, 55, 3, 0), note(0, 480, 45, 5, 0)]
    )
    assert postprocess_overlap(piece) == piece


def test_overlap_leaves_unpositioned_notes_alone():
    piece = make_piece([note(0, 480, 40, 6, 0), note(240, 720, 40)], check=False)
    fixed = postprocess_overlap(piece)
    assert fixed == piece


def test_overlap_same_start_without_alternative_is_left_as_is():
    piece = make_piece([note(0, 480, 40, 6, 0), note(0, 720, 40, 6, 0)], check=False)
    fixed = postprocess_overlap(piece)
    assert [(n.start, n.end) for n in fixed.notes] == [(0, 480), (0, 720)]


# --- neighbor search ---


def test_neighbor_search_keeps_correct_positions():
    piece = arrange_optimal(melody([55, 57, 59]))
    fixed = postprocess_neighbor_search(strip_positions(piece), piece)
    assert fixed == piece


def test_neighbor_search_repairs_wrong_position():
    inp = melody([55, 57, 59])
    est = make_piece(
        [note(0, 480, 55, 3, 0), note(480, 960, 57, 2, 0), note(960, 1440, 59, 3, 4)],
        check=False,
    )
    fixed = postprocess_neighbor_search(inp, est)
    assert positions_of(fixed) == [Position(3, 0), Position(3, 2), Position(3, 4)]


def test_neighbor_search_recovers_swapped_positions():
    inp = melody([55, 57])
    est = make_piece(
        [note(0, 480, 55, 3, 2), note(480, 960, 57, 3, 0)], check=False
    )
    fixed = postprocess_neighbor_search(inp, est)
    assert positions_of(fixed) == [Position(3, 0), Position(3, 2)]


def test_neighbor_search_donates_each_position_once():
    inp = melody([55, 55])
    # only est[0] sounds 55; the second input note must not reuse it
    est = make_piece(
        [note(0, 480, 55, 4, 5), note(480, 960, 55, 6, 1)], check=False
    )
    fixed = postprocess_neighbor_search(inp, est)
    assert positions_of(fixed) == [Position(4, 5), Position(3, 0)]


def test_neighbor_search_ignores_frets_beyond_capo_range():
    config_capo = 5
    inp = make_piece([note(0, 480, 64)], capo=config_capo)
    est = make_piece([note(0, 480, 64, 1, 24)], capo=config_capo, check=False)
    fixed = postprocess_neighbor_search(inp, est)
    assert positions_of(fixed) == [Position(2, 0)]


def test_neighbor_search_unplayable_pitch_raises():
    inp = make_piece([note(0, 480, 39)])
    est = make_piece([note(0, 480, 39, 6, 0)], check=False)
    with pytest.raises(UnplayablePitchError):
        postprocess_neighbor_search(inp, est)


def test_neighbor_search_zero_window_only_checks_same_index():
    inp = melody([55, 57])
    est = make_piece(
        [note(0, 480, 55, 3, 2), note(480, 960, 57, 3, 0)], check=False
    )
    fixed = postprocess_neighbor_search(inp, est, window=0)
    # no donor in reach; both fall back to their first candidate
    assert positions_of(fixed) == [Position(3, 0), Position(3, 2)]


def test_neighbor_search_output_always_sounds_input():
    rng = random.Random(47)
    for _ in range(10):
        truth = random_annotated_piece(rng, max_notes=40)
        # corrupt a fifth of the positions
        notes = list(truth.notes)
        for i in range(0, len(notes), 5):
            n = notes[i]
            notes[i] = note(n.start, n.end, n.pitch, 1, 24)
        est = make_piece(notes, check=False)
        fixed = postprocess_neighbor_search(strip_positions(truth), est)
        assert timeline(fixed) == timeline(truth)
        assert fixed.is_annotated()
