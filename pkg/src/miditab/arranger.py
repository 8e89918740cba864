"""Fingering arrangement and post-processing.

Two arrangers share the same feasibility rules (simultaneous notes on
pairwise distinct strings, fretted span of a chord at most 4 frets, open
strings exempt from the span):

* ``arrange_baseline`` picks the lowest-fret candidate per note; inside a
  chord a colliding note takes its next candidate on a free string.
* ``arrange_optimal`` runs an exact shortest-path search over the layered
  graph of per-onset candidate fingerings, minimising summed transition
  difficulty plus intra-chord cost. Cost ties resolve to the
  lexicographically smallest (fret, string) path.

``chunk_notes``/``arrange_chunked`` mirror the sliding-window protocol used
for sequence models: windows of 20 note groups, each window after the
first prefixed with the final note group of its predecessor, whose
positions are pinned; the prefix is dropped exactly once on reassembly.

``postprocess_overlap`` clears same-string temporal overlaps and
``postprocess_neighbor_search`` rebuilds an estimate against the input
notes so that every output note sounds its input pitch.
"""

from dataclasses import dataclass

from .core import (
    GuitarConfig,
    NoteEvent,
    Piece,
    Position,
    candidate_positions,
    require_candidates,
)
from .difficulty import DEFAULT_PARAMS, DifficultyParams, transition_difficulty
from .encodings import encode, encode_input_only, group_spans, parse_token
from .errors import InfeasibleChordError, UnplayablePitchError

MAX_CHORD_SPAN = 4


def _onset_layers(notes: tuple[NoteEvent, ...]) -> list[list[int]]:
    """Indices of simultaneous notes, grouped by start tick, in order."""
    layers: list[list[int]] = []
    for i, note in enumerate(notes):
        if layers and notes[layers[-1][0]].start == note.start:
            layers[-1].append(i)
        else:
            layers.append([i])
    return layers


def _by_string(positions) -> list[Position]:
    return sorted(positions, key=lambda p: (p.string, p.fret))


def _intra_cost(node: tuple[Position, ...], params: DifficultyParams) -> float:
    ordered = _by_string(node)
    return sum(
        transition_difficulty(a, b, params) for a, b in zip(ordered, ordered[1:])
    )


def _edge_cost(
    u: tuple[Position, ...], v: tuple[Position, ...], params: DifficultyParams
) -> float:
    total = 0.0
    for pu in u:
        for pv in v:
            total += transition_difficulty(pu, pv, params)
    return total / (len(u) * len(v))


def _node_key(node: tuple[Position, ...]) -> tuple:
    return tuple((p.fret, p.string) for p in _by_string(node))


def _span_ok(frets: list[int]) -> bool:
    fretted = [f for f in frets if f > 0]
    return len(fretted) < 2 or max(fretted) - min(fretted) <= MAX_CHORD_SPAN


def _layer_nodes(
    notes: tuple[NoteEvent, ...],
    layer: list[int],
    config: GuitarConfig,
    pinned: dict[int, Position],
) -> list[tuple[Position, ...]]:
    """Feasible fingerings for one onset layer, aligned with ``layer`` order."""
    per_note = []
    for idx in layer:
        if idx in pinned:
            per_note.append((pinned[idx],))
        else:
            per_note.append(require_candidates(config, notes[idx].pitch, idx))

    nodes: list[tuple[Position, ...]] = []
    chosen: list[Position] = []

    def extend(depth: int):
        if depth == len(per_note):
            nodes.append(tuple(chosen))
            return
        used = {p.string for p in chosen}
        frets = [p.fret for p in chosen if p.fret > 0]
        for cand in per_note[depth]:
            if cand.string in used:
                continue
            if not _span_ok(frets + [cand.fret]):
                continue
            chosen.append(cand)
            extend(depth + 1)
            chosen.pop()

    extend(0)
    if not nodes:
        raise InfeasibleChordError(
            tuple(layer), f"pitches {[notes[i].pitch for i in layer]}"
        )
    nodes.sort(key=_node_key)
    return nodes


def _optimal_positions(
    notes: tuple[NoteEvent, ...],
    config: GuitarConfig,
    params: DifficultyParams,
    pinned: dict[int, Position] | None = None,
) -> list[Position]:
    """Exact search; returns positions aligned with ``notes`` order."""
    if not notes:
        return []
    pinned = pinned or {}
    layers = _onset_layers(notes)
    nodes = [_layer_nodes(notes, layer, config, pinned) for layer in layers]
    intra = [[_intra_cost(n, params) for n in layer] for layer in nodes]

    # cost-to-go from each node to the end of the piece
    n_layers = len(layers)
    togo = [[0.0] * len(layer) for layer in nodes]
    for i in range(n_layers - 2, -1, -1):
        for a, u in enumerate(nodes[i]):
            togo[i][a] = min(
                _edge_cost(u, v, params) + intra[i + 1][b] + togo[i + 1][b]
                for b, v in enumerate(nodes[i + 1])
            )

    # forward walk; exact cost-to-go makes the greedy key choice the
    # lexicographically smallest minimum-cost path
    path: list[tuple[Position, ...]] = []
    first = min(
        range(len(nodes[0])),
        key=lambda a: (intra[0][a] + togo[0][a], _node_key(nodes[0][a])),
    )
    path.append(nodes[0][first])
    prev = first
    for i in range(1, n_layers):
        u = nodes[i - 1][prev]
        best = min(
            range(len(nodes[i])),
            key=lambda b: (
                _edge_cost(u, nodes[i][b], params) + intra[i][b] + togo[i][b],
                _node_key(nodes[i][b]),
            ),
        )
        path.append(nodes[i][best])
        prev = best

    positions: list[Position | None] = [None] * len(notes)
    for layer, node in zip(layers, path):
        for idx, pos in zip(layer, node):
            positions[idx] = pos
    return positions


def _baseline_positions(
    notes: tuple[NoteEvent, ...], config: GuitarConfig
) -> list[Position]:
    positions: list[Position | None] = [None] * len(notes)
    for layer in _onset_layers(notes):
        used: set[int] = set()
        frets: list[int] = []  # fretted notes already placed in this chord
        for idx in layer:
            cands = require_candidates(config, notes[idx].pitch, idx)
            pos = next(
                (
                    c
                    for c in cands
                    if c.string not in used and _span_ok(frets + [c.fret])
                ),
                None,
            )
            if pos is None:
                # greedy placement dead-ended; no backtracking by design
                raise InfeasibleChordError(
                    tuple(layer), f"no feasible string for pitch {notes[idx].pitch}"
                )
            positions[idx] = pos
            used.add(pos.string)
            if pos.fret > 0:
                frets.append(pos.fret)
    return positions


def _rebuild(piece: Piece, config: GuitarConfig, positions) -> Piece:
    notes = [
        NoteEvent(n.start, n.end, n.pitch, p) for n, p in zip(piece.notes, positions)
    ]
    return Piece.build(config, piece.ppq, notes, piece.source_id)


def arrange_baseline(piece: Piece, config: GuitarConfig | None = None) -> Piece:
    """Lowest-fret greedy arrangement."""
    config = config or piece.config
    return _rebuild(piece, config, _baseline_positions(piece.notes, config))


def arrange_optimal(
    piece: Piece,
    config: GuitarConfig | None = None,
    params: DifficultyParams = DEFAULT_PARAMS,
) -> Piece:
    """Minimum-difficulty arrangement via exact layered-graph search."""
    config = config or piece.config
    return _rebuild(piece, config, _optimal_positions(piece.notes, config, params))


def arrangement_cost(piece: Piece, params: DifficultyParams = DEFAULT_PARAMS) -> float:
    """Total objective value of an annotated piece under the optimal
    arranger's cost model: intra-chord costs plus mean pairwise transition
    cost between consecutive onset layers."""
    notes = piece.notes
    layers = _onset_layers(notes)
    groups = [tuple(notes[i].position for i in layer) for layer in layers]
    if any(p is None for g in groups for p in g):
        raise ValueError("arrangement_cost requires positions on every note")
    total = sum(_intra_cost(g, params) for g in groups)
    for u, v in zip(groups, groups[1:]):
        total += _edge_cost(u, v, params)
    return total


@dataclass(frozen=True)
class ChunkContext:
    """The final note group of the previous chunk, as notes and tokens."""

    notes: tuple[NoteEvent, ...]
    input_tokens: tuple[str, ...]
    target_tokens: tuple[str, ...] | None


@dataclass(frozen=True)
class NoteChunk:
    notes: tuple[NoteEvent, ...]
    context: ChunkContext | None


def chunk_notes(
    piece: Piece,
    chunk_size: int = 20,
    encoding: str = "v3",
    conditioned: bool = False,
) -> list[NoteChunk]:
    """Split a piece into windows of ``chunk_size`` note groups.

    Every chunk after the first carries the previous chunk's final note
    group as context. Target-side context tokens are present only when the
    piece is annotated.
    """
    if not piece.notes:
        return []
    if piece.is_annotated():
        inp, tgt = encode(piece, encoding, conditioned)
    else:
        inp = encode_input_only(piece, encoding, conditioned)
        tgt = None
    _, spans = group_spans(inp, tgt)

    group_notes: list[tuple[int, int]] = []
    cursor = 0
    for a, b, _, _ in spans:
        count = sum(
            1 for tok in inp.tokens[a:b] if parse_token(tok)[0] == "NOTE_ON"
        )
        group_notes.append((cursor, cursor + count))
        cursor += count

    chunks: list[NoteChunk] = []
    for gi in range(0, len(spans), chunk_size):
        block = spans[gi : gi + chunk_size]
        n0 = group_notes[gi][0]
        n1 = group_notes[min(gi + chunk_size, len(spans)) - 1][1]
        context = None
        if gi > 0:
            a, b, ta, tb = spans[gi - 1]
            c0, c1 = group_notes[gi - 1]
            context = ChunkContext(
                notes=piece.notes[c0:c1],
                input_tokens=inp.tokens[a:b],
                target_tokens=tgt.tokens[ta:tb] if tgt is not None else None,
            )
        chunks.append(NoteChunk(notes=piece.notes[n0:n1], context=context))
    return chunks


def arrange_chunked(
    piece: Piece,
    config: GuitarConfig | None = None,
    params: DifficultyParams = DEFAULT_PARAMS,
    chunk_size: int = 20,
    method: str = "astar",
) -> Piece:
    """Arrange chunk by chunk with pinned context, then reassemble.

    The context group keeps the positions it got in its own chunk, so the
    search continues from the same state a sequence model would see. The
    result has exactly one position per original note, in order.
    """
    config = config or piece.config
    chunks = chunk_notes(piece, chunk_size)
    out: list[Position] = []
    prev_fresh: list[Position] = []
    for chunk in chunks:
        if chunk.context is not None:
            k = len(chunk.context.notes)
            pinned = {i: prev_fresh[len(prev_fresh) - k + i] for i in range(k)}
            sub = chunk.context.notes + chunk.notes
        else:
            pinned = {}
            sub = chunk.notes
        if method == "baseline":
            positions = _baseline_positions(sub, config)
        else:
            positions = _optimal_positions(sub, config, params, pinned)
        fresh = positions[len(sub) - len(chunk.notes) :]
        out.extend(fresh)
        prev_fresh = fresh
    return _rebuild(piece, config, out)


def postprocess_overlap(
    piece: Piece, params: DifficultyParams = DEFAULT_PARAMS
) -> Piece:
    """Remove same-string temporal overlaps from an annotated estimate.

    A colliding later note moves to its cheapest candidate on a string
    free over its span (cost: transition difficulty to both canonical
    neighbours); with no such candidate the earlier note is cut short at
    the later note's start. Notes carrying no position are left alone.
    """
    config = piece.config
    starts = [n.start for n in piece.notes]
    ends = [n.end for n in piece.notes]
    pitches = [n.pitch for n in piece.notes]
    pos: list[Position | None] = [n.position for n in piece.notes]
    n = len(piece.notes)

    def overlaps(i: int, j: int) -> bool:
        return starts[i] < ends[j] and starts[j] < ends[i]

    for j in range(n):
        if pos[j] is None:
            continue
        colliders = [
            i
            for i in range(j)
            if pos[i] is not None
            and pos[i].string == pos[j].string
            and ends[i] > starts[j]
        ]
        if not colliders:
            continue
        occupied = {
            pos[k].string
            for k in range(n)
            if k != j and pos[k] is not None and overlaps(k, j)
        }
        alts = [
            c
            for c in candidate_positions(config, pitches[j])
            if c.string not in occupied
        ]
        if alts:

            def local_cost(c: Position) -> float:
                cost = 0.0
                if j > 0 and pos[j - 1] is not None:
                    cost += transition_difficulty(pos[j - 1], c, params)
                if j + 1 < n and pos[j + 1] is not None:
                    cost += transition_difficulty(c, pos[j + 1], params)
                return cost

            pos[j] = min(alts, key=lambda c: (local_cost(c), c.fret, c.string))
        else:
            for i in colliders:
                if starts[j] > starts[i]:
                    ends[i] = starts[j]

    notes = [
        NoteEvent(starts[k], ends[k], pitches[k], pos[k]) for k in range(n)
    ]
    return Piece.build(config, piece.ppq, notes, piece.source_id, check_positions=False)


def postprocess_neighbor_search(
    input_piece: Piece, estimated: Piece, window: int = 5
) -> Piece:
    """Rebuild an estimate so every note sounds its input pitch.

    For input note i the estimated notes are scanned at offsets
    0, -1, +1, ... up to the window; the first note whose position sounds
    the wanted pitch donates that position (once). Without a donor the
    note falls back to its first candidate position.
    """
    config = input_piece.config
    est_positions = [n.position for n in estimated.notes]
    donated = [False] * len(est_positions)

    def sounds(pos: Position | None, pitch: int) -> bool:
        if pos is None or pos.fret > config.max_fret:
            return False
        return config.tuning.open_pitch(pos.string) + config.capo + pos.fret == pitch

    offsets = [0]
    for d in range(1, window + 1):
        offsets.extend((-d, d))

    out = []
    for i, note in enumerate(input_piece.notes):
        chosen: Position | None = None
        for off in offsets:
            j = i + off
            if 0 <= j < len(est_positions) and not donated[j]:
                if sounds(est_positions[j], note.pitch):
                    chosen = est_positions[j]
                    donated[j] = True
                    break
        if chosen is None:
            chosen = require_candidates(config, note.pitch, i)[0]
        out.append(NoteEvent(note.start, note.end, note.pitch, chosen))
    return Piece.build(
        config, input_piece.ppq, out, input_piece.source_id, check_positions=True
    )
