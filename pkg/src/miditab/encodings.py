"""Token encodings mapping pieces to paired input/target sequences.

Five encodings are provided. They differ in how timing is carried and in
how a fretboard position is spelled on the target side:

==========  =============================  ================================
encoding    input events                   target per note / timing
==========  =============================  ================================
v1          NOTE_ON                        STRING + FRET, no timing
v2          NOTE_ON                        TAB, no timing
v3          NOTE_ON, TIME_SHIFT, NOTE_OFF  TAB, TIME_SHIFT mirrored
v4          NOTE_ON, TIME_SHIFT, NOTE_OFF  STRING + FRET, TIME_SHIFT mirrored
v5          NOTE_ON, TIME_SHIFT            TAB, TIME_SHIFT mirrored
==========  =============================  ================================

Token grammar: ``NOTE_ON<p>`` / ``NOTE_OFF<p>`` with MIDI pitch p,
``TIME_SHIFT<t>`` with a positive tick delta, ``STRING<s>``, ``FRET<f>``,
``TAB<s,f>``, and the conditioning tokens ``CAPO<c>`` and
``TUNING<p1,p2,p3,p4,p5,p6>`` which appear only at the head of input
sequences. The specials PAD, BOS, EOS, UNK occupy vocabulary ids 0..3.

Ordering rules. Notes are taken in the piece's canonical order (start,
string, pitch). Within one tick all note-offs are emitted before any
note-on; note-offs close in the order their notes were opened, note-ons
follow canonical note order. Target sequences mirror the input token by
token: each NOTE_ON contributes its position tokens, each TIME_SHIFT is
repeated verbatim (v3/v4/v5), and NOTE_OFF contributes nothing.

Timing. Event times are snapped to a grid of 10 ticks at PPQ 480 (scaled
for other resolutions). A single TIME_SHIFT token carries at most 1920
ticks at PPQ 480; longer gaps are emitted as repeated tokens. The sum of
TIME_SHIFT values over a v3/v4/v5 input equals the final note-off time.
"""

import re
from dataclasses import dataclass

from .core import GuitarConfig, NoteEvent, Piece, Position, Tuning, TUNINGS
from .errors import AlignmentError, EncodingError, TokenError

ENCODINGS = ("v1", "v2", "v3", "v4", "v5")

GRID_TICKS_480 = 10
MAX_SHIFT_480 = 1920
MAX_SHIFT_UNITS = MAX_SHIFT_480 // GRID_TICKS_480

SPECIALS = ("PAD", "BOS", "EOS", "UNK")
PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3

_TOKEN_RE = re.compile(r"^([A-Z_]+)<(-?\d+(?:,-?\d+)*)>$")

# encodings that carry timing on the input side
_TIMED = ("v3", "v4", "v5")
# encodings that spell a position as STRING + FRET instead of TAB
_SPLIT_POSITION = ("v1", "v4")


@dataclass(frozen=True)
class TokenSequence:
    encoding: str
    side: str  # "input" or "target"
    tokens: tuple[str, ...]

    def text(self) -> str:
        return " ".join(self.tokens)

    @classmethod
    def from_text(cls, line: str, encoding: str, side: str) -> "TokenSequence":
        return cls(encoding, side, tuple(line.split()))

    def __len__(self) -> int:
        return len(self.tokens)


def _check_encoding(encoding: str):
    if encoding not in ENCODINGS:
        raise TokenError(f"unknown encoding {encoding!r}")


def grid_ticks(ppq: int) -> int:
    return max(1, round(GRID_TICKS_480 * ppq / 480))


def max_shift_ticks(ppq: int) -> int:
    return MAX_SHIFT_UNITS * grid_ticks(ppq)


def _snap(tick: int, grid: int) -> int:
    return (tick + grid // 2) // grid * grid


def parse_token(token: str) -> tuple[str, tuple[int, ...]]:
    """Split a token into its kind and integer values.

    Specials parse to (name, ()). Raises TokenError for anything outside
    the grammar.
    """
    if token in SPECIALS:
        return token, ()
    m = _TOKEN_RE.match(token)
    if not m:
        raise TokenError(f"malformed token {token!r}")
    kind = m.group(1)
    values = tuple(int(v) for v in m.group(2).split(","))
    arity = {
        "NOTE_ON": 1,
        "NOTE_OFF": 1,
        "TIME_SHIFT": 1,
        "STRING": 1,
        "FRET": 1,
        "CAPO": 1,
        "TAB": 2,
        "TUNING": 6,
    }.get(kind)
    if arity is None:
        raise TokenError(f"unknown token kind {kind!r}")
    if len(values) != arity:
        raise TokenError(f"token {token!r} carries {len(values)} values, wants {arity}")
    return kind, values


def _shift_tokens(delta: int, cap: int) -> list[str]:
    out = []
    while delta > cap:
        out.append(f"TIME_SHIFT<{cap}>")
        delta -= cap
    if delta > 0:
        out.append(f"TIME_SHIFT<{delta}>")
    return out


def _position_tokens(pos: Position, encoding: str) -> list[str]:
    if encoding in _SPLIT_POSITION:
        return [f"STRING<{pos.string}>", f"FRET<{pos.fret}>"]
    return [f"TAB<{pos.string},{pos.fret}>"]


def conditioning_tokens(config: GuitarConfig) -> list[str]:
    pitches = ",".join(str(p) for p in config.tuning.open_pitches)
    return [f"CAPO<{config.capo}>", f"TUNING<{pitches}>"]


def encode(
    piece: Piece, encoding: str, conditioned: bool = False
) -> tuple[TokenSequence, TokenSequence]:
    """Encode an annotated piece into an (input, target) sequence pair."""
    for i, note in enumerate(piece.notes):
        if note.position is None:
            raise EncodingError(f"note {i} has no position; targets need ground truth")
    return _encode_streams(piece, encoding, conditioned, with_target=True)


def encode_input_only(
    piece: Piece, encoding: str, conditioned: bool = False
) -> TokenSequence:
    """Encode just the input side; positions are not required."""
    inp, _ = _encode_streams(piece, encoding, conditioned, with_target=False)
    return inp


def _encode_streams(
    piece: Piece, encoding: str, conditioned: bool, with_target: bool
) -> tuple[TokenSequence, TokenSequence]:
    _check_encoding(encoding)
    grid = grid_ticks(piece.ppq)
    cap = max_shift_ticks(piece.ppq)
    inp: list[str] = []
    tgt: list[str] = []

    if encoding in _TIMED:
        events = []  # (time, kind, note_index); kind 0 = off, 1 = on
        final_off = 0
        for k, note in enumerate(piece.notes):
            start = _snap(note.start, grid)
            end = _snap(note.end, grid)
            if end <= start:
                raise EncodingError(f"note {k} has zero length on the {grid}-tick grid")
            events.append((start, 1, k))
            events.append((end, 0, k))
            final_off = max(final_off, end)
        events.sort()
        cur = 0
        for time, kind, k in events:
            if encoding == "v5" and kind == 0:
                continue
            if time > cur:
                shifts = _shift_tokens(time - cur, cap)
                inp.extend(shifts)
                tgt.extend(shifts)
                cur = time
            note = piece.notes[k]
            if kind == 1:
                inp.append(f"NOTE_ON<{note.pitch}>")
                if with_target:
                    tgt.extend(_position_tokens(note.position, encoding))
            else:
                inp.append(f"NOTE_OFF<{note.pitch}>")
        if encoding == "v5" and final_off > cur:
            shifts = _shift_tokens(final_off - cur, cap)
            inp.extend(shifts)
            tgt.extend(shifts)
    else:
        for note in piece.notes:
            inp.append(f"NOTE_ON<{note.pitch}>")
            if with_target:
                tgt.extend(_position_tokens(note.position, encoding))

    if conditioned:
        inp = conditioning_tokens(piece.config) + inp
    return (
        TokenSequence(encoding, "input", tuple(inp)),
        TokenSequence(encoding, "target", tuple(tgt)),
    )


def _conditioning_prefix_len(tokens: tuple[str, ...]) -> int:
    n = 0
    for tok in tokens:
        kind, _ = parse_token(tok)
        if kind in ("CAPO", "TUNING"):
            n += 1
        else:
            break
    return n


def _apply_conditioning(tokens: tuple[str, ...], config: GuitarConfig) -> GuitarConfig:
    """Fold leading CAPO/TUNING tokens into the configuration."""
    capo = config.capo
    tuning = config.tuning
    for tok in tokens:
        kind, values = parse_token(tok)
        if kind == "CAPO":
            capo = values[0]
        elif kind == "TUNING":
            pitches = tuple(values)
            tuning = next(
                (t for t in TUNINGS.values() if t.open_pitches == pitches),
                Tuning("custom", pitches),
            )
        else:
            break
    if capo == config.capo and tuning == config.tuning:
        return config
    return GuitarConfig(tuning, capo, config.num_frets, config.num_strings)


def _group_starts(body: tuple[str, ...], encoding: str, base: int) -> list[int]:
    """Indices where note groups begin; a group is never split internally."""
    starts: list[int] = []
    if encoding in ("v1", "v2"):
        return [base + i for i in range(len(body))]
    open_count = 0
    prev_kind = None
    for i, tok in enumerate(body):
        kind, _ = parse_token(tok)
        if kind == "NOTE_ON":
            if encoding == "v5":
                if prev_kind != "NOTE_ON":
                    starts.append(base + i)
            else:
                if open_count == 0:
                    starts.append(base + i)
                open_count += 1
        elif kind == "NOTE_OFF":
            open_count -= 1
            if open_count < 0:
                raise TokenError("NOTE_OFF without matching NOTE_ON", base + i)
        prev_kind = kind
    return starts


def _target_cost(kind: str, encoding: str) -> int:
    if kind == "NOTE_ON":
        return 2 if encoding in _SPLIT_POSITION else 1
    if kind == "TIME_SHIFT" and encoding in _TIMED:
        return 1
    return 0


def group_spans(
    input_seq: TokenSequence, target_seq: TokenSequence | None = None
) -> tuple[int, list[tuple[int, int, int, int]]]:
    """Decompose an encoded pair into note groups.

    Returns (conditioning_len, spans) where each span is
    (input_start, input_end, target_start, target_end), half open. Leading
    TIME_SHIFTs attach to the first group, trailing ones to the last.
    Target spans are derived from the input alone; when ``target_seq`` is
    given its length is checked against them.
    """
    encoding = input_seq.encoding
    _check_encoding(encoding)
    cond = _conditioning_prefix_len(input_seq.tokens)
    body = input_seq.tokens[cond:]
    starts = _group_starts(body, encoding, cond)
    if not starts:
        if body:
            starts = [cond]
        else:
            return cond, []
    starts[0] = cond
    bounds = starts + [len(input_seq.tokens)]

    spans = []
    t_cursor = 0
    for a, b in zip(bounds, bounds[1:]):
        t_start = t_cursor
        for tok in input_seq.tokens[a:b]:
            kind, _ = parse_token(tok)
            t_cursor += _target_cost(kind, encoding)
        spans.append((a, b, t_start, t_cursor))
    if target_seq is not None and t_cursor != len(target_seq.tokens):
        raise AlignmentError(t_cursor, len(target_seq.tokens))
    return cond, spans


def split_sequences(
    input_seq: TokenSequence, target_seq: TokenSequence, max_len: int = 512
) -> list[tuple[TokenSequence, TokenSequence]]:
    """Split an encoded pair into chunks of at most ``max_len`` input tokens.

    Split points fall only at note-group boundaries. Conditioning tokens
    are re-prepended to every chunk's input side.
    """
    cond, spans = group_spans(input_seq, target_seq)
    prefix = list(input_seq.tokens[:cond])
    if not spans:
        return []

    chunks: list[tuple[TokenSequence, TokenSequence]] = []
    cur_in: list[str] = list(prefix)
    cur_tgt: list[str] = []

    def flush():
        if len(cur_in) > len(prefix):
            chunks.append(
                (
                    TokenSequence(input_seq.encoding, "input", tuple(cur_in)),
                    TokenSequence(input_seq.encoding, "target", tuple(cur_tgt)),
                )
            )

    for a, b, ta, tb in spans:
        size = b - a
        if cond + size > max_len:
            raise TokenError(
                f"note group of {size} tokens exceeds max sequence length {max_len}"
            )
        if len(cur_in) + size > max_len:
            flush()
            cur_in = list(prefix)
            cur_tgt = []
        cur_in.extend(input_seq.tokens[a:b])
        cur_tgt.extend(target_seq.tokens[ta:tb])
    flush()
    return chunks


def _parse_target_positions(target_seq: TokenSequence) -> list[Position | None]:
    """Extract one position slot per note from a target sequence.

    UNK counts as an empty slot so that sanitised model output stays
    aligned; TIME_SHIFT tokens are ignored.
    """
    encoding = target_seq.encoding
    slots: list[Position | None] = []
    tokens = target_seq.tokens
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        kind, values = parse_token(tok)
        if kind == "TIME_SHIFT":
            i += 1
        elif kind == "UNK":
            slots.append(None)
            i += 1
        elif kind == "TAB" and encoding not in _SPLIT_POSITION:
            slots.append(Position(values[0], values[1]))
            i += 1
        elif kind == "STRING" and encoding in _SPLIT_POSITION:
            if i + 1 < len(tokens):
                nkind, nvalues = parse_token(tokens[i + 1])
                if nkind == "FRET":
                    slots.append(Position(values[0], nvalues[0]))
                    i += 2
                    continue
                if nkind == "UNK":
                    slots.append(None)
                    i += 2
                    continue
            slots.append(None)
            i += 1
        else:
            raise TokenError(f"unexpected target token {tok!r}", i)
    return slots


def decode(
    input_seq: TokenSequence,
    target_seq: TokenSequence | None,
    config: GuitarConfig,
    ppq: int = 480,
) -> Piece:
    """Reconstruct a piece from an input sequence and optional target.

    Timing and pitch always come from the input side; the target only
    supplies positions, matched positionally to NOTE_ON tokens. A target
    with the wrong number of position slots raises AlignmentError. Leading
    CAPO/TUNING tokens override the passed configuration.

    Encodings without note-offs give each note a synthetic duration: v1/v2
    notes last one quarter note each in sequence; v5 notes end at the next
    strictly later note-on, or at the final timestamp. Dangling note-ons
    are closed at the final timestamp.
    """
    encoding = input_seq.encoding
    _check_encoding(encoding)
    cond = _conditioning_prefix_len(input_seq.tokens)
    config = _apply_conditioning(input_seq.tokens[:cond], config)
    body = input_seq.tokens[cond:]

    starts: list[int] = []
    ends: list[int] = []
    pitches: list[int] = []
    open_by_pitch: dict[int, list[int]] = {}
    all_open: list[int] = []
    now = 0

    if encoding in ("v1", "v2"):
        for i, tok in enumerate(body):
            kind, values = parse_token(tok)
            if kind != "NOTE_ON":
                raise TokenError(f"unexpected input token {tok!r}", cond + i)
            k = len(pitches)
            pitches.append(values[0])
            starts.append(k * ppq)
            ends.append((k + 1) * ppq)
    else:
        for i, tok in enumerate(body):
            kind, values = parse_token(tok)
            if kind == "NOTE_ON":
                if encoding == "v5":
                    # earlier notes sustain until the next strictly later onset
                    still = [k for k in all_open if starts[k] >= now]
                    for k in all_open:
                        if starts[k] < now:
                            ends[k] = now
                    all_open = still
                k = len(pitches)
                pitches.append(values[0])
                starts.append(now)
                ends.append(-1)
                open_by_pitch.setdefault(values[0], []).append(k)
                all_open.append(k)
            elif kind == "TIME_SHIFT":
                now += values[0]
            elif kind == "NOTE_OFF":
                if encoding == "v5":
                    raise TokenError("NOTE_OFF is not part of v5 input", cond + i)
                queue = open_by_pitch.get(values[0], [])
                if not queue:
                    raise TokenError(
                        f"NOTE_OFF<{values[0]}> with no open note", cond + i
                    )
                k = queue.pop(0)
                ends[k] = now
            else:
                raise TokenError(f"unexpected input token {tok!r}", cond + i)
        for k in range(len(pitches)):
            if ends[k] < 0:
                ends[k] = now
        for k in range(len(pitches)):
            if ends[k] <= starts[k]:
                raise TokenError(f"decoded note {k} has zero length")

    slots: list[Position | None]
    if target_seq is None:
        slots = [None] * len(pitches)
    else:
        slots = _parse_target_positions(target_seq)
        if len(slots) != len(pitches):
            raise AlignmentError(len(pitches), len(slots))

    notes = [
        NoteEvent(starts[k], ends[k], pitches[k], slots[k]) for k in range(len(pitches))
    ]
    return Piece.build(config, ppq, notes, check_positions=False)


class Vocabulary:
    """Token table with reserved specials at ids 0..3.

    Non-special tokens are sorted lexicographically, so the id assignment
    is a pure function of the corpus.
    """

    def __init__(self, id_to_token: tuple[str, ...]):
        self.id_to_token = id_to_token
        self.token_to_id = {tok: i for i, tok in enumerate(id_to_token)}

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.id_to_token == other.id_to_token

    @classmethod
    def build(cls, sequences) -> "Vocabulary":
        seen: set[str] = set()
        for seq in sequences:
            tokens = seq.tokens if isinstance(seq, TokenSequence) else seq
            seen.update(tokens)
        ordered = SPECIALS + tuple(sorted(seen - set(SPECIALS)))
        return cls(ordered)

    def to_ids(self, tokens) -> list[int]:
        if isinstance(tokens, TokenSequence):
            tokens = tokens.tokens
        return [self.token_to_id.get(tok, UNK_ID) for tok in tokens]

    def to_tokens(self, ids) -> list[str]:
        out = []
        for i in ids:
            if not 0 <= i < len(self.id_to_token):
                raise TokenError(f"id {i} outside vocabulary of size {len(self)}")
            out.append(self.id_to_token[i])
        return out

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for tok in self.id_to_token:
                fh.write(tok + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            tokens = tuple(line.rstrip("\n") for line in fh if line.strip())
        if tokens[:4] != SPECIALS:
            raise TokenError("vocabulary file must start with PAD, BOS, EOS, UNK")
        return cls(tokens)
