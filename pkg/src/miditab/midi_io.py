"""Standard MIDI file parsing and the .tabnotes.jsonl interchange format.

The MIDI side is a minimal type 0/1 reader: variable-length deltas,
running status, note-on/note-off (velocity 0 counts as note-off), program
changes and track names. Tracks are kept when they either carry one of the
configured program numbers or their name contains a guitar-ish keyword.
Tempo and meter are ignored; everything stays in the tick domain.

The interchange format is one JSON object per line: a header
{ppq, tuning, capo, source_id} followed by note records
{start, end, pitch} with optional string/fret (both or neither).
"""

import json

from .core import (
    GuitarConfig,
    NoteEvent,
    Piece,
    Position,
    Tuning,
    TUNINGS,
    require_notes,
)
from .errors import EmptyPieceError, InterchangeError, MidiParseError

# wire-level program numbers (0-based); 24/25 = GM 25/26, nylon and steel guitar
DEFAULT_PROGRAMS = frozenset({24, 25})

DEFAULT_KEYWORDS = (
    "guitar",
    "guitarra",
    "gitarre",
    "guitare",
    "violão",
    "acoustic",
)


def load_keywords(path) -> tuple[str, ...]:
    """Read one keyword per line; blank lines and # comments are skipped."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word and not word.startswith("#"):
                out.append(word)
    return tuple(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def fail(self, message: str):
        raise MidiParseError(message, self.pos)

    def read(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            self.fail(f"unexpected end of file reading {n} bytes")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.read(1)[0]

    def u16(self) -> int:
        b = self.read(2)
        return (b[0] << 8) | b[1]

    def u32(self) -> int:
        b = self.read(4)
        return (b[0] << 24) | (b[1] << 16) | (b[2] << 8) | b[3]

    def varlen(self) -> int:
        value = 0
        for _ in range(4):
            byte = self.u8()
            value = (value << 7) | (byte & 0x7F)
            if not byte & 0x80:
                return value
        self.fail("variable-length quantity longer than 4 bytes")


class _Track:
    def __init__(self):
        self.name = ""
        self.programs: set[int] = set()
        self.events: list[tuple[int, int, int]] = []  # (tick, kind, pitch); kind 0=off 1=on

    def passes(self, programs: frozenset[int], keywords: tuple[str, ...]) -> bool:
        if self.programs & programs:
            return True
        name = self.name.casefold()
        return any(kw.casefold() in name for kw in keywords)


def _decode_text(raw: bytes) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        return raw.decode("latin-1")


def _parse_track(r: _Reader, length: int) -> _Track:
    track = _Track()
    end = r.pos + length
    tick = 0
    status = None
    while r.pos < end:
        tick += r.varlen()
        byte = r.u8()
        if byte == 0xFF:
            meta = r.u8()
            size = r.varlen()
            payload = r.read(size)
            if meta == 0x03:
                track.name = _decode_text(payload)
            if meta == 0x2F:
                break
            status = None
            continue
        if byte in (0xF0, 0xF7):
            size = r.varlen()
            r.read(size)
            status = None
            continue
        if byte & 0x80:
            status = byte
            data1 = r.u8()
        else:
            if status is None:
                r.fail(f"data byte 0x{byte:02x} with no running status")
            data1 = byte
        kind = status & 0xF0
        if kind in (0x80, 0x90, 0xA0, 0xB0, 0xE0):
            data2 = r.u8()
            if kind == 0x90:
                track.events.append((tick, 1 if data2 > 0 else 0, data1))
            elif kind == 0x80:
                track.events.append((tick, 0, data1))
        elif kind == 0xC0:
            track.programs.add(data1)
        elif kind == 0xD0:
            pass
        else:
            r.fail(f"unexpected status byte 0x{status:02x}")
    if r.pos > end:
        r.fail("event ran past declared track length")
    r.pos = end
    return track


def parse_midi(
    data: bytes,
    programs: frozenset[int] = DEFAULT_PROGRAMS,
    keywords: tuple[str, ...] = DEFAULT_KEYWORDS,
    source_id: str = "",
) -> Piece:
    """Parse SMF bytes into an unannotated piece in standard tuning.

    Raises MidiParseError (with a byte offset) for malformed files and
    EmptyPieceError when no track passes the instrument filter or no notes
    survive.
    """
    r = _Reader(data)
    if r.read(4) != b"MThd":
        r.pos = 0
        r.fail("missing MThd header")
    if r.u32() != 6:
        r.fail("unexpected MThd length")
    fmt = r.u16()
    if fmt not in (0, 1):
        r.fail(f"unsupported SMF type {fmt}")
    ntrks = r.u16()
    division = r.u16()
    if division & 0x8000:
        r.fail("SMPTE time division is not supported")
    if division == 0:
        r.fail("zero ticks per quarter")

    tracks = []
    for _ in range(ntrks):
        if r.read(4) != b"MTrk":
            r.pos -= 4
            r.fail("missing MTrk chunk")
        length = r.u32()
        tracks.append(_parse_track(r, length))

    kept = [t for t in tracks if t.passes(programs, keywords)]
    if not kept:
        raise EmptyPieceError(f"no track passes the instrument filter in {source_id or '<midi>'}")

    merged = []
    for t in kept:
        merged.extend(t.events)
    # canonical order: offs before ons within a tick, then pitch; index keeps FIFO stable
    merged = sorted(
        (e for e in merged),
        key=lambda e: (e[0], e[1], e[2]),
    )

    notes = []
    open_by_pitch: dict[int, list[int]] = {}
    final_tick = merged[-1][0] if merged else 0
    for tick, kind, pitch in merged:
        if kind == 1:
            open_by_pitch.setdefault(pitch, []).append(tick)
        else:
            queue = open_by_pitch.get(pitch)
            if queue:
                start = queue.pop(0)
                if tick > start:
                    notes.append(NoteEvent(start, tick, pitch))
    for pitch, queue in open_by_pitch.items():
        for start in queue:
            if final_tick > start:
                notes.append(NoteEvent(start, final_tick, pitch))

    piece = Piece.build(GuitarConfig(), division, notes, source_id=source_id)
    return require_notes(piece)


def _tuning_from_pitches(pitches: tuple[int, ...]) -> Tuning:
    for t in TUNINGS.values():
        if t.open_pitches == pitches:
            return t
    return Tuning("custom", pitches)


def write_interchange(piece: Piece, path):
    """Write a piece as .tabnotes.jsonl; byte-stable for identical pieces."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "ppq": piece.ppq,
            "tuning": list(piece.config.tuning.open_pitches),
            "capo": piece.config.capo,
            "source_id": piece.source_id,
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for n in piece.notes:
            rec = {"start": n.start, "end": n.end, "pitch": n.pitch}
            if n.position is not None:
                rec["string"] = n.position.string
                rec["fret"] = n.position.fret
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_interchange(path) -> Piece:
    """Read a .tabnotes.jsonl file; errors carry 1-based line numbers."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise InterchangeError("empty interchange file", 1)

    def parse_line(line_no: int, text: str) -> dict:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InterchangeError(f"bad JSON: {exc.msg}", line_no) from exc
        if not isinstance(obj, dict):
            raise InterchangeError("expected a JSON object", line_no)
        return obj

    header = parse_line(1, lines[0])
    for key in ("ppq", "tuning", "capo", "source_id"):
        if key not in header:
            raise InterchangeError(f"header missing {key!r}", 1)
    tuning_pitches = header["tuning"]
    if (
        not isinstance(tuning_pitches, list)
        or len(tuning_pitches) != 6
        or not all(isinstance(p, int) for p in tuning_pitches)
    ):
        raise InterchangeError("tuning must be a list of 6 MIDI pitches", 1)
    if not isinstance(header["ppq"], int) or header["ppq"] <= 0:
        raise InterchangeError("ppq must be a positive integer", 1)
    if not isinstance(header["capo"], int):
        raise InterchangeError("capo must be an integer", 1)

    config = GuitarConfig(
        tuning=_tuning_from_pitches(tuple(tuning_pitches)), capo=header["capo"]
    )
    notes = []
    for line_no, text in enumerate(lines[1:], start=2):
        if not text.strip():
            continue
        rec = parse_line(line_no, text)
        for key in ("start", "end", "pitch"):
            if key not in rec or not isinstance(rec[key], int):
                raise InterchangeError(f"note record needs integer {key!r}", line_no)
        has_string = "string" in rec
        has_fret = "fret" in rec
        if has_string != has_fret:
            raise InterchangeError("string and fret must appear together", line_no)
        position = None
        if has_string:
            if not isinstance(rec["string"], int) or not isinstance(rec["fret"], int):
                raise InterchangeError("string and fret must be integers", line_no)
            position = Position(rec["string"], rec["fret"])
        try:
            notes.append(NoteEvent(rec["start"], rec["end"], rec["pitch"], position))
        except ValueError as exc:
            raise InterchangeError(str(exc), line_no) from exc

    return Piece.build(
        config, header["ppq"], notes, source_id=header["source_id"], check_positions=False
    )
