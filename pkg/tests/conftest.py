"""Shared test helpers: piece builders, random generators, SMF bytes."""

import random

from miditab.core import GuitarConfig, NoteEvent, Piece, Position, STANDARD


def note(start, end, pitch, string=None, fret=None):
    pos = Position(string, fret) if string is not None else None
    return NoteEvent(start, end, pitch, pos)


def make_piece(notes, capo=0, tuning=STANDARD, ppq=480, source_id="", check=True):
    config = GuitarConfig(tuning=tuning, capo=capo)
    return Piece.build(config, ppq, notes, source_id, check_positions=check)


def random_annotated_piece(
    rng: random.Random, max_notes=64, max_voices=4, capo=0, fret_ceiling=None
):
    """Playable piece on a 10-tick grid: overlapping notes sit on distinct
    strings and never share a pitch, so event streams are unambiguous.
    Fretted notes of one onset stay within a 4-fret window, so every chord
    has at least one feasible fingering. ``fret_ceiling`` caps the highest
    fret used (default: the fretboard limit)."""
    config = GuitarConfig(capo=capo)
    ceiling = config.max_fret if fret_ceiling is None else fret_ceiling
    target = rng.randint(1, max_notes)
    notes = []
    active = []  # (end, string, pitch)
    t = rng.randrange(0, 4) * 10
    while len(notes) < target:
        active = [a for a in active if a[0] > t]
        busy_strings = {s for _, s, _ in active}
        free = [s for s in range(1, 7) if s not in busy_strings]
        if not free:
            t += 10
            continue
        voices = min(rng.randint(1, max_voices), len(free), target - len(notes))
        strings = rng.sample(free, voices)
        taken_pitches = {p for _, _, p in active}
        base = rng.randint(1, ceiling - 4)
        for s in strings:
            fret = 0 if rng.random() < 0.2 else rng.randint(base, base + 4)
            pitch = config.tuning.open_pitch(s) + capo + fret
            if pitch in taken_pitches:
                continue
            dur = rng.randint(1, 24) * 10
            notes.append(NoteEvent(t, t + dur, pitch, Position(s, fret)))
            active.append((t + dur, s, pitch))
            taken_pitches.add(pitch)
        t += rng.randint(1, 16) * 10
    return Piece.build(config, 480, notes)


def random_mono_piece(rng: random.Random, length, lo=40, hi=88, ppq=480):
    """Unannotated monophonic piece, quarter-note rhythm."""
    notes = [
        NoteEvent(i * ppq, (i + 1) * ppq, rng.randint(lo, hi)) for i in range(length)
    ]
    return Piece.build(GuitarConfig(), ppq, notes)


# --- minimal SMF writer for fixtures ---


def vlq(value: int) -> bytes:
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append(0x80 | (value & 0x7F))
        value >>= 7
    return bytes(reversed(out))


def meta(delta, kind, payload: bytes) -> bytes:
    return vlq(delta) + bytes([0xFF, kind]) + vlq(len(payload)) + payload


def track_bytes(
    notes=(), name=None, program=None, channel=0, extra=b"", end_delta=0
) -> bytes:
    """notes: iterable of (start, end, pitch[, velocity]) in absolute ticks."""
    events = []  # (tick, order, bytes)
    if name is not None:
        events.append((0, 0, bytes([0xFF, 0x03]) + vlq(len(name)) + name.encode()))
    if program is not None:
        events.append((0, 1, bytes([0xC0 | channel, program])))
    for spec in notes:
        start, end, pitch = spec[:3]
        vel = spec[3] if len(spec) > 3 else 96
        events.append((start, 2, bytes([0x90 | channel, pitch, vel])))
        events.append((end, 2, bytes([0x80 | channel, pitch, 0])))
    events.sort(key=lambda e: (e[0], e[1]))
    body = b""
    tick = 0
    for t, _, ev in events:
        body += vlq(t - tick) + ev
        tick = t
    body += extra
    body += meta(end_delta, 0x2F, b"")
    return b"MTrk" + len(body).to_bytes(4, "big") + body


def smf(tracks, ppq=480, fmt=1) -> bytes:
    header = (
        b"MThd"
        + (6).to_bytes(4, "big")
        + fmt.to_bytes(2, "big")
        + len(tracks).to_bytes(2, "big")
        + ppq.to_bytes(2, "big")
    )
    return header + b"".join(tracks)
