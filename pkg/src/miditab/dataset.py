"""Dataset assembly: dedup, stratified splits, augmentation, token emission.

Everything here is deterministic under a seed: strata are visited in
sorted key order, pieces are sorted by source id before shuffling, and
the emitted manifest carries no timestamps, so two runs with the same
inputs produce byte-identical files.
"""

import json
import logging
import random
import re
from dataclasses import dataclass
from pathlib import Path

from .core import (
    GuitarConfig,
    NoteEvent,
    Piece,
    STANDARD,
    TUNINGS,
    Tuning,
)
from .encodings import Vocabulary, encode, split_sequences
from .errors import InvalidPositionError

log = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "valid", "test")

_EXTENSION_RE = re.compile(r"\.[a-z0-9]{1,5}$")


def normalize_source_id(source_id: str) -> str:
    """Lowercase, collapse whitespace, strip a trailing file extension."""
    lowered = " ".join(source_id.lower().split())
    return _EXTENSION_RE.sub("", lowered)


def dedup(pieces) -> list[Piece]:
    """Drop pieces whose normalized source id was already seen; first wins."""
    seen: set[str] = set()
    out = []
    for piece in pieces:
        key = normalize_source_id(piece.source_id)
        if key in seen:
            continue
        seen.add(key)
        out.append(piece)
    return out


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.8
    valid: float = 0.1
    test: float = 0.1
    seed: int = 0

    def __post_init__(self):
        total = self.train + self.valid + self.test
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions sum to {total}, expected 1")
        if min(self.train, self.valid, self.test) < 0:
            raise ValueError("split fractions must be non-negative")

    @property
    def fractions(self) -> dict[str, float]:
        return {"train": self.train, "valid": self.valid, "test": self.test}


def _stratum_counts(n: int, fractions: dict[str, float]) -> dict[str, int]:
    """Largest-remainder apportionment; ties resolve in split order."""
    floors = {}
    remainders = []
    for name in SPLIT_NAMES:
        exact = n * fractions[name]
        floors[name] = int(exact)
        remainders.append((-(exact - int(exact)), SPLIT_NAMES.index(name), name))
    leftover = n - sum(floors.values())
    for _, _, name in sorted(remainders):
        if leftover <= 0:
            break
        floors[name] += 1
        leftover -= 1
    return floors


def split(pieces, spec: SplitSpec = SplitSpec()) -> dict[str, list[Piece]]:
    """Deterministic stratified split by (tuning name, capo).

    A stratum with fewer pieces than active splits goes wholly to train.
    """
    strata: dict[tuple[str, int], list[Piece]] = {}
    for piece in pieces:
        key = (piece.config.tuning.name, piece.config.capo)
        strata.setdefault(key, []).append(piece)

    active = sum(1 for f in spec.fractions.values() if f > 0)
    rng = random.Random(spec.seed)
    out: dict[str, list[Piece]] = {name: [] for name in SPLIT_NAMES}
    for key in sorted(strata):
        members = sorted(
            strata[key], key=lambda p: (normalize_source_id(p.source_id), p.source_id)
        )
        if len(members) < active:
            log.warning(
                "stratum %s has %d piece(s); assigning all to train", key, len(members)
            )
            out["train"].extend(members)
            continue
        rng.shuffle(members)
        counts = _stratum_counts(len(members), spec.fractions)
        a = counts["train"]
        b = a + counts["valid"]
        out["train"].extend(members[:a])
        out["valid"].extend(members[a:b])
        out["test"].extend(members[b:])
    return out


def augment_capo(piece: Piece, capo: int) -> Piece:
    """Move a standard-tuning capo-0 piece to ``capo``.

    Positions stay fixed; every pitch rises by ``capo`` semitones. Rejects
    pieces carrying a fret beyond the shortened neck.
    """
    if piece.config.tuning != STANDARD or piece.config.capo != 0:
        raise ValueError("capo augmentation expects standard tuning at capo 0")
    config = GuitarConfig(
        STANDARD, capo, piece.config.num_frets, piece.config.num_strings
    )
    notes = []
    for i, n in enumerate(piece.notes):
        if n.position is not None and n.position.fret > config.max_fret:
            raise InvalidPositionError(
                n.position.string,
                n.position.fret,
                f"note {i} unreachable with capo {capo}",
            )
        notes.append(NoteEvent(n.start, n.end, n.pitch + capo, n.position))
    return Piece.build(config, piece.ppq, notes, piece.source_id)


def capo_expand(pieces, capos=range(8)) -> list[Piece]:
    """Cross standard-tuning capo-0 pieces with every applicable capo.

    Pieces in other tunings or with a capo already set pass through
    unchanged; unreachable capo values are skipped.
    """
    out = []
    for piece in pieces:
        if piece.config.tuning != STANDARD or piece.config.capo != 0:
            out.append(piece)
            continue
        for capo in capos:
            try:
                shifted = augment_capo(piece, capo)
            except InvalidPositionError:
                continue
            shifted = _tag(shifted, f"::capo{capo}") if capo else shifted
            out.append(shifted)
    return out


def rotate_test_capos(pieces, n_capos: int = 8) -> list[Piece]:
    """Assign one capo per test piece: sort by id, capo = index mod n.

    Inapplicable capo values step forward to the next one that fits; a
    piece playable at no capo stays at capo 0 unchanged.
    """
    ordered = sorted(
        pieces, key=lambda p: (normalize_source_id(p.source_id), p.source_id)
    )
    out = []
    for i, piece in enumerate(ordered):
        if piece.config.tuning != STANDARD or piece.config.capo != 0:
            out.append(piece)
            continue
        placed = None
        for step in range(n_capos):
            capo = (i + step) % n_capos
            try:
                placed = augment_capo(piece, capo)
                break
            except InvalidPositionError:
                continue
        out.append(placed if placed is not None else piece)
    return out


TUNING_CHOICES = tuple(TUNINGS.values())


def augment_tuning(
    piece: Piece, rng: random.Random, tunings: tuple[Tuning, ...] = TUNING_CHOICES
) -> Piece:
    """Re-tune a standard-tuning piece to a randomly drawn tuning.

    Positions stay fixed; each note's pitch moves by its string's
    open-pitch delta. Standard tuning is one of the draws, so some pieces
    come back unchanged.
    """
    if piece.config.tuning != STANDARD:
        raise ValueError("tuning augmentation expects standard tuning")
    tuning = rng.choice(tunings)
    if tuning == STANDARD:
        return piece
    config = GuitarConfig(
        tuning, piece.config.capo, piece.config.num_frets, piece.config.num_strings
    )
    notes = []
    for i, n in enumerate(piece.notes):
        if n.position is None:
            raise ValueError(f"note {i} has no position; tuning shift needs strings")
        delta = tuning.open_pitch(n.position.string) - STANDARD.open_pitch(
            n.position.string
        )
        notes.append(NoteEvent(n.start, n.end, n.pitch + delta, n.position))
    return Piece.build(config, piece.ppq, notes, piece.source_id)


def _tag(piece: Piece, suffix: str) -> Piece:
    return Piece(piece.config, piece.ppq, piece.notes, piece.source_id + suffix)


def emit_token_dataset(
    splits: dict[str, list[Piece]],
    encoding: str,
    conditioned: bool,
    out_dir,
    max_len: int = 512,
    meta: dict | None = None,
) -> dict:
    """Write <split>.src/.tgt, a shared vocab.txt and manifest.json.

    The vocabulary is built over every emitted sequence so ids are a pure
    function of the corpus. Returns the manifest dict.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    all_seqs = []
    manifest: dict = {
        "encoding": encoding,
        "conditioned": conditioned,
        "max_len": max_len,
        "splits": {},
    }
    if meta:
        manifest.update(meta)

    per_split_lines: dict[str, tuple[list[str], list[str]]] = {}
    for name in SPLIT_NAMES:
        src_lines: list[str] = []
        tgt_lines: list[str] = []
        for piece in splits.get(name, []):
            inp, tgt = encode(piece, encoding, conditioned)
            for chunk_in, chunk_tgt in split_sequences(inp, tgt, max_len):
                src_lines.append(chunk_in.text())
                tgt_lines.append(chunk_tgt.text())
                all_seqs.append(chunk_in)
                all_seqs.append(chunk_tgt)
        per_split_lines[name] = (src_lines, tgt_lines)
        manifest["splits"][name] = {
            "pieces": len(splits.get(name, [])),
            "sequences": len(src_lines),
        }

    vocab = Vocabulary.build(all_seqs)
    manifest["vocab_size"] = len(vocab)

    for name in SPLIT_NAMES:
        src_lines, tgt_lines = per_split_lines[name]
        (out / f"{name}.src").write_text(
            "".join(line + "\n" for line in src_lines), encoding="utf-8"
        )
        (out / f"{name}.tgt").write_text(
            "".join(line + "\n" for line in tgt_lines), encoding="utf-8"
        )
    vocab.save(out / "vocab.txt")
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest
