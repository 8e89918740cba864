"""Command-line interface.

Exit codes: 0 on success, 1 on domain errors (unplayable pitch, infeasible
chord, empty piece), 2 on I/O or format errors. All subcommands are
deterministic: same inputs and seeds give byte-identical outputs.
"""

import argparse
import dataclasses
import json
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .arranger import (
    arrange_baseline,
    arrange_optimal,
    postprocess_neighbor_search,
    postprocess_overlap,
)
from .core import GuitarConfig, TUNINGS, rescale_ppq
from .dataset import (
    SplitSpec,
    augment_tuning,
    capo_expand,
    dedup,
    emit_token_dataset,
    rotate_test_capos,
    split,
)
from .difficulty import DifficultyParams, piece_difficulty
from .encodings import TokenSequence, Vocabulary, decode, encode, split_sequences
from .errors import DomainError, FormatError
from .evaluation import score_piece, write_report
from .midi_io import (
    DEFAULT_KEYWORDS,
    DEFAULT_PROGRAMS,
    load_keywords,
    parse_midi,
    read_interchange,
    write_interchange,
)

INTERCHANGE_SUFFIX = ".tabnotes.jsonl"


def _difficulty_params(args) -> DifficultyParams:
    alpha = getattr(args, "alpha", None)
    if alpha is None:
        return DifficultyParams()
    return DifficultyParams(locality_alpha=alpha)


def _config_override(piece, args):
    tuning_name = getattr(args, "tuning", None)
    capo = getattr(args, "capo", None)
    if tuning_name is None and capo is None:
        return piece.config
    base = piece.config
    tuning = TUNINGS[tuning_name] if tuning_name is not None else base.tuning
    return GuitarConfig(
        tuning,
        capo if capo is not None else base.capo,
        base.num_frets,
        base.num_strings,
    )


def _interchange_stem(path: Path) -> str:
    name = path.name
    if name.endswith(INTERCHANGE_SUFFIX):
        return name[: -len(INTERCHANGE_SUFFIX)]
    return path.stem


def cmd_ingest(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    programs = frozenset(p - 1 for p in args.filter_programs)
    keywords = load_keywords(args.keywords) if args.keywords else DEFAULT_KEYWORDS
    for path in args.midi:
        path = Path(path)
        piece = parse_midi(
            path.read_bytes(), programs, keywords, source_id=path.name
        )
        if args.ppq:
            piece = rescale_ppq(piece, args.ppq)
        write_interchange(piece, out / (path.stem + INTERCHANGE_SUFFIX))
    return 0


def cmd_arrange(args) -> int:
    inputs = [Path(p) for p in args.inputs]
    out = Path(args.out)
    if len(inputs) > 1 or out.suffix == "":
        out.mkdir(parents=True, exist_ok=True)
        out_for = lambda p: out / p.name
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out_for = lambda p: out
    params = _difficulty_params(args)
    for path in inputs:
        piece = read_interchange(path)
        config = _config_override(piece, args)
        if args.method == "baseline":
            arranged = arrange_baseline(piece, config)
        else:
            arranged = arrange_optimal(piece, config, params)
        write_interchange(arranged, out_for(path))
    return 0


def cmd_postprocess(args) -> int:
    input_piece = read_interchange(args.input)
    estimated = read_interchange(args.estimated)
    if args.overlap:
        estimated = postprocess_overlap(estimated)
    fixed = postprocess_neighbor_search(input_piece, estimated, window=args.window)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_interchange(fixed, out)
    return 0


def cmd_encode(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    src_lines: list[str] = []
    tgt_lines: list[str] = []
    seqs = []
    for path in args.inputs:
        piece = read_interchange(path)
        inp, tgt = encode(piece, args.encoding, args.conditioned)
        for chunk_in, chunk_tgt in split_sequences(inp, tgt, args.max_len):
            src_lines.append(chunk_in.text())
            tgt_lines.append(chunk_tgt.text())
            seqs.extend((chunk_in, chunk_tgt))
    (out / "data.src").write_text(
        "".join(line + "\n" for line in src_lines), encoding="utf-8"
    )
    (out / "data.tgt").write_text(
        "".join(line + "\n" for line in tgt_lines), encoding="utf-8"
    )
    Vocabulary.build(seqs).save(out / "vocab.txt")
    return 0


def cmd_decode(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    src_lines = Path(args.src).read_text(encoding="utf-8").splitlines()
    tgt_lines = None
    if args.tgt:
        tgt_lines = Path(args.tgt).read_text(encoding="utf-8").splitlines()
        if len(tgt_lines) != len(src_lines):
            raise FormatError(
                f"{args.src} has {len(src_lines)} lines, {args.tgt} has {len(tgt_lines)}"
            )
    tuning = TUNINGS[args.tuning]
    config = GuitarConfig(tuning, args.capo)
    width = max(5, len(str(len(src_lines))))
    for i, line in enumerate(src_lines, start=1):
        inp = TokenSequence.from_text(line, args.encoding, "input")
        tgt = None
        if tgt_lines is not None:
            tgt = TokenSequence.from_text(tgt_lines[i - 1], args.encoding, "target")
        piece = decode(inp, tgt, config, ppq=args.ppq)
        name = f"line{i:0{width}d}"
        piece = dataclasses.replace(piece, source_id=name)
        write_interchange(piece, out / (name + INTERCHANGE_SUFFIX))
    return 0


def _load_for_dataset(path: str):
    piece = read_interchange(Path(path))
    return rescale_ppq(piece, 480)


def cmd_dataset(args) -> int:
    in_dir = Path(args.input_dir)
    paths = sorted(str(p) for p in in_dir.glob("*" + INTERCHANGE_SUFFIX))
    if not paths:
        raise FormatError(f"no {INTERCHANGE_SUFFIX} files under {in_dir}")
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            pieces = list(pool.map(_load_for_dataset, paths))
    else:
        pieces = [_load_for_dataset(p) for p in paths]

    pieces = dedup(pieces)
    fractions = [float(f) for f in args.split.split(",")]
    if len(fractions) != 3:
        raise ValueError("--split wants three comma-separated fractions")
    spec = SplitSpec(*fractions, seed=args.seed)
    splits = split(pieces, spec)

    if args.augment_capo:
        splits["train"] = capo_expand(splits["train"])
        splits["valid"] = capo_expand(splits["valid"])
        splits["test"] = rotate_test_capos(splits["test"])
    if args.augment_tuning:
        rng = random.Random(f"tuning:{args.seed}")
        for name in ("train", "valid", "test"):
            splits[name] = [augment_tuning(p, rng) for p in splits[name]]

    meta = {
        "seed": args.seed,
        "fractions": fractions,
        "augment_capo": bool(args.augment_capo),
        "augment_tuning": bool(args.augment_tuning),
        "source_pieces": len(pieces),
        "ppq": 480,
    }
    emit_token_dataset(
        splits, args.encoding, args.conditioned, args.out, args.max_len, meta
    )
    return 0


def _score_pair(pair):
    ref_path, pred_path, name, with_difficulty = pair
    reference = read_interchange(ref_path)
    predicted = read_interchange(pred_path)
    return score_piece(reference, predicted, name=name, with_difficulty=with_difficulty)


def cmd_evaluate(args) -> int:
    ref_dir = Path(args.reference)
    pred_dir = Path(args.predicted)
    ref_files = {p.name: p for p in ref_dir.glob("*" + INTERCHANGE_SUFFIX)}
    pred_files = {p.name: p for p in pred_dir.glob("*" + INTERCHANGE_SUFFIX)}
    if not ref_files:
        raise FormatError(f"no {INTERCHANGE_SUFFIX} files under {ref_dir}")
    missing = sorted(set(ref_files) - set(pred_files))
    if missing:
        raise FormatError(f"predicted dir lacks {len(missing)} file(s): {missing[:3]}")
    jobs = [
        (str(ref_files[name]), str(pred_files[name]), _interchange_stem(Path(name)), args.difficulty)
        for name in sorted(ref_files)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            scores = list(pool.map(_score_pair, jobs))
    else:
        scores = [_score_pair(j) for j in jobs]
    agg = write_report(scores, args.out)
    print(
        "pieces={pieces} notes={notes} pitch={micro_pitch_accuracy:.2f} "
        "tab={micro_tab_accuracy:.2f}".format(**agg)
    )
    return 0


def cmd_difficulty(args) -> int:
    params = _difficulty_params(args)
    for path in args.inputs:
        piece = read_interchange(path)
        if not piece.is_annotated():
            raise DomainError(f"{path}: piece has notes without positions")
        print(f"{path}\t{piece_difficulty(piece, params):.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="miditab",
        description="Convert symbolic guitar music to playable tablature.",
    )
    parser.add_argument("--version", action="version", version=f"miditab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse MIDI files into interchange files")
    p.add_argument("midi", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument(
        "--filter-programs",
        type=lambda s: [int(x) for x in s.split(",")],
        default=sorted(p + 1 for p in DEFAULT_PROGRAMS),
        help="1-based General MIDI program numbers to keep (default 25,26)",
    )
    p.add_argument("--keywords", help="file with one track-name keyword per line")
    p.add_argument("--ppq", type=int, default=480, help="normalize to this PPQ; 0 keeps the source PPQ")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("arrange", help="assign string/fret positions")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--method", choices=("baseline", "astar"), default="astar")
    p.add_argument("--tuning", choices=sorted(TUNINGS))
    p.add_argument("--capo", type=int)
    p.add_argument("--alpha", type=float, help="locality weight (default 0.25)")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_arrange)

    p = sub.add_parser("postprocess", help="fix overlaps and wrong-pitch positions")
    p.add_argument("input", help="interchange file with ground-truth pitches")
    p.add_argument("estimated", help="interchange file with estimated positions")
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--no-overlap", dest="overlap", action="store_false",
                   help="skip the same-string overlap correction pass")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_postprocess)

    p = sub.add_parser("encode", help="encode interchange files to token pairs")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--encoding", choices=("v1", "v2", "v3", "v4", "v5"), required=True)
    p.add_argument("--conditioned", action="store_true")
    p.add_argument("--max-len", type=int, default=512)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_encode)

    p = sub.add_parser("decode", help="decode token files back to interchange files")
    p.add_argument("src")
    p.add_argument("tgt", nargs="?", help="target token file; omit to decode input only")
    p.add_argument("--encoding", choices=("v1", "v2", "v3", "v4", "v5"), required=True)
    p.add_argument("--tuning", choices=sorted(TUNINGS), default="standard")
    p.add_argument("--capo", type=int, default=0)
    p.add_argument("--ppq", type=int, default=480)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_decode)

    p = sub.add_parser("dataset", help="build a token dataset from interchange files")
    p.add_argument("input_dir")
    p.add_argument("--encoding", choices=("v1", "v2", "v3", "v4", "v5"), required=True)
    p.add_argument("--conditioned", action="store_true")
    p.add_argument("--split", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--augment-capo", action="store_true")
    p.add_argument("--augment-tuning", action="store_true")
    p.add_argument("--max-len", type=int, default=512)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_dataset)

    p = sub.add_parser("evaluate", help="compare predicted against reference pieces")
    p.add_argument("--reference", required=True)
    p.add_argument("--predicted", required=True)
    p.add_argument("--difficulty", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("difficulty", help="score the playing difficulty of pieces")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--alpha", type=float)
    p.set_defaults(fn=cmd_difficulty)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())
