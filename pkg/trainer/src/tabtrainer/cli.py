"""Command line front end.

Exit codes: 0 success, 1 expected failure (bad data, vocab mismatch,
bad arguments), 2 environment problems (unreadable files).
"""

import argparse
import json
import sys
import warnings
from pathlib import Path

from .data import TrainerConfig
from .errors import TrainerError
from .predict import predict
from .train import train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabtrainer",
        description="Train and run a small seq2seq model on tablature token files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model on a dataset directory")
    p_train.add_argument("dataset_dir", help="directory with *.src/*.tgt, vocab.txt, manifest.json")
    p_train.add_argument("--out", required=True, help="output directory for checkpoint and loss log")
    p_train.add_argument("--max-steps", type=int, default=TrainerConfig.max_steps)
    p_train.add_argument("--batch-size", type=int, default=TrainerConfig.batch_size)
    p_train.add_argument("--seed", type=int, default=TrainerConfig.seed)
    p_train.add_argument("--dim", type=int, default=TrainerConfig.model_dim)
    p_train.add_argument("--ff", type=int, default=TrainerConfig.feedforward_dim)
    p_train.add_argument("--layers", type=int, default=TrainerConfig.layers)
    p_train.add_argument("--heads", type=int, default=TrainerConfig.heads)
    p_train.add_argument("--max-input-len", type=int, default=TrainerConfig.max_input_len)
    p_train.add_argument("--lr", type=float, default=TrainerConfig.learning_rate)
    p_train.add_argument("--eval-interval", type=int, default=TrainerConfig.eval_interval)
    p_train.add_argument("--vocab", help="vocab.txt (default: inside the dataset directory)")
    p_train.add_argument("--resume", help="checkpoint to continue from")

    p_pred = sub.add_parser("predict", help="decode target lines for a source token file")
    p_pred.add_argument("checkpoint", help="checkpoint.pt from a training run")
    p_pred.add_argument("src", help="source token file, one sequence per line")
    p_pred.add_argument("--out", required=True, help="file to write predicted target lines to")
    p_pred.add_argument("--vocab", help="vocab.txt (default: next to the source file)")
    p_pred.add_argument("--chunk-notes", type=int, default=20,
                        help="decode in windows of this many notes")
    return parser


def run(argv=None) -> int:
    # torch's transformer fast path warns about its own prototype API
    warnings.filterwarnings(
        "ignore", message=".*nested tensors is in prototype stage.*"
    )
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            config = TrainerConfig(
                model_dim=args.dim,
                feedforward_dim=args.ff,
                layers=args.layers,
                heads=args.heads,
                max_input_len=args.max_input_len,
                batch_size=args.batch_size,
                max_steps=args.max_steps,
                seed=args.seed,
                learning_rate=args.lr,
                eval_interval=args.eval_interval,
                vocab_path=args.vocab,
            )
            summary = train(args.dataset_dir, args.out, config, resume=args.resume)
            print(
                "trained {steps} steps; valid loss {initial_valid_loss:.4f} -> "
                "{final_valid_loss:.4f}; checkpoint {checkpoint}".format(**summary)
            )
        else:
            vocab = args.vocab or str(Path(args.src).parent / "vocab.txt")
            count = predict(
                args.checkpoint, args.src, args.out, vocab,
                notes_per_chunk=args.chunk_notes,
            )
            print(f"wrote {count} predicted lines to {args.out}")
        return 0
    except (TrainerError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
