"""Dataset directory access and batching.

A dataset directory is whatever the tablature pipeline emitted:
``{train,valid,test}.{src,tgt}`` with one token sequence per line,
``vocab.txt``, and ``manifest.json``. Nothing else is assumed.
"""

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import torch

from .errors import DataError
from .vocab import BOS_ID, EOS_ID, PAD_ID, Vocab


@dataclass
class TrainerConfig:
    model_dim: int = 128
    feedforward_dim: int = 1024
    layers: int = 3
    heads: int = 4
    max_input_len: int = 512  # must match the manifest's max_len
    batch_size: int = 32
    max_steps: int = 300
    seed: int = 0
    learning_rate: float = 3e-4
    eval_interval: int = 25
    dropout: float = 0.1
    vocab_path: str | None = None  # default: vocab.txt inside the dataset dir


def load_manifest(dataset_dir) -> dict:
    path = Path(dataset_dir) / "manifest.json"
    if not path.is_file():
        raise DataError(f"no manifest.json under {dataset_dir}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: {exc}") from exc
    if "encoding" not in manifest or "max_len" not in manifest:
        raise DataError(f"{path} lacks encoding/max_len fields")
    return manifest


def check_compatible(config: TrainerConfig, manifest: dict, vocab: Vocab) -> None:
    if manifest["max_len"] != config.max_input_len:
        raise DataError(
            f"manifest max_len {manifest['max_len']} != "
            f"configured max_input_len {config.max_input_len}"
        )
    size = manifest.get("vocab_size")
    if size is not None and size != len(vocab):
        raise DataError(f"manifest vocab_size {size} != vocabulary of {len(vocab)}")


def read_split(dataset_dir, name: str) -> list[tuple[list[str], list[str]]]:
    """Paired token lines for one split; empty list if both files are empty."""
    src_path = Path(dataset_dir) / f"{name}.src"
    tgt_path = Path(dataset_dir) / f"{name}.tgt"
    if not src_path.is_file() or not tgt_path.is_file():
        raise DataError(f"split {name!r} is missing under {dataset_dir}")
    src_lines = src_path.read_text(encoding="utf-8").splitlines()
    tgt_lines = tgt_path.read_text(encoding="utf-8").splitlines()
    if len(src_lines) != len(tgt_lines):
        raise DataError(
            f"{name}.src has {len(src_lines)} lines, {name}.tgt {len(tgt_lines)}"
        )
    return [(s.split(), t.split()) for s, t in zip(src_lines, tgt_lines)]


@dataclass
class Batch:
    src: torch.Tensor  # [B, S] token ids, PAD padded
    tgt_in: torch.Tensor  # [B, T] BOS + target
    tgt_out: torch.Tensor  # [B, T] target + EOS


def _pad(rows: list[list[int]]) -> torch.Tensor:
    width = max(len(r) for r in rows)
    return torch.tensor(
        [r + [PAD_ID] * (width - len(r)) for r in rows], dtype=torch.long
    )


def make_batch(pairs, vocab: Vocab) -> Batch:
    src_rows, tin_rows, tout_rows = [], [], []
    for src_tokens, tgt_tokens in pairs:
        src_rows.append(vocab.to_ids(src_tokens))
        tgt_ids = vocab.to_ids(tgt_tokens)
        tin_rows.append([BOS_ID] + tgt_ids)
        tout_rows.append(tgt_ids + [EOS_ID])
    return Batch(_pad(src_rows), _pad(tin_rows), _pad(tout_rows))


@dataclass
class BatchStream:
    """Endless shuffled batches; order is a pure function of the seed."""

    pairs: list
    vocab: Vocab
    batch_size: int
    seed: int
    _rng: random.Random = field(init=False)
    _order: list[int] = field(init=False, default_factory=list)

    def __post_init__(self):
        if not self.pairs:
            raise DataError("cannot batch an empty split")
        self._rng = random.Random(self.seed)

    def __iter__(self):
        return self

    def __next__(self) -> Batch:
        picked = []
        for _ in range(min(self.batch_size, len(self.pairs))):
            if not self._order:
                self._order = list(range(len(self.pairs)))
                self._rng.shuffle(self._order)
            picked.append(self.pairs[self._order.pop()])
        return make_batch(picked, self.vocab)


def full_batches(pairs, vocab: Vocab, batch_size: int):
    """All pairs once, in order; for evaluation passes."""
    for i in range(0, len(pairs), batch_size):
        yield make_batch(pairs[i : i + batch_size], vocab)
