"""Training loop: checkpoint plus an append-only loss log.

The log (``loss_log.csv``) is long-format ``step,split,loss`` with a
validation row at step 0 before any update, so the drop from the
initial value can be read straight off the file. Runs are deterministic
for a fixed seed up to framework nondeterminism; on CPU that means
bit-identical reruns in practice.
"""

import pickle
from dataclasses import asdict, replace
from pathlib import Path

import torch
from torch import nn

from .data import (
    BatchStream,
    TrainerConfig,
    check_compatible,
    full_batches,
    load_manifest,
    read_split,
)
from .errors import DataError, VocabError
from .model import TabTransformer
from .vocab import PAD_ID, Vocab

CHECKPOINT_NAME = "checkpoint.pt"
LOSS_LOG_NAME = "loss_log.csv"


def _loss_fn():
    return nn.CrossEntropyLoss(ignore_index=PAD_ID)


def evaluate_loss(model, pairs, vocab, batch_size: int) -> float:
    """Mean per-token cross entropy over a whole split."""
    loss_fn = nn.CrossEntropyLoss(ignore_index=PAD_ID, reduction="sum")
    total, tokens = 0.0, 0
    model.eval()
    with torch.no_grad():
        for batch in full_batches(pairs, vocab, batch_size):
            logits = model(batch.src, batch.tgt_in)
            total += loss_fn(logits.flatten(0, 1), batch.tgt_out.flatten()).item()
            tokens += int(batch.tgt_out.ne(PAD_ID).sum())
    model.train()
    return total / max(tokens, 1)


def load_checkpoint(path) -> dict:
    try:
        return torch.load(path, map_location="cpu", weights_only=True)
    except (RuntimeError, EOFError, pickle.UnpicklingError) as exc:
        raise DataError(f"unreadable checkpoint {path}: {exc}") from exc


def train(
    dataset_dir,
    out_dir,
    config: TrainerConfig | None = None,
    resume=None,
) -> dict:
    """Train on a dataset directory; returns a summary dict.

    Writes ``checkpoint.pt`` and ``loss_log.csv`` into ``out_dir``. With
    ``resume`` pointing at an earlier checkpoint, training continues from
    its recorded step and the log is appended rather than rewritten.
    """
    config = config or TrainerConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    vocab_path = config.vocab_path or Path(dataset_dir) / "vocab.txt"
    vocab = Vocab.load(vocab_path)
    manifest = load_manifest(dataset_dir)

    start_step = 0
    ckpt = None
    if resume is not None:
        ckpt = load_checkpoint(resume)
        if ckpt.get("vocab_sha256") != vocab.sha256:
            raise VocabError("checkpoint was trained with a different vocabulary")
        # architecture comes from the checkpoint; step budget from the caller
        arch = ckpt["config"]
        config = replace(
            config,
            model_dim=arch["model_dim"],
            feedforward_dim=arch["feedforward_dim"],
            layers=arch["layers"],
            heads=arch["heads"],
            max_input_len=arch["max_input_len"],
            dropout=arch["dropout"],
        )
        start_step = ckpt["step"]

    check_compatible(config, manifest, vocab)

    train_pairs = read_split(dataset_dir, "train")
    valid_pairs = read_split(dataset_dir, "valid")
    if not train_pairs:
        raise DataError(f"training split under {dataset_dir} is empty")
    if not valid_pairs:
        raise DataError(f"validation split under {dataset_dir} is empty")

    torch.manual_seed(config.seed)
    model = TabTransformer(len(vocab), config)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    if ckpt is not None:
        model.load_state_dict(ckpt["model_state"])
        optimizer.load_state_dict(ckpt["optimizer_state"])

    log_path = out / LOSS_LOG_NAME
    fresh_log = resume is None or not log_path.exists()
    log = open(log_path, "w" if fresh_log else "a", encoding="utf-8")
    with log:
        if fresh_log:
            log.write("step,split,loss\n")

        def record(step: int, split: str, value: float):
            log.write(f"{step},{split},{value:.6f}\n")

        initial = evaluate_loss(model, valid_pairs, vocab, config.batch_size)
        record(start_step, "valid", initial)

        loss_fn = _loss_fn()
        stream = BatchStream(train_pairs, vocab, config.batch_size, config.seed)
        model.train()
        final = initial
        last_step = start_step + config.max_steps
        for step in range(start_step + 1, last_step + 1):
            batch = next(stream)
            optimizer.zero_grad()
            logits = model(batch.src, batch.tgt_in)
            loss = loss_fn(logits.flatten(0, 1), batch.tgt_out.flatten())
            loss.backward()
            optimizer.step()
            if step % config.eval_interval == 0 or step == last_step:
                record(step, "train", loss.item())
                final = evaluate_loss(model, valid_pairs, vocab, config.batch_size)
                record(step, "valid", final)

        checkpoint = {
            "model_state": model.state_dict(),
            "optimizer_state": optimizer.state_dict(),
            "step": last_step,
            "config": asdict(config),
            "vocab_sha256": vocab.sha256,
            "vocab_size": len(vocab),
            "encoding": manifest["encoding"],
        }
        torch.save(checkpoint, out / CHECKPOINT_NAME)

    return {
        "checkpoint": str(out / CHECKPOINT_NAME),
        "loss_log": str(log_path),
        "steps": last_step,
        "initial_valid_loss": initial,
        "final_valid_loss": final,
    }
