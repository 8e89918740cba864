"""Hand-rolled toy datasets in the on-disk contract format.

The mapping NOTE_ON<p> -> TAB<s,f> is arbitrary but fixed, so a model
can learn it from a handful of examples. Everything is written by this
file directly; the tests exercise the trainer against the file contract
alone.
"""

import json
import random

import pytest

PITCHES = tuple(range(60, 68))
SHIFTS = (48, 96)


def tab_for(pitch: int) -> str:
    return f"TAB<{pitch % 3 + 1},{pitch % 5}>"


def toy_pair(rng: random.Random, conditioned: bool = False):
    """One (src_tokens, tgt_tokens) pair in the v3 shapes."""
    src, tgt = [], []
    if conditioned:
        src += ["CAPO<0>", "TUNING<64,59,55,50,45,40>"]
    for _ in range(rng.randint(3, 8)):
        pitch = rng.choice(PITCHES)
        shift = rng.choice(SHIFTS)
        src += [f"NOTE_ON<{pitch}>", f"TIME_SHIFT<{shift}>", f"NOTE_OFF<{pitch}>"]
        tgt += [tab_for(pitch), f"TIME_SHIFT<{shift}>"]
    return src, tgt


def vocab_lines(include_tabs: bool = True) -> list[str]:
    tokens = ["PAD", "BOS", "EOS", "UNK"]
    body = set()
    for p in PITCHES:
        body.add(f"NOTE_ON<{p}>")
        body.add(f"NOTE_OFF<{p}>")
        if include_tabs:
            body.add(tab_for(p))
    for s in SHIFTS:
        body.add(f"TIME_SHIFT<{s}>")
    body.add("CAPO<0>")
    body.add("TUNING<64,59,55,50,45,40>")
    return tokens + sorted(body)


def write_dataset(
    root,
    n_train: int = 24,
    n_valid: int = 6,
    seed: int = 0,
    max_len: int = 64,
    encoding: str = "v3",
    include_tabs: bool = True,
    conditioned: bool = False,
):
    root.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    counts = {}
    for name, n in (("train", n_train), ("valid", n_valid)):
        pairs = [toy_pair(rng, conditioned) for _ in range(n)]
        (root / f"{name}.src").write_text(
            "".join(" ".join(s) + "\n" for s, _ in pairs), encoding="utf-8"
        )
        (root / f"{name}.tgt").write_text(
            "".join(" ".join(t) + "\n" for _, t in pairs), encoding="utf-8"
        )
        counts[name] = n
    lines = vocab_lines(include_tabs)
    (root / "vocab.txt").write_text("".join(t + "\n" for t in lines), encoding="utf-8")
    manifest = {
        "encoding": encoding,
        "conditioned": conditioned,
        "max_len": max_len,
        "vocab_size": len(lines),
        "splits": {name: {"sequences": n} for name, n in counts.items()},
    }
    (root / "manifest.json").write_text(json.dumps(manifest), encoding="utf-8")
    return root


@pytest.fixture
def toy_dataset(tmp_path):
    return write_dataset(tmp_path / "data")


@pytest.fixture
def tiny_config():
    from tabtrainer import TrainerConfig

    return TrainerConfig(
        model_dim=16,
        feedforward_dim=32,
        layers=1,
        heads=2,
        max_input_len=64,
        batch_size=8,
        max_steps=6,
        eval_interval=3,
        dropout=0.0,
    )
