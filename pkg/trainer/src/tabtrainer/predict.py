"""Greedy decoding constrained to the target grammar.

Each source line fixes the shape of its target: every NOTE_ON must be
answered by position tokens and every TIME_SHIFT (when the encoding
carries timing on the target side) is copied through verbatim. Decoding
therefore only ever chooses among tokens that are legal for the current
slot, so output lines always parse; UNK appears only when the
vocabulary has no token of the required kind at all.

Long lines are split every ``notes_per_chunk`` notes and each window is
decoded against its own slice of the source, with any conditioning
prefix re-attached.
"""

from pathlib import Path

import torch

from .data import TrainerConfig
from .errors import VocabError
from .grammar import chunk_by_notes, split_conditioning, slot_token_ids, target_slots
from .model import TabTransformer
from .train import load_checkpoint
from .vocab import BOS_ID, UNK_ID, Vocab


def _decode_window(model, vocab, slot_ids, cond, window, encoding) -> list[str]:
    src = torch.tensor([vocab.to_ids(cond + window)], dtype=torch.long)
    memory = model.encode(src)
    ys = [BOS_ID]
    out: list[str] = []
    for slot in target_slots(window, encoding):
        if slot.forced is not None:
            nid = vocab.token_to_id.get(slot.forced, UNK_ID)
        else:
            allowed = slot_ids[slot.kind]
            if not allowed:
                nid = UNK_ID
            else:
                tgt_in = torch.tensor([ys], dtype=torch.long)
                logits = model.decode(tgt_in, memory, src)[0, -1]
                nid = allowed[int(torch.argmax(logits[allowed]))]
        ys.append(nid)
        out.append(vocab.id_to_token[nid])
    return out


def predict(
    checkpoint_path,
    src_path,
    out_path,
    vocab_path,
    notes_per_chunk: int = 20,
) -> int:
    """Decode every line of ``src_path``; returns the line count."""
    ckpt = load_checkpoint(checkpoint_path)
    vocab = Vocab.load(vocab_path)
    if ckpt.get("vocab_sha256") != vocab.sha256:
        raise VocabError("checkpoint was trained with a different vocabulary")

    config = TrainerConfig(**ckpt["config"])
    model = TabTransformer(len(vocab), config)
    model.load_state_dict(ckpt["model_state"])
    model.eval()
    encoding = ckpt["encoding"]
    slot_ids = slot_token_ids(vocab)

    lines = Path(src_path).read_text(encoding="utf-8").splitlines()
    written = 0
    with open(out_path, "w", encoding="utf-8") as out, torch.no_grad():
        for line in lines:
            cond, body = split_conditioning(line.split())
            pieces: list[str] = []
            for window in chunk_by_notes(body, notes_per_chunk):
                pieces.extend(
                    _decode_window(model, vocab, slot_ids, cond, window, encoding)
                )
            out.write(" ".join(pieces) + "\n")
            written += 1
    return written
