"""Word-level vocabulary files.

One token per line; the first four lines must be the specials PAD, BOS,
EOS, UNK (ids 0..3). The file is the contract with the dataset emitter,
so the loader also keeps a content hash for checkpoint compatibility
checks.
"""

import hashlib
from pathlib import Path

from .errors import VocabError

SPECIALS = ("PAD", "BOS", "EOS", "UNK")
PAD_ID, BOS_ID, EOS_ID, UNK_ID = range(4)


class Vocab:
    def __init__(self, tokens: tuple[str, ...], sha256: str):
        if tuple(tokens[:4]) != SPECIALS:
            raise VocabError("vocabulary must start with PAD, BOS, EOS, UNK")
        self.id_to_token = tuple(tokens)
        self.token_to_id = {tok: i for i, tok in enumerate(tokens)}
        self.sha256 = sha256

    def __len__(self) -> int:
        return len(self.id_to_token)

    @classmethod
    def load(cls, path) -> "Vocab":
        data = Path(path).read_bytes()
        tokens = tuple(
            line for line in data.decode("utf-8").splitlines() if line.strip()
        )
        return cls(tokens, hashlib.sha256(data).hexdigest())

    def to_ids(self, tokens) -> list[int]:
        return [self.token_to_id.get(tok, UNK_ID) for tok in tokens]

    def to_tokens(self, ids) -> list[str]:
        return [self.id_to_token[i] for i in ids]
