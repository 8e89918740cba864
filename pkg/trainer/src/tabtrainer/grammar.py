"""Target-side grammar derived from a source token line.

The trainer never parses music. All it needs is, for each source token,
the kind of target token that answers it:

  NOTE_ON<p>     -> one TAB<s,f> slot (v2/v3/v5) or STRING<s> + FRET<f>
                    slots (v1/v4)
  TIME_SHIFT<t>  -> the same TIME_SHIFT token, forced (v3/v4/v5)
  NOTE_OFF<p>    -> nothing

That skeleton drives masked greedy decoding: the model only ever
chooses among grammatical tokens for each slot, so every prediction
stays aligned with its source line and the downstream decoder never
sees a malformed pair.
"""

from dataclasses import dataclass

from .errors import DataError

ENCODINGS = ("v1", "v2", "v3", "v4", "v5")
TWO_TOKEN_TARGETS = frozenset({"v1", "v4"})
TIMED_TARGETS = frozenset({"v3", "v4", "v5"})
CONDITIONING_PREFIXES = ("CAPO<", "TUNING<")

# slot kind -> target token prefix the model may emit for it
SLOT_PREFIX = {"tab": "TAB<", "string": "STRING<", "fret": "FRET<"}


@dataclass(frozen=True)
class Slot:
    kind: str  # "tab" | "string" | "fret" | "shift"
    forced: str | None = None  # token text, shift slots only


def split_conditioning(tokens):
    """(conditioning prefix, body). Conditioning only ever leads a line."""
    i = 0
    while i < len(tokens) and tokens[i].startswith(CONDITIONING_PREFIXES):
        i += 1
    return list(tokens[:i]), list(tokens[i:])


def target_slots(body_tokens, encoding: str) -> list[Slot]:
    if encoding not in ENCODINGS:
        raise DataError(f"unknown encoding {encoding!r}")
    slots: list[Slot] = []
    for tok in body_tokens:
        if tok.startswith("NOTE_ON<"):
            if encoding in TWO_TOKEN_TARGETS:
                slots.append(Slot("string"))
                slots.append(Slot("fret"))
            else:
                slots.append(Slot("tab"))
        elif tok.startswith("TIME_SHIFT<") and encoding in TIMED_TARGETS:
            slots.append(Slot("shift", tok))
    return slots


def chunk_by_notes(body_tokens, notes_per_chunk: int = 20) -> list[list[str]]:
    """Windows of at most ``notes_per_chunk`` notes, cut at NOTE_ON tokens.

    Tokens before the first note stay with the first window and trailing
    tokens with the last. A note held across a boundary leaves its
    NOTE_OFF in the later window; slot derivation only looks at NOTE_ON
    and TIME_SHIFT tokens, so alignment is unaffected.
    """
    if notes_per_chunk < 1:
        raise ValueError("notes_per_chunk must be at least 1")
    body_tokens = list(body_tokens)
    starts = [i for i, t in enumerate(body_tokens) if t.startswith("NOTE_ON<")]
    if not body_tokens:
        return []
    if len(starts) <= notes_per_chunk:
        return [body_tokens]
    bounds = [starts[k] for k in range(notes_per_chunk, len(starts), notes_per_chunk)]
    edges = [0] + bounds + [len(body_tokens)]
    return [body_tokens[a:b] for a, b in zip(edges, edges[1:])]


def slot_token_ids(vocab) -> dict[str, list[int]]:
    """Vocabulary ids the model may emit for each free slot kind."""
    out: dict[str, list[int]] = {kind: [] for kind in SLOT_PREFIX}
    for i, tok in enumerate(vocab.id_to_token):
        for kind, prefix in SLOT_PREFIX.items():
            if tok.startswith(prefix):
                out[kind].append(i)
    return out
