"""Exception types shared across the package.

Two broad families matter for the CLI exit codes: domain errors (the music
itself is unplayable or inconsistent) and format errors (a file could not be
read or parsed). Everything derives from MiditabError so callers can catch
one base type.
"""


class MiditabError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(MiditabError):
    """The data is well-formed but musically impossible for the instrument."""


class UnplayablePitchError(DomainError):
    def __init__(self, pitch: int, note_index: int | None = None):
        self.pitch = pitch
        self.note_index = note_index
        where = f" at note {note_index}" if note_index is not None else ""
        super().__init__(f"pitch {pitch}{where} has no playable position")


class InfeasibleChordError(DomainError):
    def __init__(self, note_indices: tuple[int, ...], detail: str = ""):
        self.note_indices = note_indices
        extra = f": {detail}" if detail else ""
        super().__init__(f"no feasible fingering for chord at notes {list(note_indices)}{extra}")


class InvalidPositionError(DomainError):
    def __init__(self, string: int, fret: int, detail: str = ""):
        self.string = string
        self.fret = fret
        extra = f": {detail}" if detail else ""
        super().__init__(f"invalid position (string {string}, fret {fret}){extra}")


class EmptyPieceError(DomainError):
    """No notes survived parsing or filtering."""


class EncodingError(DomainError):
    """A piece cannot be represented in the requested token encoding."""


class FormatError(MiditabError):
    """A file or token stream violates its documented format."""


class MidiParseError(FormatError):
    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class InterchangeError(FormatError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"{message} (line {line})")


class TokenError(FormatError):
    def __init__(self, message: str, index: int | None = None):
        self.index = index
        where = f" (token index {index})" if index is not None else ""
        super().__init__(f"{message}{where}")


class AlignmentError(FormatError):
    """Target token count does not match the number of input note-ons."""

    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"expected {expected} position tokens, got {got}")
