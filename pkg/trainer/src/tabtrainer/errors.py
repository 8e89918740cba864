class TrainerError(Exception):
    """Base class for everything tabtrainer raises on purpose."""


class DataError(TrainerError):
    """Dataset or manifest is missing, empty, or inconsistent."""


class VocabError(TrainerError):
    """Vocabulary file is malformed or incompatible with a checkpoint."""
