"""Seq2seq trainer for tablature token files.

Consumes dataset directories produced by the tablature toolchain
(``{train,valid,test}.{src,tgt}``, ``vocab.txt``, ``manifest.json``)
and nothing else; the two packages talk only through files.
"""

from .data import TrainerConfig
from .errors import DataError, TrainerError, VocabError
from .predict import predict
from .train import train
from .vocab import Vocab

__version__ = "0.1.0"

__all__ = [
    "TrainerConfig",
    "TrainerError",
    "DataError",
    "VocabError",
    "Vocab",
    "train",
    "predict",
    "__version__",
]
