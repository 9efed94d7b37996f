"""Provider factory for scorers and language models."""

import logging
from collections.abc import Iterable, Sequence
from pathlib import Path

from rnnt_mwer.core.config import LMConfig
from rnnt_mwer.core.errors import ConfigError
from rnnt_mwer.providers.base import LanguageModel, TransducerScorer
from rnnt_mwer.providers.ngram import NGramLM
from rnnt_mwer.providers.transducer import ModelParams, TransducerModel
from rnnt_mwer.repositories.lm import LMRepository

logger = logging.getLogger(__name__)


def get_scorer(params: ModelParams) -> TransducerScorer:
    """Frame-level scorer over a parameter snapshot."""
    return TransducerModel(params)


def get_language_model(
    config: LMConfig,
    path: Path | str | None = None,
    sentences: Iterable[Sequence[str]] | None = None,
    vocabulary: Iterable[str] | None = None,
    order: int | None = None,
) -> LanguageModel:
    """
    Load the configured LM from ``path`` or train it on ``sentences``.

    Currently supports:
    - ngram: add-delta n-gram; ``order`` below the stored order truncates
    """
    match config.kind:
        case "ngram":
            if path is not None:
                lm = LMRepository(path).load()
                if order is not None and order != lm.order:
                    lm = lm.truncate(order)
            elif sentences is not None:
                lm = NGramLM.train(sentences, order or config.order, config.delta, vocabulary)
            else:
                raise ConfigError("an n-gram LM needs a file to load or sentences to train on")
            logger.info(f"Language model ready: {lm.name}")
            return lm
        case _:
            raise ConfigError(f"Unknown LM kind '{config.kind}'")
