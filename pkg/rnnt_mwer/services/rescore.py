"""Second-pass re-ranking of N-best lists."""

import logging
from collections.abc import Sequence
from dataclasses import replace

import numpy as np

from rnnt_mwer.core.config import RescoreConfig
from rnnt_mwer.models.vocab import Vocabulary
from rnnt_mwer.providers.base import LanguageModel, TransducerScorer
from rnnt_mwer.services.lattice import exact_log_prob
from rnnt_mwer.services.mwer import NBestList

logger = logging.getLogger(__name__)


def rnnt_rescore(
    nbest: NBestList,
    scorer: TransducerScorer,
    features: np.ndarray,
    temperature: float = 1.0,
) -> NBestList:
    """Replace every score with the exact all-alignment score and re-rank."""
    rescored = [
        replace(
            hyp,
            log_score=exact_log_prob(scorer, features, hyp.tokens, temperature),
            source="exact",
        )
        for hyp in nbest.hypotheses
    ]
    return NBestList.build(nbest.utterance_id, rescored, nbest.reference)


def lm_score(lm: LanguageModel, tokens: Sequence[str]) -> float:
    """Natural-log LM probability including end-of-sentence."""
    return lm.score(tokens)


def lm_rescore(
    nbest: NBestList,
    lm: LanguageModel,
    config: RescoreConfig,
    vocab: Vocabulary,
) -> NBestList:
    """
    Combine acoustic and LM scores: log P(y|x) + lambda * log P_LM(y) / |y|.

    Only the LM term is length normalized; an empty hypothesis counts as
    length one. The sort is stable, so lambda = 0 leaves the input untouched.
    """
    combined = []
    for hyp in nbest.hypotheses:
        words = vocab.decode(vocab.strip_eos(hyp.tokens))
        lm_term = lm_score(lm, words)
        if config.length_normalize:
            lm_term /= max(len(words), 1)
        combined.append(replace(hyp, log_score=hyp.log_score + config.lm_weight * lm_term))
    ranked = sorted(combined, key=lambda h: -h.log_score)
    return NBestList(nbest.utterance_id, tuple(ranked), nbest.reference)
