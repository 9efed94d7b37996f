"""
Beam search over a transducer scorer.

Expansion is frame-synchronous and breadth-first. Candidates whose label
sequences are identical are merged by log-sum-exp; there is no summation over
prefixes of other hypotheses. The merged score of a hypothesis therefore
covers a subset of its alignments and never exceeds its exact score.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax

from rnnt_mwer.core.config import DecodeConfig
from rnnt_mwer.core.errors import EmptyResultError, InvalidInputError, SizeLimitError
from rnnt_mwer.providers.base import TransducerScorer
from rnnt_mwer.services.lattice import exact_log_prob
from rnnt_mwer.services.mwer import Hypothesis, NBestList

logger = logging.getLogger(__name__)

MAX_EXHAUSTIVE_SEQUENCES = 1_000_000


@dataclass
class BeamCandidate:
    """A prefix alive in the beam together with its predictor state."""

    tokens: tuple[int, ...]
    log_score: float
    state: np.ndarray
    # (frame, label count) of the last expansion
    last_advance: tuple[int, int] = (0, 0)


def _top(candidates: dict[tuple[int, ...], BeamCandidate], k: int) -> list[BeamCandidate]:
    ranked = sorted(candidates.values(), key=lambda c: (-c.log_score, c.tokens))
    return [c for c in ranked[:k] if np.isfinite(c.log_score)]


def _merge(pool: dict[tuple[int, ...], BeamCandidate], cand: BeamCandidate) -> None:
    existing = pool.get(cand.tokens)
    if existing is None:
        pool[cand.tokens] = cand
    else:
        existing.log_score = float(np.logaddexp(existing.log_score, cand.log_score))


def beam_search(
    scorer: TransducerScorer,
    features: np.ndarray,
    config: DecodeConfig,
    utterance_id: str = "",
    reference: Sequence[int] = (),
    eos_id: int | None = None,
) -> NBestList:
    """
    Decode one utterance into an N-best list of up to ``beam_size`` hypotheses.

    At each frame every beam candidate may emit up to ``max_symbols_per_frame``
    labels before the blank that moves it to the next frame. With
    ``include_eos`` a candidate that has emitted ``eos_id`` only emits blanks.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise InvalidInputError(f"empty or malformed feature matrix {features.shape}")

    encoded = scorer.encode(features)
    blank = scorer.blank_id
    labels = [k for k in range(scorer.vocab_size) if k != blank]
    finalize_on = eos_id if config.include_eos else None
    max_len = config.max_output_len

    beam = [BeamCandidate(tokens=(), log_score=0.0, state=scorer.initial_state())]
    state_cache: dict[tuple[int, ...], np.ndarray] = {(): beam[0].state}

    for t, frame in enumerate(encoded):
        advanced: dict[tuple[int, ...], BeamCandidate] = {}
        frontier = beam
        for emitted in range(config.max_symbols_per_frame + 1):
            expansions: dict[tuple[int, ...], BeamCandidate] = {}
            for cand in frontier:
                log_probs = log_softmax(
                    scorer.joint_logits(frame, cand.state) / config.temperature
                )
                _merge(
                    advanced,
                    BeamCandidate(
                        cand.tokens,
                        cand.log_score + float(log_probs[blank]),
                        cand.state,
                        (t + 1, len(cand.tokens)),
                    ),
                )
                if emitted == config.max_symbols_per_frame:
                    continue
                if finalize_on is not None and cand.tokens and cand.tokens[-1] == finalize_on:
                    continue
                if max_len is not None and len(cand.tokens) >= max_len:
                    continue
                for k in labels:
                    tokens = (*cand.tokens, k)
                    state = state_cache.get(tokens)
                    if state is None:
                        state = scorer.advance(cand.state, k)
                        state_cache[tokens] = state
                    _merge(
                        expansions,
                        BeamCandidate(
                            tokens, cand.log_score + float(log_probs[k]), state, (t, len(tokens))
                        ),
                    )
            frontier = _top(expansions, config.beam_size)
            if not frontier:
                break
        beam = _top(advanced, config.beam_size)
        if not beam:
            raise EmptyResultError(f"all beam paths pruned to -inf at frame {t}")

    hyps = [Hypothesis(tokens=c.tokens, log_score=c.log_score, source="beam") for c in beam]
    return NBestList(utterance_id, tuple(hyps), tuple(reference))


def exhaustive_decode(
    scorer: TransducerScorer,
    features: np.ndarray,
    max_len: int,
    nbest: int | None = None,
    temperature: float = 1.0,
    utterance_id: str = "",
    reference: Sequence[int] = (),
) -> NBestList:
    """Score every label sequence up to ``max_len`` exactly; return the true top-N."""
    labels = [k for k in range(scorer.vocab_size) if k != scorer.blank_id]
    count = sum(len(labels) ** n for n in range(max_len + 1))
    if count > MAX_EXHAUSTIVE_SEQUENCES:
        raise SizeLimitError(f"{count} sequences exceed the cap of {MAX_EXHAUSTIVE_SEQUENCES}")

    sequences: list[tuple[int, ...]] = [()]
    frontier: list[tuple[int, ...]] = [()]
    for _ in range(max_len):
        frontier = [(*seq, k) for seq in frontier for k in labels]
        sequences.extend(frontier)

    hyps = [
        Hypothesis(seq, exact_log_prob(scorer, features, seq, temperature), source="exact")
        for seq in sequences
    ]
    ranked = NBestList.build(utterance_id, hyps, reference)
    limit = len(ranked) if nbest is None else nbest
    return NBestList(utterance_id, ranked.hypotheses[:limit], ranked.reference)
