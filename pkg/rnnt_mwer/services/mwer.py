"""
Minimum word error rate loss over an N-best list.

The decoder only supplies the hypothesis set. Scores used by the loss are
recomputed exactly by summing every alignment of each hypothesis, and the
gradient flows through the normalized N-best distribution down to the
lattice logits of every hypothesis.
"""

import logging
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from scipy.special import softmax

from rnnt_mwer.core.errors import InvalidInputError, NonFiniteLossError
from rnnt_mwer.services.lattice import (
    LogitLattice,
    forward_backward,
    log_prob_grad,
    logit_grad,
    normalize,
    sequence_log_prob,
)

logger = logging.getLogger(__name__)

ScoreSource = Literal["beam", "exact"]


@dataclass(frozen=True)
class ErrorCount:
    """Levenshtein breakdown of one hypothesis against its reference."""

    substitutions: int = 0
    insertions: int = 0
    deletions: int = 0

    @property
    def total(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    def __add__(self, other: "ErrorCount") -> "ErrorCount":
        return ErrorCount(
            self.substitutions + other.substitutions,
            self.insertions + other.insertions,
            self.deletions + other.deletions,
        )


@dataclass(frozen=True)
class Hypothesis:
    """A blank-free token sequence with its log-score."""

    tokens: tuple[int, ...]
    log_score: float
    source: ScoreSource = "beam"

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(int(k) for k in self.tokens))
        object.__setattr__(self, "log_score", float(self.log_score))


def _rank_key(hyp: Hypothesis) -> tuple[float, tuple[int, ...]]:
    return (-hyp.log_score, hyp.tokens)


@dataclass(frozen=True)
class NBestList:
    """Distinct hypotheses for one utterance, best first."""

    utterance_id: str
    hypotheses: tuple[Hypothesis, ...]
    reference: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))
        object.__setattr__(self, "reference", tuple(int(k) for k in self.reference))
        if not self.hypotheses:
            raise InvalidInputError(f"N-best list for {self.utterance_id} is empty")
        seen = {h.tokens for h in self.hypotheses}
        if len(seen) != len(self.hypotheses):
            raise InvalidInputError(f"N-best list for {self.utterance_id} has duplicate hypotheses")
        scores = [h.log_score for h in self.hypotheses]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise InvalidInputError(f"N-best list for {self.utterance_id} is not sorted by score")

    @classmethod
    def build(
        cls, utterance_id: str, hypotheses: Iterable[Hypothesis], reference: Sequence[int]
    ) -> "NBestList":
        """Merge duplicates (best score kept) and sort, ties by token order."""
        best: dict[tuple[int, ...], Hypothesis] = {}
        merged = 0
        for hyp in hypotheses:
            kept = best.get(hyp.tokens)
            if kept is not None:
                merged += 1
                if hyp.log_score <= kept.log_score:
                    continue
            best[hyp.tokens] = hyp
        if merged:
            logger.warning(f"Merged {merged} duplicate hypotheses for {utterance_id}")
        return cls(utterance_id, tuple(sorted(best.values(), key=_rank_key)), tuple(reference))

    @property
    def log_scores(self) -> np.ndarray:
        return np.array([h.log_score for h in self.hypotheses])

    def __len__(self) -> int:
        return len(self.hypotheses)


@dataclass(frozen=True, eq=False)
class MwerGradients:
    """Loss, expected errors and gradients for one utterance."""

    loss: float
    expected_errors: float
    per_hypothesis_score_grads: np.ndarray
    per_hypothesis_lattice_grads: list[np.ndarray]
    nbest: NBestList
    dropped: list[tuple[int, ...]] = field(default_factory=list)


def edit_distance(y: Sequence, y_ref: Sequence) -> ErrorCount:
    """
    Token-level Levenshtein distance with unit costs.

    Backtrace ties prefer substitution (or match), then insertion, then
    deletion, so breakdowns are reproducible.
    """
    n, m = len(y), len(y_ref)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = 0 if y[i - 1] == y_ref[j - 1] else 1
            d[i][j] = min(d[i - 1][j - 1] + cost, d[i - 1][j] + 1, d[i][j - 1] + 1)

    subs = ins = dels = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            cost = 0 if y[i - 1] == y_ref[j - 1] else 1
            if d[i][j] == d[i - 1][j - 1] + cost:
                subs += cost
                i, j = i - 1, j - 1
                continue
        if i > 0 and d[i][j] == d[i - 1][j] + 1:
            ins += 1
            i -= 1
        else:
            dels += 1
            j -= 1
    return ErrorCount(substitutions=subs, insertions=ins, deletions=dels)


def normalize_scores(log_scores: Sequence[float]) -> np.ndarray:
    """Softmax over hypothesis log-scores (the normalized N-best distribution)."""
    scores = np.asarray(log_scores, dtype=np.float64)
    if scores.size == 0:
        raise InvalidInputError("cannot normalize an empty score list")
    if not np.all(np.isfinite(scores)):
        raise InvalidInputError("hypothesis scores must be finite")
    return softmax(scores)


def _errors(nbest: NBestList, strip: Callable[[Sequence[int]], Sequence[int]] | None) -> np.ndarray:
    strip = strip or tuple
    reference = strip(nbest.reference)
    return np.array(
        [edit_distance(strip(h.tokens), reference).total for h in nbest.hypotheses], dtype=np.float64
    )


def _loss_terms(
    log_scores: np.ndarray, errors: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    posterior = normalize_scores(log_scores)
    # offset by the minimum so equal error counts give exactly zero gradients
    floor = errors.min()
    expected = float(floor + posterior @ (errors - floor))
    return expected, posterior, posterior * (errors - expected)


def mwer_loss(
    nbest: NBestList, strip: Callable[[Sequence[int]], Sequence[int]] | None = None
) -> tuple[float, float]:
    """
    Expected errors under the normalized N-best distribution.

    Returns ``(loss, expected_errors)``; the two coincide, the pair keeps the
    call sites explicit about which one they report.
    """
    expected, _, _ = _loss_terms(nbest.log_scores, _errors(nbest, strip))
    return expected, expected


def mwer_score_grads(
    nbest: NBestList, strip: Callable[[Sequence[int]], Sequence[int]] | None = None
) -> np.ndarray:
    """d loss / d log P(y_i|x) = P_i (R_i - R_hat)."""
    _, _, grads = _loss_terms(nbest.log_scores, _errors(nbest, strip))
    return grads


def mwer_full_grad(
    lattice_fn: Callable[[tuple[int, ...]], LogitLattice],
    nbest: NBestList,
    temperature: float = 1.0,
    strip: Callable[[Sequence[int]], Sequence[int]] | None = None,
) -> MwerGradients:
    """
    MWER loss with gradients w.r.t. every hypothesis's logit lattice.

    ``lattice_fn`` evaluates the model on one hypothesis (the hypothesis is
    fed back through the prediction network). Decoder scores are replaced by
    exact all-alignment scores before normalization. Hypotheses whose exact
    score is not finite are dropped with a warning.
    """
    kept: list[Hypothesis] = []
    terms = []
    dropped: list[tuple[int, ...]] = []
    for hyp in nbest.hypotheses:
        post = normalize(lattice_fn(hyp.tokens), temperature)
        ab = forward_backward(post, hyp.tokens)
        score = sequence_log_prob(post, hyp.tokens, ab)
        if not math.isfinite(score):
            logger.warning(
                f"Dropping hypothesis {hyp.tokens} of {nbest.utterance_id}: exact score {score}"
            )
            dropped.append(hyp.tokens)
            continue
        kept.append(replace(hyp, log_score=score, source="exact"))
        terms.append((post, ab))

    if not kept:
        raise NonFiniteLossError("no hypothesis has a finite exact score", nbest.utterance_id)

    exact = NBestList(
        nbest.utterance_id,
        tuple(sorted(kept, key=_rank_key)),
        nbest.reference,
    )
    # lattice grads follow the incoming order; re-map after sorting
    order = {h.tokens: i for i, h in enumerate(kept)}
    errors = _errors(exact, strip)
    expected, _, score_grads = _loss_terms(exact.log_scores, errors)

    lattice_grads = []
    for hyp, g in zip(exact.hypotheses, score_grads):
        post, ab = terms[order[hyp.tokens]]
        if g == 0.0:
            lattice_grads.append(np.zeros_like(post.log_probs))
            continue
        lattice_grads.append(g * logit_grad(post, log_prob_grad(post, hyp.tokens, ab)))

    return MwerGradients(
        loss=expected,
        expected_errors=expected,
        per_hypothesis_score_grads=score_grads,
        per_hypothesis_lattice_grads=lattice_grads,
        nbest=exact,
        dropped=dropped,
    )
