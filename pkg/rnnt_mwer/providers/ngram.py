"""Add-delta smoothed n-gram language model."""

import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Sequence

from rnnt_mwer.core.errors import InvalidArgumentError
from rnnt_mwer.providers.base import LanguageModel

logger = logging.getLogger(__name__)

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

Counts = dict[int, dict[tuple[str, ...], dict[str, int]]]


class NGramLM(LanguageModel):
    """
    Count-based n-gram LM over a closed vocabulary.

    P(w | h) = (c(h, w) + delta) / (c(h) + delta * |V|), where V is the word
    vocabulary plus ``</s>`` and ``<unk>``. Every conditional therefore sums
    to one, including for unseen histories. Count tables are kept for orders
    1..n so lower-order models can be derived without recounting.
    """

    def __init__(self, order: int, delta: float, vocabulary: Iterable[str], counts: Counts):
        if order < 1:
            raise InvalidArgumentError(f"order must be >= 1, got {order}")
        if delta <= 0:
            raise InvalidArgumentError(f"delta must be positive, got {delta}")
        self._order = order
        self._delta = delta
        words = sorted(set(vocabulary) - {BOS, EOS, UNK})
        self._vocabulary = [*words, EOS, UNK]
        self._known = set(self._vocabulary)
        self._counts = {m: counts.get(m, {}) for m in range(1, order + 1)}
        self._totals = {
            context: sum(nexts.values()) for context, nexts in self._counts[order].items()
        }

    @classmethod
    def train(
        cls,
        sentences: Iterable[Sequence[str]],
        order: int = 3,
        delta: float = 0.1,
        vocabulary: Iterable[str] | None = None,
    ) -> "NGramLM":
        """Count n-grams of every order up to ``order``."""
        sentences = [list(s) for s in sentences]
        if vocabulary is None:
            vocabulary = {w for s in sentences for w in s}
        known = set(vocabulary)
        counts: Counts = {m: defaultdict(lambda: defaultdict(int)) for m in range(1, order + 1)}
        for sentence in sentences:
            words = [w if w in known else UNK for w in sentence] + [EOS]
            for m in range(1, order + 1):
                padded = [BOS] * (m - 1) + words
                for i, word in enumerate(words):
                    context = tuple(padded[i : i + m - 1])
                    counts[m][context][word] += 1
        frozen = {m: {h: dict(nexts) for h, nexts in table.items()} for m, table in counts.items()}
        logger.info(f"Trained {order}-gram LM on {len(sentences)} sentences")
        return cls(order, delta, known, frozen)

    @property
    def name(self) -> str:
        return f"ngram:{self._order}"

    @property
    def order(self) -> int:
        return self._order

    @property
    def delta(self) -> float:
        return self._delta

    @property
    def vocabulary(self) -> list[str]:
        """Closed vocabulary, ``</s>`` and ``<unk>`` included."""
        return list(self._vocabulary)

    @property
    def counts(self) -> Counts:
        return self._counts

    def _map(self, token: str) -> str:
        return token if token in self._known else UNK

    def _context(self, history: Sequence[str]) -> tuple[str, ...]:
        if self._order == 1:
            return ()
        padded = [BOS] * (self._order - 1) + [self._map(w) for w in history]
        return tuple(padded[-(self._order - 1) :])

    def log_prob(self, word: str, history: Sequence[str]) -> float:
        """log P(word | last n-1 tokens of history)."""
        context = self._context(history)
        count = self._counts[self._order].get(context, {}).get(self._map(word), 0)
        total = self._totals.get(context, 0)
        return math.log((count + self._delta) / (total + self._delta * len(self._vocabulary)))

    def distribution(self, history: Sequence[str]) -> dict[str, float]:
        """Full conditional distribution over the closed vocabulary."""
        return {w: math.exp(self.log_prob(w, history)) for w in self._vocabulary}

    def score(self, tokens: Sequence[str]) -> float:
        tokens = list(tokens)
        total = 0.0
        for i, word in enumerate([*tokens, EOS]):
            total += self.log_prob(word, tokens[:i])
        return total

    def truncate(self, order: int) -> "NGramLM":
        """The order-m model backed by the stored lower-order tables."""
        if not 1 <= order <= self._order:
            raise InvalidArgumentError(f"cannot truncate a {self._order}-gram LM to order {order}")
        words = [w for w in self._vocabulary if w not in (EOS, UNK)]
        return NGramLM(order, self._delta, words, {m: self._counts[m] for m in range(1, order + 1)})
