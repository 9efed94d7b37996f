"""Abstract interfaces for the models the toolkit scores with."""

from abc import ABC, abstractmethod
from collections.abc import Sequence
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from rnnt_mwer.services.lattice import LogitLattice


class TransducerScorer(ABC):
    """
    A transducer that can be evaluated frame by frame (for beam search) or
    over a whole (T, U+1) grid (for exact scoring and training).

    Implementations are read-only after construction, so one instance may be
    shared by concurrent decode workers.
    """

    @property
    @abstractmethod
    def vocab_size(self) -> int:
        """K, including blank."""
        ...

    @property
    @abstractmethod
    def blank_id(self) -> int: ...

    @abstractmethod
    def encode(self, features: np.ndarray) -> np.ndarray:
        """Encoder states, one row per frame."""
        ...

    @abstractmethod
    def initial_state(self) -> np.ndarray:
        """Prediction-network state after the start symbol."""
        ...

    @abstractmethod
    def advance(self, state: np.ndarray, token: int) -> np.ndarray:
        """Prediction-network state after consuming one more label."""
        ...

    @abstractmethod
    def joint_logits(self, encoded_frame: np.ndarray, state: np.ndarray) -> np.ndarray:
        """Raw logits over K for one (frame, label-position) cell."""
        ...

    @abstractmethod
    def lattice(self, features: np.ndarray, tokens: Sequence[int]) -> "LogitLattice":
        """Full (T, U+1, K) logit lattice for a label sequence."""
        ...

    @property
    @abstractmethod
    def name(self) -> str:
        """Scorer name for logging."""
        ...


class LanguageModel(ABC):
    """
    Text-only scorer for second-pass rescoring.

    Only ``score`` is needed by the rescorer, so any LM exposing a natural-log
    sentence probability can be substituted.
    """

    @abstractmethod
    def score(self, tokens: Sequence[str]) -> float:
        """Natural-log probability of the sentence, end-of-sentence included."""
        ...

    @property
    @abstractmethod
    def name(self) -> str:
        """Provider name for logging (e.g., 'ngram:3')."""
        ...
