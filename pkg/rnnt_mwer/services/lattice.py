"""
Exact log-space computation over the transducer alignment lattice.

Everything here is a pure function of its inputs in float64: normalization
with temperature, the forward-backward recursions, the sequence
log-probability summed over all alignments, the RNN-T loss with its analytic
gradient w.r.t. raw logits, and a brute-force alignment enumerator used as a
test oracle.
"""

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import log_softmax, softmax

from rnnt_mwer.core.errors import (
    InvalidArgumentError,
    InvalidInputError,
    NonFiniteLossError,
    SizeLimitError,
)

if TYPE_CHECKING:
    from rnnt_mwer.providers.base import TransducerScorer

MAX_ENUMERATION_LENGTH = 24


@dataclass(frozen=True, eq=False)
class LogitLattice:
    """Raw joint-network outputs, shape (T, U+1, K)."""

    values: np.ndarray
    blank_id: int = 0

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 3:
            raise InvalidInputError(f"lattice must be 3-D (T, U+1, K), got shape {values.shape}")
        T, U1, K = values.shape
        if T < 1 or U1 < 1 or K < 2:
            raise InvalidInputError(f"lattice shape {values.shape} needs T>=1, U+1>=1, K>=2")
        if not 0 <= self.blank_id < K:
            raise InvalidInputError(f"blank_id {self.blank_id} outside vocabulary of size {K}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("lattice logits contain NaN or inf")

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def U(self) -> int:
        return self.values.shape[1] - 1

    @property
    def K(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True, eq=False)
class LogPosteriorLattice:
    """log P(k|t,u) after the temperature softmax."""

    log_probs: np.ndarray
    temperature: float
    blank_id: int

    @property
    def T(self) -> int:
        return self.log_probs.shape[0]

    @property
    def U(self) -> int:
        return self.log_probs.shape[1] - 1

    @property
    def K(self) -> int:
        return self.log_probs.shape[2]


@dataclass(frozen=True, eq=False)
class AlphaBeta:
    """Log forward/backward variables, each (T, U+1)."""

    alpha: np.ndarray
    beta: np.ndarray


@dataclass(frozen=True)
class AlignmentPath:
    """
    One monotone path through the lattice.

    ``symbols`` holds ``None`` for a blank (advance t) and the label position
    ``u`` for an emission of ``y[u]`` (advance u).
    """

    symbols: tuple[int | None, ...]

    def __post_init__(self) -> None:
        labels = [s for s in self.symbols if s is not None]
        if labels != list(range(len(labels))):
            raise InvalidInputError("alignment labels must appear in order")
        if not self.symbols or self.symbols[-1] is not None:
            raise InvalidInputError("alignment must end with the terminal blank")

    @property
    def T(self) -> int:
        return sum(1 for s in self.symbols if s is None)

    @property
    def U(self) -> int:
        return len(self.symbols) - self.T

    def labels(self, y: Sequence[int]) -> tuple[int, ...]:
        """The label sequence this path emits (blanks removed)."""
        return tuple(y[s] for s in self.symbols if s is not None)

    def log_prob(self, post: LogPosteriorLattice, y: Sequence[int]) -> float:
        """Sum of arc log-probabilities along the path."""
        t = u = 0
        total = 0.0
        for s in self.symbols:
            if s is None:
                total += post.log_probs[t, u, post.blank_id]
                t += 1
            else:
                total += post.log_probs[t, u, y[s]]
                u += 1
        return float(total)


def normalize(lattice: LogitLattice, temperature: float = 1.0) -> LogPosteriorLattice:
    """Temperature log-softmax over the vocabulary axis."""
    if not (temperature > 0 and math.isfinite(temperature)):
        raise InvalidArgumentError(f"temperature must be positive, got {temperature}")
    log_probs = log_softmax(lattice.values / temperature, axis=-1)
    return LogPosteriorLattice(
        log_probs=log_probs, temperature=float(temperature), blank_id=lattice.blank_id
    )


def _check_labels(post: LogPosteriorLattice, y: Sequence[int]) -> tuple[int, ...]:
    y = tuple(int(k) for k in y)
    if len(y) != post.U:
        raise InvalidInputError(f"label length {len(y)} does not match lattice U={post.U}")
    for k in y:
        if k == post.blank_id:
            raise InvalidInputError("label sequence contains the blank id")
        if not 0 <= k < post.K:
            raise InvalidInputError(f"label {k} outside vocabulary of size {post.K}")
    return y


def _arc_scores(post: LogPosteriorLattice, y: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Blank arcs (T, U+1) and emit arcs (T, U) with emit[t, u] = log P(y[u] | t, u)."""
    blank = post.log_probs[:, :, post.blank_id]
    emit = post.log_probs[:, np.arange(post.U), list(y)] if y else np.zeros((post.T, 0))
    return blank, emit


def forward_backward(post: LogPosteriorLattice, y: Sequence[int]) -> AlphaBeta:
    """Log-space alpha/beta over the (T, U+1) grid."""
    y = _check_labels(post, y)
    T, U = post.T, post.U
    blank, emit = _arc_scores(post, y)

    alpha = np.full((T, U + 1), -np.inf)
    alpha[0, 0] = 0.0
    for t in range(T):
        for u in range(U + 1):
            if t == 0 and u == 0:
                continue
            from_blank = alpha[t - 1, u] + blank[t - 1, u] if t > 0 else -np.inf
            from_emit = alpha[t, u - 1] + emit[t, u - 1] if u > 0 else -np.inf
            alpha[t, u] = np.logaddexp(from_blank, from_emit)

    beta = np.full((T, U + 1), -np.inf)
    beta[T - 1, U] = blank[T - 1, U]
    for t in range(T - 1, -1, -1):
        for u in range(U, -1, -1):
            if t == T - 1 and u == U:
                continue
            to_blank = beta[t + 1, u] + blank[t, u] if t < T - 1 else -np.inf
            to_emit = beta[t, u + 1] + emit[t, u] if u < U else -np.inf
            beta[t, u] = np.logaddexp(to_blank, to_emit)

    return AlphaBeta(alpha=alpha, beta=beta)


def sequence_log_prob(
    post: LogPosteriorLattice, y: Sequence[int], ab: AlphaBeta | None = None
) -> float:
    """log P(y|x) summed over every alignment."""
    if ab is None:
        ab = forward_backward(post, y)
    return float(ab.alpha[post.T - 1, post.U] + post.log_probs[post.T - 1, post.U, post.blank_id])


def log_prob_grad(
    post: LogPosteriorLattice, y: Sequence[int], ab: AlphaBeta | None = None
) -> np.ndarray:
    """
    d log P(y|x) / d log P(k|t,u), shape (T, U+1, K).

    Each entry is the posterior occupancy of the arc leaving (t, u) with
    symbol k; only the blank arc and the y[u] arc carry mass.
    """
    y = _check_labels(post, y)
    if ab is None:
        ab = forward_backward(post, y)
    log_p = sequence_log_prob(post, y, ab)
    if not math.isfinite(log_p):
        raise NonFiniteLossError(f"sequence log-probability is {log_p}")

    T, U = post.T, post.U
    blank, emit = _arc_scores(post, y)
    grad = np.zeros_like(post.log_probs)

    next_beta = np.full((T, U + 1), -np.inf)
    next_beta[:-1] = ab.beta[1:]
    next_beta[T - 1, U] = 0.0
    grad[:, :, post.blank_id] = np.exp(ab.alpha + blank + next_beta - log_p)

    if U:
        occupancy = np.exp(ab.alpha[:, :U] + emit + ab.beta[:, 1:] - log_p)
        grad[:, np.arange(U), list(y)] = occupancy
    return grad


def logit_grad(post: LogPosteriorLattice, grad_log_probs: np.ndarray) -> np.ndarray:
    """Chain d/d log P(k|t,u) through the temperature log-softmax to raw logits."""
    probs = softmax(post.log_probs, axis=-1)
    row_sums = grad_log_probs.sum(axis=-1, keepdims=True)
    return (grad_log_probs - probs * row_sums) / post.temperature


def rnnt_loss_and_grad(
    lattice: LogitLattice, y: Sequence[int], temperature: float = 1.0
) -> tuple[float, np.ndarray]:
    """Negative log posterior and its gradient w.r.t. the raw logits."""
    post = normalize(lattice, temperature)
    ab = forward_backward(post, y)
    loss = -sequence_log_prob(post, y, ab)
    if not math.isfinite(loss):
        raise NonFiniteLossError(f"RNN-T loss is {loss}")
    grad = logit_grad(post, -log_prob_grad(post, y, ab))
    return loss, grad


def exact_log_prob(
    scorer: "TransducerScorer",
    features: np.ndarray,
    tokens: Sequence[int],
    temperature: float = 1.0,
) -> float:
    """Score one label sequence exactly by feeding it back through the model."""
    lattice = scorer.lattice(features, tokens)
    return sequence_log_prob(normalize(lattice, temperature), tokens)


def enumerate_alignments(T: int, U: int) -> list[AlignmentPath]:
    """All C(T-1+U, U) paths; the terminal blank is fixed at the end."""
    if T < 1 or U < 0:
        raise InvalidArgumentError(f"need T>=1 and U>=0, got T={T}, U={U}")
    if T + U > MAX_ENUMERATION_LENGTH:
        raise SizeLimitError(f"T+U={T + U} exceeds enumeration cap {MAX_ENUMERATION_LENGTH}")

    free = T - 1 + U
    paths = []
    for label_slots in itertools.combinations(range(free), U):
        symbols: list[int | None] = [None] * free
        for u, slot in enumerate(label_slots):
            symbols[slot] = u
        paths.append(AlignmentPath(symbols=(*symbols, None)))
    return paths
