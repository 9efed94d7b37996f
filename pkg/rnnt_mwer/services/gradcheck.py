"""Finite-difference checks of every hand-written gradient."""

import logging
from collections.abc import Callable

import numpy as np

from rnnt_mwer.models.reports import GradcheckReport, GradcheckResult
from rnnt_mwer.providers.transducer import ModelDims, ModelParams, backward_lattice, forward_lattice, init_params
from rnnt_mwer.services.lattice import (
    LogitLattice,
    log_prob_grad,
    logit_grad,
    normalize,
    rnnt_loss_and_grad,
    sequence_log_prob,
)
from rnnt_mwer.services.mwer import Hypothesis, NBestList, mwer_full_grad

logger = logging.getLogger(__name__)

STEP = 1e-5
GRAD_FLOOR = 1e-8
# lower bound on the relative-error denominator
DENOMINATOR_FLOOR = 1e-5


def central_difference(f: Callable[[np.ndarray], float], x: np.ndarray, h: float = STEP) -> np.ndarray:
    """(f(x + h e_i) - f(x - h e_i)) / 2h for every entry of x."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        orig = x[idx]
        x[idx] = orig + h
        plus = f(x.copy())
        x[idx] = orig - h
        minus = f(x.copy())
        x[idx] = orig
        grad[idx] = (plus - minus) / (2.0 * h)
    return grad


def relative_error(
    analytic: np.ndarray,
    numeric: np.ndarray,
    floor: float = GRAD_FLOOR,
    denominator_floor: float = DENOMINATOR_FLOOR,
) -> float:
    """Max |a - n| / max(|a|, |n|, denominator_floor) over entries where |a| exceeds ``floor``."""
    mask = np.abs(analytic) > floor
    if not mask.any():
        return 0.0
    a, n = analytic[mask], numeric[mask]
    return float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), denominator_floor)))


def random_lattice_instance(
    rng: np.random.Generator, max_T: int = 5, max_U: int = 4, max_K: int = 5
) -> tuple[LogitLattice, tuple[int, ...]]:
    """Random logits and label sequence, blank at index 0."""
    T = int(rng.integers(1, max_T + 1))
    U = int(rng.integers(0, max_U + 1))
    K = int(rng.integers(2, max_K + 1))
    values = rng.normal(scale=2.0, size=(T, U + 1, K))
    y = tuple(int(k) for k in rng.integers(1, K, size=U))
    return LogitLattice(values=values, blank_id=0), y


def tiny_params(rng: np.random.Generator) -> ModelParams:
    dims = ModelDims(
        feature_dim=2,
        vocab_size=int(rng.integers(3, 5)),
        embed_dim=2,
        encoder_hidden=3,
        predictor_hidden=3,
        joint_dim=3,
    )
    return init_params(int(rng.integers(0, 2**31)), dims)


def _param_grad_error(
    params: ModelParams, loss: Callable[[ModelParams], float], analytic: ModelParams
) -> float:
    worst = 0.0
    for name, value in params.tensors().items():
        numeric = central_difference(lambda x: loss(params.with_tensors({name: x})), value)
        worst = max(worst, relative_error(getattr(analytic, name), numeric))
    return worst


def check_lattice(instances: int = 100, seed: int = 0, tolerance: float = 1e-4) -> GradcheckResult:
    """log P(y|x) w.r.t. raw logits, through the temperature softmax."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        lattice, y = random_lattice_instance(rng)
        temperature = float(rng.uniform(0.5, 2.0))
        post = normalize(lattice, temperature)
        analytic = logit_grad(post, log_prob_grad(post, y))
        numeric = central_difference(
            lambda v: sequence_log_prob(normalize(LogitLattice(v), temperature), y), lattice.values
        )
        worst = max(worst, relative_error(analytic, numeric))
    return GradcheckResult(
        suite="lattice", instances=instances, max_relative_error=worst, tolerance=tolerance,
        passed=worst < tolerance,
    )


def check_model(instances: int = 5, seed: int = 0, tolerance: float = 1e-4) -> GradcheckResult:
    """RNN-T loss w.r.t. every model parameter."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        params = tiny_params(rng)
        features = rng.normal(size=(int(rng.integers(1, 4)), params.dims.feature_dim))
        y = tuple(int(k) for k in rng.integers(1, params.dims.vocab_size, size=int(rng.integers(0, 3))))

        def loss(p: ModelParams) -> float:
            return rnnt_loss_and_grad(forward_lattice(p, features, y), y)[0]

        _, grad_logits = rnnt_loss_and_grad(forward_lattice(params, features, y), y)
        analytic = backward_lattice(params, features, y, grad_logits)
        worst = max(worst, _param_grad_error(params, loss, analytic))
    return GradcheckResult(
        suite="model", instances=instances, max_relative_error=worst, tolerance=tolerance,
        passed=worst < tolerance,
    )


def random_nbest(rng: np.random.Generator, vocab_size: int, size: int = 3) -> NBestList:
    """Distinct random hypotheses of length 0..3 with placeholder scores."""
    seen: set[tuple[int, ...]] = set()
    while len(seen) < size:
        seen.add(tuple(int(k) for k in rng.integers(1, vocab_size, size=int(rng.integers(0, 4)))))
    reference = tuple(int(k) for k in rng.integers(1, vocab_size, size=int(rng.integers(1, 4))))
    hyps = [Hypothesis(tokens, 0.0) for tokens in sorted(seen)]
    return NBestList.build("gradcheck", hyps, reference)


def check_mwer(instances: int = 20, seed: int = 0, tolerance: float = 1e-3) -> GradcheckResult:
    """MWER loss over exact scores, through the lattices, w.r.t. model parameters."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        params = tiny_params(rng)
        features = rng.normal(size=(int(rng.integers(1, 4)), params.dims.feature_dim))
        nbest = random_nbest(rng, params.dims.vocab_size, size=int(rng.integers(2, 4)))

        def loss(p: ModelParams) -> float:
            return mwer_full_grad(lambda toks: forward_lattice(p, features, toks), nbest).loss

        result = mwer_full_grad(lambda toks: forward_lattice(params, features, toks), nbest)
        analytic = params.zeros_like().tensors()
        for hyp, grad_logits in zip(result.nbest.hypotheses, result.per_hypothesis_lattice_grads):
            for name, g in backward_lattice(params, features, hyp.tokens, grad_logits).tensors().items():
                analytic[name] = analytic[name] + g
        worst = max(worst, _param_grad_error(params, loss, params.with_tensors(analytic)))
    return GradcheckResult(
        suite="mwer", instances=instances, max_relative_error=worst, tolerance=tolerance,
        passed=worst < tolerance,
    )


def run_gradcheck(seed: int = 0, quick: bool = False) -> GradcheckReport:
    """Run every suite. ``quick`` shrinks instance counts for smoke runs."""
    scale = 10 if quick else 1
    results = [
        check_lattice(instances=100 // scale, seed=seed),
        check_model(instances=max(5 // scale, 1), seed=seed + 1),
        check_mwer(instances=20 // scale, seed=seed + 2),
    ]
    for r in results:
        log = logger.info if r.passed else logger.error
        log(f"gradcheck {r.suite}: max relative error {r.max_relative_error:.3e} (tol {r.tolerance:.0e})")
    return GradcheckReport(results=results)
