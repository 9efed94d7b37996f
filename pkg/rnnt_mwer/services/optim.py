"""Adam with the warm-up / constant / exponential-decay learning-rate schedule."""

import math
from dataclasses import dataclass, replace

import numpy as np

from rnnt_mwer.core.config import TrainSchedule
from rnnt_mwer.core.errors import InvalidInputError

Tensors = dict[str, np.ndarray]


def lr_at(schedule: TrainSchedule, step: int) -> float:
    """
    Learning rate for a 1-based update count.

    Linear from 0 to lr_constant over warm-up, flat for the plateau, then
    lr_constant * (lr_final / lr_constant) ** fraction over the decay; held at
    lr_final afterwards.
    """
    if step < 0:
        raise InvalidInputError(f"step must be non-negative, got {step}")
    lr_c, lr_f = schedule.lr_constant, schedule.lr_final
    if step < schedule.warmup_steps:
        return lr_c * step / schedule.warmup_steps
    step -= schedule.warmup_steps
    if step <= schedule.constant_steps:
        return lr_c
    step -= schedule.constant_steps
    if lr_c == 0:
        return 0.0
    if step < schedule.decay_steps:
        return lr_c * (lr_f / lr_c) ** (step / schedule.decay_steps)
    return lr_f


@dataclass(frozen=True, eq=False)
class AdamState:
    """Per-tensor moments and the update count."""

    first_moment: Tensors
    second_moment: Tensors
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: Tensors, **hyper: float) -> "AdamState":
        return cls(
            first_moment={k: np.zeros_like(v) for k, v in params.items()},
            second_moment={k: np.zeros_like(v) for k, v in params.items()},
            **hyper,
        )


def adam_step(
    state: AdamState, params: Tensors, grads: Tensors, lr: float
) -> tuple[Tensors, AdamState]:
    """One bias-corrected Adam update. Inputs are left untouched."""
    if params.keys() != grads.keys() or params.keys() != state.first_moment.keys():
        raise InvalidInputError("params, grads and optimizer state name different tensors")

    step = state.step + 1
    correction1 = 1.0 - state.beta1**step
    correction2 = 1.0 - state.beta2**step
    new_params: Tensors = {}
    first: Tensors = {}
    second: Tensors = {}
    for name, value in params.items():
        g = grads[name]
        if g.shape != value.shape or state.first_moment[name].shape != value.shape:
            raise InvalidInputError(f"shape mismatch for {name}: {g.shape} vs {value.shape}")
        m = state.beta1 * state.first_moment[name] + (1.0 - state.beta1) * g
        v = state.beta2 * state.second_moment[name] + (1.0 - state.beta2) * g * g
        update = (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        new_params[name] = value - lr * update
        first[name] = m
        second[name] = v
    return new_params, replace(state, first_moment=first, second_moment=second, step=step)


def clip_grad_norm(grads: Tensors, max_norm: float | None) -> tuple[Tensors, float]:
    """Rescale so the global L2 norm is at most ``max_norm``. Returns (grads, norm)."""
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if max_norm is None or norm <= max_norm:
        return grads, norm
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}, norm
