import math

import numpy as np
import pytest

from rnnt_mwer.core.config import MwerTrainConfig, RnntTrainConfig, TrainSchedule
from rnnt_mwer.core.errors import InvalidInputError
from rnnt_mwer.services.optim import AdamState, adam_step, clip_grad_norm, lr_at

SCHEDULE = TrainSchedule(warmup_steps=10, constant_steps=20, decay_steps=30, lr_constant=1e-3, lr_final=1e-5)


def test_schedule_phases():
    assert lr_at(SCHEDULE, 0) == 0.0
    assert lr_at(SCHEDULE, 5) == pytest.approx(5e-4)
    assert lr_at(SCHEDULE, 10) == 1e-3
    assert lr_at(SCHEDULE, 30) == 1e-3
    assert 1e-5 < lr_at(SCHEDULE, 45) < 1e-3
    assert lr_at(SCHEDULE, 60) == 1e-5
    assert lr_at(SCHEDULE, 10_000) == 1e-5


def test_schedule_is_continuous_and_monotone_in_decay():
    assert lr_at(SCHEDULE, 31) == pytest.approx(1e-3, rel=0.2)
    assert lr_at(SCHEDULE, 59) == pytest.approx(1e-5, rel=0.2)
    decay = [lr_at(SCHEDULE, s) for s in range(30, 61)]
    assert all(a >= b for a, b in zip(decay, decay[1:]))


def test_schedule_rejects_negative_step():
    with pytest.raises(InvalidInputError):
        lr_at(SCHEDULE, -1)


def test_default_rates():
    assert RnntTrainConfig().schedule.lr_constant == 5e-4
    assert RnntTrainConfig().schedule.lr_final == 1e-5
    assert MwerTrainConfig().schedule.lr_constant == 1e-5
    assert MwerTrainConfig().schedule.lr_final == 1e-6


def test_zero_gradient_leaves_params_unchanged():
    params = {"w": np.array([1.0, -2.0])}
    state = AdamState.zeros_like(params)
    new, state = adam_step(state, params, {"w": np.zeros(2)}, lr=1e-2)
    assert np.array_equal(new["w"], params["w"])
    assert state.step == 1


def test_scalar_adam_matches_reference_recursion():
    rng = np.random.default_rng(0)
    params = {"w": np.array([0.5])}
    state = AdamState.zeros_like(params)
    w, m, v = 0.5, 0.0, 0.0
    for t in range(1, 101):
        g = float(rng.normal())
        lr = lr_at(SCHEDULE, t)
        params, state = adam_step(state, params, {"w": np.array([g])}, lr)

        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        w -= lr * (m / (1 - 0.9**t)) / (math.sqrt(v / (1 - 0.999**t)) + 1e-8)
        assert abs(params["w"][0] - w) < 1e-12
    assert state.step == 100


def test_adam_does_not_mutate_inputs():
    params = {"w": np.ones(3)}
    grads = {"w": np.full(3, 0.5)}
    state = AdamState.zeros_like(params)
    adam_step(state, params, grads, lr=0.1)
    assert np.array_equal(params["w"], np.ones(3))
    assert not state.first_moment["w"].any()


def test_adam_rejects_mismatched_tensors():
    params = {"w": np.ones(3)}
    state = AdamState.zeros_like(params)
    with pytest.raises(InvalidInputError):
        adam_step(state, params, {"u": np.ones(3)}, lr=0.1)
    with pytest.raises(InvalidInputError):
        adam_step(state, params, {"w": np.ones(2)}, lr=0.1)


def test_clip_grad_norm():
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    clipped, norm = clip_grad_norm(grads, 1.0)
    assert norm == 5.0
    assert math.sqrt(sum(float(g @ g) for g in clipped.values())) == pytest.approx(1.0)
    same, _ = clip_grad_norm(grads, None)
    assert same is grads
    same, _ = clip_grad_norm(grads, 10.0)
    assert same is grads
