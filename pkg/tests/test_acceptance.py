"""Seeded end-to-end runs at acceptance scale. Deselected by default; run with -m slow."""

import statistics

import pytest

from rnnt_mwer.core.config import DecodeConfig, MwerTrainConfig, RnntTrainConfig, SynthSpec, TrainSchedule
from rnnt_mwer.models.reports import WerReport
from rnnt_mwer.providers.transducer import ModelDims, ModelParams, init_params
from rnnt_mwer.services.decode_pool import decode_all
from rnnt_mwer.services.gradcheck import run_gradcheck
from rnnt_mwer.services.synth import SynthDataset, gen_synth
from rnnt_mwer.services.trainer import SemiOnTheFlyPlan, train_mwer_on_the_fly, train_mwer_semi, train_rnnt
from rnnt_mwer.services.wer import compute_wer

pytestmark = pytest.mark.slow

SEEDS = (1, 2, 3)
# 512 train, 64 dev, 64 test utterances
TASK = SynthSpec(num_utts=640, vocab_size=4, confusability=0.6, noise=0.4)
SEED_TRAINING = RnntTrainConfig(
    steps=1500,
    batch_size=8,
    schedule=TrainSchedule(warmup_steps=50, constant_steps=900, decay_steps=550, lr_constant=5e-3, lr_final=5e-4),
)
FINE_TUNING = MwerTrainConfig(
    epochs=2,
    batch_size=8,
    beam_size=4,
    schedule=TrainSchedule(warmup_steps=10, constant_steps=80, decay_steps=38, lr_constant=5e-4, lr_final=5e-5),
)


def decode_config(dataset: SynthDataset) -> DecodeConfig:
    return DecodeConfig(beam_size=4, include_eos=dataset.vocab.eos_id is not None)


def seed_model(dataset: SynthDataset, seed: int) -> ModelParams:
    dims = ModelDims(feature_dim=TASK.feature_dim, vocab_size=dataset.vocab.size, blank_id=dataset.vocab.blank_id)
    config = SEED_TRAINING.model_copy(update={"seed": seed})
    params, _ = train_rnnt(dataset.train, init_params(seed, dims), config, dataset.vocab)
    return params


def fine_tune(dataset: SynthDataset, params: ModelParams, seed: int) -> ModelParams:
    config = FINE_TUNING.model_copy(update={"seed": seed})
    return train_mwer_on_the_fly(dataset.train, params, config, decode_config(dataset), dataset.vocab).params


def dev_report(dataset: SynthDataset, params: ModelParams) -> WerReport:
    lists = decode_all(params, dataset.dev, decode_config(dataset), dataset.vocab.eos_id)
    hyps = {u.id: () for u in dataset.dev}
    hyps.update({n.utterance_id: n.hypotheses[0].tokens for n in lists if n is not None})
    refs = {u.id: u.reference for u in dataset.dev}
    return compute_wer(hyps, refs, strip=dataset.vocab.strip_eos)


def test_single_utterance_is_memorized(small_dataset):
    utterance = small_dataset.train[0]
    dims = ModelDims(feature_dim=utterance.features.shape[1], vocab_size=small_dataset.vocab.size)
    schedule = TrainSchedule(warmup_steps=20, constant_steps=1000, decay_steps=980, lr_constant=1e-2, lr_final=1e-4)
    _, losses = train_rnnt([utterance], init_params(0, dims), RnntTrainConfig(steps=2000, batch_size=1, schedule=schedule))
    assert min(losses) < 0.01


def test_full_gradient_check():
    report = run_gradcheck(seed=0)
    counts = {r.suite: r.instances for r in report.results}
    assert counts["lattice"] == 100
    assert counts["mwer"] == 20
    assert all(r.passed for r in report.results), report


def test_mwer_fine_tuning_lowers_dev_wer():
    ratios = []
    for seed in SEEDS:
        dataset = gen_synth(seed, TASK)
        assert len(dataset.train) >= 500
        params = seed_model(dataset, seed)
        before = dev_report(dataset, params)
        assert before.wer > 0
        after = dev_report(dataset, fine_tune(dataset, params, seed))
        ratios.append(after.wer / before.wer)
    assert statistics.median(ratios) <= 0.98, ratios


def test_mwer_recovers_deletions_induced_by_eos():
    recovered = []
    for seed in SEEDS:
        plain = gen_synth(seed, TASK)
        with_eos = gen_synth(seed, TASK.model_copy(update={"eos": True}))
        baseline = dev_report(plain, seed_model(plain, seed)).deletions

        params = seed_model(with_eos, seed)
        induced = dev_report(with_eos, params).deletions
        assert induced > baseline, (seed, induced, baseline)

        after = dev_report(with_eos, fine_tune(with_eos, params, seed)).deletions
        recovered.append((induced - after) / (induced - baseline))
    assert statistics.median(recovered) >= 0.2, recovered


def test_eight_split_semi_run_tracks_on_the_fly_dev_wer(tmp_path):
    seed = SEEDS[0]
    dataset = gen_synth(seed, TASK)
    params = seed_model(dataset, seed)
    config = FINE_TUNING.model_copy(update={"seed": seed})
    decode = decode_config(dataset)

    on_the_fly = train_mwer_on_the_fly(dataset.train, params, config, decode, dataset.vocab, dev=dataset.dev)
    plan = SemiOnTheFlyPlan.build(
        [u.id for u in dataset.train],
        num_splits=8,
        batch_size=config.batch_size,
        epochs=config.epochs,
        workers=4,
        seed=config.seed,
    )
    semi = train_mwer_semi(dataset.train, params, plan, config, decode, dataset.vocab, str(tmp_path), dev=dataset.dev)

    assert semi.steps == on_the_fly.steps
    expected = on_the_fly.dev_history[-1].wer
    assert abs(semi.dev_history[-1].wer - expected) <= 0.05 * expected
