"""Shared fixtures: tiny models, vocabularies and synthetic datasets."""

import numpy as np
import pytest

from rnnt_mwer.core.config import SynthSpec
from rnnt_mwer.models.vocab import Vocabulary
from rnnt_mwer.providers.transducer import ModelDims, ModelParams, TransducerModel, init_params
from rnnt_mwer.services.synth import SynthDataset, gen_synth


def make_params(seed: int = 0, vocab_size: int = 4, feature_dim: int = 3, scale: float = 1.0) -> ModelParams:
    """Tiny model; ``scale`` > 1 sharpens the output distribution."""
    dims = ModelDims(
        feature_dim=feature_dim,
        vocab_size=vocab_size,
        embed_dim=3,
        encoder_hidden=4,
        predictor_hidden=4,
        joint_dim=4,
    )
    params = init_params(seed, dims)
    if scale != 1.0:
        params = params.with_tensors({"out_W": params.out_W * scale, "out_b": params.out_b * scale})
    return params


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_params() -> ModelParams:
    return make_params()


@pytest.fixture
def tiny_model(tiny_params: ModelParams) -> TransducerModel:
    return TransducerModel(tiny_params)


@pytest.fixture
def vocab() -> Vocabulary:
    return Vocabulary(tokens=["<blank>", "a", "b", "c"], blank="<blank>")


@pytest.fixture
def eos_vocab() -> Vocabulary:
    return Vocabulary(tokens=["<blank>", "a", "b", "c", "<eos>"], blank="<blank>", eos="<eos>")


@pytest.fixture
def small_spec() -> SynthSpec:
    return SynthSpec(
        num_utts=24,
        vocab_size=3,
        min_tokens=1,
        max_tokens=2,
        min_frames_per_token=1,
        max_frames_per_token=2,
        feature_dim=3,
        noise=0.5,
        confusability=0.5,
        dev_fraction=0.25,
        test_fraction=0.25,
    )


@pytest.fixture
def small_dataset(small_spec: SynthSpec) -> SynthDataset:
    return gen_synth(7, small_spec)
