"""Wiring from settings to models, datasets and repositories."""

import logging
from pathlib import Path

from rnnt_mwer.core.config import DecodeConfig, Settings
from rnnt_mwer.models.vocab import Vocabulary
from rnnt_mwer.providers.transducer import ModelDims, ModelParams, init_params
from rnnt_mwer.repositories.checkpoint import CheckpointRepository
from rnnt_mwer.repositories.dataset import DatasetRepository, Utterance, VocabRepository

logger = logging.getLogger(__name__)

# Cached instances
_checkpoint_repo: CheckpointRepository | None = None


def get_checkpoint_repo() -> CheckpointRepository:
    """Get or create CheckpointRepository singleton."""
    global _checkpoint_repo
    if _checkpoint_repo is None:
        _checkpoint_repo = CheckpointRepository()
    return _checkpoint_repo


def get_vocab(data_dir: Path | str) -> Vocabulary:
    return VocabRepository(Path(data_dir) / "vocab.json").load()


def get_dataset(data_dir: Path | str, name: str, vocab: Vocabulary) -> list[Utterance]:
    """Load ``<data_dir>/<name>.jsonl``."""
    return DatasetRepository(Path(data_dir) / f"{name}.jsonl", vocab).load()


def model_dims(settings: Settings, vocab: Vocabulary) -> ModelDims:
    m = settings.model
    return ModelDims(
        feature_dim=m.feature_dim,
        vocab_size=vocab.size,
        blank_id=vocab.blank_id,
        embed_dim=m.embed_dim,
        encoder_hidden=m.encoder_hidden,
        predictor_hidden=m.predictor_hidden,
        joint_dim=m.joint_dim,
    )


def get_params(settings: Settings, vocab: Vocabulary, checkpoint: Path | str | None = None) -> ModelParams:
    """Load ``checkpoint`` checked against the configured dims, or initialize fresh."""
    dims = model_dims(settings, vocab)
    if checkpoint is None:
        logger.info(f"Initializing model with seed {settings.model.init_seed}")
        return init_params(settings.model.init_seed, dims)
    return get_checkpoint_repo().load(checkpoint, expected=dims)


def get_decode_config(settings: Settings, vocab: Vocabulary) -> DecodeConfig:
    """Decode settings with EOS handling switched on when the vocabulary has EOS."""
    if vocab.eos is not None and not settings.decode.include_eos:
        return settings.decode.model_copy(update={"include_eos": True})
    return settings.decode
