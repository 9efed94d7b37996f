"""Toolkit configuration with validation and defaults."""

import json
from functools import lru_cache
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from rnnt_mwer.core.errors import ConfigError


class ModelConfig(BaseModel):
    """Dimensions of the minimal transducer. Vocabulary size comes from the vocab file."""

    feature_dim: int = Field(default=8, gt=0)
    embed_dim: int = Field(default=8, gt=0)
    encoder_hidden: int = Field(default=16, gt=0)
    predictor_hidden: int = Field(default=16, gt=0)
    joint_dim: int = Field(default=16, gt=0)
    init_seed: int = 0


class DecodeConfig(BaseModel):
    """Beam search settings."""

    beam_size: int = Field(default=4, ge=1)
    temperature: float = Field(default=1.0, gt=0)
    max_symbols_per_frame: int = Field(default=10, ge=1)
    include_eos: bool = False
    # None = unbounded
    max_output_len: int | None = Field(default=None, ge=0)


class TrainSchedule(BaseModel):
    """Linear warm-up, constant plateau, exponential decay."""

    warmup_steps: int = Field(default=100, ge=0)
    constant_steps: int = Field(default=1000, ge=0)
    decay_steps: int = Field(default=1000, ge=0)
    lr_constant: float = Field(default=5e-4, ge=0)
    lr_final: float = Field(default=1e-5, ge=0)

    @model_validator(mode="after")
    def check_decay_target(self) -> "TrainSchedule":
        if self.lr_constant > 0 and self.lr_final <= 0:
            raise ValueError("lr_final must be positive when lr_constant is positive")
        return self


class RnntTrainConfig(BaseModel):
    """Maximum-likelihood training."""

    steps: int = Field(default=2000, ge=0)
    batch_size: int = Field(default=8, ge=1)
    schedule: TrainSchedule = TrainSchedule()
    max_grad_norm: float | None = Field(default=None, gt=0)
    seed: int = 0


class MwerTrainConfig(BaseModel):
    """MWER fine-tuning, shared by the on-the-fly and semi-on-the-fly loops."""

    epochs: int = Field(default=1, ge=1)
    batch_size: int = Field(default=8, ge=1)
    beam_size: int = Field(default=4, ge=1)
    nbest: int | None = Field(default=None, ge=1)
    schedule: TrainSchedule = TrainSchedule(
        warmup_steps=20, constant_steps=200, decay_steps=200, lr_constant=1e-5, lr_final=1e-6
    )
    score_temperature: float = Field(default=1.0, gt=0)
    add_reference: bool = False
    dev_every: int = Field(default=200, ge=1)
    persist_adam_state: bool = True
    max_grad_norm: float | None = Field(default=None, gt=0)
    seed: int = 0


class SemiPlanConfig(BaseModel):
    """Split/decode settings for semi-on-the-fly training."""

    splits: int = Field(default=8, ge=1)
    workers: int = Field(default=1, ge=1)
    resume: bool = False


class RescoreConfig(BaseModel):
    """Second-pass LM combination weight."""

    lm_weight: float = Field(default=0.3, ge=0)
    length_normalize: bool = True


class LMConfig(BaseModel):
    """External language model."""

    kind: str = "ngram"
    order: int = Field(default=3, ge=1)
    delta: float = Field(default=0.1, gt=0)

    @field_validator("kind")
    @classmethod
    def validate_kind(cls, v: str) -> str:
        """Validate LM kind is supported."""
        supported = {"ngram"}
        if v.lower() not in supported:
            raise ValueError(f"Unsupported LM kind: {v}. Supported: {supported}")
        return v.lower()


class SynthSpec(BaseModel):
    """Synthetic template task."""

    num_utts: int = Field(default=600, ge=1)
    vocab_size: int = Field(default=6, description="real tokens, excluding blank and EOS")
    min_tokens: int = Field(default=1, ge=0)
    max_tokens: int = Field(default=4, ge=0)
    min_frames_per_token: int = Field(default=2, ge=1)
    max_frames_per_token: int = Field(default=3, ge=1)
    feature_dim: int = Field(default=8, ge=1)
    noise: float = Field(default=0.3, ge=0)
    confusability: float = Field(default=0.0, ge=0, le=1)
    dev_fraction: float = Field(default=0.1, ge=0, lt=1)
    test_fraction: float = Field(default=0.1, ge=0, lt=1)
    eos: bool = False

    @model_validator(mode="after")
    def check_ranges(self) -> "SynthSpec":
        if self.min_tokens > self.max_tokens:
            raise ValueError("min_tokens exceeds max_tokens")
        if self.min_frames_per_token > self.max_frames_per_token:
            raise ValueError("min_frames_per_token exceeds max_frames_per_token")
        if self.dev_fraction + self.test_fraction >= 1:
            raise ValueError("dev_fraction + test_fraction must leave training data")
        return self


class Settings(BaseSettings):
    """Toolkit settings loaded from environment variables and an optional JSON file."""

    model_config = SettingsConfigDict(
        env_prefix="RNNT_MWER_",
        env_nested_delimiter="__",
        extra="ignore",
    )

    seed: int = 0
    log_level: str = "INFO"
    runs_dir: str = "./runs"

    model: ModelConfig = ModelConfig()
    decode: DecodeConfig = DecodeConfig()
    rnnt: RnntTrainConfig = RnntTrainConfig()
    mwer: MwerTrainConfig = MwerTrainConfig()
    semi: SemiPlanConfig = SemiPlanConfig()
    rescore: RescoreConfig = RescoreConfig()
    lm: LMConfig = LMConfig()
    synth: SynthSpec = SynthSpec()

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        supported = {"DEBUG", "INFO", "WARNING", "ERROR"}
        if v.upper() not in supported:
            raise ValueError(f"Unsupported log level: {v}. Supported: {supported}")
        return v.upper()


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


def load_settings(config_path: Path | str | None = None, **overrides: Any) -> Settings:
    """
    Build settings from an optional JSON file plus dotted-key overrides.

    Overrides use dotted paths (``decode.beam_size=16``) and win over the file.
    Validation failures are reported as ConfigError listing every field path.
    """
    data: dict[str, Any] = {}
    if config_path is not None:
        path = Path(config_path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read config {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config {path} must hold a JSON object")

    for dotted, value in overrides.items():
        if value is None:
            continue
        node = data
        *parents, leaf = dotted.split(".")
        for key in parents:
            node = node.setdefault(key, {})
        node[leaf] = value

    try:
        return Settings(**data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"Invalid configuration: {problems}") from e
