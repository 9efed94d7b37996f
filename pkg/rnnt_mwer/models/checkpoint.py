"""Checkpoint and optimizer snapshot documents."""

from typing import Literal

from pydantic import BaseModel, Field

CHECKPOINT_FORMAT_VERSION = 1


class DimsHeader(BaseModel):
    """Dimension header, checked against the configured model on load."""

    feature_dim: int = Field(gt=0)
    vocab_size: int = Field(ge=2)
    blank_id: int = Field(ge=0)
    embed_dim: int = Field(gt=0)
    encoder_hidden: int = Field(gt=0)
    predictor_hidden: int = Field(gt=0)
    joint_dim: int = Field(gt=0)


class CheckpointDocument(BaseModel):
    """Named parameter arrays as flat row-major float lists."""

    format_version: Literal[1] = CHECKPOINT_FORMAT_VERSION
    dims: DimsHeader
    params: dict[str, list[float]]


class OptimizerDocument(BaseModel):
    """Adam moments so a resumed run continues the same optimization."""

    format_version: Literal[1] = CHECKPOINT_FORMAT_VERSION
    step: int = Field(ge=0)
    beta1: float
    beta2: float
    eps: float
    first_moment: dict[str, list[float]]
    second_moment: dict[str, list[float]]
