"""Run manifest for resumable semi-on-the-fly training."""

from typing import Literal

from pydantic import BaseModel, Field

from rnnt_mwer.core.config import DecodeConfig, MwerTrainConfig


class CompletedSplit(BaseModel):
    epoch: int = Field(ge=1)
    split: int = Field(ge=1)
    step: int = Field(ge=0)
    skipped: int = Field(default=0, ge=0)
    checkpoint: str


class RunManifest(BaseModel):
    """Plan, seeds and settings of a run plus every finished (epoch, split)."""

    format_version: Literal[1] = 1
    seed_checkpoint: str | None = None
    splits: list[list[str]]
    epochs: int = Field(ge=1)
    workers: int = Field(ge=1)
    mwer: MwerTrainConfig
    decode: DecodeConfig
    completed: list[CompletedSplit] = []

    @property
    def last(self) -> CompletedSplit | None:
        return self.completed[-1] if self.completed else None
