"""Line records for dataset and N-best JSON-lines files."""

from typing import Literal

from pydantic import BaseModel, Field, field_validator


class UtteranceRecord(BaseModel):
    """One utterance: feature matrix and reference token names."""

    id: str
    features: list[list[float]] = Field(description="(T, F) row-major")
    reference: list[str]

    @field_validator("features")
    @classmethod
    def validate_features(cls, v: list[list[float]]) -> list[list[float]]:
        if not v:
            raise ValueError("features need at least one frame")
        width = len(v[0])
        if width == 0 or any(len(row) != width for row in v):
            raise ValueError("features must be a non-empty rectangular matrix")
        return v


class HypothesisRecord(BaseModel):
    """One N-best entry."""

    tokens: list[str]
    log_score: float
    score_source: Literal["beam", "exact"] = "beam"


class NBestRecord(BaseModel):
    """Decoded N-best list of one utterance, best first."""

    id: str
    hypotheses: list[HypothesisRecord]
    reference: list[str]

    @field_validator("hypotheses")
    @classmethod
    def validate_hypotheses(cls, v: list[HypothesisRecord]) -> list[HypothesisRecord]:
        if not v:
            raise ValueError("an N-best record needs at least one hypothesis")
        return v
