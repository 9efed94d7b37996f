"""N-gram LM file document."""

from typing import Literal

from pydantic import BaseModel, Field, model_validator


class LMDocument(BaseModel):
    """
    Count tables keyed by order, then by the space-joined context, then by
    the next word. The order-1 context is the empty string.
    """

    format_version: Literal[1] = 1
    order: int = Field(ge=1)
    delta: float = Field(gt=0)
    vocabulary: list[str]
    counts: dict[str, dict[str, dict[str, int]]]

    @model_validator(mode="after")
    def check_orders(self) -> "LMDocument":
        expected = {str(m) for m in range(1, self.order + 1)}
        if set(self.counts) != expected:
            raise ValueError(f"counts must hold orders {sorted(expected)}, got {sorted(self.counts)}")
        return self
