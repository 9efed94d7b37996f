"""Vocabulary document: token names with blank/EOS designations."""

from collections.abc import Iterable, Sequence

from pydantic import BaseModel, model_validator


class Vocabulary(BaseModel):
    """
    Output vocabulary of the transducer.

    Token ids are list positions. The blank is part of the K outputs; EOS,
    when enabled, is an ordinary label that ends a hypothesis.
    """

    tokens: list[str]
    blank: str = "<blank>"
    eos: str | None = None

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def check_designations(self) -> "Vocabulary":
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("token names must be unique")
        if len(self.tokens) < 2:
            raise ValueError("vocabulary needs the blank plus at least one label")
        if self.blank not in self.tokens:
            raise ValueError(f"blank {self.blank!r} is not in tokens")
        if self.eos is not None:
            if self.eos not in self.tokens:
                raise ValueError(f"eos {self.eos!r} is not in tokens")
            if self.eos == self.blank:
                raise ValueError("eos and blank must differ")
        return self

    @property
    def size(self) -> int:
        return len(self.tokens)

    @property
    def blank_id(self) -> int:
        return self.tokens.index(self.blank)

    @property
    def eos_id(self) -> int | None:
        return None if self.eos is None else self.tokens.index(self.eos)

    @property
    def label_ids(self) -> list[int]:
        """All non-blank ids, ascending."""
        return [i for i in range(self.size) if i != self.blank_id]

    def encode(self, names: Iterable[str]) -> tuple[int, ...]:
        """Map token names to ids. Raises KeyError naming the unknown token."""
        index = {name: i for i, name in enumerate(self.tokens)}
        ids = []
        for name in names:
            if name not in index:
                raise KeyError(f"unknown token {name!r}")
            ids.append(index[name])
        return tuple(ids)

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.tokens[i] for i in ids]

    def strip_eos(self, ids: Sequence[int]) -> tuple[int, ...]:
        """Drop EOS symbols before error counting."""
        eos_id = self.eos_id
        if eos_id is None:
            return tuple(ids)
        return tuple(i for i in ids if i != eos_id)

    def with_eos(self, ids: Sequence[int]) -> tuple[int, ...]:
        """Append EOS to a reference if EOS is enabled and absent."""
        eos_id = self.eos_id
        if eos_id is None or (ids and ids[-1] == eos_id):
            return tuple(ids)
        return (*ids, eos_id)
