"""Repository for utterance datasets and their vocabulary."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from rnnt_mwer.core.errors import DataError
from rnnt_mwer.models.records import UtteranceRecord
from rnnt_mwer.models.vocab import Vocabulary

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Utterance:
    """Feature matrix x with its reference label ids."""

    id: str
    features: np.ndarray
    reference: tuple[int, ...]

    @property
    def num_frames(self) -> int:
        return self.features.shape[0]


class VocabRepository:
    """Reads and writes the vocabulary JSON document."""

    def __init__(self, path: Path | str):
        self._path = Path(path)

    def load(self) -> Vocabulary:
        try:
            return Vocabulary.model_validate_json(self._path.read_text(encoding="utf-8"))
        except OSError as e:
            raise DataError(f"Cannot read vocabulary {self._path}: {e}") from e
        except ValidationError as e:
            raise DataError(f"Invalid vocabulary {self._path}: {e}") from e

    def save(self, vocab: Vocabulary) -> None:
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._path.write_text(vocab.model_dump_json(indent=2) + "\n", encoding="utf-8")


class DatasetRepository:
    """
    JSON-lines dataset, one UtteranceRecord per line.

    Token names are resolved through the vocabulary on load so the rest of
    the toolkit only sees label ids.
    """

    def __init__(self, path: Path | str, vocab: Vocabulary):
        self._path = Path(path)
        self._vocab = vocab

    def load(self) -> list[Utterance]:
        """Parse every line. Errors name the file and line number."""
        try:
            lines = self._path.read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise DataError(f"Cannot read dataset {self._path}: {e}") from e

        utterances = []
        seen: set[str] = set()
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                record = UtteranceRecord.model_validate(json.loads(line))
                reference = self._vocab.encode(record.reference)
            except (json.JSONDecodeError, ValidationError, KeyError) as e:
                raise DataError(f"{self._path}:{lineno}: {e}") from e
            if record.id in seen:
                raise DataError(f"{self._path}:{lineno}: duplicate utterance id {record.id}")
            if self._vocab.blank_id in reference:
                raise DataError(f"{self._path}:{lineno}: reference contains the blank token")
            seen.add(record.id)
            utterances.append(
                Utterance(
                    id=record.id,
                    features=np.array(record.features, dtype=np.float64),
                    reference=reference,
                )
            )
        logger.info(f"Loaded {len(utterances)} utterances from {self._path}")
        return utterances

    def save(self, utterances: list[Utterance]) -> None:
        self._path.parent.mkdir(parents=True, exist_ok=True)
        with self._path.open("w", encoding="utf-8") as f:
            for utt in utterances:
                record = UtteranceRecord(
                    id=utt.id,
                    features=utt.features.tolist(),
                    reference=self._vocab.decode(utt.reference),
                )
                f.write(json.dumps(record.model_dump(mode="json")) + "\n")
