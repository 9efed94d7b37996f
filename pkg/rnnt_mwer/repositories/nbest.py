"""Repository for persisted N-best lists."""

import json
import logging
from collections.abc import Iterable
from pathlib import Path

from pydantic import ValidationError

from rnnt_mwer.core.errors import DataError, InvalidInputError
from rnnt_mwer.models.records import HypothesisRecord, NBestRecord
from rnnt_mwer.models.vocab import Vocabulary
from rnnt_mwer.services.mwer import Hypothesis, NBestList

logger = logging.getLogger(__name__)


class NBestRepository:
    """
    JSON-lines N-best file, one NBestRecord per line.

    Scores are written with shortest round-trip float formatting, so a list
    read back is bit-identical to the one written.
    """

    def __init__(self, path: Path | str, vocab: Vocabulary):
        self._path = Path(path)
        self._vocab = vocab

    @property
    def path(self) -> Path:
        return self._path

    def save(self, lists: Iterable[NBestList]) -> int:
        """Write all lists, replacing the file. Returns the count written."""
        self._path.parent.mkdir(parents=True, exist_ok=True)
        count = 0
        tmp = self._path.with_suffix(self._path.suffix + ".tmp")
        with tmp.open("w", encoding="utf-8") as f:
            for nbest in lists:
                record = NBestRecord(
                    id=nbest.utterance_id,
                    hypotheses=[
                        HypothesisRecord(
                            tokens=self._vocab.decode(h.tokens),
                            log_score=h.log_score,
                            score_source=h.source,
                        )
                        for h in nbest.hypotheses
                    ],
                    reference=self._vocab.decode(nbest.reference),
                )
                f.write(json.dumps(record.model_dump(mode="json")) + "\n")
                count += 1
        tmp.replace(self._path)
        logger.info(f"Saved {count} N-best lists to {self._path}")
        return count

    def load(self) -> list[NBestList]:
        try:
            lines = self._path.read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise DataError(f"Cannot read N-best file {self._path}: {e}") from e

        lists = []
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                record = NBestRecord.model_validate(json.loads(line))
                hyps = tuple(
                    Hypothesis(
                        tokens=self._vocab.encode(h.tokens),
                        log_score=h.log_score,
                        source=h.score_source,
                    )
                    for h in record.hypotheses
                )
                lists.append(NBestList(record.id, hyps, self._vocab.encode(record.reference)))
            except (json.JSONDecodeError, ValidationError, KeyError, InvalidInputError) as e:
                raise DataError(f"{self._path}:{lineno}: {e}") from e
        return lists
