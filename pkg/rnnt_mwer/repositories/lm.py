"""Repository for n-gram LM files."""

import logging
from pathlib import Path

from pydantic import ValidationError

from rnnt_mwer.core.errors import DataError
from rnnt_mwer.models.lm import LMDocument
from rnnt_mwer.providers.ngram import NGramLM

logger = logging.getLogger(__name__)


class LMRepository:
    """Reads and writes LMDocument JSON files."""

    def __init__(self, path: Path | str):
        self._path = Path(path)

    def save(self, lm: NGramLM) -> None:
        document = LMDocument(
            order=lm.order,
            delta=lm.delta,
            vocabulary=lm.vocabulary,
            counts={
                str(m): {" ".join(context): dict(nexts) for context, nexts in table.items()}
                for m, table in lm.counts.items()
            },
        )
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._path.write_text(document.model_dump_json(indent=1) + "\n", encoding="utf-8")
        logger.info(f"LM written to {self._path}")

    def load(self) -> NGramLM:
        try:
            document = LMDocument.model_validate_json(self._path.read_text(encoding="utf-8"))
        except OSError as e:
            raise DataError(f"Cannot read LM {self._path}: {e}") from e
        except ValidationError as e:
            raise DataError(f"Invalid LM {self._path}: {e}") from e

        counts = {
            int(m): {
                tuple(context.split(" ")) if context else (): nexts
                for context, nexts in table.items()
            }
            for m, table in document.counts.items()
        }
        return NGramLM(document.order, document.delta, document.vocabulary, counts)
