"""Repository for a training run directory."""

import logging
from pathlib import Path

from pydantic import ValidationError

from rnnt_mwer.core.errors import DataError
from rnnt_mwer.models.manifest import RunManifest

logger = logging.getLogger(__name__)


class RunRepository:
    """
    Layout of one semi-on-the-fly run directory.

    manifest.json, plus per model M_{i,j}: model.e{i}.s{j}.json,
    adam.e{i}.s{j}.json and the decoded nbest.e{i}.s{j}.jsonl.
    """

    def __init__(self, run_dir: Path | str):
        self._dir = Path(run_dir)

    @property
    def run_dir(self) -> Path:
        return self._dir

    @property
    def manifest_path(self) -> Path:
        return self._dir / "manifest.json"

    def model_path(self, epoch: int, split: int) -> Path:
        return self._dir / f"model.e{epoch}.s{split}.json"

    def adam_path(self, epoch: int, split: int) -> Path:
        return self._dir / f"adam.e{epoch}.s{split}.json"

    def nbest_path(self, epoch: int, split: int) -> Path:
        return self._dir / f"nbest.e{epoch}.s{split}.jsonl"

    def has_manifest(self) -> bool:
        return self.manifest_path.exists()

    def load_manifest(self) -> RunManifest:
        try:
            return RunManifest.model_validate_json(self.manifest_path.read_text(encoding="utf-8"))
        except OSError as e:
            raise DataError(f"Cannot read run manifest {self.manifest_path}: {e}") from e
        except ValidationError as e:
            raise DataError(f"Invalid run manifest {self.manifest_path}: {e}") from e

    def save_manifest(self, manifest: RunManifest) -> None:
        self._dir.mkdir(parents=True, exist_ok=True)
        tmp = self.manifest_path.with_suffix(".json.tmp")
        tmp.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
        tmp.replace(self.manifest_path)
        logger.debug(f"Manifest updated: {len(manifest.completed)} split(s) complete")
