"""Repository for model checkpoints and optimizer snapshots."""

import json
import logging
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from rnnt_mwer.core.errors import CheckpointError, InvalidInputError
from rnnt_mwer.models.checkpoint import CheckpointDocument, DimsHeader, OptimizerDocument
from rnnt_mwer.providers.transducer import PARAM_NAMES, ModelDims, ModelParams
from rnnt_mwer.services.optim import AdamState

logger = logging.getLogger(__name__)


def _flatten(tensors: dict[str, np.ndarray]) -> dict[str, list[float]]:
    return {name: tensors[name].ravel().tolist() for name in PARAM_NAMES}


def _unflatten(
    flat: dict[str, list[float]], dims: ModelDims, field: str
) -> dict[str, np.ndarray]:
    tensors = {}
    for name, shape in dims.shapes().items():
        if name not in flat:
            raise CheckpointError(f"{field}.{name}: missing")
        values = np.array(flat[name], dtype=np.float64)
        if values.size != int(np.prod(shape)):
            raise CheckpointError(
                f"{field}.{name}: {values.size} values, expected {int(np.prod(shape))} for {shape}"
            )
        if not np.all(np.isfinite(values)):
            raise CheckpointError(f"{field}.{name}: non-finite value")
        tensors[name] = values.reshape(shape)
    extra = set(flat) - set(PARAM_NAMES)
    if extra:
        raise CheckpointError(f"{field}: unknown tensors {sorted(extra)}")
    return tensors


def _read(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise CheckpointError(f"Cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise CheckpointError(f"{path}: not valid JSON ({e})") from e


def _validation_paths(e: ValidationError) -> str:
    return "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())


def _write(path: Path, document: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(document) + "\n", encoding="utf-8")
    tmp.replace(path)


class CheckpointRepository:
    """Single-JSON-document checkpoints; save then load is bit-exact."""

    def save(self, params: ModelParams, path: Path | str) -> Path:
        path = Path(path)
        document = CheckpointDocument(
            dims=DimsHeader(**vars(params.dims)),
            params=_flatten(params.tensors()),
        )
        _write(path, document.model_dump(mode="json"))
        logger.info(f"Checkpoint written to {path}")
        return path

    def load(self, path: Path | str, expected: ModelDims | None = None) -> ModelParams:
        """Load and validate. ``expected`` rejects a checkpoint with other dims."""
        path = Path(path)
        try:
            document = CheckpointDocument.model_validate(_read(path))
        except ValidationError as e:
            raise CheckpointError(f"{path}: {_validation_paths(e)}") from e

        try:
            dims = ModelDims(**document.dims.model_dump())
        except InvalidInputError as e:
            raise CheckpointError(f"{path}: dims: {e}") from e
        if expected is not None and dims != expected:
            mismatched = [
                f"dims.{k}: checkpoint {v}, configured {getattr(expected, k)}"
                for k, v in vars(dims).items()
                if getattr(expected, k) != v
            ]
            raise CheckpointError(f"{path}: {'; '.join(mismatched)}")
        return ModelParams.from_tensors(dims, _unflatten(document.params, dims, "params"))

    def save_optimizer(self, state: AdamState, path: Path | str) -> Path:
        path = Path(path)
        document = OptimizerDocument(
            step=state.step,
            beta1=state.beta1,
            beta2=state.beta2,
            eps=state.eps,
            first_moment=_flatten(state.first_moment),
            second_moment=_flatten(state.second_moment),
        )
        _write(path, document.model_dump(mode="json"))
        return path

    def load_optimizer(self, path: Path | str, dims: ModelDims) -> AdamState:
        path = Path(path)
        try:
            document = OptimizerDocument.model_validate(_read(path))
        except ValidationError as e:
            raise CheckpointError(f"{path}: {_validation_paths(e)}") from e
        return AdamState(
            first_moment=_unflatten(document.first_moment, dims, "first_moment"),
            second_moment=_unflatten(document.second_moment, dims, "second_moment"),
            step=document.step,
            beta1=document.beta1,
            beta2=document.beta2,
            eps=document.eps,
        )
