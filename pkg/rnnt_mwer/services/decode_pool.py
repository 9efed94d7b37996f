"""
Parallel decoding against a frozen parameter snapshot.

Each worker process builds its own TransducerModel once, from the snapshot
passed to the pool initializer. Utterances are independent, so the N-best
lists do not depend on the number of workers.
"""

import asyncio
import logging
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from rnnt_mwer.core.config import DecodeConfig
from rnnt_mwer.core.errors import EmptyResultError, InvalidArgumentError
from rnnt_mwer.providers.transducer import ModelParams, TransducerModel
from rnnt_mwer.repositories.dataset import Utterance
from rnnt_mwer.services.decoder import beam_search
from rnnt_mwer.services.mwer import NBestList

logger = logging.getLogger(__name__)

_worker_model: TransducerModel | None = None


def _init_worker(params: ModelParams) -> None:
    global _worker_model
    _worker_model = TransducerModel(params)


def decode_one(
    model: TransducerModel,
    utterance_id: str,
    features: np.ndarray,
    reference: tuple[int, ...],
    config: DecodeConfig,
    eos_id: int | None,
) -> NBestList | None:
    try:
        return beam_search(model, features, config, utterance_id, reference, eos_id)
    except EmptyResultError as e:
        logger.warning(f"No hypotheses for {utterance_id}: {e}")
        return None


def _decode_in_worker(
    utterance_id: str,
    features: np.ndarray,
    reference: tuple[int, ...],
    config: DecodeConfig,
    eos_id: int | None,
) -> NBestList | None:
    assert _worker_model is not None, "worker used before initialization"
    return decode_one(_worker_model, utterance_id, features, reference, config, eos_id)


async def decode_utterances(
    params: ModelParams,
    utterances: Sequence[Utterance],
    config: DecodeConfig,
    eos_id: int | None = None,
    workers: int = 1,
    references: Sequence[tuple[int, ...]] | None = None,
) -> list[NBestList | None]:
    """
    Beam-search every utterance. Results follow the input order.

    ``None`` marks an utterance whose beam was pruned empty. ``references``
    overrides the references stored on the N-best lists (EOS-extended ones,
    for instance).
    """
    if workers < 1:
        raise InvalidArgumentError(f"workers must be at least 1, got {workers}")
    if references is None:
        references = [u.reference for u in utterances]
    if len(references) != len(utterances):
        raise InvalidArgumentError("one reference per utterance required")

    logger.info(f"Decoding {len(utterances)} utterances with {workers} worker(s)")
    if workers == 1:
        model = TransducerModel(params)
        return [
            decode_one(model, u.id, u.features, ref, config, eos_id)
            for u, ref in zip(utterances, references)
        ]

    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(
        max_workers=workers, initializer=_init_worker, initargs=(params,)
    ) as pool:
        tasks = [
            loop.run_in_executor(
                pool, _decode_in_worker, u.id, u.features, ref, config, eos_id
            )
            for u, ref in zip(utterances, references)
        ]
        return list(await asyncio.gather(*tasks))


def decode_all(
    params: ModelParams,
    utterances: Sequence[Utterance],
    config: DecodeConfig,
    eos_id: int | None = None,
    workers: int = 1,
    references: Sequence[tuple[int, ...]] | None = None,
) -> list[NBestList | None]:
    """Synchronous entry point for callers outside an event loop."""
    return asyncio.run(
        decode_utterances(params, utterances, config, eos_id, workers, references)
    )
