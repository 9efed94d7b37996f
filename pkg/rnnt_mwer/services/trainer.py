"""
Training loops.

Three drivers share one Adam optimizer and one learning-rate schedule:

- ``train_rnnt``: maximum likelihood over reference transcripts.
- ``train_mwer_on_the_fly``: decode each batch with the current model, then
  take an MWER step.
- ``train_mwer_semi``: split the data, decode a whole split with the frozen
  model across a worker pool, persist the N-best lists, then train through
  the split against the persisted lists.

Utterance order comes from one seeded permutation, so a semi plan whose
splits hold exactly one batch reproduces the on-the-fly trajectory.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from rnnt_mwer.core.config import DecodeConfig, MwerTrainConfig, RnntTrainConfig
from rnnt_mwer.core.errors import (
    DataError,
    EmptyResultError,
    InvalidArgumentError,
    InvalidInputError,
    NonFiniteLossError,
)
from rnnt_mwer.models.manifest import CompletedSplit, RunManifest
from rnnt_mwer.models.vocab import Vocabulary
from rnnt_mwer.providers.transducer import ModelParams, TransducerModel, backward_lattice, forward_lattice
from rnnt_mwer.repositories.checkpoint import CheckpointRepository
from rnnt_mwer.repositories.dataset import Utterance
from rnnt_mwer.repositories.manifest import RunRepository
from rnnt_mwer.repositories.nbest import NBestRepository
from rnnt_mwer.services.decode_pool import decode_all, decode_one
from rnnt_mwer.services.lattice import exact_log_prob, rnnt_loss_and_grad
from rnnt_mwer.services.mwer import Hypothesis, NBestList, mwer_full_grad, mwer_loss
from rnnt_mwer.services.optim import AdamState, Tensors, adam_step, clip_grad_norm, lr_at
from rnnt_mwer.services.rescore import rnnt_rescore
from rnnt_mwer.services.wer import top1_wer

logger = logging.getLogger(__name__)

Strip = Callable[[Sequence[int]], Sequence[int]]


@dataclass(frozen=True)
class DevMetrics:
    """Dev-set monitoring snapshot. The MWER loss is the mean expected errors."""

    step: int
    expected_errors: float
    mwer_loss: float
    wer: float
    deletions: int
    utterances: int


@dataclass
class MwerRunResult:
    params: ModelParams
    losses: list[float] = field(default_factory=list)
    dev_history: list[DevMetrics] = field(default_factory=list)
    skipped: int = 0
    steps: int = 0


def epoch_order(ids: Sequence[str], seed: int) -> list[str]:
    """Seeded permutation of utterance ids."""
    perm = np.random.default_rng(seed).permutation(len(ids))
    return [ids[i] for i in perm]


def make_batches(order: Sequence[str], batch_size: int) -> list[list[str]]:
    if batch_size < 1:
        raise InvalidArgumentError(f"batch_size must be at least 1, got {batch_size}")
    return [list(order[i : i + batch_size]) for i in range(0, len(order), batch_size)]


def _references(dataset: Sequence[Utterance], vocab: Vocabulary | None) -> dict[str, tuple[int, ...]]:
    if vocab is None:
        return {u.id: u.reference for u in dataset}
    return {u.id: vocab.with_eos(u.reference) for u in dataset}


def _zeros(params: ModelParams) -> Tensors:
    return {k: np.zeros_like(v) for k, v in params.tensors().items()}


def _accumulate(total: Tensors, grads: ModelParams) -> None:
    for name, value in grads.tensors().items():
        total[name] += value


def _apply(
    params: ModelParams,
    state: AdamState,
    grads: Tensors,
    lr: float,
    max_grad_norm: float | None,
) -> tuple[ModelParams, AdamState]:
    grads, norm = clip_grad_norm(grads, max_grad_norm)
    if not math.isfinite(norm):
        raise NonFiniteLossError(f"gradient norm is {norm}")
    new_tensors, state = adam_step(state, params.tensors(), grads, lr)
    return params.with_tensors(new_tensors), state


def _check_dataset(dataset: Sequence[Utterance]) -> dict[str, Utterance]:
    if not dataset:
        raise InvalidInputError("training set is empty")
    by_id = {u.id: u for u in dataset}
    if len(by_id) != len(dataset):
        raise InvalidInputError("training set has duplicate utterance ids")
    return by_id


def train_rnnt(
    dataset: Sequence[Utterance],
    params: ModelParams,
    config: RnntTrainConfig,
    vocab: Vocabulary | None = None,
) -> tuple[ModelParams, list[float]]:
    """
    Maximum-likelihood training. Returns the trained params and the per-step
    mean loss in nats.

    Each pass over the data uses a fresh permutation seeded by
    ``config.seed + pass``. References get EOS appended when the vocabulary
    defines one.
    """
    by_id = _check_dataset(dataset)
    ids = [u.id for u in dataset]
    refs = _references(dataset, vocab)
    state = AdamState.zeros_like(params.tensors())
    losses: list[float] = []
    pending: list[list[str]] = []
    passes = 0

    for step in range(1, config.steps + 1):
        if not pending:
            pending = make_batches(epoch_order(ids, config.seed + passes), config.batch_size)
            passes += 1
        batch = pending.pop(0)

        grads = _zeros(params)
        batch_loss = 0.0
        for utt_id in batch:
            utt, y = by_id[utt_id], refs[utt_id]
            lattice = forward_lattice(params, utt.features, y)
            try:
                loss, grad_logits = rnnt_loss_and_grad(lattice, y)
            except NonFiniteLossError as e:
                raise NonFiniteLossError(str(e), utt_id) from e
            _accumulate(grads, backward_lattice(params, utt.features, y, grad_logits))
            batch_loss += loss

        scale = 1.0 / len(batch)
        grads = {k: v * scale for k, v in grads.items()}
        params, state = _apply(params, state, grads, lr_at(config.schedule, step), config.max_grad_norm)
        losses.append(batch_loss * scale)
        logger.debug(f"rnnt step {step}: loss {losses[-1]:.6f}")
        if step % 100 == 0:
            logger.info(f"rnnt step {step}/{config.steps}: loss {losses[-1]:.4f}")

    return params, losses


def _mwer_decode_config(decode: DecodeConfig, config: MwerTrainConfig) -> DecodeConfig:
    return decode.model_copy(update={"beam_size": config.beam_size})


def _utterance_mwer(
    params: ModelParams,
    utt: Utterance,
    nbest: NBestList,
    config: MwerTrainConfig,
    strip: Strip,
) -> tuple[Tensors, float]:
    """Summed parameter gradient over every hypothesis of one utterance."""
    hyps = nbest.hypotheses[: config.nbest] if config.nbest else nbest.hypotheses
    if config.add_reference and nbest.reference not in {h.tokens for h in hyps}:
        score = exact_log_prob(
            TransducerModel(params), utt.features, nbest.reference, config.score_temperature
        )
        hyps = (*hyps, Hypothesis(nbest.reference, score, source="exact"))
    nbest = NBestList.build(nbest.utterance_id, hyps, nbest.reference)

    result = mwer_full_grad(
        lambda tokens: forward_lattice(params, utt.features, tokens),
        nbest,
        temperature=config.score_temperature,
        strip=strip,
    )
    grads = _zeros(params)
    for hyp, grad_logits in zip(result.nbest.hypotheses, result.per_hypothesis_lattice_grads):
        if not grad_logits.any():
            continue
        _accumulate(grads, backward_lattice(params, utt.features, hyp.tokens, grad_logits))
    return grads, result.loss


def _mwer_step(
    params: ModelParams,
    state: AdamState,
    step: int,
    items: Sequence[tuple[Utterance, NBestList | None]],
    config: MwerTrainConfig,
    strip: Strip,
) -> tuple[ModelParams, AdamState, float | None, int]:
    """
    One update from a batch of (utterance, N-best) pairs in fixed order.

    Returns (params, state, mean loss or None, skipped count). A batch where
    every utterance is skipped leaves params and state untouched.
    """
    grads = _zeros(params)
    losses = []
    skipped = 0
    for utt, nbest in items:
        if nbest is None:
            logger.warning(f"Skipping {utt.id}: empty N-best list")
            skipped += 1
            continue
        try:
            utt_grads, loss = _utterance_mwer(params, utt, nbest, config, strip)
        except NonFiniteLossError as e:
            logger.warning(f"Skipping {utt.id}: {e}")
            skipped += 1
            continue
        for name, value in utt_grads.items():
            grads[name] += value
        losses.append(loss)

    if not losses:
        return params, state, None, skipped
    scale = 1.0 / len(losses)
    grads = {k: v * scale for k, v in grads.items()}
    params, state = _apply(params, state, grads, lr_at(config.schedule, step), config.max_grad_norm)
    return params, state, sum(losses) * scale, skipped


def evaluate_dev(
    params: ModelParams,
    dev: Sequence[Utterance],
    decode: DecodeConfig,
    vocab: Vocabulary,
    score_temperature: float = 1.0,
    step: int = 0,
) -> DevMetrics:
    """Decode the dev set; report mean expected errors over exact scores and top-1 WER."""
    model = TransducerModel(params)
    refs = _references(dev, vocab)
    expected = []
    lists = []
    for utt in dev:
        nbest = decode_one(model, utt.id, utt.features, refs[utt.id], decode, vocab.eos_id)
        if nbest is None:
            continue
        lists.append(nbest)
        rescored = rnnt_rescore(nbest, model, utt.features, score_temperature)
        finite = tuple(h for h in rescored.hypotheses if math.isfinite(h.log_score))
        if finite:
            _, errors = mwer_loss(NBestList(utt.id, finite, rescored.reference), vocab.strip_eos)
            expected.append(errors)
    if not lists or not expected:
        raise EmptyResultError("no dev utterance produced a scorable N-best list")

    report = top1_wer(lists, strip=vocab.strip_eos)
    mean_expected = float(np.mean(expected))
    logger.info(
        f"dev @ step {step}: expected errors {mean_expected:.4f}, WER {report.wer:.4f}, "
        f"deletions {report.deletions}"
    )
    return DevMetrics(
        step=step,
        expected_errors=mean_expected,
        mwer_loss=mean_expected,
        wer=report.wer,
        deletions=report.deletions,
        utterances=len(lists),
    )


def train_mwer_on_the_fly(
    dataset: Sequence[Utterance],
    params: ModelParams,
    config: MwerTrainConfig,
    decode: DecodeConfig,
    vocab: Vocabulary,
    dev: Sequence[Utterance] | None = None,
) -> MwerRunResult:
    """
    MWER fine-tuning from a converged RNN-T seed, decoding every batch with
    the model being trained.

    Dev metrics are recorded before the first step, every ``dev_every``
    steps and after the last step.
    """
    by_id = _check_dataset(dataset)
    refs = _references(dataset, vocab)
    decode = _mwer_decode_config(decode, config)
    batches = make_batches(epoch_order([u.id for u in dataset], config.seed), config.batch_size)

    result = MwerRunResult(params=params)
    state = AdamState.zeros_like(params.tensors())
    if dev:
        result.dev_history.append(evaluate_dev(params, dev, decode, vocab, config.score_temperature, 0))

    for epoch in range(1, config.epochs + 1):
        logger.info(f"on-the-fly epoch {epoch}/{config.epochs}")
        for batch in batches:
            model = TransducerModel(result.params)
            items = [
                (by_id[i], decode_one(model, i, by_id[i].features, refs[i], decode, vocab.eos_id))
                for i in batch
            ]
            params, state, loss, skipped = _mwer_step(
                result.params, state, result.steps + 1, items, config, vocab.strip_eos
            )
            result.skipped += skipped
            if loss is None:
                continue
            result.params = params
            result.steps += 1
            result.losses.append(loss)
            logger.debug(f"mwer step {result.steps}: loss {loss:.6f}")
            if dev and result.steps % config.dev_every == 0:
                result.dev_history.append(
                    evaluate_dev(result.params, dev, decode, vocab, config.score_temperature, result.steps)
                )

    if dev and (not result.dev_history or result.dev_history[-1].step != result.steps):
        result.dev_history.append(
            evaluate_dev(result.params, dev, decode, vocab, config.score_temperature, result.steps)
        )
    if result.skipped:
        logger.warning(f"Skipped {result.skipped} utterance visits with no usable N-best list")
    return result


@dataclass(frozen=True)
class SemiOnTheFlyPlan:
    """
    Partition of the training set into K splits, decoded and trained in turn
    for ``epochs`` passes. Model M_{i,j} is the model after split j of
    epoch i; M_{1,0} is the seed and M_{i+1,0} = M_{i,K}.
    """

    splits: tuple[tuple[str, ...], ...]
    epochs: int = 1
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.splits or any(not s for s in self.splits):
            raise InvalidArgumentError("every split must hold at least one utterance")
        if self.epochs < 1 or self.workers < 1:
            raise InvalidArgumentError("epochs and workers must be at least 1")

    @classmethod
    def build(
        cls,
        utterance_ids: Sequence[str],
        num_splits: int,
        batch_size: int,
        epochs: int = 1,
        workers: int = 1,
        seed: int = 0,
    ) -> "SemiOnTheFlyPlan":
        """
        Cut the seeded permutation into ``num_splits`` contiguous runs of whole
        batches, so batches are the same ones the on-the-fly loop would see.
        """
        batches = make_batches(epoch_order(list(utterance_ids), seed), batch_size)
        if not 1 <= num_splits <= len(batches):
            raise InvalidArgumentError(
                f"splits must be between 1 and the number of batches ({len(batches)}), got {num_splits}"
            )
        groups = np.array_split(np.arange(len(batches)), num_splits)
        splits = tuple(
            tuple(utt_id for b in group for utt_id in batches[b]) for group in groups
        )
        return cls(splits=splits, epochs=epochs, workers=workers)

    @property
    def num_splits(self) -> int:
        return len(self.splits)

    @staticmethod
    def label(epoch: int, split: int) -> str:
        return f"M_{epoch},{split}"

    def validate(self, utterance_ids: Sequence[str]) -> None:
        """Raise unless the splits partition ``utterance_ids`` exactly."""
        flat = [i for s in self.splits for i in s]
        if len(flat) != len(set(flat)):
            raise InvalidInputError("an utterance appears in more than one split")
        missing = set(utterance_ids) - set(flat)
        extra = set(flat) - set(utterance_ids)
        if missing or extra:
            raise InvalidInputError(
                f"splits do not partition the dataset: missing {sorted(missing)}, unknown {sorted(extra)}"
            )


def _resume_point(
    runs: RunRepository, plan: SemiOnTheFlyPlan, checkpoints: CheckpointRepository, params: ModelParams
) -> tuple[RunManifest, ModelParams, AdamState | None]:
    manifest = runs.load_manifest()
    if [list(s) for s in plan.splits] != manifest.splits or plan.epochs != manifest.epochs:
        raise DataError(f"{runs.manifest_path}: plan does not match the run being resumed")
    last = manifest.last
    if last is None:
        return manifest, params, None
    resumed = checkpoints.load(runs.model_path(last.epoch, last.split), expected=params.dims)
    state = checkpoints.load_optimizer(runs.adam_path(last.epoch, last.split), params.dims)
    logger.info(f"Resuming after {SemiOnTheFlyPlan.label(last.epoch, last.split)} at step {last.step}")
    return manifest, resumed, state


def train_mwer_semi(
    dataset: Sequence[Utterance],
    params: ModelParams,
    plan: SemiOnTheFlyPlan,
    config: MwerTrainConfig,
    decode: DecodeConfig,
    vocab: Vocabulary,
    run_dir: str,
    dev: Sequence[Utterance] | None = None,
    resume: bool = False,
    seed_checkpoint: str | None = None,
) -> MwerRunResult:
    """
    Semi-on-the-fly MWER training.

    For each epoch i and split j:
    1. Decode S_j with the frozen M_{i,j-1} across ``plan.workers`` processes
    2. Persist the N-best lists and read them back
    3. Train through S_j batch by batch, rescoring hypotheses exactly
    4. Write M_{i,j}, its Adam state and the updated manifest

    With ``resume`` the run restarts after the last split in the manifest.
    """
    by_id = _check_dataset(dataset)
    plan.validate(list(by_id))
    refs = _references(dataset, vocab)
    decode = _mwer_decode_config(decode, config)
    runs = RunRepository(run_dir)
    checkpoints = CheckpointRepository()

    state: AdamState | None = None
    if resume and runs.has_manifest():
        manifest, params, state = _resume_point(runs, plan, checkpoints, params)
    else:
        manifest = RunManifest(
            seed_checkpoint=seed_checkpoint,
            splits=[list(s) for s in plan.splits],
            epochs=plan.epochs,
            workers=plan.workers,
            mwer=config,
            decode=decode,
        )
        runs.save_manifest(manifest)
    done = {(c.epoch, c.split) for c in manifest.completed}

    result = MwerRunResult(params=params)
    if manifest.last is not None:
        result.steps = manifest.last.step
        result.skipped = sum(c.skipped for c in manifest.completed)
    if state is None:
        state = AdamState.zeros_like(params.tensors())
    if dev:
        result.dev_history.append(
            evaluate_dev(result.params, dev, decode, vocab, config.score_temperature, result.steps)
        )

    for epoch in range(1, plan.epochs + 1):
        for j, split in enumerate(plan.splits, start=1):
            if (epoch, j) in done:
                continue
            label = SemiOnTheFlyPlan.label(epoch, j)
            logger.info(
                f"Decoding split {j}/{plan.num_splits} of epoch {epoch} "
                f"({len(split)} utterances) with {SemiOnTheFlyPlan.label(epoch, j - 1)}"
            )
            utterances = [by_id[i] for i in split]
            lists = decode_all(
                result.params,
                utterances,
                decode,
                vocab.eos_id,
                plan.workers,
                [refs[i] for i in split],
            )
            nbest_repo = NBestRepository(runs.nbest_path(epoch, j), vocab)
            nbest_repo.save(n for n in lists if n is not None)
            persisted = {n.utterance_id: n for n in nbest_repo.load()}
            unknown = set(persisted) - set(split)
            if unknown:
                raise DataError(f"{nbest_repo.path}: unknown utterance ids {sorted(unknown)}")

            if not config.persist_adam_state:
                state = AdamState.zeros_like(result.params.tensors())
            split_skipped = 0
            for batch in make_batches(split, config.batch_size):
                items = [(by_id[i], persisted.get(i)) for i in batch]
                params, state, loss, skipped = _mwer_step(
                    result.params, state, result.steps + 1, items, config, vocab.strip_eos
                )
                split_skipped += skipped
                if loss is None:
                    continue
                result.params = params
                result.steps += 1
                result.losses.append(loss)
                logger.debug(f"mwer step {result.steps}: loss {loss:.6f}")
            result.skipped += split_skipped

            checkpoint = checkpoints.save(result.params, runs.model_path(epoch, j))
            checkpoints.save_optimizer(state, runs.adam_path(epoch, j))
            manifest.completed.append(
                CompletedSplit(
                    epoch=epoch,
                    split=j,
                    step=result.steps,
                    skipped=split_skipped,
                    checkpoint=checkpoint.name,
                )
            )
            runs.save_manifest(manifest)
            logger.info(f"{label} written after step {result.steps}")
            if dev:
                result.dev_history.append(
                    evaluate_dev(result.params, dev, decode, vocab, config.score_temperature, result.steps)
                )

    return result
