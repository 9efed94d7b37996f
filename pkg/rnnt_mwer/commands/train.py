"""Training commands: maximum likelihood and MWER fine-tuning."""

import argparse
import logging
from pathlib import Path

from rnnt_mwer.core.config import Settings
from rnnt_mwer.dependencies import get_checkpoint_repo, get_dataset, get_decode_config, get_params, get_vocab
from rnnt_mwer.models.reports import TrainingSummary
from rnnt_mwer.models.vocab import Vocabulary
from rnnt_mwer.repositories.dataset import Utterance
from rnnt_mwer.services.trainer import (
    SemiOnTheFlyPlan,
    evaluate_dev,
    train_mwer_on_the_fly,
    train_mwer_semi,
    train_rnnt,
)

logger = logging.getLogger(__name__)


def _dev_set(data_dir: Path, vocab: Vocabulary, skip: bool) -> list[Utterance]:
    if skip or not (data_dir / "dev.jsonl").exists():
        return []
    return get_dataset(data_dir, "dev", vocab)


def train_rnnt_command(args: argparse.Namespace, settings: Settings) -> TrainingSummary:
    vocab = get_vocab(args.data)
    train = get_dataset(args.data, "train", vocab)
    params = get_params(settings, vocab, args.init)
    params, losses = train_rnnt(train, params, settings.rnnt, vocab)
    checkpoint = get_checkpoint_repo().save(params, args.out)

    summary = TrainingSummary(
        mode="rnnt",
        steps=len(losses),
        final_loss=losses[-1] if losses else None,
        checkpoint=str(checkpoint),
    )
    dev = _dev_set(args.data, vocab, args.no_dev)
    if dev:
        metrics = evaluate_dev(params, dev, get_decode_config(settings, vocab), vocab)
        summary.dev_wer = [metrics.wer]
        summary.dev_expected_errors = [metrics.expected_errors]
    return summary


def train_mwer_command(args: argparse.Namespace, settings: Settings) -> TrainingSummary:
    """
    Fine-tune a seed model with MWER.

    ``--mode onthefly`` decodes every batch with the current model;
    ``--mode semi`` decodes whole splits ahead of training (see --splits,
    --workers) and keeps checkpoints plus a manifest in --run-dir.
    """
    vocab = get_vocab(args.data)
    train = get_dataset(args.data, "train", vocab)
    dev = _dev_set(args.data, vocab, args.no_dev)
    params = get_params(settings, vocab, args.model)
    decode = get_decode_config(settings, vocab)

    if args.mode == "semi":
        plan = SemiOnTheFlyPlan.build(
            [u.id for u in train],
            num_splits=settings.semi.splits,
            batch_size=settings.mwer.batch_size,
            epochs=settings.mwer.epochs,
            workers=settings.semi.workers,
            seed=settings.mwer.seed,
        )
        run_dir = args.run_dir or Path(settings.runs_dir) / "semi"
        result = train_mwer_semi(
            train,
            params,
            plan,
            settings.mwer,
            decode,
            vocab,
            str(run_dir),
            dev=dev,
            resume=settings.semi.resume,
            seed_checkpoint=str(args.model),
        )
    else:
        result = train_mwer_on_the_fly(train, params, settings.mwer, decode, vocab, dev=dev)

    checkpoint = get_checkpoint_repo().save(result.params, args.out)
    return TrainingSummary(
        mode=f"mwer-{args.mode}",
        steps=result.steps,
        final_loss=result.losses[-1] if result.losses else None,
        dev_expected_errors=[m.expected_errors for m in result.dev_history],
        dev_wer=[m.wer for m in result.dev_history],
        skipped_utterances=result.skipped,
        checkpoint=str(checkpoint),
    )


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser(
        "train-rnnt",
        help="Train a transducer by maximum likelihood",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("--data", type=Path, required=True, help="Dataset directory")
    p.add_argument("--out", type=Path, required=True, help="Checkpoint to write")
    p.add_argument("--init", type=Path, help="Checkpoint to start from")
    p.add_argument("--steps", dest="rnnt.steps", type=int, help="Update steps")
    p.add_argument("--batch-size", dest="rnnt.batch_size", type=int, help="Utterances per step")
    p.add_argument("--lr", dest="rnnt.schedule.lr_constant", type=float, help="Plateau learning rate")
    p.add_argument("--no-dev", action="store_true", help="Skip dev evaluation")
    p.set_defaults(handler=train_rnnt_command)

    p = subparsers.add_parser(
        "train-mwer",
        help="Fine-tune a seed model with the MWER loss",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("--data", type=Path, required=True, help="Dataset directory")
    p.add_argument("--model", type=Path, required=True, help="Seed checkpoint")
    p.add_argument("--out", type=Path, required=True, help="Checkpoint to write")
    p.add_argument("--mode", choices=["onthefly", "semi"], default="onthefly", help="Training mode")
    p.add_argument("--splits", dest="semi.splits", type=int, help="Number of splits K (semi)")
    p.add_argument("--epochs", dest="mwer.epochs", type=int, help="Passes over the data")
    p.add_argument("--workers", dest="semi.workers", type=int, help="Decode processes (semi)")
    p.add_argument("--beam", dest="mwer.beam_size", type=int, help="Beam size used to build N-best lists")
    p.add_argument("--batch-size", dest="mwer.batch_size", type=int, help="Utterances per step")
    p.add_argument("--add-reference", dest="mwer.add_reference", action="store_const", const=True,
                   help="Add the reference when decoding misses it")
    p.add_argument("--run-dir", type=Path, help="Run directory (semi); defaults to <runs_dir>/semi")
    p.add_argument("--resume", dest="semi.resume", action="store_const", const=True,
                   help="Continue the run recorded in the run directory")
    p.add_argument("--no-dev", action="store_true", help="Skip dev monitoring")
    p.set_defaults(handler=train_mwer_command)
