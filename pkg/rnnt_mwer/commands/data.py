"""Data commands: synthetic task generation, LM training and WER scoring."""

import argparse
import logging
from pathlib import Path

from rnnt_mwer.core.config import Settings
from rnnt_mwer.dependencies import get_dataset, get_vocab
from rnnt_mwer.models.reports import LMSummary, SynthSummary, WerReport
from rnnt_mwer.providers.factory import get_language_model
from rnnt_mwer.repositories.lm import LMRepository
from rnnt_mwer.repositories.nbest import NBestRepository
from rnnt_mwer.services.synth import gen_synth, write_synth
from rnnt_mwer.services.wer import compute_wer, oracle_hypothesis

logger = logging.getLogger(__name__)


def gen_synth_command(args: argparse.Namespace, settings: Settings) -> SynthSummary:
    dataset = gen_synth(settings.seed, settings.synth)
    write_synth(dataset, args.out)
    return SynthSummary(
        out_dir=str(args.out),
        vocab_size=settings.synth.vocab_size,
        eos=settings.synth.eos,
        train=len(dataset.train),
        dev=len(dataset.dev),
        test=len(dataset.test),
    )


def train_lm_command(args: argparse.Namespace, settings: Settings) -> LMSummary:
    vocab = get_vocab(args.data)
    utterances = get_dataset(args.data, args.split, vocab)
    sentences = [vocab.decode(vocab.strip_eos(u.reference)) for u in utterances]
    words = [t for t in vocab.tokens if t not in (vocab.blank, vocab.eos)]
    lm = get_language_model(settings.lm, sentences=sentences, vocabulary=words)
    LMRepository(args.out).save(lm)
    return LMSummary(name=lm.name, sentences=len(sentences), vocabulary_size=len(words), path=str(args.out))


def eval_wer_command(args: argparse.Namespace, settings: Settings) -> WerReport:
    """Top-1 (or oracle) WER of an N-best file against a dataset split."""
    vocab = get_vocab(args.data)
    refs = {u.id: u.reference for u in get_dataset(args.data, args.split, vocab)}
    lists = NBestRepository(args.hyps, vocab).load()
    if args.oracle:
        hyps = {
            n.utterance_id: oracle_hypothesis(n, refs.get(n.utterance_id), vocab.strip_eos) for n in lists
        }
    else:
        hyps = {n.utterance_id: n.hypotheses[0].tokens for n in lists}
    return compute_wer(hyps, refs, baseline_wer=args.baseline_wer, strip=vocab.strip_eos)


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser(
        "gen-synth",
        help="Generate the synthetic template task",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("--out", type=Path, required=True, help="Output directory")
    p.add_argument("--num-utts", dest="synth.num_utts", type=int, help="Number of utterances")
    p.add_argument("--vocab-size", dest="synth.vocab_size", type=int, help="Real tokens")
    p.add_argument("--feature-dim", dest="synth.feature_dim", type=int, help="Feature dimension")
    p.add_argument("--noise", dest="synth.noise", type=float, help="Noise standard deviation")
    p.add_argument("--confusability", dest="synth.confusability", type=float, help="Pair blending in [0, 1]")
    p.add_argument("--eos", dest="synth.eos", action="store_const", const=True, help="Add an EOS token")
    p.set_defaults(handler=gen_synth_command)

    p = subparsers.add_parser(
        "train-lm",
        help="Train the n-gram LM on reference transcripts",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("--data", type=Path, required=True, help="Dataset directory")
    p.add_argument("--split", default="train", help="Dataset split to count")
    p.add_argument("--out", type=Path, required=True, help="LM file")
    p.add_argument("--order", dest="lm.order", type=int, help="N-gram order")
    p.add_argument("--delta", dest="lm.delta", type=float, help="Add-delta constant")
    p.set_defaults(handler=train_lm_command)

    p = subparsers.add_parser(
        "eval-wer",
        help="Score an N-best file against references",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("--hyps", type=Path, required=True, help="N-best JSON-lines file")
    p.add_argument("--data", type=Path, required=True, help="Dataset directory")
    p.add_argument("--split", default="test", help="Dataset split holding the references")
    p.add_argument("--baseline-wer", type=float, help="WER to normalize against")
    p.add_argument("--oracle", action="store_true", help="Score the lowest-error hypothesis per list")
    p.set_defaults(handler=eval_wer_command)
