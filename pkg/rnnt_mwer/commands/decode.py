"""Decoding commands: beam search, rescoring and the decode benchmark."""

import argparse
import logging
import time
from pathlib import Path

from rnnt_mwer.core.config import RescoreConfig, Settings
from rnnt_mwer.core.errors import DataError, InvalidArgumentError
from rnnt_mwer.dependencies import get_dataset, get_decode_config, get_params, get_vocab
from rnnt_mwer.models.reports import DecodeBenchmark, RescoreReport, RescoreResult, WerReport
from rnnt_mwer.providers.factory import get_language_model, get_scorer
from rnnt_mwer.repositories.nbest import NBestRepository
from rnnt_mwer.services.decode_pool import decode_all
from rnnt_mwer.services.mwer import NBestList
from rnnt_mwer.services.rescore import lm_rescore, rnnt_rescore
from rnnt_mwer.services.wer import compute_wer

logger = logging.getLogger(__name__)


def decode_command(args: argparse.Namespace, settings: Settings) -> WerReport:
    """Beam-search a split, optionally write the N-best lists, report top-1 WER."""
    vocab = get_vocab(args.data)
    utterances = get_dataset(args.data, args.split, vocab)
    params = get_params(settings, vocab, args.model)
    lists = decode_all(params, utterances, get_decode_config(settings, vocab), vocab.eos_id, args.workers)

    decoded = [n for n in lists if n is not None]
    if args.nbest_out:
        NBestRepository(args.nbest_out, vocab).save(decoded)
    hyps = {u.id: () for u in utterances}
    hyps.update({n.utterance_id: n.hypotheses[0].tokens for n in decoded})
    return compute_wer(hyps, {u.id: u.reference for u in utterances}, strip=vocab.strip_eos)


def _lm_weights(raw: str | None, settings: Settings) -> list[float]:
    if raw is None:
        return [settings.rescore.lm_weight]
    try:
        weights = [float(w) for w in raw.split(",") if w.strip()]
    except ValueError as e:
        raise InvalidArgumentError(f"--lambda expects comma-separated numbers, got {raw!r}") from e
    if not weights or any(w < 0 for w in weights):
        raise InvalidArgumentError(f"LM weights must be non-negative, got {raw!r}")
    return weights


def rescore_command(args: argparse.Namespace, settings: Settings) -> RescoreReport:
    """
    Re-rank an N-best file.

    - rnnt: replace every score with the exact all-alignment score
    - lm: add the length-normalized LM score, one pass per --lambda value
    - both: rnnt first, then lm
    """
    use_rnnt = args.method in ("rnnt", "both")
    use_lm = args.method in ("lm", "both")
    if use_rnnt and args.model is None:
        raise InvalidArgumentError(f"--method {args.method} needs --model")
    if use_lm and args.lm is None:
        raise InvalidArgumentError(f"--method {args.method} needs --lm")
    weights = _lm_weights(args.lm_weights, settings) if use_lm else [None]
    if args.nbest_out and len(weights) > 1:
        raise InvalidArgumentError("--nbest-out needs a single --lambda value")

    vocab = get_vocab(args.data)
    utterances = {u.id: u for u in get_dataset(args.data, args.split, vocab)}
    refs = {i: u.reference for i, u in utterances.items()}
    lists = NBestRepository(args.nbest, vocab).load()
    unknown = sorted({n.utterance_id for n in lists} - set(utterances))
    if unknown:
        raise DataError(f"{args.nbest}: utterance ids not in the {args.split} split: {unknown}")

    def wer_of(nbests: list[NBestList], baseline: float | None = None) -> WerReport:
        hyps = {i: () for i in refs}
        hyps.update({n.utterance_id: n.hypotheses[0].tokens for n in nbests})
        return compute_wer(hyps, refs, baseline_wer=baseline, strip=vocab.strip_eos)

    baseline = wer_of(lists)
    baseline_wer = baseline.wer if baseline.wer > 0 else None

    if use_rnnt:
        scorer = get_scorer(get_params(settings, vocab, args.model))
        temperature = settings.decode.temperature
        lists = [rnnt_rescore(n, scorer, utterances[n.utterance_id].features, temperature) for n in lists]
    lm = get_language_model(settings.lm, path=args.lm, order=args.lm_order) if use_lm else None

    results = []
    final = lists
    for weight in weights:
        if lm is not None:
            config = RescoreConfig(lm_weight=weight, length_normalize=settings.rescore.length_normalize)
            final = [lm_rescore(n, lm, config, vocab) for n in lists]
        report = wer_of(final, baseline_wer)
        logger.info(f"{args.method} rescoring, lambda={weight}: WER {report.wer:.4f}")
        results.append(RescoreResult(lm_weight=weight, wer=report))

    if args.nbest_out:
        NBestRepository(args.nbest_out, vocab).save(final)
    return RescoreReport(method=args.method, baseline=baseline, results=results)


def decode_bench_command(args: argparse.Namespace, settings: Settings) -> DecodeBenchmark:
    """Time the decode phase with each worker count on the same frozen model."""
    vocab = get_vocab(args.data)
    utterances = get_dataset(args.data, args.split, vocab)
    if args.limit:
        utterances = utterances[: args.limit]
    params = get_params(settings, vocab, args.model)
    decode = get_decode_config(settings, vocab)
    try:
        worker_counts = sorted({int(w) for w in args.workers.split(",")})
    except ValueError as e:
        raise InvalidArgumentError(f"--workers expects comma-separated integers, got {args.workers!r}") from e

    seconds = {}
    outputs = []
    for workers in worker_counts:
        start = time.perf_counter()
        outputs.append(decode_all(params, utterances, decode, vocab.eos_id, workers))
        seconds[workers] = time.perf_counter() - start
        logger.info(f"{workers} worker(s): {seconds[workers]:.2f}s for {len(utterances)} utterances")
    return DecodeBenchmark(
        utterances=len(utterances),
        seconds_by_workers=seconds,
        identical_output=all(o == outputs[0] for o in outputs),
    )


def register(subparsers: argparse._SubParsersAction) -> None:
    p = subparsers.add_parser(
        "decode",
        help="Beam-search a dataset split into N-best lists",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("--data", type=Path, required=True, help="Dataset directory")
    p.add_argument("--split", default="test", help="Dataset split to decode")
    p.add_argument("--model", type=Path, required=True, help="Checkpoint")
    p.add_argument("--beam", dest="decode.beam_size", type=int, help="Beam size")
    p.add_argument("--temperature", dest="decode.temperature", type=float, help="Softmax temperature")
    p.add_argument("--max-symbols", dest="decode.max_symbols_per_frame", type=int, help="Labels per frame cap")
    p.add_argument("--nbest-out", type=Path, help="N-best JSON-lines file to write")
    p.add_argument("--workers", type=int, default=1, help="Decode processes")
    p.set_defaults(handler=decode_command)

    p = subparsers.add_parser(
        "rescore",
        help="Re-rank N-best lists with exact RNN-T scores and/or an LM",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("--data", type=Path, required=True, help="Dataset directory")
    p.add_argument("--split", default="test", help="Dataset split the N-best file covers")
    p.add_argument("--nbest", type=Path, required=True, help="N-best JSON-lines file")
    p.add_argument("--method", choices=["rnnt", "lm", "both"], default="both", help="Rescoring method")
    p.add_argument("--model", type=Path, help="Checkpoint (rnnt, both)")
    p.add_argument("--lm", type=Path, help="LM file (lm, both)")
    p.add_argument("--lambda", dest="lm_weights", help="LM weight, or a comma list to sweep")
    p.add_argument("--lm-order", type=int, help="Score with a lower-order view of the LM")
    p.add_argument("--temperature", dest="decode.temperature", type=float, help="Softmax temperature for rnnt rescoring")
    p.add_argument("--nbest-out", type=Path, help="Write the re-ranked lists")
    p.set_defaults(handler=rescore_command)

    p = subparsers.add_parser(
        "decode-bench",
        help="Time the decode phase across worker counts",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("--data", type=Path, required=True, help="Dataset directory")
    p.add_argument("--split", default="train", help="Dataset split to decode")
    p.add_argument("--model", type=Path, required=True, help="Checkpoint")
    p.add_argument("--workers", default="1,2,4", help="Comma-separated worker counts")
    p.add_argument("--limit", type=int, help="Decode only the first N utterances")
    p.set_defaults(handler=decode_bench_command)
