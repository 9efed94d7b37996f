"""Corpus word error rate."""

from collections.abc import Callable, Iterable, Mapping, Sequence

from rnnt_mwer.core.errors import DataError, InvalidArgumentError
from rnnt_mwer.models.reports import WerReport
from rnnt_mwer.services.mwer import ErrorCount, NBestList, edit_distance

Strip = Callable[[Sequence[int]], Sequence[int]]


def _identity(tokens: Sequence[int]) -> Sequence[int]:
    return tokens


def compute_wer(
    hyps: Mapping[str, Sequence[int]],
    refs: Mapping[str, Sequence[int]],
    baseline_wer: float | None = None,
    strip: Strip | None = None,
) -> WerReport:
    """
    Sum of edit distances over the sum of reference lengths.

    Every hypothesis id must have a reference and vice versa.
    """
    missing = sorted(set(refs) - set(hyps))
    extra = sorted(set(hyps) - set(refs))
    if missing or extra:
        raise DataError(f"id mismatch: missing hypotheses {missing}, unknown ids {extra}")

    strip = strip or _identity
    errors = ErrorCount()
    ref_count = 0
    for utt_id in sorted(refs):
        reference = strip(refs[utt_id])
        errors = errors + edit_distance(strip(hyps[utt_id]), reference)
        ref_count += len(reference)
    if ref_count == 0:
        raise DataError("references contain no tokens; WER is undefined")

    wer = errors.total / ref_count
    normalized = None
    if baseline_wer is not None:
        if baseline_wer <= 0:
            raise InvalidArgumentError(f"baseline WER must be positive, got {baseline_wer}")
        normalized = wer / baseline_wer
    return WerReport(
        num_utterances=len(refs),
        substitutions=errors.substitutions,
        insertions=errors.insertions,
        deletions=errors.deletions,
        total_errors=errors.total,
        ref_count=ref_count,
        wer=wer,
        baseline_wer=baseline_wer,
        normalized_wer=normalized,
    )


def top1_wer(lists: Iterable[NBestList], strip: Strip | None = None) -> WerReport:
    lists = list(lists)
    return compute_wer(
        {n.utterance_id: n.hypotheses[0].tokens for n in lists},
        {n.utterance_id: n.reference for n in lists},
        strip=strip,
    )


def oracle_hypothesis(
    nbest: NBestList, reference: Sequence[int] | None = None, strip: Strip | None = None
) -> tuple[int, ...]:
    """Lowest-error hypothesis; the earliest (best-scored) one wins ties."""
    strip = strip or _identity
    target = strip(nbest.reference if reference is None else reference)
    return min(
        (h.tokens for h in nbest.hypotheses),
        key=lambda tokens: edit_distance(strip(tokens), target).total,
    )


def oracle_wer(lists: Iterable[NBestList], strip: Strip | None = None) -> WerReport:
    """WER of the lowest-error hypothesis in each list."""
    lists = list(lists)
    return compute_wer(
        {n.utterance_id: oracle_hypothesis(n, strip=strip) for n in lists},
        {n.utterance_id: n.reference for n in lists},
        strip=strip,
    )
