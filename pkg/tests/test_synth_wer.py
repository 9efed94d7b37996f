import numpy as np
import pytest

from rnnt_mwer.core.config import SynthSpec
from rnnt_mwer.core.errors import DataError, InvalidArgumentError
from rnnt_mwer.services.mwer import Hypothesis, NBestList
from rnnt_mwer.services.synth import gen_synth, write_synth
from rnnt_mwer.services.wer import compute_wer, oracle_hypothesis, oracle_wer, top1_wer


def test_same_seed_writes_identical_files(tmp_path, small_spec):
    first = write_synth(gen_synth(3, small_spec), tmp_path / "a")
    second = write_synth(gen_synth(3, small_spec), tmp_path / "b")
    for name, path in first.items():
        assert path.read_bytes() == second[name].read_bytes()


def test_different_seeds_differ(small_spec):
    a, b = gen_synth(1, small_spec), gen_synth(2, small_spec)
    assert not np.array_equal(a.train[0].features, b.train[0].features)


def test_split_sizes_and_vocabulary(small_spec):
    dataset = gen_synth(0, small_spec)
    assert (len(dataset.train), len(dataset.dev), len(dataset.test)) == (12, 6, 6)
    assert dataset.vocab.tokens == ["<blank>", "w0", "w1", "w2"]
    assert dataset.vocab.eos is None
    ids = [u.id for u in dataset.train + dataset.dev + dataset.test]
    assert len(set(ids)) == 24 and ids[0] == "utt00000"
    for utt in dataset.train:
        assert 1 <= len(utt.reference) <= 2
        assert utt.features.shape[1] == 3
        assert utt.num_frames >= len(utt.reference) + 2
        assert dataset.vocab.blank_id not in utt.reference


def test_eos_vocabulary(small_spec):
    dataset = gen_synth(0, small_spec.model_copy(update={"eos": True}))
    assert dataset.vocab.eos == "<eos>"
    assert all(dataset.vocab.eos_id not in u.reference for u in dataset.train)


def test_full_confusability_makes_pairs_identical(small_spec):
    dataset = gen_synth(0, small_spec.model_copy(update={"confusability": 1.0}))
    assert np.array_equal(dataset.templates[0], dataset.templates[1])


@pytest.mark.parametrize("vocab_size", [0, 1, 40])
def test_vocabulary_size_limits(small_spec, vocab_size):
    with pytest.raises(InvalidArgumentError):
        gen_synth(0, small_spec.model_copy(update={"vocab_size": vocab_size}))


def test_spec_ranges_are_validated():
    with pytest.raises(ValueError):
        SynthSpec(min_tokens=3, max_tokens=1)
    with pytest.raises(ValueError):
        SynthSpec(dev_fraction=0.5, test_fraction=0.5)


def test_wer_counts_deletions():
    report = compute_wer({"u": (1, 2)}, {"u": (1, 2, 3, 4)})
    assert report.wer == 0.5
    assert report.deletions == 2 and report.total_errors == 2
    assert report.ref_count == 4


def test_wer_of_perfect_output_is_zero_and_normalizes():
    refs = {"u": (1, 2), "v": (3,)}
    assert compute_wer(refs, refs).wer == 0.0
    report = compute_wer({"u": (1,), "v": (3,)}, refs, baseline_wer=1 / 3)
    assert report.normalized_wer == pytest.approx(1.0)
    assert "normalized WER" in report.table()


def test_wer_id_mismatch_is_reported():
    with pytest.raises(DataError, match="missing hypotheses \\['v'\\]"):
        compute_wer({"u": (1,)}, {"u": (1,), "v": (2,)})
    with pytest.raises(DataError, match="unknown ids \\['w'\\]"):
        compute_wer({"u": (1,), "w": (2,)}, {"u": (1,)})


def test_wer_edge_cases():
    with pytest.raises(DataError):
        compute_wer({"u": ()}, {"u": ()})
    with pytest.raises(InvalidArgumentError):
        compute_wer({"u": (1,)}, {"u": (1,)}, baseline_wer=0.0)


def test_wer_strips_eos():
    def strip(ids):
        return tuple(i for i in ids if i != 9)

    assert compute_wer({"u": (1, 9)}, {"u": (1,)}, strip=strip).wer == 0.0


def test_oracle_is_never_worse_than_top1():
    rng = np.random.default_rng(0)
    lists = []
    for n in range(30):
        hyps = {tuple(int(k) for k in rng.integers(1, 4, size=int(rng.integers(0, 4)))) for _ in range(4)}
        scored = [Hypothesis(h, float(rng.normal())) for h in hyps]
        ref = tuple(int(k) for k in rng.integers(1, 4, size=2))
        lists.append(NBestList.build(f"u{n}", scored, ref))
    assert oracle_wer(lists).total_errors <= top1_wer(lists).total_errors


def test_oracle_hypothesis_prefers_earliest_on_ties():
    nbest = NBestList("u", (Hypothesis((1,), -1.0), Hypothesis((2,), -2.0), Hypothesis((3, 3), -3.0)), (3,))
    assert oracle_hypothesis(nbest) == (1,)
    assert oracle_hypothesis(nbest, reference=(2,)) == (2,)
    tied = NBestList("u", (Hypothesis((1,), -1.0), Hypothesis((2,), -2.0)), (3,))
    assert oracle_hypothesis(tied) == (1,)


def levenshtein(a, b) -> int:
    row = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        prev, row[0] = row[0], i
        for j, y in enumerate(b, start=1):
            prev, row[j] = row[j], min(row[j] + 1, row[j - 1] + 1, prev + (x != y))
    return row[-1]


def test_corpus_errors_match_independent_levenshtein():
    rng = np.random.default_rng(7)
    hyps, refs = {}, {}
    for n in range(200):
        hyps[f"u{n}"] = tuple(int(k) for k in rng.integers(1, 5, size=int(rng.integers(0, 7))))
        refs[f"u{n}"] = tuple(int(k) for k in rng.integers(1, 5, size=int(rng.integers(1, 7))))
    report = compute_wer(hyps, refs)
    assert report.total_errors == sum(levenshtein(hyps[i], refs[i]) for i in refs)
    assert report.total_errors == report.substitutions + report.insertions + report.deletions
