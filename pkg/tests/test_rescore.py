import math

import numpy as np
import pytest

from rnnt_mwer.core.config import LMConfig, RescoreConfig
from rnnt_mwer.core.errors import ConfigError, DataError, InvalidArgumentError
from rnnt_mwer.models.vocab import Vocabulary
from rnnt_mwer.providers.factory import get_language_model
from rnnt_mwer.providers.ngram import EOS, UNK, NGramLM
from rnnt_mwer.providers.transducer import TransducerModel, forward_lattice
from rnnt_mwer.repositories.lm import LMRepository
from rnnt_mwer.services.lattice import normalize, sequence_log_prob
from rnnt_mwer.services.mwer import Hypothesis, NBestList
from rnnt_mwer.services.rescore import lm_rescore, lm_score, rnnt_rescore
from tests.conftest import make_params

SENTENCES = [["a", "b"], ["a", "b", "c"], ["b", "c"], ["a"], ["c", "a", "b"]]


@pytest.fixture
def lm() -> NGramLM:
    return NGramLM.train(SENTENCES, order=3, delta=0.1)


def random_list(rng: np.random.Generator) -> NBestList:
    hyps = {tuple(int(k) for k in rng.integers(1, 4, size=int(rng.integers(0, 4)))) for _ in range(5)}
    return NBestList.build("u", [Hypothesis(h, float(rng.normal(scale=4.0))) for h in hyps], (1, 2))


def test_rnnt_rescore_uses_exact_scores_and_is_idempotent():
    params = make_params(seed=1)
    model = TransducerModel(params)
    features = np.random.default_rng(1).normal(size=(3, 3))
    nbest = NBestList.build(
        "u", [Hypothesis((1,), -0.1), Hypothesis((2, 3), -0.2), Hypothesis((), -9.0)], (1,)
    )
    once = rnnt_rescore(nbest, model, features)
    for hyp in once.hypotheses:
        exact = sequence_log_prob(normalize(forward_lattice(params, features, hyp.tokens)), hyp.tokens)
        assert hyp.log_score == exact
        assert hyp.source == "exact"
    assert {h.tokens for h in once.hypotheses} == {h.tokens for h in nbest.hypotheses}
    assert rnnt_rescore(once, model, features) == once


def test_zero_lm_weight_is_identity(lm, vocab):
    rng = np.random.default_rng(0)
    config = RescoreConfig(lm_weight=0.0)
    for _ in range(100):
        nbest = random_list(rng)
        assert lm_rescore(nbest, lm, config, vocab) == nbest


def test_lm_rescore_matches_hand_evaluation(lm, vocab):
    nbest = NBestList(
        "u",
        (
            Hypothesis((1, 2), -1.0),
            Hypothesis((1,), -1.2),
            Hypothesis((), -1.5),
        ),
        (1, 2),
    )
    weight = 0.5
    rescored = lm_rescore(nbest, lm, RescoreConfig(lm_weight=weight), vocab)
    expected = {
        (1, 2): -1.0 + weight * (lm.score(["a", "b"]) / 2),
        (1,): -1.2 + weight * (lm.score(["a"]) / 1),
        (): -1.5 + weight * (lm.score([]) / 1),
    }
    assert {h.tokens: h.log_score for h in rescored.hypotheses} == expected
    assert [h.tokens for h in rescored.hypotheses] == sorted(expected, key=lambda t: -expected[t])


def test_lm_rescore_without_length_normalization(lm, vocab):
    nbest = NBestList("u", (Hypothesis((1, 2, 3), -2.0),), ())
    rescored = lm_rescore(nbest, lm, RescoreConfig(lm_weight=1.0, length_normalize=False), vocab)
    assert rescored.hypotheses[0].log_score == -2.0 + lm.score(["a", "b", "c"])


def test_lm_rescore_strips_eos(lm, eos_vocab):
    nbest = NBestList("u", (Hypothesis((1, 4), -1.0),), ())
    rescored = lm_rescore(nbest, lm, RescoreConfig(lm_weight=1.0), eos_vocab)
    assert rescored.hypotheses[0].log_score == -1.0 + lm.score(["a"])


def test_conditionals_sum_to_one(lm):
    for history in ([], ["a"], ["a", "b"], ["zzz", "q"], ["c", "c", "c"]):
        assert math.fsum(lm.distribution(history).values()) == pytest.approx(1.0, abs=1e-10)


def test_lm_score_covers_unknown_words(lm):
    assert lm_score(lm, ["a", "b"]) < 0
    assert math.isfinite(lm_score(lm, ["never", "seen"]))
    assert lm.log_prob("never", []) == lm.log_prob(UNK, [])
    assert EOS in lm.vocabulary and UNK in lm.vocabulary


def test_seen_sequence_outscores_unseen(lm):
    assert lm.score(["a", "b"]) > lm.score(["b", "a"])


def test_truncate_equals_training_lower_order(lm):
    bigram = NGramLM.train(SENTENCES, order=2, delta=0.1)
    truncated = lm.truncate(2)
    for sentence in (["a", "b"], ["c"], ["b", "a", "c"]):
        assert truncated.score(sentence) == pytest.approx(bigram.score(sentence), abs=1e-12)
    with pytest.raises(InvalidArgumentError):
        lm.truncate(4)


def test_lm_file_round_trip(tmp_path, lm):
    path = tmp_path / "lm.json"
    LMRepository(path).save(lm)
    loaded = LMRepository(path).load()
    assert loaded.order == 3 and loaded.vocabulary == lm.vocabulary
    for sentence in SENTENCES + [["x", "a"]]:
        assert loaded.score(sentence) == lm.score(sentence)


def test_corrupt_lm_file(tmp_path):
    path = tmp_path / "lm.json"
    path.write_text('{"order": 2, "delta": 0.1, "vocabulary": [], "counts": {"1": {}}}')
    with pytest.raises(DataError):
        LMRepository(path).load()


def test_factory_loads_trains_and_truncates(tmp_path, lm):
    path = tmp_path / "lm.json"
    LMRepository(path).save(lm)
    assert get_language_model(LMConfig(), path=path).name == "ngram:3"
    assert get_language_model(LMConfig(), path=path, order=1).name == "ngram:1"
    assert get_language_model(LMConfig(order=2), sentences=SENTENCES).name == "ngram:2"
    with pytest.raises(ConfigError):
        get_language_model(LMConfig())


def test_vocabulary_helpers(eos_vocab: Vocabulary):
    assert eos_vocab.encode(["a", "<eos>"]) == (1, 4)
    assert eos_vocab.strip_eos((1, 4)) == (1,)
    assert eos_vocab.with_eos((1,)) == (1, 4)
    assert eos_vocab.with_eos((1, 4)) == (1, 4)
    with pytest.raises(KeyError):
        eos_vocab.encode(["zzz"])
