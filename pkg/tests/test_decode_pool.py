import pytest

from rnnt_mwer.core.config import DecodeConfig
from rnnt_mwer.core.errors import InvalidArgumentError
from rnnt_mwer.providers.transducer import TransducerModel
from rnnt_mwer.services.decode_pool import decode_all, decode_one, decode_utterances
from tests.conftest import make_params

CONFIG = DecodeConfig(beam_size=3)


async def test_inline_decoding_matches_single_utterance_calls(small_dataset):
    params = make_params(seed=1)
    utterances = small_dataset.train[:5]
    model = TransducerModel(params)
    expected = [decode_one(model, u.id, u.features, u.reference, CONFIG, None) for u in utterances]
    assert await decode_utterances(params, utterances, CONFIG) == expected


async def test_worker_pool_output_does_not_depend_on_worker_count(small_dataset):
    params = make_params(seed=2)
    utterances = small_dataset.train
    inline = await decode_utterances(params, utterances, CONFIG, workers=1)
    pooled = await decode_utterances(params, utterances, CONFIG, workers=2)
    assert pooled == inline
    assert [n.utterance_id for n in pooled if n is not None] == [u.id for u in utterances]


async def test_references_override(small_dataset):
    utterances = small_dataset.train[:2]
    refs = [(1, 2, 3), (2,)]
    lists = await decode_utterances(make_params(), utterances, CONFIG, references=refs)
    assert [n.reference for n in lists] == refs


async def test_rejects_bad_arguments(small_dataset):
    with pytest.raises(InvalidArgumentError):
        await decode_utterances(make_params(), small_dataset.train, CONFIG, workers=0)
    with pytest.raises(InvalidArgumentError):
        await decode_utterances(make_params(), small_dataset.train[:2], CONFIG, references=[(1,)])


def test_sync_entry_point(small_dataset):
    lists = decode_all(make_params(), small_dataset.dev, CONFIG)
    assert len(lists) == len(small_dataset.dev)
