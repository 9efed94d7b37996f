import json

import pytest

from rnnt_mwer.core.config import DecodeConfig, ModelConfig, Settings, load_settings
from rnnt_mwer.core.errors import ConfigError
from rnnt_mwer.dependencies import get_decode_config, get_params, model_dims


def test_defaults():
    settings = load_settings()
    assert settings.decode.temperature == 1.0
    assert settings.mwer.score_temperature == 1.0
    assert settings.mwer.add_reference is False
    assert settings.mwer.persist_adam_state is True
    assert settings.semi.splits >= 1
    assert settings.lm.order == 3


def test_file_and_dotted_overrides(tmp_path):
    path = tmp_path / "settings.json"
    path.write_text(json.dumps({"decode": {"beam_size": 7, "temperature": 2.0}, "seed": 4}))
    settings = load_settings(path, **{"decode.beam_size": 9, "mwer.schedule.lr_constant": 2e-5, "semi.resume": None})
    assert settings.decode.beam_size == 9
    assert settings.decode.temperature == 2.0
    assert settings.seed == 4
    assert settings.mwer.schedule.lr_constant == 2e-5
    assert settings.semi.resume is False


def test_environment_variables(monkeypatch):
    monkeypatch.setenv("RNNT_MWER_DECODE__BEAM_SIZE", "11")
    monkeypatch.setenv("RNNT_MWER_LOG_LEVEL", "debug")
    settings = Settings()
    assert settings.decode.beam_size == 11
    assert settings.log_level == "DEBUG"


def test_invalid_values_list_field_paths():
    with pytest.raises(ConfigError, match="decode.beam_size"):
        load_settings(**{"decode.beam_size": 0})
    with pytest.raises(ConfigError, match="log_level"):
        load_settings(log_level="LOUD")
    with pytest.raises(ConfigError, match="lm.kind"):
        load_settings(**{"lm.kind": "neural"})


def test_unreadable_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_settings(tmp_path / "missing.json")
    path = tmp_path / "list.json"
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_settings(path)


def test_model_dims_follow_vocabulary(eos_vocab):
    settings = Settings(model=ModelConfig(feature_dim=3))
    dims = model_dims(settings, eos_vocab)
    assert dims.vocab_size == 5 and dims.blank_id == 0 and dims.feature_dim == 3
    params = get_params(settings, eos_vocab)
    assert params.dims == dims


def test_eos_vocabulary_switches_on_eos_decoding(vocab, eos_vocab):
    settings = Settings(decode=DecodeConfig(include_eos=False))
    assert get_decode_config(settings, eos_vocab).include_eos is True
    assert get_decode_config(settings, vocab).include_eos is False
