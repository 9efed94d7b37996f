import json

import pytest

from rnnt_mwer.main import create_parser, main
from rnnt_mwer.providers.transducer import TransducerModel
from rnnt_mwer.repositories.checkpoint import CheckpointRepository
from rnnt_mwer.repositories.dataset import DatasetRepository, VocabRepository
from rnnt_mwer.repositories.nbest import NBestRepository
from rnnt_mwer.services.rescore import rnnt_rescore


def run(*argv) -> int:
    return main([str(a) for a in argv])


@pytest.fixture
def data_dir(tmp_path):
    out = tmp_path / "data"
    assert run("--seed", 3, "gen-synth", "--out", out, "--num-utts", 30, "--vocab-size", 3) == 0
    return out


@pytest.fixture
def model_path(tmp_path, data_dir):
    path = tmp_path / "rnnt.json"
    assert run("--seed", 3, "train-rnnt", "--data", data_dir, "--out", path, "--steps", 5, "--batch-size", 4) == 0
    return path


@pytest.fixture
def nbest_path(tmp_path, data_dir, model_path):
    path = tmp_path / "test.nbest.jsonl"
    assert run("decode", "--data", data_dir, "--model", model_path, "--beam", 2, "--nbest-out", path) == 0
    return path


def test_gen_synth_writes_dataset(data_dir):
    assert {p.name for p in data_dir.iterdir()} == {"vocab.json", "train.jsonl", "dev.jsonl", "test.jsonl"}
    assert len((data_dir / "train.jsonl").read_text().splitlines()) == 24


def test_decode_then_score(tmp_path, data_dir, nbest_path):
    report_path = tmp_path / "wer.json"
    assert run("--json-out", report_path, "eval-wer", "--hyps", nbest_path, "--data", data_dir) == 0
    top1 = json.loads(report_path.read_text())
    assert top1["num_utterances"] == 3

    assert run("--json-out", report_path, "eval-wer", "--hyps", nbest_path, "--data", data_dir, "--oracle") == 0
    oracle = json.loads(report_path.read_text())
    assert oracle["total_errors"] <= top1["total_errors"]


def test_lm_training_and_rescoring_sweep(tmp_path, data_dir, model_path, nbest_path):
    lm = tmp_path / "lm.json"
    report_path = tmp_path / "rescore.json"
    assert run("train-lm", "--data", data_dir, "--out", lm, "--order", 2) == 0
    code = run(
        "--json-out", report_path,
        "rescore", "--data", data_dir, "--nbest", nbest_path,
        "--model", model_path, "--lm", lm, "--lambda", "0,0.5",
    )
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["method"] == "both"
    assert [r["lm_weight"] for r in report["results"]] == [0.0, 0.5]


def test_rnnt_rescoring_uses_the_configured_temperature(tmp_path, data_dir, model_path, nbest_path):
    out = tmp_path / "rescored.jsonl"
    code = run(
        "rescore", "--data", data_dir, "--nbest", nbest_path, "--method", "rnnt",
        "--model", model_path, "--temperature", 2.0, "--nbest-out", out,
    )
    assert code == 0

    vocab = VocabRepository(data_dir / "vocab.json").load()
    utterances = {u.id: u for u in DatasetRepository(data_dir / "test.jsonl", vocab).load()}
    model = TransducerModel(CheckpointRepository().load(model_path))
    decoded = NBestRepository(nbest_path, vocab).load()

    def rescored(temperature: float):
        return [rnnt_rescore(n, model, utterances[n.utterance_id].features, temperature) for n in decoded]

    assert NBestRepository(out, vocab).load() == rescored(2.0)
    assert rescored(2.0) != rescored(1.0)


def test_rescore_argument_errors(tmp_path, data_dir):
    assert run("rescore", "--data", data_dir, "--nbest", tmp_path / "x", "--method", "lm") == 1


def test_semi_training_writes_run_directory(tmp_path, data_dir, model_path):
    run_dir = tmp_path / "run"
    out = tmp_path / "mwer.json"
    code = run(
        "train-mwer", "--data", data_dir, "--model", model_path, "--out", out,
        "--mode", "semi", "--splits", 2, "--beam", 2, "--batch-size", 4,
        "--run-dir", run_dir, "--no-dev",
    )
    assert code == 0
    assert out.exists()
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert len(manifest["completed"]) == 2
    assert manifest["seed_checkpoint"] == str(model_path)


def test_decode_bench_reports_identical_output(tmp_path, data_dir, model_path):
    report_path = tmp_path / "bench.json"
    code = run(
        "--json-out", report_path,
        "decode-bench", "--data", data_dir, "--model", model_path, "--workers", "1,2", "--limit", 4,
    )
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["identical_output"] is True
    assert set(report["seconds_by_workers"]) == {"1", "2"}


def test_quick_gradcheck_passes():
    assert run("gradcheck", "--quick") == 0


def test_unknown_flag_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        run("gen-synth", "--out", "x", "--bogus")
    assert exc.value.code == 1


def test_invalid_config_exits_with_usage_code(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"decode": {"beam_size": 0}}))
    assert run("--config", path, "gradcheck", "--quick") == 1


def test_missing_data_exits_with_data_code(tmp_path):
    assert run("decode", "--data", tmp_path / "none", "--model", tmp_path / "m.json") == 2


def test_dotted_destinations_become_overrides():
    args = create_parser().parse_args(["--seed", "9", "decode", "--data", "d", "--model", "m", "--beam", "5"])
    assert getattr(args, "decode.beam_size") == 5
    assert args.seed == 9
