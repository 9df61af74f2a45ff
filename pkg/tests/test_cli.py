import json

import pytest
from click.testing import CliRunner

from prontrain.cli import main
from prontrain.synth import generate_corpus

TRAIN_ARGS = [
    "--seed", "7", "--epochs", "3", "--lr", "3e-3", "--batch-size", "8",
    "--hidden-dim", "6", "--attention-dim", "4", "--dropout", "0.2",
    "--feature-dim", "16", "--frame-stride", "0.04",
]


@pytest.fixture(scope="module")
def cli_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_corpus")
    manifest = generate_corpus(root, n_train=16, n_val=8, n_test=8, seed=1)
    return root, manifest


def run(args):
    return CliRunner().invoke(main, args, catch_exceptions=False)


@pytest.fixture(scope="module")
def cli_model(cli_corpus, tmp_path_factory):
    root, manifest = cli_corpus
    model = tmp_path_factory.mktemp("cli_model") / "model.ptmc"
    res = run(["train-scorer", "--manifest", str(manifest), "--out", str(model),
               *TRAIN_ARGS])
    assert res.exit_code == 0, res.output
    res = run(["calibrate", "--manifest", str(manifest), "--model", str(model)])
    assert res.exit_code == 0, res.output
    res = run(["train-metric", "--manifest", str(manifest), "--model", str(model),
               "--seed", "7", "--epochs", "2", "--lr", "3e-3",
               "--batch-size", "6", "--batches-per-epoch", "2",
               "--hidden-dim", "5", "--projection-dim", "8"])
    assert res.exit_code == 0, res.output
    return model


class TestTrainScorer:
    def test_byte_identical_checkpoints(self, cli_corpus, tmp_path):
        root, manifest = cli_corpus
        paths = [tmp_path / "a.ptmc", tmp_path / "b.ptmc"]
        for p in paths:
            res = run(["train-scorer", "--manifest", str(manifest),
                       "--out", str(p), *TRAIN_ARGS])
            assert res.exit_code == 0, res.output
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_missing_manifest_fails(self, tmp_path):
        res = CliRunner().invoke(main, ["train-scorer", "--manifest",
                                        str(tmp_path / "nope.jsonl"),
                                        "--out", str(tmp_path / "m.ptmc")])
        assert res.exit_code != 0


class TestEvaluate:
    def test_reports_metrics(self, cli_corpus, cli_model):
        root, manifest = cli_corpus
        res = run(["evaluate", "--manifest", str(manifest),
                   "--model", str(cli_model)])
        assert res.exit_code == 0, res.output
        lines = dict(line.split("=") for line in res.output.strip().splitlines())
        assert 0.0 <= float(lines["accuracy"]) <= 1.0
        assert float(lines["focal_loss"]) >= 0.0
        assert 0.0 <= float(lines["ece"]) <= 1.0
        assert "triplet_satisfaction" in lines


class TestAnalyzeFile:
    def test_output_parses_and_is_deterministic(self, cli_corpus, cli_model):
        root, manifest = cli_corpus
        wav = next(root.glob("test_*.wav"))
        outs = []
        for _ in range(2):
            res = run(["analyze-file", str(wav), "--model", str(cli_model)])
            assert res.exit_code == 0, res.output
            outs.append(res.output)
        assert outs[0] == outs[1]
        doc = json.loads(outs[0])
        assert {"schema_version", "score", "display", "segments", "point",
                "distance", "waveform_preview", "result_id"} <= doc.keys()
        assert 0 <= doc["display"] <= 100

    def test_missing_model_fails(self, cli_corpus, tmp_path):
        root, _ = cli_corpus
        wav = next(root.glob("test_*.wav"))
        res = CliRunner().invoke(main, ["analyze-file", str(wav), "--model",
                                        str(tmp_path / "missing.ptmc")])
        assert res.exit_code != 0


class TestSyntheticCorpus:
    def test_generate(self, tmp_path):
        res = run(["make-synthetic-corpus", str(tmp_path / "c"),
                   "--n-train", "4", "--n-val", "2", "--n-test", "2"])
        assert res.exit_code == 0
        manifest = res.output.strip()
        assert manifest.endswith("manifest.jsonl")
        assert len(list((tmp_path / "c").glob("*.wav"))) == 8
