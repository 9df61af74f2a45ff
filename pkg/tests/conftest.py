import numpy as np
import pytest

from prontrain import metric as metric_mod
from prontrain import scorer as scorer_mod
from prontrain.audio import load_manifest
from prontrain.calibration import fit_calibration
from prontrain.container import ModelContainer
from prontrain.encoder import EncoderConfig
from prontrain.pipeline import load_features
from prontrain.synth import generate_corpus

# Small dims keep the unit-test corpus fast; the acceptance suite builds
# the full-size corpus itself.
TEST_ENC_CFG = dict(feature_dim=16, frame_stride_s=0.040, chunk_size_k=5)


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    manifest = generate_corpus(root, n_train=40, n_val=16, n_test=16, seed=0)
    records = load_manifest(manifest)
    by_split = {"train": [], "validation": [], "test": []}
    for rec in records:
        by_split[rec.split].append(rec)
    return {"dir": root, "manifest": manifest, "by_split": by_split}


@pytest.fixture(scope="session")
def enc_cfg():
    return EncoderConfig(**TEST_ENC_CFG)


@pytest.fixture(scope="session")
def feature_sets(corpus, enc_cfg):
    sets = {}
    for split, records in corpus["by_split"].items():
        feats, labels = load_features(records, enc_cfg, corpus["dir"])
        sets[split] = (feats, labels)
    return sets


def split_pairs(corpus, feature_sets, split):
    feats, labels = feature_sets[split]
    return [(feats[r.clip_ref], labels[r.clip_ref])
            for r in corpus["by_split"][split]]


@pytest.fixture(scope="session")
def trained_scorer(corpus, feature_sets):
    cfg = scorer_mod.TrainConfig(
        batch_size=16, learning_rate=3e-3, focal_gamma=2.0, max_epochs=12,
        early_stop_patience=12, rng_seed=0, hidden_dim=12, attention_dim=6,
        dropout_p=0.2,
    )
    params, log = scorer_mod.train_on_features(
        split_pairs(corpus, feature_sets, "train"),
        split_pairs(corpus, feature_sets, "validation"),
        cfg,
    )
    return params, log


@pytest.fixture(scope="session")
def trained_metric(corpus, feature_sets):
    cfg = metric_mod.MetricTrainConfig(
        batch_size=12, batches_per_epoch=4, learning_rate=3e-3, margin=1.0,
        max_epochs=8, rng_seed=0, hidden_dim=10, projection_dim=16,
    )
    net, log = metric_mod.train_metric_on_features(
        feature_sets["train"][0], corpus["by_split"]["train"],
        feature_sets["validation"][0], corpus["by_split"]["validation"],
        cfg,
    )
    return net, log


@pytest.fixture(scope="session")
def model_container_path(tmp_path_factory, corpus, enc_cfg, feature_sets,
                         trained_scorer, trained_metric):
    """A fully populated container file: scorer + calibration + metric."""
    params, scorer_log = trained_scorer
    net, metric_log = trained_metric
    logits, labels = scorer_mod.collect_logits(
        split_pairs(corpus, feature_sets, "validation"), params)
    calib = fit_calibration(logits, labels)
    native_feats = [feature_sets["train"][0][r.clip_ref]
                    for r in corpus["by_split"]["train"] if r.label == "native"]
    container = ModelContainer()
    container.encoder_config = enc_cfg
    container.scorer = params
    container.scorer_log = scorer_log
    container.temperature = calib.temperature
    container.calibration_metadata = calib.fit_metadata
    container.metric = net
    container.metric_log = metric_log
    container.anchor = metric_mod.native_anchor(native_feats, net)
    container.margin = 1.0
    path = tmp_path_factory.mktemp("model") / "model.ptmc"
    container.save(path)
    return path
