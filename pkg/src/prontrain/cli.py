"""Command-line interface: training, calibration, evaluation, batch
analysis, and the HTTP service."""

from __future__ import annotations

import json
import os
from pathlib import Path

import click
import numpy as np

from . import metric as metric_mod
from . import scorer as scorer_mod
from .audio import load_manifest, normalize, read_wav
from .calibration import apply_temperature, expected_calibration_error, fit_calibration
from .container import ModelContainer
from .encoder import EncoderConfig
from .pipeline import AnalysisError, analyze_clip, load_features, payload_json, result_id_for

MODEL_ENVVAR = "PRONTRAIN_MODEL"


def _fail(message: str) -> None:
    raise click.ClickException(message)


def _records_by_split(manifest_path: str):
    try:
        records = load_manifest(manifest_path)
    except Exception as exc:
        _fail(str(exc))
    by_split = {"train": [], "validation": [], "test": []}
    for rec in records:
        by_split[rec.split].append(rec)
    return by_split


def _feature_sets(by_split, splits, enc_cfg, audio_dir, cache_dir):
    out = {}
    for split in splits:
        feats, labels = load_features(by_split[split], enc_cfg, audio_dir, cache_dir)
        out[split] = (feats, labels)
    return out


encoder_options = [
    click.option("--feature-dim", default=80, show_default=True),
    click.option("--frame-stride", default=0.020, show_default=True),
    click.option("--chunk-k", default=5, show_default=True),
    click.option("--backend", default="spectral_fallback", show_default=True,
                 type=click.Choice(["spectral_fallback", "pretrained_ssl"])),
    click.option("--checkpoint-path", default=None,
                 help="Encoder checkpoint for the pretrained_ssl backend."),
]


def add_options(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return wrap


@click.group()
def main():
    """Pronunciation-training engine."""


@main.command("train-scorer")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--audio-dir", default=None, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=30, show_default=True)
@click.option("--lr", default=1e-4, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--hidden-dim", default=128, show_default=True)
@click.option("--attention-dim", default=32, show_default=True)
@click.option("--dropout", default=0.5, show_default=True)
@click.option("--focal-gamma", default=2.0, show_default=True)
@click.option("--patience", default=10, show_default=True)
@click.option("--unidirectional", is_flag=True, default=False)
@click.option("--cache-dir", default=None, type=click.Path())
@add_options(encoder_options)
def train_scorer(manifest, audio_dir, out_path, seed, epochs, lr, batch_size,
                 hidden_dim, attention_dim, dropout, focal_gamma, patience,
                 unidirectional, cache_dir, feature_dim, frame_stride, chunk_k,
                 backend, checkpoint_path):
    """Train the native/non-native classifier and write the model
    container."""
    audio_dir = audio_dir or str(Path(manifest).parent)
    enc_cfg = EncoderConfig(backend=backend, feature_dim=feature_dim,
                            frame_stride_s=frame_stride, chunk_size_k=chunk_k,
                            checkpoint_path=checkpoint_path)
    by_split = _records_by_split(manifest)
    sets = _feature_sets(by_split, ("train", "validation"), enc_cfg, audio_dir, cache_dir)
    cfg = scorer_mod.TrainConfig(
        batch_size=batch_size, learning_rate=lr, focal_gamma=focal_gamma,
        max_epochs=epochs, early_stop_patience=patience, rng_seed=seed,
        hidden_dim=hidden_dim, attention_dim=attention_dim,
        bidirectional=not unidirectional, dropout_p=dropout,
    )
    def pairs(split):
        feats, labels = sets[split]
        return [(feats[r.clip_ref], labels[r.clip_ref]) for r in by_split[split]]
    try:
        params, log = scorer_mod.train_on_features(pairs("train"), pairs("validation"), cfg)
    except scorer_mod.TrainingError as exc:
        _fail(str(exc))
    container = ModelContainer.load_or_new(out_path)
    container.encoder_config = enc_cfg
    container.scorer = params
    container.scorer_log = log
    container.save(out_path)
    click.echo(f"trained {len(log)} epochs; "
               f"final val_accuracy={log[-1]['val_accuracy']:.3f}; wrote {out_path}")


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--audio-dir", default=None, type=click.Path())
@click.option("--model", "model_path", required=True, envvar=MODEL_ENVVAR,
              type=click.Path(exists=True))
@click.option("--split", default="validation", show_default=True)
@click.option("--cache-dir", default=None, type=click.Path())
def calibrate(manifest, audio_dir, model_path, split, cache_dir):
    """Fit the calibration temperature on a validation split."""
    audio_dir = audio_dir or str(Path(manifest).parent)
    container = ModelContainer.load(model_path)
    if container.scorer is None:
        _fail("container has no trained scorer; run train-scorer first")
    by_split = _records_by_split(manifest)
    feats, labels = load_features(by_split[split], container.encoder_config,
                                  audio_dir, cache_dir)
    pairs = [(feats[r.clip_ref], labels[r.clip_ref]) for r in by_split[split]]
    if not pairs:
        _fail(f"split {split!r} is empty")
    logits, y = scorer_mod.collect_logits(pairs, container.scorer)
    try:
        calib = fit_calibration(logits, y)
    except ValueError as exc:
        _fail(str(exc))
    container.temperature = calib.temperature
    container.calibration_metadata = calib.fit_metadata
    container.save(model_path)
    click.echo(f"temperature={calib.temperature:.4f} "
               f"ece_before={calib.fit_metadata['ece_before']:.4f} "
               f"ece_after={calib.fit_metadata['ece_after']:.4f}")


@main.command("train-metric")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--audio-dir", default=None, type=click.Path())
@click.option("--model", "model_path", required=True, envvar=MODEL_ENVVAR,
              type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=30, show_default=True)
@click.option("--lr", default=1e-4, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--batches-per-epoch", default=8, show_default=True)
@click.option("--margin", default=1.0, show_default=True)
@click.option("--hidden-dim", default=128, show_default=True)
@click.option("--projection-dim", default=512, show_default=True)
@click.option("--cache-dir", default=None, type=click.Path())
def train_metric(manifest, audio_dir, model_path, seed, epochs, lr, batch_size,
                 batches_per_epoch, margin, hidden_dim, projection_dim, cache_dir):
    """Train the triplet-loss embedding and cache the native anchor."""
    audio_dir = audio_dir or str(Path(manifest).parent)
    container = ModelContainer.load(model_path)
    if container.encoder_config is None:
        _fail("container has no encoder config; run train-scorer first")
    by_split = _records_by_split(manifest)
    train_feats, _ = load_features(by_split["train"], container.encoder_config,
                                   audio_dir, cache_dir)
    val_feats, _ = load_features(by_split["validation"], container.encoder_config,
                                 audio_dir, cache_dir)
    cfg = metric_mod.MetricTrainConfig(
        batch_size=batch_size, batches_per_epoch=batches_per_epoch,
        learning_rate=lr, margin=margin, max_epochs=epochs, rng_seed=seed,
        hidden_dim=hidden_dim, projection_dim=projection_dim,
    )
    try:
        net, log = metric_mod.train_metric_on_features(
            train_feats, by_split["train"], val_feats, by_split["validation"], cfg)
    except scorer_mod.TrainingError as exc:
        _fail(str(exc))
    native_feats = [train_feats[r.clip_ref] for r in by_split["train"]
                    if r.label == "native"]
    container.metric = net
    container.anchor = metric_mod.native_anchor(native_feats, net)
    container.margin = margin
    container.metric_log = log
    container.save(model_path)
    click.echo(f"trained {len(log)} epochs; "
               f"val_triplet_satisfaction={log[-1]['val_triplet_satisfaction']:.3f}; "
               f"updated {model_path}")


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--audio-dir", default=None, type=click.Path())
@click.option("--model", "model_path", required=True, envvar=MODEL_ENVVAR,
              type=click.Path(exists=True))
@click.option("--split", default="test", show_default=True)
@click.option("--focal-gamma", default=2.0, show_default=True)
@click.option("--cache-dir", default=None, type=click.Path())
def evaluate(manifest, audio_dir, model_path, split, focal_gamma, cache_dir):
    """Report accuracy, focal loss, ECE, and triplet satisfaction on a
    manifest split."""
    audio_dir = audio_dir or str(Path(manifest).parent)
    container = ModelContainer.load(model_path)
    if container.scorer is None:
        _fail("container has no trained scorer")
    by_split = _records_by_split(manifest)
    records = by_split[split]
    if not records:
        _fail(f"split {split!r} is empty")
    feats, labels = load_features(records, container.encoder_config, audio_dir, cache_dir)
    pairs = [(feats[r.clip_ref], labels[r.clip_ref]) for r in records]
    loss, acc = scorer_mod.evaluate_on_features(pairs, container.scorer, focal_gamma)
    logits, y = scorer_mod.collect_logits(pairs, container.scorer)
    temperature = container.temperature if container.temperature is not None else 1.0
    ece = expected_calibration_error(apply_temperature(logits, temperature), y)
    click.echo(f"accuracy={acc:.4f}")
    click.echo(f"focal_loss={loss:.4f}")
    click.echo(f"ece={ece:.4f}")
    if container.metric is not None:
        margin = container.margin if container.margin is not None else 1.0
        try:
            triplets = metric_mod.sample_triplets(records, 128, rng_seed=0)
        except scorer_mod.TrainingError:
            click.echo("triplet_satisfaction=n/a (insufficient class populations)")
            return
        sat = metric_mod.triplet_satisfaction(triplets, feats, container.metric, margin)
        click.echo(f"triplet_satisfaction={sat:.4f}")


@main.command("analyze-file")
@click.argument("wav_path", type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, envvar=MODEL_ENVVAR,
              type=click.Path(exists=True))
def analyze_file(wav_path, model_path):
    """Analyze one WAV file and print the result as JSON.

    The output is deterministic: identical input and model produce
    byte-identical text (the content-derived result_id replaces the
    session fields)."""
    container = ModelContainer.load(model_path)
    try:
        payload = analyze_clip(read_wav(wav_path), container)
    except AnalysisError as exc:
        _fail(f"{exc.code}: {exc.message}")
    doc = payload.to_dict()
    doc["result_id"] = result_id_for(payload)
    click.echo(json.dumps(doc, sort_keys=True))


@main.command()
@click.option("--model", "model_path", default=None, envvar=MODEL_ENVVAR,
              type=click.Path())
@click.option("--store", "store_path", default="sessions.sqlite", show_default=True,
              type=click.Path())
@click.option("--sentences", "sentences_path", default=None, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True),
              help="JSON config; keys host, port, model, store, sentences "
                   "override the flag defaults.")
def serve(model_path, store_path, sentences_path, host, port, config_path):
    """Start the HTTP analysis service."""
    import uvicorn

    from .service import create_app

    if config_path:
        with open(config_path) as fh:
            cfg = json.load(fh)
        host = cfg.get("host", host)
        port = cfg.get("port", port)
        model_path = cfg.get("model", model_path)
        store_path = cfg.get("store", store_path)
        sentences_path = cfg.get("sentences", sentences_path)
    app = create_app(model_path, store_path, sentences_path)
    try:
        uvicorn.run(app, host=host, port=port)
    except OSError as exc:
        _fail(f"could not bind {host}:{port}: {exc}")


@main.command("make-synthetic-corpus")
@click.argument("out_dir", type=click.Path())
@click.option("--n-train", default=200, show_default=True)
@click.option("--n-val", default=50, show_default=True)
@click.option("--n-test", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
def make_synthetic_corpus(out_dir, n_train, n_val, n_test, seed):
    """Generate the synthetic two-class corpus used by the test suite."""
    from .synth import generate_corpus

    manifest = generate_corpus(out_dir, n_train, n_val, n_test, seed)
    click.echo(str(manifest))


if __name__ == "__main__":
    main()
