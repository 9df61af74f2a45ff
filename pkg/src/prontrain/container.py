"""Deterministic model container.

A single file bundles the scorer parameters, encoder config, calibration
temperature, metric net + native anchor, and training logs. Layout:

    bytes 0..7    magic b"PRONTRN1"
    bytes 8..15   little-endian uint64 header length L
    next L bytes  UTF-8 JSON header (sorted keys)
    remainder     concatenated float64 C-order array payloads

The header's "arrays" entry lists (name, shape) in payload order. The
encoding has no timestamps, so identical content yields identical bytes
(unlike zip-based formats).
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .encoder import EncoderConfig
from .metric import EmbeddingNet
from .scorer import ClassifierParams

MAGIC = b"PRONTRN1"
SCHEMA_VERSION = 1


class ContainerError(RuntimeError):
    pass


def _write(path: Path, header: dict, arrays: dict[str, np.ndarray]) -> None:
    header = dict(header)
    header["schema_version"] = SCHEMA_VERSION
    header["arrays"] = [[name, list(arr.shape)] for name, arr in arrays.items()]
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.uint64(len(blob)).tobytes())
        fh.write(blob)
        for arr in arrays.values():
            fh.write(np.ascontiguousarray(arr, dtype=np.float64).tobytes())


def _read(path: Path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise ContainerError(f"{path}: not a model container")
        (length,) = np.frombuffer(fh.read(8), dtype=np.uint64)
        header = json.loads(fh.read(int(length)).decode())
        arrays = {}
        for name, shape in header["arrays"]:
            n = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(n * 8), dtype=np.float64)
            arrays[name] = data.reshape(shape).copy()
    return header, arrays


class ModelContainer:
    """In-memory view of the container; sections are filled in by the
    train-scorer / calibrate / train-metric commands."""

    def __init__(self):
        self.encoder_config: EncoderConfig | None = None
        self.scorer: ClassifierParams | None = None
        self.temperature: float | None = None
        self.calibration_metadata: dict = {}
        self.metric: EmbeddingNet | None = None
        self.anchor: np.ndarray | None = None
        self.margin: float | None = None
        self.scorer_log: list = []
        self.metric_log: list = []

    # -- persistence --------------------------------------------------------

    def save(self, path: str | Path) -> None:
        header: dict = {}
        arrays: dict[str, np.ndarray] = {}
        if self.encoder_config is not None:
            header["encoder_config"] = asdict(self.encoder_config)
            header["encoder_config_hash"] = self.encoder_config.config_hash()
        if self.scorer is not None:
            p = self.scorer
            header["scorer"] = {
                "input_dim": p.input_dim,
                "hidden_dim": p.hidden_dim,
                "attention_dim": p.attention_dim,
                "bidirectional": p.bidirectional,
                "dropout_p": p.dropout_p,
            }
            for name, arr in p.arrays().items():
                arrays[f"scorer.{name}"] = arr
        if self.temperature is not None:
            header["calibration"] = {
                "temperature": self.temperature,
                "metadata": self.calibration_metadata,
            }
        if self.metric is not None:
            n = self.metric
            header["metric"] = {
                "input_dim": n.input_dim,
                "hidden_dim": n.hidden_dim,
                "projection_dim": n.projection_dim,
                "normalize_embeddings": n.normalize_embeddings,
                "margin": self.margin,
            }
            for name, arr in n.arrays().items():
                arrays[f"metric.{name}"] = arr
            if self.anchor is not None:
                arrays["metric.anchor"] = self.anchor
        header["scorer_log"] = self.scorer_log
        header["metric_log"] = self.metric_log
        _write(Path(path), header, arrays)

    @classmethod
    def load(cls, path: str | Path) -> "ModelContainer":
        path = Path(path)
        if not path.exists():
            raise ContainerError(f"model container not found: {path}")
        header, arrays = _read(path)
        self = cls()
        if "encoder_config" in header:
            self.encoder_config = EncoderConfig(**header["encoder_config"])
        if "scorer" in header:
            meta = header["scorer"]
            p = ClassifierParams(
                input_dim=meta["input_dim"],
                hidden_dim=meta["hidden_dim"],
                attention_dim=meta["attention_dim"],
                bidirectional=meta["bidirectional"],
                dropout_p=meta["dropout_p"],
            )
            for name in p.array_names():
                setattr(p, name, arrays[f"scorer.{name}"])
            self.scorer = p
        if "calibration" in header:
            self.temperature = float(header["calibration"]["temperature"])
            self.calibration_metadata = header["calibration"]["metadata"]
        if "metric" in header:
            meta = header["metric"]
            n = EmbeddingNet(
                input_dim=meta["input_dim"],
                hidden_dim=meta["hidden_dim"],
                projection_dim=meta["projection_dim"],
                normalize_embeddings=meta["normalize_embeddings"],
            )
            for name in n.array_names():
                setattr(n, name, arrays[f"metric.{name}"])
            self.metric = n
            self.margin = meta.get("margin")
            if "metric.anchor" in arrays:
                self.anchor = arrays["metric.anchor"]
        self.scorer_log = header.get("scorer_log", [])
        self.metric_log = header.get("metric_log", [])
        return self

    @classmethod
    def load_or_new(cls, path: str | Path) -> "ModelContainer":
        path = Path(path)
        return cls.load(path) if path.exists() else cls()
