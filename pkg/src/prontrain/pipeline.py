"""End-to-end analysis: audio -> score, difference segments, distance.

Also hosts the record/feature loading shared by the training commands and
the JSON payload shape served over the API (schema_version 1).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import scorer
from .audio import AudioClip, UtteranceRecord, normalize, read_wav
from .container import ModelContainer
from .differ import DiffConfig, extract_segments
from .encoder import chunk, encode_cached
from .metric import distance_reading

SCHEMA_VERSION = 1
SILENCE_PEAK_FLOOR = 1e-4
PREVIEW_POINTS = 1000

LABEL_TO_INDEX = {"native": 0, "non-native": 1}


class AnalysisError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def load_features(
    records: list[UtteranceRecord],
    container_or_cfg,
    base_dir: str | Path,
    cache_dir: str | Path | None = None,
) -> tuple[dict[str, np.ndarray], dict[str, int]]:
    """Encode every record's clip to chunked features.

    Returns (clip_ref -> chunks, clip_ref -> label index). clip_refs are
    resolved relative to base_dir.
    """
    enc_cfg = (container_or_cfg.encoder_config
               if isinstance(container_or_cfg, ModelContainer) else container_or_cfg)
    base_dir = Path(base_dir)
    feats: dict[str, np.ndarray] = {}
    labels: dict[str, int] = {}
    for rec in records:
        path = base_dir / rec.clip_ref
        clip = normalize(read_wav(path))
        seq = encode_cached(clip, enc_cfg, cache_dir)
        feats[rec.clip_ref] = chunk(seq, enc_cfg.chunk_size_k).chunks
        labels[rec.clip_ref] = LABEL_TO_INDEX[rec.label]
    return feats, labels


def waveform_preview(clip: AudioClip, n_points: int = PREVIEW_POINTS) -> list[float]:
    """Max-abs amplitude envelope downsampled for display."""
    x = np.abs(clip.samples)
    edges = np.linspace(0, len(x), n_points + 1).astype(int)
    return [float(x[a:b].max()) if b > a else 0.0 for a, b in zip(edges[:-1], edges[1:])]


@dataclass
class AnalysisPayload:
    score: float
    display: int
    predicted_label: str
    segments: list[dict]
    point: list[float]
    distance: float
    waveform_preview: list[float]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "score": self.score,
            "display": self.display,
            "predicted_label": self.predicted_label,
            "segments": self.segments,
            "point": self.point,
            "distance": self.distance,
            "waveform_preview": self.waveform_preview,
        }


def analyze_clip(
    clip: AudioClip,
    container: ModelContainer,
    diff_cfg: DiffConfig | None = None,
) -> AnalysisPayload:
    """normalize -> encode -> chunk -> score -> segments -> distance.

    Raises AnalysisError("silent_input") for clips below the peak floor
    and AnalysisError("model_not_loaded") for an incomplete container.
    """
    if container.scorer is None or container.encoder_config is None:
        raise AnalysisError("model_not_loaded", "scorer/encoder missing from container")
    canonical = normalize(clip)
    if float(np.max(np.abs(canonical.samples))) < SILENCE_PEAK_FLOOR:
        raise AnalysisError("silent_input", "clip peak amplitude below the silence floor")
    enc_cfg = container.encoder_config
    seq = encode_cached(canonical, enc_cfg, None)
    chunked = chunk(seq, enc_cfg.chunk_size_k)
    temperature = container.temperature if container.temperature is not None else 1.0
    sc = scorer.score_chunks(chunked.chunks, container.scorer, temperature)
    segments = extract_segments(
        sc.attention,
        chunked.chunk_stride_s,
        diff_cfg,
        predicted_label=sc.predicted_label,
        native_probability=sc.native_probability,
    )
    if container.metric is not None and container.anchor is not None:
        reading = distance_reading(chunked.chunks, container.metric, container.anchor)
        point = [float(reading.user_point[0]), float(reading.user_point[1])]
        distance = reading.distance
    else:
        point = [0.0, 0.0]
        distance = 0.0
    return AnalysisPayload(
        score=sc.native_probability,
        display=sc.display,
        predicted_label=sc.predicted_label,
        segments=[
            {"start_s": s.start_s, "end_s": s.end_s, "intensity": s.intensity}
            for s in segments
        ],
        point=point,
        distance=distance,
        waveform_preview=waveform_preview(canonical),
    )


def payload_json(payload: AnalysisPayload) -> str:
    """Canonical JSON rendering (sorted keys), byte-stable for identical
    analyses."""
    return json.dumps(payload.to_dict(), sort_keys=True)


def result_id_for(payload: AnalysisPayload) -> str:
    return hashlib.sha256(payload_json(payload).encode()).hexdigest()[:16]
