"""Time-aligned difference segments derived from the attention vector.

Attention weights are standardized per utterance; chunks whose z-score
exceeds the threshold become red-shaded segments on the waveform, with
intensity scaled within the utterance so the largest deviation is darkest.
High-scoring (proficient) utterances produce no segments at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class DiffConfig:
    z_threshold: float = 1.0
    merge_gap_chunks: int = 1
    min_std: float = 1e-8
    proficiency_threshold: float = 0.8

    def __post_init__(self):
        if self.min_std <= 0:
            raise ValueError("min_std must be positive")


@dataclass
class DifferenceSegment:
    start_s: float
    end_s: float
    intensity: float


def standardize(alpha: np.ndarray, min_std: float = 1e-8) -> np.ndarray:
    """z_i = (a_i - mean) / max(std, min_std)."""
    a = np.asarray(alpha, dtype=np.float64)
    if a.ndim != 1 or len(a) < 1:
        raise ValueError("alpha must be a nonempty 1-D vector")
    return (a - a.mean()) / max(float(a.std()), min_std)


def extract_segments(
    alpha: np.ndarray,
    chunk_stride_s: float,
    cfg: DiffConfig | None = None,
    predicted_label: str = "non-native",
    native_probability: float = 0.0,
) -> list[DifferenceSegment]:
    """Chunks with z above cfg.z_threshold become segments
    [i*stride, (i+1)*stride); flagged chunks separated by at most
    merge_gap_chunks unflagged ones are merged (intensity = max of
    members). No segments are produced for utterances already judged
    native with calibrated P(native) at or above the proficiency
    threshold.
    """
    cfg = cfg or DiffConfig()
    if chunk_stride_s <= 0:
        raise ValueError("chunk_stride_s must be positive")
    if predicted_label == "native" and native_probability >= cfg.proficiency_threshold:
        return []
    z = standardize(alpha, cfg.min_std)
    flagged = np.flatnonzero(z > cfg.z_threshold)
    if len(flagged) == 0:
        return []
    z_max = float(z.max())
    span = z_max - cfg.z_threshold

    def intensity(indices: list[int]) -> float:
        zi = max(float(z[i]) for i in indices)
        if span <= 0.0:
            return 1.0
        return float(np.clip((zi - cfg.z_threshold) / span, 0.0, 1.0))

    segments: list[DifferenceSegment] = []
    group = [int(flagged[0])]
    for i in flagged[1:]:
        i = int(i)
        if i - group[-1] - 1 <= cfg.merge_gap_chunks:
            group.append(i)
        else:
            segments.append(DifferenceSegment(
                start_s=group[0] * chunk_stride_s,
                end_s=(group[-1] + 1) * chunk_stride_s,
                intensity=intensity(group),
            ))
            group = [i]
    segments.append(DifferenceSegment(
        start_s=group[0] * chunk_stride_s,
        end_s=(group[-1] + 1) * chunk_stride_s,
        intensity=intensity(group),
    ))
    return segments
