"""Synthetic two-class corpus for tests, demos, and CLI smoke runs.

Each class is a small set of harmonics in a class-specific frequency band
plus per-clip jitter and background noise, so the log-mel features carry
a class-dependent offset that a centroid rule already separates. Speakers
are synthetic and strictly split-disjoint.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio import (
    AudioClip,
    CANONICAL_RATE,
    CANONICAL_SAMPLES,
    UtteranceRecord,
    write_manifest,
    write_wav,
)

CLASS_FREQS = {
    "native": (300.0, 900.0, 1800.0),
    "non-native": (550.0, 1400.0, 2600.0),
}


def synth_clip(label: str, rng: np.random.Generator) -> AudioClip:
    t = np.arange(CANONICAL_SAMPLES) / CANONICAL_RATE
    x = np.zeros(CANONICAL_SAMPLES)
    for f in CLASS_FREQS[label]:
        freq = f * (1.0 + rng.uniform(-0.03, 0.03))
        amp = 0.12 * (1.0 + rng.uniform(-0.3, 0.3))
        x += amp * np.sin(2.0 * np.pi * freq * t + rng.uniform(0.0, 2.0 * np.pi))
    x += rng.normal(0.0, 0.01, size=CANONICAL_SAMPLES)
    peak = np.max(np.abs(x))
    if peak > 1.0:
        x /= peak
    return AudioClip(samples=x, sample_rate=CANONICAL_RATE)


def generate_corpus(
    out_dir: str | Path,
    n_train: int = 200,
    n_val: int = 50,
    n_test: int = 50,
    seed: int = 0,
) -> Path:
    """Write WAV clips plus a manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    records: list[UtteranceRecord] = []
    counts = {"train": n_train, "validation": n_val, "test": n_test}
    for split, n in counts.items():
        for i in range(n):
            label = "native" if i % 2 == 0 else "non-native"
            name = f"{split}_{i:04d}.wav"
            clip = synth_clip(label, rng)
            write_wav(clip, out_dir / name)
            records.append(UtteranceRecord(
                clip_ref=name,
                label=label,
                speaker_id=f"{split}_{'nat' if label == 'native' else 'non'}_{i % 8}",
                split=split,
                text=None,
            ))
    manifest = out_dir / "manifest.jsonl"
    write_manifest(records, manifest)
    return manifest
