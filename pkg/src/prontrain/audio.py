"""Corpus ingestion, audio normalization, and training-time augmentation.

Canonical audio format: mono float64 in [-1, 1], 16 kHz, exactly 4 s
(64000 samples). Manifests are line-delimited JSON with fields
clip_ref, label, speaker_id, text, split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

CANONICAL_RATE = 16000
CANONICAL_DURATION_S = 4.0
CANONICAL_SAMPLES = int(CANONICAL_RATE * CANONICAL_DURATION_S)

VALID_LABELS = ("native", "non-native")
VALID_SPLITS = ("train", "validation", "test")


class ManifestError(ValueError):
    pass


class AudioFormatError(ValueError):
    pass


@dataclass
class AudioClip:
    samples: np.ndarray
    sample_rate: int = CANONICAL_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    @property
    def is_canonical(self) -> bool:
        return (
            self.sample_rate == CANONICAL_RATE
            and len(self.samples) == CANONICAL_SAMPLES
            and float(np.max(np.abs(self.samples), initial=0.0)) <= 1.0 + 1e-12
        )


@dataclass
class UtteranceRecord:
    clip_ref: str
    label: str
    speaker_id: str
    split: str
    text: str | None = None


@dataclass
class AugmentationConfig:
    noise_snr_db_range: tuple[float, float] = (5.0, 30.0)
    gain_db_range: tuple[float, float] = (-6.0, 6.0)
    pitch_shift_semitones_range: tuple[float, float] = (-2.0, 2.0)
    silence_fraction_max: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("noise_snr_db_range", "gain_db_range", "pitch_shift_semitones_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name}: lo {lo} > hi {hi}")
        if not 0.0 <= self.silence_fraction_max < 1.0:
            raise ValueError("silence_fraction_max must be in [0, 1)")


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------

def load_manifest(path: str | Path) -> list[UtteranceRecord]:
    """Parse a line-delimited JSON manifest into utterance records.

    Rejects unknown labels/splits, duplicate clip_refs, and speakers that
    appear in more than one split. Errors name the offending line.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"manifest not found: {path}")
    records: list[UtteranceRecord] = []
    seen_refs: set[str] = set()
    speaker_splits: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: malformed line ({exc})") from exc
            missing = {"clip_ref", "label", "speaker_id", "split"} - obj.keys()
            if missing:
                raise ManifestError(f"{path}:{lineno}: missing fields {sorted(missing)}")
            if obj["label"] not in VALID_LABELS:
                raise ManifestError(
                    f"{path}:{lineno}: unknown label {obj['label']!r} "
                    f"(expected one of {VALID_LABELS})"
                )
            if obj["split"] not in VALID_SPLITS:
                raise ManifestError(f"{path}:{lineno}: unknown split {obj['split']!r}")
            if obj["clip_ref"] in seen_refs:
                raise ManifestError(f"{path}:{lineno}: duplicate clip_ref {obj['clip_ref']!r}")
            seen_refs.add(obj["clip_ref"])
            prev = speaker_splits.get(obj["speaker_id"])
            if prev is not None and prev != obj["split"]:
                raise ManifestError(
                    f"{path}:{lineno}: speaker {obj['speaker_id']!r} appears in both "
                    f"{prev!r} and {obj['split']!r} splits"
                )
            speaker_splits[obj["speaker_id"]] = obj["split"]
            records.append(
                UtteranceRecord(
                    clip_ref=obj["clip_ref"],
                    label=obj["label"],
                    speaker_id=obj["speaker_id"],
                    split=obj["split"],
                    text=obj.get("text"),
                )
            )
    return records


def write_manifest(records: list[UtteranceRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            obj = {
                "clip_ref": rec.clip_ref,
                "label": rec.label,
                "speaker_id": rec.speaker_id,
                "split": rec.split,
            }
            if rec.text is not None:
                obj["text"] = rec.text
            fh.write(json.dumps(obj) + "\n")


# ---------------------------------------------------------------------------
# WAV I/O
# ---------------------------------------------------------------------------

def read_wav(path: str | Path) -> AudioClip:
    """Read a PCM16 or float WAV; stereo is downmixed by channel average."""
    rate, data = wavfile.read(path)
    if data.dtype == np.int16:
        data = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        data = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        data = data.astype(np.float64)
    else:
        raise AudioFormatError(f"unsupported WAV sample format: {data.dtype}")
    if data.ndim == 2:
        data = data.mean(axis=1)
    return AudioClip(samples=data, sample_rate=int(rate))


def write_wav(clip: AudioClip, path: str | Path) -> None:
    pcm = np.clip(clip.samples, -1.0, 1.0)
    wavfile.write(path, clip.sample_rate, (pcm * 32767.0).astype(np.int16))


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def normalize(clip: AudioClip) -> AudioClip:
    """Bring a clip to canonical form: mono 16 kHz, exactly 4 s.

    Shorter input is zero-padded at the end, longer input truncated at the
    end; peak amplitude is rescaled to <= 1 if it exceeds 1. Idempotent.
    """
    if len(clip.samples) == 0:
        raise AudioFormatError("cannot normalize zero-length audio")
    x = np.asarray(clip.samples, dtype=np.float64)
    if x.ndim == 2:
        x = x.mean(axis=1)
    if clip.sample_rate != CANONICAL_RATE:
        if clip.sample_rate <= 0:
            raise AudioFormatError(f"unsupported sample rate {clip.sample_rate}")
        ratio = Fraction(CANONICAL_RATE, int(clip.sample_rate))
        x = resample_poly(x, ratio.numerator, ratio.denominator)
    if len(x) >= CANONICAL_SAMPLES:
        x = x[:CANONICAL_SAMPLES]
    else:
        x = np.concatenate([x, np.zeros(CANONICAL_SAMPLES - len(x))])
    peak = np.max(np.abs(x))
    if peak > 1.0:
        x = x / peak
    return AudioClip(samples=x, sample_rate=CANONICAL_RATE)


# ---------------------------------------------------------------------------
# Augmentation
# ---------------------------------------------------------------------------

def _apply_gain(x: np.ndarray, gain_db: float) -> np.ndarray:
    return x * 10.0 ** (gain_db / 20.0)


def _apply_pitch_shift(x: np.ndarray, semitones: float) -> np.ndarray:
    # Resample-then-truncate/pad: preserves canonical length at the cost
    # of a small duration change in content.
    if semitones == 0.0:
        return x
    factor = 2.0 ** (semitones / 12.0)
    n = len(x)
    new_n = max(1, int(round(n / factor)))
    src = np.linspace(0.0, n - 1, new_n)
    y = np.interp(src, np.arange(n), x)
    if len(y) >= n:
        return y[:n]
    return np.concatenate([y, np.zeros(n - len(y))])


def _apply_noise(x: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    rms = np.sqrt(np.mean(x**2))
    if rms == 0.0:
        return x
    noise_rms = rms * 10.0 ** (-snr_db / 20.0)
    return x + rng.normal(0.0, noise_rms, size=len(x))


def _apply_silence(x: np.ndarray, fraction: float, rng: np.random.Generator) -> np.ndarray:
    n_silent = int(len(x) * fraction)
    if n_silent == 0:
        return x
    start = int(rng.integers(0, len(x) - n_silent + 1))
    y = x.copy()
    y[start:start + n_silent] = 0.0
    return y


def augment(clip: AudioClip, cfg: AugmentationConfig) -> AudioClip:
    """Apply the four training-time perturbations: gain, pitch shift,
    background Gaussian noise, and a random contiguous silence.

    Pure function of (clip, cfg): the same seed reproduces the output
    byte-for-byte. A degenerate (0, 0) noise SNR range disables the noise
    transform (0 dB SNR is never a useful operating point).
    """
    if not clip.is_canonical:
        raise AudioFormatError("augment requires a canonical clip; call normalize first")
    rng = np.random.default_rng(cfg.rng_seed)
    x = clip.samples

    gain_db = rng.uniform(*cfg.gain_db_range)
    x = _apply_gain(x, gain_db)

    semitones = rng.uniform(*cfg.pitch_shift_semitones_range)
    x = _apply_pitch_shift(x, semitones)

    snr_lo, snr_hi = cfg.noise_snr_db_range
    if not (snr_lo == 0.0 and snr_hi == 0.0):
        snr_db = rng.uniform(snr_lo, snr_hi)
        x = _apply_noise(x, snr_db, rng)

    if cfg.silence_fraction_max > 0.0:
        fraction = rng.uniform(0.0, cfg.silence_fraction_max)
        x = _apply_silence(x, fraction, rng)

    peak = np.max(np.abs(x))
    if peak > 1.0:
        x = x / peak
    return AudioClip(samples=x, sample_rate=clip.sample_rate)
