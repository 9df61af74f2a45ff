"""Per-frame latent features from canonical audio, plus k-step chunking.

Two backends: `pretrained_ssl` wraps a local self-supervised speech model
checkpoint (loaded through torch/transformers on demand), and
`spectral_fallback` computes deterministic log-mel filterbank energies so
the full pipeline runs with no model download. Framing convention for the
fallback: frames start at n*hop for n = 0 .. floor(N/hop) - 1 with the
signal zero-padded at the end, so a 4 s clip at a 20 ms stride yields
exactly 200 frames.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .audio import AudioClip, CANONICAL_RATE

LOG_FLOOR = 1e-10


class EncoderError(RuntimeError):
    pass


@dataclass
class EncoderConfig:
    backend: str = "spectral_fallback"
    feature_dim: int = 80
    frame_stride_s: float = 0.020
    chunk_size_k: int = 5
    window_s: float = 0.025
    checkpoint_path: str | None = None
    layer: int = -1

    def __post_init__(self):
        if self.backend not in ("pretrained_ssl", "spectral_fallback"):
            raise ValueError(f"unknown encoder backend {self.backend!r}")
        if self.feature_dim <= 0:
            raise ValueError("feature_dim must be positive")
        if self.chunk_size_k < 1:
            raise ValueError("chunk_size_k must be >= 1")

    def config_hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class FeatureSequence:
    frames: np.ndarray  # (T, D)
    frame_stride_s: float
    frame_offset_s: float

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]


@dataclass
class ChunkedSequence:
    chunks: np.ndarray  # (T', k*D)
    chunk_size_k: int
    chunk_stride_s: float

    @property
    def num_chunks(self) -> int:
        return self.chunks.shape[0]


def _mel_filterbank(n_mels: int, n_fft: int, sample_rate: int) -> np.ndarray:
    """Triangular mel filters (HTK mel scale) over 0 .. Nyquist."""

    def hz_to_mel(f):
        return 2595.0 * np.log10(1.0 + f / 700.0)

    def mel_to_hz(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    n_bins = n_fft // 2 + 1
    mel_points = np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), n_mels + 2)
    hz_points = mel_to_hz(mel_points)
    bin_freqs = np.linspace(0.0, sample_rate / 2.0, n_bins)
    fb = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        lo, ctr, hi = hz_points[m], hz_points[m + 1], hz_points[m + 2]
        up = (bin_freqs - lo) / max(ctr - lo, 1e-12)
        down = (hi - bin_freqs) / max(hi - ctr, 1e-12)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
    return fb


def _logmel_encode(clip: AudioClip, cfg: EncoderConfig) -> FeatureSequence:
    hop = int(round(cfg.frame_stride_s * clip.sample_rate))
    win = int(round(cfg.window_s * clip.sample_rate))
    x = clip.samples
    n_frames = len(x) // hop
    x = np.concatenate([x, np.zeros(win)])
    window = np.hanning(win)
    fb = _mel_filterbank(cfg.feature_dim, win, clip.sample_rate)
    frames = np.empty((n_frames, cfg.feature_dim))
    for t in range(n_frames):
        seg = x[t * hop:t * hop + win] * window
        power = np.abs(np.fft.rfft(seg)) ** 2
        frames[t] = np.log(np.maximum(fb @ power, LOG_FLOOR))
    return FeatureSequence(
        frames=frames,
        frame_stride_s=cfg.frame_stride_s,
        frame_offset_s=cfg.window_s / 2.0,
    )


def _pretrained_encode(clip: AudioClip, cfg: EncoderConfig) -> FeatureSequence:
    if cfg.checkpoint_path is None or not Path(cfg.checkpoint_path).exists():
        raise EncoderError(
            f"pretrained_ssl backend needs a valid checkpoint_path "
            f"(got {cfg.checkpoint_path!r})"
        )
    try:
        import torch
        from transformers import AutoModel
    except ImportError as exc:
        raise EncoderError("pretrained_ssl backend requires torch + transformers") from exc
    model = AutoModel.from_pretrained(cfg.checkpoint_path)
    model.eval()
    with torch.no_grad():
        wav = torch.as_tensor(clip.samples, dtype=torch.float32).unsqueeze(0)
        out = model(wav, output_hidden_states=True)
        hidden = out.hidden_states[cfg.layer].squeeze(0).numpy().astype(np.float64)
    stride = clip.duration_s / hidden.shape[0]
    return FeatureSequence(frames=hidden, frame_stride_s=stride, frame_offset_s=stride / 2.0)


def encode(clip: AudioClip, cfg: EncoderConfig) -> FeatureSequence:
    """Canonical clip -> (T, D) latent frames; deterministic per backend."""
    if not clip.is_canonical:
        raise EncoderError("encode requires a canonical clip; call normalize first")
    if cfg.backend == "spectral_fallback":
        seq = _logmel_encode(clip, cfg)
    else:
        seq = _pretrained_encode(clip, cfg)
    if not np.all(np.isfinite(seq.frames)):
        raise EncoderError("encoder produced non-finite values")
    return seq


def chunk(seq: FeatureSequence, k: int) -> ChunkedSequence:
    """Concatenate k consecutive frames per row; trailing T mod k frames
    are dropped."""
    if k < 1:
        raise ValueError("chunk size k must be >= 1")
    T, D = seq.frames.shape
    if k > T:
        raise ValueError(f"chunk size k={k} exceeds frame count T={T}")
    n = T // k
    chunks = seq.frames[:n * k].reshape(n, k * D)
    return ChunkedSequence(
        chunks=chunks,
        chunk_size_k=k,
        chunk_stride_s=k * seq.frame_stride_s,
    )


def encode_chunked(clip: AudioClip, cfg: EncoderConfig) -> ChunkedSequence:
    return chunk(encode(clip, cfg), cfg.chunk_size_k)


# ---------------------------------------------------------------------------
# Feature cache
# ---------------------------------------------------------------------------

def clip_hash(clip: AudioClip) -> str:
    h = hashlib.sha256()
    h.update(np.int64(clip.sample_rate).tobytes())
    h.update(np.ascontiguousarray(clip.samples).tobytes())
    return h.hexdigest()[:24]


def encode_cached(clip: AudioClip, cfg: EncoderConfig, cache_dir: str | Path | None) -> FeatureSequence:
    """encode() with an on-disk cache keyed by (clip hash, config hash)."""
    if cache_dir is None:
        return encode(clip, cfg)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = f"{clip_hash(clip)}_{cfg.config_hash()}.npz"
    path = cache_dir / key
    if path.exists():
        data = np.load(path)
        return FeatureSequence(
            frames=data["frames"],
            frame_stride_s=float(data["frame_stride_s"]),
            frame_offset_s=float(data["frame_offset_s"]),
        )
    seq = encode(clip, cfg)
    np.savez(path, frames=seq.frames, frame_stride_s=seq.frame_stride_s,
             frame_offset_s=seq.frame_offset_s)
    return seq
