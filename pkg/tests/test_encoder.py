import numpy as np
import pytest

from prontrain.audio import AudioClip, CANONICAL_SAMPLES
from prontrain.encoder import (
    ChunkedSequence,
    EncoderConfig,
    EncoderError,
    FeatureSequence,
    chunk,
    clip_hash,
    encode,
    encode_cached,
)


def canonical_clip(seed=0):
    rng = np.random.default_rng(seed)
    return AudioClip(samples=rng.uniform(-0.5, 0.5, CANONICAL_SAMPLES))


class TestEncode:
    def test_frame_count_at_20ms_stride(self):
        cfg = EncoderConfig(feature_dim=40, frame_stride_s=0.020)
        seq = encode(canonical_clip(), cfg)
        # convention: frames at n*hop, end-padded, T = floor(N / hop)
        assert seq.num_frames == 200
        assert seq.frames.shape == (200, 40)
        assert seq.frame_stride_s == 0.020

    def test_zero_clip_constant_frames(self):
        cfg = EncoderConfig(feature_dim=20)
        seq = encode(AudioClip(samples=np.zeros(CANONICAL_SAMPLES)), cfg)
        np.testing.assert_array_equal(
            seq.frames, np.tile(seq.frames[0], (seq.num_frames, 1)))

    def test_deterministic(self):
        cfg = EncoderConfig(feature_dim=32)
        clip = canonical_clip(3)
        a = encode(clip, cfg)
        b = encode(clip, cfg)
        np.testing.assert_array_equal(a.frames, b.frames)

    def test_finite(self):
        cfg = EncoderConfig(feature_dim=16)
        seq = encode(canonical_clip(4), cfg)
        assert np.all(np.isfinite(seq.frames))

    def test_rejects_non_canonical(self):
        with pytest.raises(EncoderError):
            encode(AudioClip(samples=np.zeros(100)), EncoderConfig())

    def test_pretrained_needs_checkpoint(self):
        cfg = EncoderConfig(backend="pretrained_ssl", checkpoint_path=None)
        with pytest.raises(EncoderError, match="checkpoint"):
            encode(canonical_clip(), cfg)


def seq_from(frames, stride=0.02):
    return FeatureSequence(frames=np.asarray(frames, dtype=np.float64),
                           frame_stride_s=stride, frame_offset_s=0.0125)


class TestChunk:
    def test_definition_unrolled(self):
        frames = np.arange(12, dtype=np.float64).reshape(6, 2)
        out = chunk(seq_from(frames), 2)
        assert out.chunks.shape == (3, 4)
        np.testing.assert_array_equal(out.chunks[0],
                                      np.concatenate([frames[0], frames[1]]))
        np.testing.assert_array_equal(out.chunks[2],
                                      np.concatenate([frames[4], frames[5]]))

    def test_k1_identity(self):
        frames = np.random.default_rng(0).normal(size=(7, 3))
        out = chunk(seq_from(frames), 1)
        np.testing.assert_array_equal(out.chunks, frames)

    def test_remainder_dropped(self):
        frames = np.arange(10, dtype=np.float64).reshape(5, 2)
        out = chunk(seq_from(frames), 2)
        assert out.chunks.shape == (2, 4)
        assert 8.0 not in out.chunks and 9.0 not in out.chunks

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            chunk(seq_from(np.zeros((3, 2))), 4)

    def test_chunk_stride(self):
        out = chunk(seq_from(np.zeros((10, 2)), stride=0.02), 5)
        assert out.chunk_stride_s == pytest.approx(0.1)
        assert out.chunk_size_k == 5

    def test_deconcatenation_recovers_frames(self):
        frames = np.random.default_rng(1).normal(size=(11, 4))
        k = 3
        out = chunk(seq_from(frames), k)
        recovered = out.chunks.reshape(-1, 4)
        np.testing.assert_array_equal(recovered, frames[:9])


class TestCache:
    def test_cache_round_trip(self, tmp_path):
        cfg = EncoderConfig(feature_dim=16)
        clip = canonical_clip(8)
        first = encode_cached(clip, cfg, tmp_path)
        assert len(list(tmp_path.iterdir())) == 1
        second = encode_cached(clip, cfg, tmp_path)
        np.testing.assert_array_equal(first.frames, second.frames)
        assert second.frame_stride_s == first.frame_stride_s

    def test_cache_key_varies_with_config(self, tmp_path):
        clip = canonical_clip(9)
        encode_cached(clip, EncoderConfig(feature_dim=16), tmp_path)
        encode_cached(clip, EncoderConfig(feature_dim=8), tmp_path)
        assert len(list(tmp_path.iterdir())) == 2

    def test_clip_hash_sensitive_to_samples(self):
        a = canonical_clip(0)
        b = canonical_clip(1)
        assert clip_hash(a) != clip_hash(b)
        assert clip_hash(a) == clip_hash(canonical_clip(0))
