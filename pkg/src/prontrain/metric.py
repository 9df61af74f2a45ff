"""Learned distance between utterances via triplet loss.

An LSTM runs over chunked features; its final hidden state passes through
a tanh projection layer and a linear map straight into 2-D, so the metric
space is the display plane: the shown distance IS the trained distance.
Embeddings are L2-normalized before the hinge so the default margin of
1.0 is meaningful. Anchor/positive are non-native utterances, negative is
native; the native centroid of the training set is the display origin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import UtteranceRecord
from .kernels import lstm_forward, lstm_backward
from .scorer import Adam, TrainingError

EPS = 1e-12


def triplet_loss(d_ap: float, d_an: float, m: float) -> float:
    """Hinge [d_ap - d_an + m]_+ on anchor-positive vs anchor-negative
    distances."""
    if d_ap < 0 or d_an < 0:
        raise ValueError("distances must be nonnegative")
    return max(0.0, d_ap - d_an + m)


@dataclass
class Triplet:
    anchor: UtteranceRecord
    positive: UtteranceRecord
    negative: UtteranceRecord


def sample_triplets(records: list[UtteranceRecord], batch_size: int,
                    rng_seed: int) -> list[Triplet]:
    """Uniformly sample valid (non-native, other non-native, native)
    triples; deterministic given the seed."""
    non_native = [r for r in records if r.label == "non-native"]
    native = [r for r in records if r.label == "native"]
    if len(non_native) < 2 or len(native) < 1:
        raise TrainingError(
            f"need >= 2 non-native and >= 1 native clips "
            f"(got {len(non_native)} / {len(native)})"
        )
    rng = np.random.default_rng(rng_seed)
    triplets = []
    for _ in range(batch_size):
        a_idx = int(rng.integers(0, len(non_native)))
        p_idx = int(rng.integers(0, len(non_native) - 1))
        if p_idx >= a_idx:
            p_idx += 1
        n_idx = int(rng.integers(0, len(native)))
        triplets.append(Triplet(
            anchor=non_native[a_idx],
            positive=non_native[p_idx],
            negative=native[n_idx],
        ))
    return triplets


@dataclass
class EmbeddingNet:
    input_dim: int
    hidden_dim: int = 128
    projection_dim: int = 512
    normalize_embeddings: bool = True
    w: np.ndarray = None   # (I, 4H) LSTM input weights
    u: np.ndarray = None   # (H, 4H)
    b: np.ndarray = None   # (4H,)
    w_p: np.ndarray = None  # (P, H) projection
    b_p: np.ndarray = None  # (P,)
    w_o: np.ndarray = None  # (2, P) output head
    b_o: np.ndarray = None  # (2,)

    def array_names(self) -> list[str]:
        return ["w", "u", "b", "w_p", "b_p", "w_o", "b_o"]

    def arrays(self) -> dict[str, np.ndarray]:
        return {n: getattr(self, n) for n in self.array_names()}

    def copy(self) -> "EmbeddingNet":
        out = EmbeddingNet(
            input_dim=self.input_dim,
            hidden_dim=self.hidden_dim,
            projection_dim=self.projection_dim,
            normalize_embeddings=self.normalize_embeddings,
        )
        for n in self.array_names():
            setattr(out, n, getattr(self, n).copy())
        return out


def init_embedding_net(input_dim: int, hidden_dim: int = 128,
                       projection_dim: int = 512,
                       normalize_embeddings: bool = True,
                       rng: np.random.Generator | None = None) -> EmbeddingNet:
    rng = rng or np.random.default_rng(0)
    net = EmbeddingNet(
        input_dim=input_dim,
        hidden_dim=hidden_dim,
        projection_dim=projection_dim,
        normalize_embeddings=normalize_embeddings,
    )

    def glorot(shape):
        lim = np.sqrt(6.0 / (shape[0] + shape[-1]))
        return rng.uniform(-lim, lim, size=shape)

    h = hidden_dim
    net.w = glorot((input_dim, 4 * h))
    net.u = glorot((h, 4 * h))
    net.b = np.zeros(4 * h)
    net.w_p = glorot((projection_dim, h))
    net.b_p = np.zeros(projection_dim)
    net.w_o = glorot((2, projection_dim))
    net.b_o = np.zeros(2)
    return net


def embed(chunks: np.ndarray, net: EmbeddingNet) -> np.ndarray:
    """Deterministic 2-D embedding of one chunked utterance."""
    point, _ = _embed_forward(np.asarray(chunks, dtype=np.float64), net)
    return point


def _embed_forward(x: np.ndarray, net: EmbeddingNet):
    if x.shape[1] != net.input_dim:
        raise ValueError(
            f"chunk width {x.shape[1]} does not match net input_dim {net.input_dim}"
        )
    hs, cs, gates = lstm_forward(x, net.w, net.u, net.b)
    h_last = hs[-1]
    pre_p = net.w_p @ h_last + net.b_p
    p = np.tanh(pre_p)
    raw = net.w_o @ p + net.b_o
    if net.normalize_embeddings:
        norm = float(np.linalg.norm(raw))
        point = raw / max(norm, EPS)
    else:
        norm = 1.0
        point = raw
    cache = (x, hs, cs, gates, h_last, p, raw, norm)
    return point, cache


def _embed_backward(dpoint: np.ndarray, cache, net: EmbeddingNet) -> dict[str, np.ndarray]:
    x, hs, cs, gates, h_last, p, raw, norm = cache
    if net.normalize_embeddings:
        n = max(norm, EPS)
        e = raw / n
        draw = (dpoint - e * float(e @ dpoint)) / n
    else:
        draw = dpoint
    grads: dict[str, np.ndarray] = {}
    grads["w_o"] = np.outer(draw, p)
    grads["b_o"] = draw.copy()
    dp = net.w_o.T @ draw
    dpre_p = dp * (1.0 - p * p)
    grads["w_p"] = np.outer(dpre_p, h_last)
    grads["b_p"] = dpre_p
    dh_last = net.w_p.T @ dpre_p
    dhs = np.zeros_like(hs)
    dhs[-1] = dh_last
    dw, du, db = lstm_backward(x, hs, cs, gates, net.u, dhs)
    grads["w"], grads["u"], grads["b"] = dw, du, db
    return grads


def triplet_loss_and_grads(
    xa: np.ndarray, xp: np.ndarray, xn: np.ndarray,
    net: EmbeddingNet, margin: float,
) -> tuple[float, dict[str, np.ndarray] | None, float, float]:
    """Loss and analytic gradients for one triplet.

    Returns (loss, grads_or_None, d_ap, d_an); grads is None when the
    hinge is inactive.
    """
    ea, cache_a = _embed_forward(xa, net)
    ep, cache_p = _embed_forward(xp, net)
    en, cache_n = _embed_forward(xn, net)
    diff_ap = ea - ep
    diff_an = ea - en
    d_ap = float(np.linalg.norm(diff_ap))
    d_an = float(np.linalg.norm(diff_an))
    loss = triplet_loss(d_ap, d_an, margin)
    if loss <= 0.0:
        return loss, None, d_ap, d_an
    g_ap = diff_ap / max(d_ap, EPS)
    g_an = diff_an / max(d_an, EPS)
    ga = _embed_backward(g_ap - g_an, cache_a, net)
    gp = _embed_backward(-g_ap, cache_p, net)
    gn = _embed_backward(g_an, cache_n, net)
    grads = {k: ga[k] + gp[k] + gn[k] for k in ga}
    return loss, grads, d_ap, d_an


@dataclass
class MetricTrainConfig:
    batch_size: int = 32
    batches_per_epoch: int = 8
    learning_rate: float = 1e-4
    margin: float = 1.0
    max_epochs: int = 30
    rng_seed: int = 0
    hidden_dim: int = 128
    projection_dim: int = 512
    normalize_embeddings: bool = True


def train_metric_on_features(
    train_feats: dict[str, np.ndarray],
    train_records: list[UtteranceRecord],
    val_feats: dict[str, np.ndarray],
    val_records: list[UtteranceRecord],
    cfg: MetricTrainConfig,
) -> tuple[EmbeddingNet, list[dict]]:
    """Train the embedding net; features are keyed by clip_ref.

    Deterministic given cfg.rng_seed. The log records per-epoch mean loss
    and triplet satisfaction rate (fraction with d_ap + m <= d_an) on the
    validation triplets; a vacuous margin of 0 is flagged in the log.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    input_dim = next(iter(train_feats.values())).shape[1]
    net = init_embedding_net(
        input_dim,
        hidden_dim=cfg.hidden_dim,
        projection_dim=cfg.projection_dim,
        normalize_embeddings=cfg.normalize_embeddings,
        rng=rng,
    )
    arrays = net.arrays()
    opt = Adam(arrays, lr=cfg.learning_rate)
    val_triplets = sample_triplets(val_records, 4 * cfg.batch_size,
                                   rng_seed=cfg.rng_seed + 1)
    log: list[dict] = []
    for epoch in range(cfg.max_epochs):
        epoch_loss = 0.0
        n_seen = 0
        for _ in range(cfg.batches_per_epoch):
            seed = int(rng.integers(0, 2**31 - 1))
            batch = sample_triplets(train_records, cfg.batch_size, rng_seed=seed)
            acc = {k: np.zeros_like(v) for k, v in arrays.items()}
            for tri in batch:
                loss, grads, _, _ = triplet_loss_and_grads(
                    train_feats[tri.anchor.clip_ref],
                    train_feats[tri.positive.clip_ref],
                    train_feats[tri.negative.clip_ref],
                    net, cfg.margin,
                )
                epoch_loss += loss
                n_seen += 1
                if grads is not None:
                    for k in acc:
                        acc[k] += grads[k]
            for k in acc:
                acc[k] /= len(batch)
            opt.step(arrays, acc)
        sat = triplet_satisfaction(val_triplets, val_feats, net, cfg.margin)
        entry = {
            "epoch": epoch,
            "train_loss": epoch_loss / max(n_seen, 1),
            "val_triplet_satisfaction": sat,
        }
        if cfg.margin == 0.0:
            entry["warning"] = "margin 0: hinge is vacuous for equal distances"
        log.append(entry)
    return net, log


def triplet_satisfaction(triplets: list[Triplet], feats: dict[str, np.ndarray],
                         net: EmbeddingNet, margin: float) -> float:
    ok = 0
    for tri in triplets:
        ea = embed(feats[tri.anchor.clip_ref], net)
        ep = embed(feats[tri.positive.clip_ref], net)
        en = embed(feats[tri.negative.clip_ref], net)
        d_ap = float(np.linalg.norm(ea - ep))
        d_an = float(np.linalg.norm(ea - en))
        if d_ap + margin <= d_an:
            ok += 1
    return ok / len(triplets)


def native_anchor(native_feats: list[np.ndarray], net: EmbeddingNet) -> np.ndarray:
    """Coordinate-wise mean of the embeddings of all native training
    clips."""
    if not native_feats:
        raise TrainingError("native set is empty; cannot compute anchor")
    points = np.stack([embed(x, net) for x in native_feats])
    return points.mean(axis=0)


@dataclass
class DistanceReading:
    user_point: np.ndarray    # anchor-centered display coordinates
    anchor_point: np.ndarray  # always the origin in display coordinates
    distance: float


def distance_reading(chunks: np.ndarray, net: EmbeddingNet,
                     anchor: np.ndarray) -> DistanceReading:
    """Embed the utterance and report its offset from the native anchor;
    display coordinates put the anchor at the origin."""
    raw = embed(chunks, net)
    user = raw - anchor
    return DistanceReading(
        user_point=user,
        anchor_point=np.zeros(2),
        distance=float(np.linalg.norm(user)),
    )
