"""Attention-pooled recurrent classifier for native / non-native speech.

The model runs an LSTM (bidirectional by default) over chunked encoder
features, pools the hidden states with a learned attention distribution,
and applies a 2-class softmax head:

    M = tanh(W_A1 H),  alpha = softmax(W_A2 M)
    p = softmax(W_S (H alpha^T) + b_S)

Trained with focal loss and Adam; gradients are derived analytically
(verified against finite differences in the test suite). Class index 0 is
"native"; ties in the head predict native.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioClip
from .encoder import EncoderConfig, encode_chunked
from .kernels import lstm_forward, lstm_backward

LABELS = ("native", "non-native")
NATIVE_INDEX = 0
EPS = 1e-12


class TrainingError(ValueError):
    pass


@dataclass
class ClassifierParams:
    input_dim: int
    hidden_dim: int = 128
    attention_dim: int = 32
    bidirectional: bool = True
    dropout_p: float = 0.5
    # LSTM weights, forward and (optional) backward direction
    w_f: np.ndarray = None
    u_f: np.ndarray = None
    b_f: np.ndarray = None
    w_b: np.ndarray = None
    u_b: np.ndarray = None
    b_b: np.ndarray = None
    # attention and softmax head
    w_a1: np.ndarray = None  # (A, Dh)
    w_a2: np.ndarray = None  # (1, A)
    w_s: np.ndarray = None   # (2, Dh)
    b_s: np.ndarray = None   # (2,)

    @property
    def state_dim(self) -> int:
        return self.hidden_dim * (2 if self.bidirectional else 1)

    def array_names(self) -> list[str]:
        names = ["w_f", "u_f", "b_f"]
        if self.bidirectional:
            names += ["w_b", "u_b", "b_b"]
        return names + ["w_a1", "w_a2", "w_s", "b_s"]

    def arrays(self) -> dict[str, np.ndarray]:
        return {n: getattr(self, n) for n in self.array_names()}

    def copy(self) -> "ClassifierParams":
        out = ClassifierParams(
            input_dim=self.input_dim,
            hidden_dim=self.hidden_dim,
            attention_dim=self.attention_dim,
            bidirectional=self.bidirectional,
            dropout_p=self.dropout_p,
        )
        for n in self.array_names():
            setattr(out, n, getattr(self, n).copy())
        return out


def init_params(
    input_dim: int,
    hidden_dim: int = 128,
    attention_dim: int = 32,
    bidirectional: bool = True,
    dropout_p: float = 0.5,
    rng: np.random.Generator | None = None,
) -> ClassifierParams:
    rng = rng or np.random.default_rng(0)
    p = ClassifierParams(
        input_dim=input_dim,
        hidden_dim=hidden_dim,
        attention_dim=attention_dim,
        bidirectional=bidirectional,
        dropout_p=dropout_p,
    )
    h = hidden_dim

    def glorot(shape):
        lim = np.sqrt(6.0 / (shape[0] + shape[-1]))
        return rng.uniform(-lim, lim, size=shape)

    p.w_f = glorot((input_dim, 4 * h))
    p.u_f = glorot((h, 4 * h))
    p.b_f = np.zeros(4 * h)
    if bidirectional:
        p.w_b = glorot((input_dim, 4 * h))
        p.u_b = glorot((h, 4 * h))
        p.b_b = np.zeros(4 * h)
    dh = p.state_dim
    p.w_a1 = glorot((attention_dim, dh))
    p.w_a2 = glorot((1, attention_dim))
    p.w_s = glorot((2, dh))
    p.b_s = np.zeros(2)
    return p


@dataclass
class AttentionVector:
    weights: np.ndarray


@dataclass
class ClassifierOutput:
    logits: np.ndarray
    probabilities: np.ndarray
    predicted_label: str
    attention: AttentionVector
    hidden_states: np.ndarray  # (T', Dh), retained for pooling verification


def softmax(x: np.ndarray) -> np.ndarray:
    z = x - np.max(x)
    e = np.exp(z)
    return e / e.sum()


def run_recurrent(x: np.ndarray, params: ClassifierParams) -> np.ndarray:
    """Chunk rows (T', I) -> hidden states H (T', Dh)."""
    hs_f, _, _ = lstm_forward(x, params.w_f, params.u_f, params.b_f)
    if not params.bidirectional:
        return hs_f
    hs_b, _, _ = lstm_forward(x[::-1].copy(), params.w_b, params.u_b, params.b_b)
    return np.concatenate([hs_f, hs_b[::-1]], axis=1)


def attention_weights(H: np.ndarray, params: ClassifierParams) -> AttentionVector:
    """alpha = softmax(W_A2 tanh(W_A1 H)) over the time axis."""
    if H.ndim != 2 or H.shape[0] < 1:
        raise ValueError("H must be a nonempty (T', Dh) matrix")
    if H.shape[1] != params.w_a1.shape[1]:
        raise ValueError(
            f"hidden-state dim {H.shape[1]} does not match W_A1 {params.w_a1.shape}"
        )
    M = np.tanh(H @ params.w_a1.T)
    scores = M @ params.w_a2[0]
    return AttentionVector(weights=softmax(scores))


def classify(chunks: np.ndarray, params: ClassifierParams) -> ClassifierOutput:
    """Full inference pass (dropout disabled)."""
    chunks = np.asarray(chunks, dtype=np.float64)
    if chunks.ndim != 2 or chunks.shape[0] < 1:
        raise ValueError("chunks must be a nonempty (T', I) matrix")
    if chunks.shape[1] != params.input_dim:
        raise ValueError(
            f"chunk width {chunks.shape[1]} does not match model input_dim {params.input_dim}"
        )
    H = run_recurrent(chunks, params)
    attn = attention_weights(H, params)
    pooled = H.T @ attn.weights
    logits = params.w_s @ pooled + params.b_s
    probs = softmax(logits)
    pred = NATIVE_INDEX if probs[NATIVE_INDEX] >= probs[1 - NATIVE_INDEX] else 1 - NATIVE_INDEX
    return ClassifierOutput(
        logits=logits,
        probabilities=probs,
        predicted_label=LABELS[pred],
        attention=attn,
        hidden_states=H,
    )


def focal_loss(probabilities: np.ndarray, label_index: int, gamma: float) -> float:
    """-(1 - p_y)^gamma * log(p_y); gamma = 0 recovers cross-entropy."""
    p = float(np.clip(probabilities[label_index], EPS, 1.0))
    return -((1.0 - p) ** gamma) * np.log(p)


def loss_and_grads(
    chunks: np.ndarray,
    label_index: int,
    params: ClassifierParams,
    gamma: float,
    dropout_mask: np.ndarray | None = None,
) -> tuple[float, dict[str, np.ndarray], np.ndarray]:
    """Focal loss of one utterance plus analytic gradients for every
    parameter block. Returns (loss, grads, probabilities).

    dropout_mask, when given, is an inverted-dropout mask applied to the
    hidden states before attention and pooling (training only).
    """
    x = np.asarray(chunks, dtype=np.float64)
    T = x.shape[0]
    hs_f, cs_f, gates_f = lstm_forward(x, params.w_f, params.u_f, params.b_f)
    if params.bidirectional:
        xr = x[::-1].copy()
        hs_b, cs_b, gates_b = lstm_forward(xr, params.w_b, params.u_b, params.b_b)
        H = np.concatenate([hs_f, hs_b[::-1]], axis=1)
    else:
        H = hs_f
    Hd = H * dropout_mask if dropout_mask is not None else H

    preM = Hd @ params.w_a1.T
    M = np.tanh(preM)
    scores = M @ params.w_a2[0]
    alpha = softmax(scores)
    pooled = Hd.T @ alpha
    logits = params.w_s @ pooled + params.b_s
    probs = softmax(logits)

    p_y = float(np.clip(probs[label_index], EPS, 1.0 - EPS))
    q = 1.0 - p_y
    loss = -(q**gamma) * np.log(p_y)
    # d loss / d p_y, then chain through the softmax jacobian
    if gamma == 0.0:
        dl_dp = -1.0 / p_y
    else:
        dl_dp = gamma * (q ** (gamma - 1.0)) * np.log(p_y) - (q**gamma) / p_y
    onehot = np.zeros(2)
    onehot[label_index] = 1.0
    dlogits = dl_dp * probs[label_index] * (onehot - probs)

    grads: dict[str, np.ndarray] = {}
    grads["w_s"] = np.outer(dlogits, pooled)
    grads["b_s"] = dlogits.copy()
    dpooled = params.w_s.T @ dlogits

    dHd = alpha[:, None] * dpooled[None, :]
    dalpha = Hd @ dpooled
    dscores = alpha * (dalpha - float(alpha @ dalpha))
    grads["w_a2"] = (dscores @ M)[None, :]
    dM = np.outer(dscores, params.w_a2[0])
    dpreM = dM * (1.0 - M * M)
    grads["w_a1"] = dpreM.T @ Hd
    dHd += dpreM @ params.w_a1

    dH = dHd * dropout_mask if dropout_mask is not None else dHd

    h = params.hidden_dim
    dw, du, db = lstm_backward(x, hs_f, cs_f, gates_f, params.u_f,
                               np.ascontiguousarray(dH[:, :h]))
    grads["w_f"], grads["u_f"], grads["b_f"] = dw, du, db
    if params.bidirectional:
        dhs_b = np.ascontiguousarray(dH[::-1, h:])
        dw, du, db = lstm_backward(xr, hs_b, cs_b, gates_b, params.u_b, dhs_b)
        grads["w_b"], grads["u_b"], grads["b_b"] = dw, du, db
    return loss, grads, probs


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    batch_size: int = 32
    learning_rate: float = 1e-4
    focal_gamma: float = 2.0
    max_epochs: int = 30
    early_stop_patience: int = 10
    rng_seed: int = 0
    hidden_dim: int = 128
    attention_dim: int = 32
    bidirectional: bool = True
    dropout_p: float = 0.5


class Adam:
    def __init__(self, arrays: dict[str, np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in arrays.items()}
        self.v = {k: np.zeros_like(v) for k, v in arrays.items()}

    def step(self, arrays: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1**self.t
        b2t = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            mhat = self.m[k] / b1t
            vhat = self.v[k] / b2t
            arrays[k] -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


def _check_splits(train_labels: list[int], val_labels: list[int]) -> None:
    for name, labels in (("train", train_labels), ("validation", val_labels)):
        if not labels:
            raise TrainingError(f"{name} split is empty")
        if len(set(labels)) < 2:
            raise TrainingError(f"{name} split contains a single class")


def train_on_features(
    train_set: list[tuple[np.ndarray, int]],
    val_set: list[tuple[np.ndarray, int]],
    cfg: TrainConfig,
) -> tuple[ClassifierParams, list[dict]]:
    """Train the classifier on precomputed (chunks, label_index) pairs.

    Deterministic given cfg.rng_seed. Early-stops on validation loss and
    returns the best-validation parameters plus the per-epoch log.
    """
    _check_splits([y for _, y in train_set], [y for _, y in val_set])
    rng = np.random.default_rng(cfg.rng_seed)
    input_dim = train_set[0][0].shape[1]
    params = init_params(
        input_dim,
        hidden_dim=cfg.hidden_dim,
        attention_dim=cfg.attention_dim,
        bidirectional=cfg.bidirectional,
        dropout_p=cfg.dropout_p,
        rng=rng,
    )
    arrays = params.arrays()
    opt = Adam(arrays, lr=cfg.learning_rate)
    log: list[dict] = []
    best_loss = np.inf
    best_params = params.copy()
    best_epoch = -1

    for epoch in range(cfg.max_epochs):
        order = rng.permutation(len(train_set))
        train_loss = 0.0
        train_correct = 0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            acc = {k: np.zeros_like(v) for k, v in arrays.items()}
            for idx in batch:
                x, y = train_set[idx]
                mask = None
                if params.dropout_p > 0.0:
                    keep = 1.0 - params.dropout_p
                    mask = (rng.random((x.shape[0], params.state_dim)) < keep) / keep
                loss, grads, probs = loss_and_grads(x, y, params, cfg.focal_gamma, mask)
                train_loss += loss
                train_correct += int(np.argmax(probs) == y)
                for k in acc:
                    acc[k] += grads[k]
            for k in acc:
                acc[k] /= len(batch)
            opt.step(arrays, acc)
        val_loss, val_acc = evaluate_on_features(val_set, params, cfg.focal_gamma)
        entry = {
            "epoch": epoch,
            "train_loss": train_loss / len(train_set),
            "train_accuracy": train_correct / len(train_set),
            "val_loss": val_loss,
            "val_accuracy": val_acc,
        }
        log.append(entry)
        if val_loss < best_loss - 1e-12:
            best_loss = val_loss
            best_params = params.copy()
            best_epoch = epoch
        elif epoch - best_epoch >= cfg.early_stop_patience:
            break
    return best_params, log


def evaluate_on_features(
    dataset: list[tuple[np.ndarray, int]],
    params: ClassifierParams,
    gamma: float,
) -> tuple[float, float]:
    total = 0.0
    correct = 0
    for x, y in dataset:
        out = classify(x, params)
        total += focal_loss(out.probabilities, y, gamma)
        correct += int(np.argmax(out.probabilities) == y)
    return total / len(dataset), correct / len(dataset)


def collect_logits(
    dataset: list[tuple[np.ndarray, int]],
    params: ClassifierParams,
) -> tuple[np.ndarray, np.ndarray]:
    logits = np.stack([classify(x, params).logits for x, _ in dataset])
    labels = np.array([y for _, y in dataset], dtype=np.int64)
    return logits, labels


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

@dataclass
class PronunciationScore:
    native_probability: float
    display: int
    predicted_label: str
    attention: np.ndarray


def score_chunks(chunks: np.ndarray, params: ClassifierParams, temperature: float) -> PronunciationScore:
    out = classify(chunks, params)
    calibrated = softmax(out.logits / temperature)
    p_native = float(calibrated[NATIVE_INDEX])
    return PronunciationScore(
        native_probability=p_native,
        display=int(round(100.0 * p_native)),
        predicted_label=out.predicted_label,
        attention=out.attention.weights,
    )


def score(clip: AudioClip, enc_cfg: EncoderConfig, params: ClassifierParams,
          temperature: float) -> PronunciationScore:
    """Calibrated P(native) for a canonical clip, plus the attention
    vector consumed by the difference visualizer."""
    chunked = encode_chunked(clip, enc_cfg)
    return score_chunks(chunked.chunks, params, temperature)
