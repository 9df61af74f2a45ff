"""Temperature scaling of classifier logits, with ECE bookkeeping.

A single temperature is fit by minimizing validation NLL of
softmax(logits / T) over T in [0.05, 20]; temperature scaling never
reorders predictions. ECE uses 15 equal-width confidence bins.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

TEMPERATURE_BOUNDS = (0.05, 20.0)
ECE_BINS = 15
EPS = 1e-12


@dataclass
class CalibrationModel:
    temperature: float
    fit_metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def apply_temperature(logits: np.ndarray, temperature: float) -> np.ndarray:
    return softmax_rows(np.asarray(logits, dtype=np.float64) / temperature)


def nll(logits: np.ndarray, labels: np.ndarray, temperature: float) -> float:
    probs = apply_temperature(logits, temperature)
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.clip(picked, EPS, 1.0))))


def expected_calibration_error(probs: np.ndarray, labels: np.ndarray,
                               n_bins: int = ECE_BINS) -> float:
    """Equal-width-bin ECE on the max-probability confidence."""
    conf = probs.max(axis=1)
    pred = probs.argmax(axis=1)
    correct = (pred == labels).astype(np.float64)
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    ece = 0.0
    n = len(labels)
    for b in range(n_bins):
        lo, hi = edges[b], edges[b + 1]
        mask = (conf > lo) & (conf <= hi) if b > 0 else (conf >= lo) & (conf <= hi)
        if not mask.any():
            continue
        ece += (mask.sum() / n) * abs(correct[mask].mean() - conf[mask].mean())
    return float(ece)


def fit_calibration(logits: np.ndarray, labels: np.ndarray) -> CalibrationModel:
    """Fit the temperature on validation logits/labels.

    Degenerate inputs (all logit rows identical) keep temperature 1.0 and
    set a warning flag in the metadata instead of failing.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(logits) == 0:
        raise ValueError("validation set is empty")
    if len(set(labels.tolist())) < 2:
        raise ValueError("validation set contains a single class")

    meta: dict = {
        "nll_before": nll(logits, labels, 1.0),
        "ece_before": expected_calibration_error(softmax_rows(logits), labels),
        "degenerate": False,
    }
    if np.allclose(logits, logits[0]):
        meta["degenerate"] = True
        meta["nll_after"] = meta["nll_before"]
        meta["ece_after"] = meta["ece_before"]
        return CalibrationModel(temperature=1.0, fit_metadata=meta)

    res = minimize_scalar(
        lambda t: nll(logits, labels, t),
        bounds=TEMPERATURE_BOUNDS,
        method="bounded",
        options={"xatol": 1e-6},
    )
    temperature = float(res.x)
    meta["nll_after"] = nll(logits, labels, temperature)
    meta["ece_after"] = expected_calibration_error(
        apply_temperature(logits, temperature), labels
    )
    return CalibrationModel(temperature=temperature, fit_metadata=meta)
