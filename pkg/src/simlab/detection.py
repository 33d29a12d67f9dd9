"""Decompress-and-check defense.

The predicted label is decompressed to its nearest codeword and the ambient
residual is compared against a threshold.  Attacks smaller than the
guarantee radius provably push the residual past the sphere radius, so the
detector never misses them.
"""

from dataclasses import dataclass

import numpy as np

from ._rng import child_rng
from .attacks import targeted_attack
from .compressor import classify


@dataclass(frozen=True)
class DetectionVerdict:
    predicted: int
    residual: float
    threshold: float
    flagged: bool
    guarantee_radius: float | None = None


def detect(cb, y, predicted, threshold=None):
    """Flag the prediction when y is farther than ``threshold`` from every
    codeword of the predicted label (default threshold: the sphere radius)."""
    r = cb.sphere_radius if threshold is None else threshold
    if r <= 0:
        raise ValueError("threshold must be positive")
    _, residual = cb.nearest_codeword(y, predicted)
    return DetectionVerdict(predicted, residual, r, residual > r)


def guarantee_radius(cb, x, adversarial_label):
    """Largest attack norm for which misclassification into
    ``adversarial_label`` is always detected: min_c ||c - x|| - r."""
    _, dist = cb.nearest_codeword(x, adversarial_label)
    return dist - cb.sphere_radius


def detection_roc(lc, cb, trials, seed, thresholds=None, noise_scale=None, margin=0.99):
    """TPR/FPR grid for the residual detector.

    Each trial draws a clean codeword plus Gaussian noise (negative class)
    and a targeted-attacked version of it (positive class); rows are
    (threshold, tpr, fpr).
    """
    r = cb.sphere_radius
    if thresholds is None:
        thresholds = np.linspace(0.0, 4.0 * r, 17)
    if noise_scale is None:
        noise_scale = 0.2 * r
    clean_residuals = []
    attacked_residuals = []
    for k in range(trials):
        rng = child_rng(seed, k)
        label = int(rng.integers(1, cb.n_labels + 1))
        nuisance = int(rng.integers(1, cb.n_nuisances + 1))
        x = cb.codeword(label, nuisance).signal + noise_scale * rng.standard_normal(cb.dimension) / np.sqrt(cb.dimension)
        base = classify(lc, cb, x)
        if base.rejected:
            continue
        clean_residuals.append(detect(cb, x, base.outcome, threshold=r).residual)
        target = 1 + (base.outcome % cb.n_labels)
        pert = targeted_attack(lc, cb, x, target, margin=margin)
        y = x + pert.w
        attacked = classify(lc, cb, y)
        if attacked.rejected:
            continue
        attacked_residuals.append(detect(cb, y, attacked.outcome, threshold=r).residual)
    clean = np.asarray(clean_residuals)
    attacked = np.asarray(attacked_residuals)
    rows = []
    for t in thresholds:
        tpr = float(np.mean(attacked > t)) if attacked.size else 0.0
        fpr = float(np.mean(clean > t)) if clean.size else 0.0
        rows.append({"threshold": float(t), "tpr": tpr, "fpr": fpr})
    return rows
