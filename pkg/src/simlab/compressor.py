"""Linear compression h(y) = Ay and the compressed-domain decision rule.

The projector onto the row space of A is kept in factored form (an
orthonormal basis Q of the row space, so P = Q Q^T); the dense N x N matrix
is materialized lazily and only needed for diagnostics.
"""

from dataclasses import dataclass
import warnings

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

REJECT = 0


class LinearCompressor(BaseEstimator, TransformerMixin):
    """Random Gaussian compression matrix with cached row-space projector.

    Parameters
    ----------
    m, n : compressed and ambient dimensions, 1 <= m < n.
    seed : seed for the i.i.d. N(0, 1) entries of A.
    """

    def __init__(self, m, n, seed=0):
        self.m = m
        self.n = n
        self.seed = seed

    def fit(self, X=None, y=None):
        if not 1 <= self.m < self.n:
            raise ValueError(f"need 1 <= m < n, got m={self.m}, n={self.n}")
        if self.m > self.n // 2:
            warnings.warn("m > n/2: compression is weak, results may be degenerate")
        rng = np.random.default_rng(self.seed)
        self.A_ = rng.standard_normal((self.m, self.n))
        # Orthonormal basis of the row space; rank m holds almost surely.
        q, _ = np.linalg.qr(self.A_.T)
        self.Q_ = q
        self._P = None
        return self

    @property
    def P_(self):
        if getattr(self, "_P", None) is None:
            self._P = self.Q_ @ self.Q_.T
        return self._P

    def _vec(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.n,):
            raise ValueError(f"expected vector of dimension {self.n}, got {y.shape}")
        return y

    def compress(self, y):
        """A @ y for a single vector."""
        return self.A_ @ self._vec(y)

    def transform(self, Y):
        """Row-wise compression of a 2-D sample array."""
        Y = np.asarray(Y, dtype=float)
        if Y.ndim != 2 or Y.shape[1] != self.n:
            raise ValueError(f"expected array of shape (*, {self.n})")
        return Y @ self.A_.T

    def project(self, v):
        """Orthogonal projection of v onto the row space of A."""
        v = self._vec(v)
        return self.Q_ @ (self.Q_.T @ v)

    def projected_norm(self, v):
        """||P v|| without forming P v in ambient space."""
        return float(np.linalg.norm(self.Q_.T @ self._vec(v)))


def sample_compressor(m, n, seed=0):
    return LinearCompressor(m, n, seed).fit()


def compress(lc, y):
    return lc.compress(y)


@dataclass(frozen=True)
class ClassifierDecision:
    outcome: int  # label index, or REJECT
    residuals: np.ndarray  # per-label ||P(y - c_i(y))||, index i-1
    radius: float

    @property
    def rejected(self):
        return self.outcome == REJECT


def _label_residuals(lc, cb, y, strict):
    """Per-label projected residuals.

    strict: minimize ||P(y - c)|| over each codeword set directly.
    non-strict: pick the ambient-nearest codeword per label first.
    """
    qy = lc.Q_.T @ y
    qc = cb.flat @ lc.Q_  # (K, m)
    proj = np.linalg.norm(qc - qy, axis=1)
    residuals = np.empty(cb.n_labels)
    for i in range(cb.n_labels):
        mask = cb.flat_labels == i + 1
        if strict:
            residuals[i] = proj[mask].min()
        else:
            ambient = np.linalg.norm(cb.flat[mask] - y, axis=1)
            residuals[i] = proj[mask][int(np.argmin(ambient))]
    return residuals


def classify(lc, cb, y, radius=None, strict=True):
    """Compressed-domain decision: the label whose compressed sphere image
    contains A y, smallest projected residual winning; REJECT if none."""
    y = np.asarray(y, dtype=float)
    if y.shape != (lc.n,):
        raise ValueError(f"expected vector of dimension {lc.n}, got {y.shape}")
    if cb.dimension != lc.n:
        raise ValueError("codebook and compressor dimensions disagree")
    r = cb.sphere_radius if radius is None else radius
    residuals = _label_residuals(lc, cb, y, strict)
    best = int(np.argmin(residuals))
    outcome = best + 1 if residuals[best] < r else REJECT
    return ClassifierDecision(outcome, residuals, r)


def classify_batch(lc, cb, Y, radius=None, strict=True):
    """Vectorized ``classify`` over rows of Y; returns an int label array."""
    Y = np.asarray(Y, dtype=float)
    r = cb.sphere_radius if radius is None else radius
    qy = Y @ lc.Q_  # (T, m)
    qc = cb.flat @ lc.Q_  # (K, m)
    if strict:
        d2 = np.sum((qy[:, None, :] - qc[None, :, :]) ** 2, axis=2)
        residuals = np.full((Y.shape[0], cb.n_labels), np.inf)
        for i in range(cb.n_labels):
            residuals[:, i] = d2[:, cb.flat_labels == i + 1].min(axis=1)
        residuals = np.sqrt(residuals)
    else:
        residuals = np.empty((Y.shape[0], cb.n_labels))
        for i in range(cb.n_labels):
            mask = cb.flat_labels == i + 1
            amb = np.sum((Y[:, None, :] - cb.flat[None, mask, :]) ** 2, axis=2)
            pick = np.argmin(amb, axis=1)
            residuals[:, i] = np.linalg.norm(qy - qc[mask][pick], axis=1)
    best = np.argmin(residuals, axis=1)
    out = best + 1
    out[residuals[np.arange(len(out)), best] >= r] = REJECT
    return out


class CompressedCodewordClassifier(BaseEstimator, ClassifierMixin):
    """sklearn-style wrapper: nearest-codeword decisions through a random
    linear compression.  ``predict`` returns label indices, REJECT (0) when
    no compressed sphere image contains the input."""

    def __init__(self, codebook, m, seed=0, radius=None, strict=True):
        self.codebook = codebook
        self.m = m
        self.seed = seed
        self.radius = radius
        self.strict = strict

    def fit(self, X=None, y=None):
        self.compressor_ = sample_compressor(self.m, self.codebook.dimension, self.seed)
        return self

    def predict(self, Y):
        return classify_batch(
            self.compressor_, self.codebook, Y, radius=self.radius, strict=self.strict
        )

    def decision(self, y):
        return classify(self.compressor_, self.codebook, y, radius=self.radius, strict=self.strict)
