"""Monte Carlo robustness estimation and concentration tail checks.

Randomness conventions mirror the probability spaces of the theory:
robustness estimates fix the compressor and resample the perturbation, the
tail checks resample the compression matrix itself on every trial.  Trial k
always draws from the child stream (seed, k), so estimates are independent
of chunking and worker count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._rng import child_rng
from .compressor import classify, classify_batch

_CHUNK = 256  # fixed so results do not depend on the thread count


def sample_sphere(n, l, rng):
    """Uniform point on the radius-l sphere in R^n (Gaussian direction)."""
    if l <= 0:
        raise ValueError("radius must be positive")
    v = rng.standard_normal(n)
    return v * (l / np.linalg.norm(v))


def _binomial_halfwidth(p, trials):
    return 1.96 * np.sqrt(p * (1 - p) / trials)


@dataclass(frozen=True)
class RobustnessEstimate:
    l: float
    trials: int
    survive_fraction: float
    confidence_halfwidth: float
    base_label: int

    @property
    def epsilon_hat(self):
        return 1.0 - self.survive_fraction


def _map_chunks(fn, trials, threads):
    from ._rng import chunk_ranges

    ranges = chunk_ranges(trials, -(-trials // _CHUNK))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(lambda r: fn(*r), ranges))
    return [fn(lo, hi) for lo, hi in ranges]


def _sphere_block(n, l, seed, lo, hi):
    W = np.empty((hi - lo, n))
    for i, k in enumerate(range(lo, hi)):
        W[i] = sample_sphere(n, l, child_rng(seed, k))
    return W


def estimate_robustness(lc, cb, x, l, trials, seed, threads=1, strict=True):
    """Fraction of uniform sphere-l perturbations that leave the label alone."""
    x = np.asarray(x, dtype=float)
    base = classify(lc, cb, x, strict=strict)
    if base.rejected:
        raise ValueError("x is rejected by the classifier; robustness undefined")

    def block(lo, hi):
        labels = classify_batch(lc, cb, x + _sphere_block(lc.n, l, seed, lo, hi), strict=strict)
        return int(np.sum(labels == base.outcome))

    survived = sum(_map_chunks(block, trials, threads))
    p = survived / trials
    return RobustnessEstimate(l, trials, p, _binomial_halfwidth(p, trials), base.outcome)


def misdirection_rate(lc, cb, x, target, l, trials, seed, threads=1, strict=True):
    """Fraction of random sphere-l perturbations classified as ``target``."""
    x = np.asarray(x, dtype=float)
    base = classify(lc, cb, x, strict=strict)
    if base.outcome == target:
        raise ValueError("target equals the current label")
    if not 1 <= target <= cb.n_labels:
        raise ValueError(f"target {target} outside [1, {cb.n_labels}]")
    if l == 0:
        return 0.0

    def block(lo, hi):
        labels = classify_batch(lc, cb, x + _sphere_block(lc.n, l, seed, lo, hi), strict=strict)
        return int(np.sum(labels == target))

    return sum(_map_chunks(block, trials, threads)) / trials


@dataclass(frozen=True)
class TailCheckReport:
    epsilon: float
    m: int
    n: int
    trials: int
    empirical_lower_tail: float
    empirical_upper_tail: float
    bound_lower: float  # e^{-m eps^2 / 4}
    bound_upper: float  # e^{-m eps^2 / 12}
    bound_upper_alt: float  # e^{-m (eps^2/2 - eps^3/3) / 2}
    median_ratio: float
    expected_ratio: float  # sqrt(m/n)

    @property
    def lower_halfwidth(self):
        return _binomial_halfwidth(self.empirical_lower_tail, self.trials)

    @property
    def upper_halfwidth(self):
        return _binomial_halfwidth(self.empirical_upper_tail, self.trials)


def _projected_norms(m, n, v, seed, lo, hi, dtype):
    """||P v|| for fresh Gaussian A per trial, via the Gram system of A."""
    b = hi - lo
    A = np.empty((b, m, n), dtype=dtype)
    for i, k in enumerate(range(lo, hi)):
        A[i] = child_rng(seed, k).standard_normal((m, n), dtype=dtype)
    Av = A @ v.astype(dtype)
    G = A @ A.transpose(0, 2, 1)
    z = np.linalg.solve(G, Av[..., None])[..., 0]
    # ||Pv||^2 = (Av)^T (A A^T)^{-1} (Av)
    return np.sqrt(np.maximum(np.sum(Av * z, axis=1), 0.0))


def projection_tail_check(m, n, epsilon, trials, seed, threads=1, dtype=np.float32):
    """Empirical frequencies of the projected-norm tail events vs their bounds.

    Fixed unit vector, fresh A each trial.  float32 keeps the 10^5-trial
    acceptance run inside its time budget; the estimated probabilities are
    far coarser than the dtype.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    v = np.zeros(n)
    v[0] = 1.0
    ratio_ref = np.sqrt(m / n)

    blocks = _map_chunks(
        lambda lo, hi: _projected_norms(m, n, v, seed, lo, hi, dtype), trials, threads
    )
    ratios = np.concatenate(blocks).astype(float)
    lower = float(np.mean(ratios <= np.sqrt(1 - epsilon) * ratio_ref))
    upper = float(np.mean(ratios >= np.sqrt(1 + epsilon) * ratio_ref))
    return TailCheckReport(
        epsilon=epsilon,
        m=m,
        n=n,
        trials=trials,
        empirical_lower_tail=lower,
        empirical_upper_tail=upper,
        bound_lower=float(np.exp(-m * epsilon**2 / 4)),
        bound_upper=float(np.exp(-m * epsilon**2 / 12)),
        bound_upper_alt=float(np.exp(-m * (epsilon**2 / 2 - epsilon**3 / 3) / 2)),
        median_ratio=float(np.median(ratios)),
        expected_ratio=float(ratio_ref),
    )


@dataclass(frozen=True)
class BandCheckReport:
    m: int
    n: int
    l: float
    dist: float
    delta: float
    trials: int
    inside_fraction: float
    band_center: float
    empirical_mean: float


def ball_membership_band_check(m, n, l, dist, delta, trials, seed, threads=1, dtype=np.float64):
    """Concentration of ||P(x - c + w)|| around sqrt(m/n (dist^2 + l^2)).

    Fresh A and fresh sphere-l w per trial; x - c is a fixed vector of norm
    ``dist``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    base = np.zeros(n)
    base[0] = dist
    center = np.sqrt(m / n * (dist**2 + l**2))

    def block(lo, hi):
        out = np.empty(hi - lo)
        for i, k in enumerate(range(lo, hi)):
            v = base.copy()
            if l > 0:
                v += sample_sphere(n, l, child_rng(seed, k, 0))
            out[i] = _one_projected_norm(m, n, v, seed, k, dtype)
        return out

    norms = np.concatenate(_map_chunks(block, trials, threads))
    inside = float(np.mean((norms >= (1 - delta) * center) & (norms <= (1 + delta) * center)))
    return BandCheckReport(m, n, l, dist, delta, trials, inside, float(center), float(np.mean(norms)))


def _one_projected_norm(m, n, v, seed, k, dtype):
    A = child_rng(seed, k, 1).standard_normal((m, n), dtype=dtype)
    Av = A @ v.astype(dtype)
    z = np.linalg.solve(A @ A.T, Av)
    return float(np.sqrt(max(Av @ z, 0.0)))
