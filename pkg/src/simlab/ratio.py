"""Worst-case vs average-case local gain of a differentiable compression map.

The epsilon -> 0 limit is taken through the Jacobian: the worst-case rate is
its top singular value, the average-case rate is the Monte Carlo mean of
||J o|| over uniform unit directions o.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._rng import child_rng
from .robustness import sample_sphere


@dataclass
class DifferentiableMap:
    n: int
    m: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    jacobian_at: Optional[Callable[[np.ndarray], np.ndarray]] = None
    fd_step: float = 1e-6

    def jacobian(self, x):
        if self.jacobian_at is not None:
            return self.jacobian_at(x)
        return finite_difference_jacobian(self, x, self.fd_step)


def finite_difference_jacobian(map_, x, step):
    """Central-difference Jacobian, one column per coordinate."""
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    J = np.empty((map_.m, map_.n))
    for j in range(map_.n):
        e = np.zeros(map_.n)
        e[j] = step
        J[:, j] = (map_.evaluate(x + e) - map_.evaluate(x - e)) / (2 * step)
    if not np.all(np.isfinite(J)):
        raise FloatingPointError("non-finite entries in finite-difference Jacobian")
    return J


def worst_case_rate(map_, x):
    """Largest singular value of the Jacobian at x: the limit of the
    worst-case output change per unit input perturbation."""
    J = map_.jacobian(x)
    if not np.all(np.isfinite(J)):
        raise FloatingPointError("non-finite Jacobian")
    return float(np.linalg.svd(J, compute_uv=False)[0])


def average_case_rate(map_, x, trials, seed):
    """Monte Carlo mean of ||J o|| over uniform unit o, with 95% CI halfwidth."""
    if trials < 100:
        raise ValueError("need at least 100 trials")
    J = map_.jacobian(x)
    vals = np.empty(trials)
    for k in range(trials):
        vals[k] = np.linalg.norm(J @ sample_sphere(map_.n, 1.0, child_rng(seed, k)))
    mean = float(np.mean(vals))
    ci = float(1.96 * np.std(vals, ddof=1) / np.sqrt(trials))
    return mean, ci


@dataclass(frozen=True)
class RatioReport:
    n: int
    m: int
    alpha_rate: float
    beta_rate_mean: float
    beta_rate_ci: float
    ratio: float
    theoretical_floor_general: float  # sqrt(n/m)
    theoretical_floor_gaussian: float  # sqrt((n+m)/m)
    mc_trials: int

    def passes_general_floor(self):
        return self.ratio >= self.theoretical_floor_general

    def passes_gaussian_floor(self, delta=0.1):
        return self.ratio >= (1 - delta) * self.theoretical_floor_gaussian


def fragility_ratio(map_, x, trials, seed):
    """Worst-case over average-case local gain, with both theoretical floors."""
    alpha = worst_case_rate(map_, x)
    beta, ci = average_case_rate(map_, x, trials, seed)
    if beta <= 1e-300:
        raise ZeroDivisionError("average-case rate is zero; ratio undefined")
    return RatioReport(
        n=map_.n,
        m=map_.m,
        alpha_rate=alpha,
        beta_rate_mean=beta,
        beta_rate_ci=ci,
        ratio=alpha / beta,
        theoretical_floor_general=float(np.sqrt(map_.n / map_.m)),
        theoretical_floor_gaussian=float(np.sqrt((map_.n + map_.m) / map_.m)),
        mc_trials=trials,
    )


def secant_rate(map_, x, direction, eps):
    """Finite-epsilon directional gain ||h(x + eps o) - h(x)|| / eps."""
    x = np.asarray(x, dtype=float)
    o = np.asarray(direction, dtype=float)
    o = o / np.linalg.norm(o)
    return float(np.linalg.norm(map_.evaluate(x + eps * o) - map_.evaluate(x)) / eps)


# --- map zoo ---------------------------------------------------------------


def linear_map(A):
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    return DifferentiableMap(n, m, lambda y: A @ y, lambda x: A)


def random_linear_map(n, m, seed):
    return linear_map(np.random.default_rng(seed).standard_normal((m, n)))


def tanh_linear_map(A):
    """h(y) = A tanh(y), tanh applied coordinatewise."""
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    return DifferentiableMap(
        n, m, lambda y: A @ np.tanh(y), lambda x: A * (1 - np.tanh(x) ** 2)[None, :]
    )


def random_tanh_linear_map(n, m, seed):
    return tanh_linear_map(np.random.default_rng(seed).standard_normal((m, n)))


def random_two_layer_map(n, m, seed, hidden=None):
    """h(y) = B tanh(A y): a smooth random two-layer network."""
    hidden = hidden or 2 * m
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((hidden, n)) / np.sqrt(n)
    B = rng.standard_normal((m, hidden))

    def jac(x):
        s = 1 - np.tanh(A @ x) ** 2
        return (B * s[None, :]) @ A

    return DifferentiableMap(n, m, lambda y: B @ np.tanh(A @ y), jac)


MAP_ZOO = {
    "linear": random_linear_map,
    "tanh": random_tanh_linear_map,
    "twolayer": random_two_layer_map,
}
