"""Closed-form minimum-norm adversarial perturbations.

For a linear compression the smallest perturbation moving x into the
compressed image of a target sphere lies in the row space of A: shrink the
projected offset to the target codeword down to the sphere boundary.  All
constructions here are exact, no iterative optimization.
"""

from dataclasses import dataclass

import numpy as np

from .compressor import classify

TARGETED = "targeted"
UNTARGETED = "untargeted"
RANDOM_SPHERE = "random-sphere"


@dataclass(frozen=True)
class Perturbation:
    w: np.ndarray
    kind: str
    norm: float
    margin: float
    target: int | None = None
    note: str = ""


def effective_distance(lc, x, t):
    """min ||w|| such that A(x + w) = A t, i.e. ||P(t - x)||."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if x.shape != (lc.n,) or t.shape != (lc.n,):
        raise ValueError(f"expected vectors of dimension {lc.n}")
    return lc.projected_norm(t - x)


def min_norm_perturbation(lc, x, t):
    """The w achieving ``effective_distance``: the projection of t - x."""
    return lc.project(np.asarray(t, dtype=float) - np.asarray(x, dtype=float))


def _projected_target(lc, cb, x, target):
    """Target codeword minimizing the projected distance, and that distance."""
    signals = cb.label_signals(target)
    proj = np.linalg.norm((signals - x) @ lc.Q_, axis=1)
    k = int(np.argmin(proj))
    return signals[k], float(proj[k])


def targeted_attack(lc, cb, x, target, margin=0.99):
    """Smallest perturbation that makes the strict classifier output ``target``.

    Moves x along the projected direction to the best target codeword until
    the projected residual equals margin * sphere_radius (strictly inside).
    """
    x = np.asarray(x, dtype=float)
    if not 1 <= target <= cb.n_labels:
        raise ValueError(f"target {target} outside [1, {cb.n_labels}]")
    if not 0 < margin < 1:
        raise ValueError("margin must lie in (0, 1)")
    r = cb.sphere_radius
    c, rho = _projected_target(lc, cb, x, target)
    if rho <= r:
        return Perturbation(
            np.zeros(lc.n), TARGETED, 0.0, margin, target, note="already-misclassifiable"
        )
    size = rho - r * margin
    w = lc.project(c - x) * (size / rho)
    return Perturbation(w, TARGETED, float(np.linalg.norm(w)), margin, target)


def untargeted_attack(lc, cb, x, margin=0.05):
    """Push x's projected residual past the sphere radius of its own codeword.

    The perturbation points away from the nearest codeword inside the row
    space, with norm (r - ||P(x - c_1)||) * (1 + margin).
    """
    x = np.asarray(x, dtype=float)
    if margin <= 0:
        raise ValueError("margin must be positive")
    r = cb.sphere_radius
    label, cw, _ = cb.nearest_codeword_any(x)
    rho = lc.projected_norm(x - cw.signal)
    if rho >= r:
        return Perturbation(np.zeros(lc.n), UNTARGETED, 0.0, margin, note="no-op")
    size = (r - rho) * (1 + margin)
    if rho > 0:
        u = lc.project(x - cw.signal) / rho
    else:
        u = lc.Q_[:, 0]  # x is exactly a codeword; any row-space direction works
    w = size * u
    return Perturbation(w, UNTARGETED, float(np.linalg.norm(w)), margin)


def attack_size_bound(lc, cb, x, target, epsilon):
    """High-probability targeted-attack size bound:
    sqrt(1 + eps) * sqrt(m/n) * ||c_i - x|| - r, with c_i the ambient-nearest
    target codeword."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    x = np.asarray(x, dtype=float)
    _, dist = cb.nearest_codeword(x, target)
    return float(np.sqrt(1 + epsilon) * np.sqrt(lc.m / lc.n) * dist - cb.sphere_radius)


def attack_succeeds(lc, cb, x, pert):
    """End-to-end check that the perturbation does what its kind promises."""
    decision = classify(lc, cb, np.asarray(x, dtype=float) + pert.w)
    if pert.kind == TARGETED:
        return decision.outcome == pert.target
    base = classify(lc, cb, np.asarray(x, dtype=float))
    return decision.outcome != base.outcome
