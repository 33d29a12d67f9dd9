"""Codeword world model.

A codebook enumerates, for each label, the noise-free signals that encode it
under every discrete nuisance configuration.  Codewords are deterministic
functions of (label, nuisance, seed): each one is a seeded Gaussian label
anchor plus a seeded Gaussian nuisance offset, and the whole draw is rejected
and redrawn until every cross-label pair is at distance >= 2 * separation.
"""

from dataclasses import dataclass, replace
import json

import numpy as np

from ._rng import child_rng


class PackingError(RuntimeError):
    """Raised when no codeword layout satisfying the separation was found."""


@dataclass(frozen=True)
class CodebookConfig:
    dimension: int
    n_labels: int
    n_nuisances: int = 1
    separation: float = 1.0
    sphere_radius: float | None = None
    anchor_scale: float | None = None
    nuisance_scale: float | None = None
    seed: int = 0
    max_retries: int = 100

    def resolved(self):
        """Config with all defaulted fields filled in."""
        out = self
        if out.sphere_radius is None:
            out = replace(out, sphere_radius=0.5 * out.separation)
        if out.anchor_scale is None:
            out = replace(out, anchor_scale=4.0 * out.separation)
        if out.nuisance_scale is None:
            out = replace(out, nuisance_scale=3.0 * out.separation)
        return out

    def validate(self):
        if self.dimension < 2:
            raise ValueError("dimension must be >= 2")
        if self.n_labels < 2:
            raise ValueError("need at least 2 labels")
        if self.n_nuisances < 1:
            raise ValueError("need at least 1 nuisance configuration")
        if self.separation <= 0:
            raise ValueError("separation must be positive")
        r = self.resolved().sphere_radius
        if not 0 < r < self.separation:
            raise ValueError("sphere radius must lie in (0, separation)")


@dataclass(frozen=True)
class Codeword:
    label: int
    nuisance: int
    signal: np.ndarray


def _check_index(name, value, upper):
    if not 1 <= value <= upper:
        raise ValueError(f"{name} {value} outside [1, {upper}]")


def synthesize(label, nuisance, config, attempt=0):
    """Deterministically regenerate the codeword for (label, nuisance).

    ``attempt`` selects the rejection round; a built codebook records the
    accepted round so regeneration is bit-identical.
    """
    cfg = config.resolved()
    _check_index("label", label, cfg.n_labels)
    _check_index("nuisance", nuisance, cfg.n_nuisances)
    n = cfg.dimension
    anchor = child_rng(cfg.seed, attempt, 0, label).standard_normal(n)
    anchor *= cfg.anchor_scale / np.sqrt(n)
    offset = child_rng(cfg.seed, attempt, 1, label, nuisance).standard_normal(n)
    offset *= cfg.nuisance_scale / np.sqrt(n)
    return anchor + offset


def _draw_all(cfg, attempt):
    signals = np.empty((cfg.n_labels, cfg.n_nuisances, cfg.dimension))
    for lab in range(1, cfg.n_labels + 1):
        for nui in range(1, cfg.n_nuisances + 1):
            signals[lab - 1, nui - 1] = synthesize(lab, nui, cfg, attempt)
    return signals


class Codebook:
    """Immutable collection of codeword sets with verified separation."""

    def __init__(self, config, signals, attempt=0):
        self.config = config.resolved()
        self.signals = signals
        self.signals.setflags(write=False)
        self.attempt = attempt
        n_labels, n_nuisances, _ = signals.shape
        self.flat = signals.reshape(n_labels * n_nuisances, -1)
        self.flat_labels = np.repeat(np.arange(1, n_labels + 1), n_nuisances)
        self.flat_nuisances = np.tile(np.arange(1, n_nuisances + 1), n_labels)

    @property
    def dimension(self):
        return self.signals.shape[2]

    @property
    def n_labels(self):
        return self.signals.shape[0]

    @property
    def n_nuisances(self):
        return self.signals.shape[1]

    @property
    def separation(self):
        return self.config.separation

    @property
    def sphere_radius(self):
        return self.config.sphere_radius

    @property
    def seed(self):
        return self.config.seed

    def codeword(self, label, nuisance):
        _check_index("label", label, self.n_labels)
        _check_index("nuisance", nuisance, self.n_nuisances)
        return Codeword(label, nuisance, self.signals[label - 1, nuisance - 1])

    def label_signals(self, label):
        """All codeword signals for one label, shape (n_nuisances, dimension)."""
        _check_index("label", label, self.n_labels)
        return self.signals[label - 1]

    def _check_dim(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dimension,):
            raise ValueError(f"expected vector of dimension {self.dimension}, got {y.shape}")
        return y

    def nearest_codeword(self, y, label):
        """Closest codeword of ``label`` to ``y``; ties go to the lowest nuisance."""
        y = self._check_dim(y)
        dists = np.linalg.norm(self.label_signals(label) - y, axis=1)
        k = int(np.argmin(dists))
        return self.codeword(label, k + 1), float(dists[k])

    def nearest_codeword_any(self, y):
        """Globally closest codeword; ties go to lowest (label, nuisance)."""
        y = self._check_dim(y)
        dists = np.linalg.norm(self.flat - y, axis=1)
        k = int(np.argmin(dists))
        label = int(self.flat_labels[k])
        nuisance = int(self.flat_nuisances[k])
        return label, self.codeword(label, nuisance), float(dists[k])

    def min_cross_label_distance(self):
        d2 = np.sum((self.flat[:, None, :] - self.flat[None, :, :]) ** 2, axis=2)
        cross = self.flat_labels[:, None] != self.flat_labels[None, :]
        return float(np.sqrt(d2[cross].min()))

    def to_json(self):
        cfg = self.config
        return json.dumps(
            {
                "dimension": cfg.dimension,
                "n_labels": cfg.n_labels,
                "n_nuisances": cfg.n_nuisances,
                "separation": cfg.separation,
                "sphere_radius": cfg.sphere_radius,
                "anchor_scale": cfg.anchor_scale,
                "nuisance_scale": cfg.nuisance_scale,
                "seed": cfg.seed,
                "max_retries": cfg.max_retries,
                "attempt": self.attempt,
            },
            indent=2,
            sort_keys=True,
        )

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            data = json.load(fh)
        attempt = data.pop("attempt")
        cfg = CodebookConfig(**data)
        signals = _draw_all(cfg.resolved(), attempt)
        return cls(cfg, signals, attempt)

    @classmethod
    def from_signals(cls, signals, sphere_radius, seed=0):
        """Wrap externally synthesized codewords (separation measured, not drawn)."""
        signals = np.array(signals, dtype=float)
        if signals.ndim == 2:
            signals = signals[:, None, :]
        n_labels, n_nuisances, n = signals.shape
        probe = cls(
            CodebookConfig(
                dimension=n,
                n_labels=n_labels,
                n_nuisances=n_nuisances,
                sphere_radius=sphere_radius,
                separation=2 * sphere_radius,  # placeholder until measured
                seed=seed,
            ),
            signals,
        )
        r0 = probe.min_cross_label_distance() / 2.0
        if sphere_radius >= r0:
            raise ValueError(f"sphere radius {sphere_radius} >= half min separation {r0}")
        cfg = replace(probe.config, separation=r0)
        return cls(cfg, signals)


def build_codebook(config):
    """Draw codewords, rejecting layouts that violate the separation bound."""
    config.validate()
    cfg = config.resolved()
    for attempt in range(cfg.max_retries):
        cb = Codebook(cfg, _draw_all(cfg, attempt), attempt)
        if cb.min_cross_label_distance() >= 2 * cfg.separation:
            return cb
    raise PackingError(
        f"could not place {cfg.n_labels}x{cfg.n_nuisances} codewords in dimension "
        f"{cfg.dimension} with separation {cfg.separation} after {cfg.max_retries} attempts"
    )
