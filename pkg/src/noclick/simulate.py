"""Synthetic no-click datasets.

Each detector window is a Bernoulli trial whose success (no click) has
probability P(eta), so counts are drawn directly from the binomial law. Every
efficiency point gets its own random stream spawned from ``(seed, l)``, which
makes a dataset reproducible regardless of how the points are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .detection import EfficiencyGrid, model_noclick, noclick_curve
from .states import PhotonDistribution, SourceModel

__all__ = [
    "NoClickDataset",
    "NoiseSpec",
    "exact_dataset",
    "noclick_probs_for",
    "perturb_dataset",
    "simulate_dataset",
]


@dataclass(frozen=True)
class NoClickDataset:
    """No-click frequencies ``f_l`` measured at each efficiency.

    ``trials`` and ``no_clicks`` are ``None`` for idealized datasets whose
    frequencies are analytic probabilities rather than counts.
    """

    grid: EfficiencyGrid
    freqs: np.ndarray
    trials: np.ndarray | None = None
    no_clicks: np.ndarray | None = None

    def __post_init__(self):
        freqs = np.array(self.freqs, dtype=float).ravel()
        if freqs.size != len(self.grid):
            raise ValueError("one frequency per efficiency is required")
        if np.any(freqs < 0) or np.any(freqs > 1):
            raise ValueError("frequencies must lie in [0, 1]")
        object.__setattr__(self, "freqs", freqs)
        if (self.trials is None) != (self.no_clicks is None):
            raise ValueError("trials and no_clicks must be given together")
        if self.trials is not None:
            trials = np.array(self.trials, dtype=np.int64).ravel()
            no_clicks = np.array(self.no_clicks, dtype=np.int64).ravel()
            if trials.size != freqs.size or no_clicks.size != freqs.size:
                raise ValueError("count vectors must match the grid length")
            if np.any(trials < 1) or np.any(no_clicks < 0) or np.any(no_clicks > trials):
                raise ValueError("need trials >= 1 and 0 <= no_clicks <= trials")
            if np.max(np.abs(freqs - no_clicks / trials)) > 1e-15:
                raise ValueError("frequencies disagree with counts")
            object.__setattr__(self, "trials", trials)
            object.__setattr__(self, "no_clicks", no_clicks)

    @classmethod
    def from_counts(cls, grid: EfficiencyGrid, trials, no_clicks) -> "NoClickDataset":
        trials = np.broadcast_to(np.asarray(trials, dtype=np.int64), (len(grid),))
        no_clicks = np.asarray(no_clicks, dtype=np.int64)
        return cls(grid, no_clicks / trials, trials, no_clicks)

    @property
    def etas(self) -> np.ndarray:
        return self.grid.etas

    @property
    def is_exact(self) -> bool:
        return self.trials is None


@dataclass(frozen=True)
class NoiseSpec:
    """Multiplicative perturbation of the measured frequencies.

    Each frequency becomes ``f (1 + systematic_bias + random_rel_amp u)``
    with ``u`` uniform on [-1, 1], then is clamped to [0, 1].
    """

    random_rel_amp: float = 0.0
    systematic_bias: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.random_rel_amp < 0:
            raise ValueError("random_rel_amp must be nonnegative")

    @property
    def is_zero(self) -> bool:
        return self.random_rel_amp == 0 and self.systematic_bias == 0


def noclick_probs_for(source, grid: EfficiencyGrid) -> np.ndarray:
    """No-click probabilities of a model (closed form) or a distribution."""
    if isinstance(source, SourceModel):
        return np.clip(model_noclick(source, grid.etas), 0.0, 1.0)
    if isinstance(source, PhotonDistribution):
        return noclick_curve(source, grid).probs
    raise TypeError(f"cannot compute no-click probabilities for {type(source).__name__}")


def exact_dataset(source, grid: EfficiencyGrid) -> NoClickDataset:
    """Dataset whose frequencies are the exact no-click probabilities."""
    return NoClickDataset(grid, noclick_probs_for(source, grid))


def simulate_dataset(source, grid: EfficiencyGrid, trials_per_eta, seed: int) -> NoClickDataset:
    """Draw no-click counts for every efficiency of ``grid``.

    Parameters
    ----------
    source : SourceModel or PhotonDistribution
        Light being detected.
    grid : EfficiencyGrid
    trials_per_eta : int or array of int
        Detector windows per efficiency.
    seed : int
        Root seed; point ``l`` uses the ``l``-th spawned child stream.
    """
    probs = noclick_probs_for(source, grid)
    trials = np.broadcast_to(np.asarray(trials_per_eta, dtype=np.int64), probs.shape)
    if np.any(trials < 1):
        raise ValueError("trials_per_eta must be >= 1")
    children = np.random.SeedSequence(seed).spawn(len(grid))
    no_clicks = np.array([np.random.default_rng(ss).binomial(n, p)
                          for ss, n, p in zip(children, trials, probs)], dtype=np.int64)
    return NoClickDataset.from_counts(grid, trials, no_clicks)


def perturb_dataset(data: NoClickDataset, noise: NoiseSpec) -> NoClickDataset:
    """Apply random and systematic relative perturbations to the frequencies.

    Count-based datasets keep integer counts: perturbed frequencies are
    rounded to the nearest count and the frequencies recomputed from them.
    """
    if noise.is_zero:
        return data
    u = np.random.default_rng(noise.seed).uniform(-1.0, 1.0, size=data.freqs.size)
    freqs = np.clip(data.freqs * (1.0 + noise.systematic_bias + noise.random_rel_amp * u), 0.0, 1.0)
    if data.is_exact:
        return replace(data, freqs=freqs)
    no_clicks = np.rint(freqs * data.trials).astype(np.int64)
    return NoClickDataset.from_counts(data.grid, data.trials, no_clicks)
