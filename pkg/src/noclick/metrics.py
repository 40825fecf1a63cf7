"""Distances between photon-number distributions and intensity-correlation
diagnostics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

__all__ = [
    "MetricsReport",
    "TruncationError",
    "fidelity",
    "g2_displaced_thermal",
    "metrics_report",
    "moments",
    "total_variation",
]

# moments of a truncated vector are trusted only below this missing mass
MAX_DEFICIT = 1e-10


class TruncationError(ValueError):
    pass


def _probs(d):
    return np.asarray(getattr(d, "probs", d), dtype=float)


def _pair(p, q):
    p, q = _probs(p), _probs(q)
    n = max(p.size, q.size)
    return np.pad(p, (0, n - p.size)), np.pad(q, (0, n - q.size))


def fidelity(p, q) -> float:
    """Overlap ``sum_k sqrt(p_k q_k)``; shorter input is zero-padded."""
    p, q = _pair(p, q)
    return float(min(1.0, max(0.0, np.sqrt(p * q).sum())))


def total_variation(p, q) -> float:
    p, q = _pair(p, q)
    return float(min(1.0, 0.5 * np.abs(p - q).sum()))


def moments(dist):
    """Mean, variance and zero-delay g2 of a photon-number distribution.

    g2(0) = 1 + (<N^2> - <N>^2 - <N>) / <N>^2

    Raises
    ------
    TruncationError
        If the distribution lost more than ``MAX_DEFICIT`` to truncation.
    ValueError
        For the vacuum, where g2 is undefined.
    """
    deficit = getattr(dist, "truncation_deficit", 0.0)
    if deficit > MAX_DEFICIT:
        raise TruncationError(
            f"truncation deficit {deficit:.3g} exceeds {MAX_DEFICIT:g}; moments would be biased")
    p = _probs(dist)
    k = np.arange(p.size, dtype=float)
    mean = float(k @ p)
    if mean <= 0:
        raise ValueError("g2 is undefined for the vacuum")
    var = float(((k - mean) ** 2) @ p)
    g2 = 1.0 + (var - mean) / mean ** 2
    return mean, var, g2


def g2_displaced_thermal(n_mean: float, alpha_sq: float) -> float:
    """Zero-delay g2 of a displaced thermal state.

    With ``r = n_mean / alpha_sq``: ``1 + r/(1+r)^2 + r/(1+r)``, which runs
    from 1 (coherent) to 2 (thermal).
    """
    if n_mean < 0 or alpha_sq < 0:
        raise ValueError("parameters must be nonnegative")
    if n_mean == 0 and alpha_sq == 0:
        raise ValueError("g2 is undefined for the vacuum")
    if alpha_sq == 0 or math.isinf(n_mean):
        return 2.0
    # 1 + r/(1+r)^2 + r/(1+r) = 2 - s^2 with s = 1/(1+r), free of overflow
    s = alpha_sq / (n_mean + alpha_sq)
    return 2.0 - s * s


@dataclass(frozen=True)
class MetricsReport:
    fidelity: float
    mean: float
    variance: float
    g2_zero: float
    total_variation: float

    def to_doc(self) -> dict:
        return asdict(self)


def metrics_report(reference, estimate) -> MetricsReport:
    """Compare ``estimate`` to ``reference``; moments are of the estimate."""
    mean, var, g2 = moments(estimate)
    return MetricsReport(fidelity(reference, estimate), mean, var, g2,
                         total_variation(reference, estimate))
