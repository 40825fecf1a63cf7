"""On/off detection: no-click probabilities and efficiency grids."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .states import PhotonDistribution, SourceModel

__all__ = [
    "EfficiencyGrid",
    "GridDesignError",
    "NoClickCurve",
    "closed_form_noclick",
    "design_grid",
    "model_noclick",
    "noclick_curve",
    "noclick_matrix",
    "noclick_probability",
]

DEFAULT_L = 20
DEFAULT_P_LOW = 0.05
DEFAULT_P_HIGH = 0.95


class GridDesignError(ValueError):
    pass


@dataclass(frozen=True)
class EfficiencyGrid:
    """Strictly increasing detector efficiencies in (0, 1]."""

    etas: np.ndarray

    def __post_init__(self):
        etas = np.array(self.etas, dtype=float).ravel()
        if etas.size < 2:
            raise ValueError("an efficiency grid needs at least 2 points")
        if not np.all(np.isfinite(etas)) or etas[0] <= 0 or etas[-1] > 1:
            raise ValueError("efficiencies must lie in (0, 1]")
        if np.any(np.diff(etas) <= 0):
            raise ValueError("efficiencies must be strictly increasing")
        etas.setflags(write=False)
        object.__setattr__(self, "etas", etas)

    def __len__(self):
        return self.etas.size

    def __iter__(self):
        return iter(self.etas)


@dataclass(frozen=True)
class NoClickCurve:
    grid: EfficiencyGrid
    probs: np.ndarray


def _attenuation(eta, k):
    # (1 - eta)^k with 0^0 = 1
    eta = float(eta)
    if eta >= 1.0:
        return (k == 0).astype(float)
    return np.exp(k * math.log1p(-eta))


def noclick_matrix(etas, n_max: int) -> np.ndarray:
    """Matrix ``A[l, k] = (1 - eta_l)^k`` for k = 0..n_max."""
    k = np.arange(n_max + 1)
    return np.vstack([_attenuation(e, k) for e in np.atleast_1d(etas)])


def noclick_probability(dist: PhotonDistribution, eta: float) -> float:
    """Probability that a detector of efficiency ``eta`` stays silent."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    p = float(_attenuation(eta, dist.support) @ dist.probs)
    return min(max(p, 0.0), 1.0)


def noclick_curve(dist: PhotonDistribution, grid: EfficiencyGrid) -> NoClickCurve:
    probs = np.clip(noclick_matrix(grid.etas, dist.n_max) @ dist.probs, 0.0, 1.0)
    return NoClickCurve(grid, probs)


def closed_form_noclick(n_mean: float, alpha_sqs: Sequence[float], eta):
    """No-click probability of M displaced thermal modes with a shared
    thermal occupation, in closed form::

        (1 + eta n)^-M exp(-eta S / (1 + eta n))

    With ``n_mean = 0`` this is the multimode coherent result exp(-eta S).
    ``eta`` may be a scalar or an array.
    """
    alpha_sqs = np.atleast_1d(np.asarray(alpha_sqs, dtype=float))
    m, s = alpha_sqs.size, float(alpha_sqs.sum())
    eta_arr = np.asarray(eta, dtype=float)
    if np.any(eta_arr < 0) or np.any(eta_arr > 1):
        raise ValueError("eta must lie in [0, 1]")
    denom = 1.0 + eta_arr * n_mean
    out = np.exp(-m * np.log(denom) - eta_arr * s / denom)
    return float(out) if out.ndim == 0 else out


def model_noclick(model: SourceModel, eta):
    """Closed-form no-click probability for any :class:`SourceModel`."""
    return closed_form_noclick(model.n_mean, model.alpha_sq, eta)


def design_grid(dist_hint: PhotonDistribution, L: int = DEFAULT_L,
                p_low: float = DEFAULT_P_LOW, p_high: float = DEFAULT_P_HIGH) -> EfficiencyGrid:
    """Efficiencies whose no-click values are evenly spaced in [p_low, p_high].

    The flat ends of the no-click curve carry little information. Spacing the
    points evenly in the curve's value puts them where the slope is steep.
    Each point is found by root bracketing on the monotone curve of
    ``dist_hint``.
    """
    if L < 2:
        raise GridDesignError("L must be >= 2")
    if not 0.0 < p_low < p_high < 1.0:
        raise GridDesignError("need 0 < p_low < p_high < 1")
    k = dist_hint.support
    probs = dist_hint.probs

    def curve(eta):
        return float(_attenuation(eta, k) @ probs)

    p_zero, p_one = curve(0.0), curve(1.0)
    if p_one >= p_zero - 1e-15:
        raise GridDesignError("no-click curve is constant (vacuum input)")
    if p_high >= p_zero or p_low <= p_one:
        raise GridDesignError(
            f"no-click curve spans [{p_one:.3g}, {p_zero:.3g}]; "
            f"target range [{p_low}, {p_high}] is unreachable for eta in (0, 1]")

    targets = np.linspace(p_high, p_low, int(L))
    etas = [brentq(lambda e, t=t: curve(e) - t, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            for t in targets]
    return EfficiencyGrid(np.array(etas))
