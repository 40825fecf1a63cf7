"""Fock-diagonal photon-number distributions for coherent, thermal and
displaced-thermal light, and their multimode totals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import gammaln

from .specfun import log_laguerre_neg_table

__all__ = [
    "InvalidModelError",
    "PhotonDistribution",
    "SourceModel",
    "closed_form_multimode_pmf",
    "coherent_pmf",
    "convolve_pmf",
    "displaced_thermal_pmf",
    "thermal_pmf",
    "total_photon_pmf",
]

# below this mean thermal occupation the displaced-thermal law is replaced by
# its Poisson limit; the Laguerre argument -|a|^2/(n_T(1+n_T)) diverges
SMALL_NT = 1e-12

# convolutions longer than this go through FFT
_DIRECT_CONV_MAX = 512


class InvalidModelError(ValueError):
    pass


@dataclass(frozen=True)
class PhotonDistribution:
    """Truncated photon-number distribution over k = 0..n_max.

    ``truncation_deficit`` is the mass missing from the untruncated law
    before renormalization; ``epsilon`` is the accuracy target used to pick
    the truncation, if one was used.
    """

    probs: np.ndarray
    truncation_deficit: float = 0.0
    epsilon: float | None = None

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).ravel()
        if p.size == 0:
            raise ValueError("empty distribution")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and nonnegative")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_probs(cls, probs, normalize: bool = True) -> "PhotonDistribution":
        p = np.asarray(probs, dtype=float)
        if normalize:
            s = p.sum()
            if s <= 0:
                raise ValueError("distribution has no mass")
            p = p / s
        return cls(p)

    @classmethod
    def delta(cls, k: int, n_max: int | None = None) -> "PhotonDistribution":
        p = np.zeros((k if n_max is None else n_max) + 1)
        p[k] = 1.0
        return cls(p)

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.probs.size)

    def mean(self) -> float:
        return float(self.support @ self.probs)

    def padded(self, n_max: int) -> np.ndarray:
        """Probabilities zero-padded (never cut) to length ``n_max + 1``."""
        if n_max < self.n_max:
            raise ValueError("padding cannot shorten a distribution")
        out = np.zeros(n_max + 1)
        out[: self.probs.size] = self.probs
        return out

    def __len__(self):
        return self.probs.size


def _finish(raw: np.ndarray, epsilon=None) -> PhotonDistribution:
    raw = np.clip(raw, 0.0, None)
    total = raw.sum()
    return PhotonDistribution(raw / total, truncation_deficit=float(1.0 - total),
                              epsilon=epsilon)


def _coherent_raw(alpha_sq, n_max):
    k = np.arange(n_max + 1)
    if alpha_sq == 0:
        out = np.zeros(n_max + 1)
        out[0] = 1.0
        return out
    return np.exp(k * math.log(alpha_sq) - alpha_sq - gammaln(k + 1))


def _thermal_raw(n_mean, n_max):
    k = np.arange(n_max + 1)
    if n_mean == 0:
        out = np.zeros(n_max + 1)
        out[0] = 1.0
        return out
    return np.exp(k * math.log(n_mean / (1.0 + n_mean)) - math.log1p(n_mean))


def _displaced_thermal_raw(n_mean, alpha_sq, n_max):
    if n_mean < SMALL_NT:
        return _coherent_raw(alpha_sq, n_max)
    k = np.arange(n_max + 1)
    log_ratio = math.log(n_mean) - math.log1p(n_mean)
    lag = log_laguerre_neg_table(n_max, 0, alpha_sq / (n_mean * (1.0 + n_mean)))
    return np.exp(k * log_ratio - alpha_sq / (1.0 + n_mean) - math.log1p(n_mean) + lag)


def coherent_pmf(alpha_sq: float, n_max: int) -> PhotonDistribution:
    """Poisson law with mean ``alpha_sq`` truncated to 0..n_max."""
    _check_nonneg(alpha_sq=alpha_sq)
    return _finish(_coherent_raw(float(alpha_sq), _check_nmax(n_max)))


def thermal_pmf(n_mean: float, n_max: int) -> PhotonDistribution:
    """Geometric (Bose-Einstein) law with mean ``n_mean``."""
    _check_nonneg(n_mean=n_mean)
    return _finish(_thermal_raw(float(n_mean), _check_nmax(n_max)))


def displaced_thermal_pmf(n_mean: float, alpha_sq: float, n_max: int) -> PhotonDistribution:
    """Photon statistics of a thermal state displaced by a coherent amplitude.

    p_k = (n/(1+n))^k exp(-a/(1+n)) / (1+n) * L_k(-a/(n(1+n)))

    with ``n = n_mean`` and ``a = alpha_sq``. The Laguerre factor is taken in
    log form, so large ``k`` and ``alpha_sq`` are safe.
    """
    _check_nonneg(n_mean=n_mean, alpha_sq=alpha_sq)
    return _finish(_displaced_thermal_raw(float(n_mean), float(alpha_sq), _check_nmax(n_max)))


def _raw_convolve(p, q, n_max):
    if min(p.size, q.size) <= _DIRECT_CONV_MAX:
        out = np.convolve(p, q)
    else:
        out = np.clip(fftconvolve(p, q), 0.0, None)
    return out[: n_max + 1]


def convolve_pmf(p: PhotonDistribution, q: PhotonDistribution, n_max: int | None = None) -> PhotonDistribution:
    """Distribution of the sum of two independent photon numbers."""
    if n_max is None:
        n_max = p.n_max + q.n_max
    out = _raw_convolve(p.probs, q.probs, _check_nmax(n_max))
    if out.size < n_max + 1:
        out = np.pad(out, (0, n_max + 1 - out.size))
    return _finish(out)


def closed_form_multimode_pmf(n_mean: float, alpha_sqs: Sequence[float], n_max: int,
                              one_minus_eta: float = 1.0) -> np.ndarray:
    """Joint probability of ``nbar`` photons and no click for M displaced
    thermal modes sharing ``n_mean``.

    Entry ``nbar`` equals

        (1+n)^-M exp(-S/(1+n)) ((1-eta) n/(1+n))^nbar L^(M-1)_nbar(-S/(n(1+n)))

    where ``S = sum(alpha_sqs)`` and M = len(alpha_sqs). With
    ``one_minus_eta = 1`` this is the total photon-number distribution.
    The result is a plain array and is not renormalized.
    """
    if not n_mean > 0:
        raise InvalidModelError("closed multimode form needs n_mean > 0; "
                                "use the Poisson law for coherent modes")
    alpha_sqs = np.atleast_1d(np.asarray(alpha_sqs, dtype=float))
    if alpha_sqs.size == 0 or np.any(alpha_sqs < 0):
        raise InvalidModelError("alpha_sqs must be a nonempty nonnegative vector")
    if not 0.0 <= one_minus_eta <= 1.0:
        raise ValueError("one_minus_eta must lie in [0, 1]")
    n_mean, s, m = float(n_mean), float(alpha_sqs.sum()), alpha_sqs.size
    n_max = _check_nmax(n_max)
    k = np.arange(n_max + 1)
    log_pref = -m * math.log1p(n_mean) - s / (1.0 + n_mean)
    log_lag = log_laguerre_neg_table(n_max, m - 1, s / (n_mean * (1.0 + n_mean)))
    if one_minus_eta == 0.0:
        out = np.zeros(n_max + 1)
        out[0] = math.exp(log_pref)
        return out
    log_ratio = math.log(one_minus_eta) + math.log(n_mean) - math.log1p(n_mean)
    return np.exp(log_pref + k * log_ratio + log_lag)


@dataclass(frozen=True)
class SourceModel:
    """Declarative light source.

    Phases of the coherent amplitudes play no role in photon-number
    statistics, so only ``|alpha|^2`` per mode is stored. All modes of a
    ``multimode_product`` share the thermal occupation ``n_mean``.
    """

    kind: str
    alpha_sq: tuple = (0.0,)
    n_mean: float = 0.0
    mode_count: int = 1

    KINDS = ("coherent", "thermal", "displaced_thermal", "multimode_product")

    def __post_init__(self):
        object.__setattr__(self, "alpha_sq", tuple(float(a) for a in np.atleast_1d(self.alpha_sq)))
        object.__setattr__(self, "n_mean", float(self.n_mean))
        object.__setattr__(self, "mode_count", int(self.mode_count))
        self.validate()

    def validate(self):
        if self.kind not in self.KINDS:
            raise InvalidModelError(f"unknown source kind {self.kind!r}")
        if self.mode_count < 1:
            raise InvalidModelError("mode_count must be >= 1")
        if any(a < 0 or not math.isfinite(a) for a in self.alpha_sq):
            raise InvalidModelError("alpha_sq entries must be finite and nonnegative")
        if self.n_mean < 0 or not math.isfinite(self.n_mean):
            raise InvalidModelError("n_mean must be finite and nonnegative")
        if len(self.alpha_sq) != self.mode_count:
            raise InvalidModelError(
                f"{self.kind} with mode_count={self.mode_count} needs "
                f"{self.mode_count} alpha_sq entries, got {len(self.alpha_sq)}")
        if self.kind != "multimode_product" and self.mode_count != 1:
            raise InvalidModelError(f"{self.kind} is a single-mode model")
        if self.kind == "thermal" and self.alpha_sq[0] != 0:
            raise InvalidModelError("thermal model must have alpha_sq = 0")
        if self.kind == "coherent" and self.n_mean != 0:
            raise InvalidModelError("coherent model must have n_mean = 0")

    @classmethod
    def coherent(cls, alpha_sq: float) -> "SourceModel":
        return cls("coherent", (alpha_sq,), 0.0, 1)

    @classmethod
    def thermal(cls, n_mean: float) -> "SourceModel":
        return cls("thermal", (0.0,), n_mean, 1)

    @classmethod
    def displaced_thermal(cls, n_mean: float, alpha_sq: float) -> "SourceModel":
        return cls("displaced_thermal", (alpha_sq,), n_mean, 1)

    @classmethod
    def multimode(cls, n_mean: float, alpha_sqs: Sequence[float]) -> "SourceModel":
        alpha_sqs = tuple(alpha_sqs)
        return cls("multimode_product", alpha_sqs, n_mean, len(alpha_sqs))

    @classmethod
    def random_multimode(cls, mode_count: int, n_mean: float, alpha_range, seed: int) -> "SourceModel":
        """Amplitudes |alpha_j| drawn uniformly from ``alpha_range``."""
        lo, hi = alpha_range
        alphas = np.random.default_rng(seed).uniform(lo, hi, size=int(mode_count))
        return cls.multimode(n_mean, alphas ** 2)

    @property
    def total_alpha_sq(self) -> float:
        return float(sum(self.alpha_sq))

    def mean(self) -> float:
        return self.mode_count * self.n_mean + self.total_alpha_sq

    def variance(self) -> float:
        n = self.n_mean
        return self.mode_count * n * (1 + n) + (1 + 2 * n) * self.total_alpha_sq

    def mode_raw(self, j: int, n_max: int) -> np.ndarray:
        """Untruncated-law values of mode ``j`` on 0..n_max (not renormalized)."""
        a = self.alpha_sq[j]
        if self.kind == "coherent":
            return _coherent_raw(a, n_max)
        if self.kind == "thermal":
            return _thermal_raw(self.n_mean, n_max)
        return _displaced_thermal_raw(self.n_mean, a, n_max)


def total_photon_pmf(model: SourceModel, epsilon: float = 1e-10) -> PhotonDistribution:
    """Distribution of the total photon number over all modes of ``model``.

    Per-mode laws are combined by repeated convolution. The cutoff starts at
    mean + 10 standard deviations and doubles until the retained mass is at
    least ``1 - epsilon``.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    model.validate()
    n_max = max(8, int(math.ceil(model.mean() + 10.0 * math.sqrt(model.variance()))))
    while True:
        raw = model.mode_raw(0, n_max)
        for j in range(1, model.mode_count):
            raw = _raw_convolve(raw, model.mode_raw(j, n_max), n_max)
        deficit = 1.0 - raw.sum()
        if deficit <= epsilon:
            break
        n_max *= 2
    return _finish(raw, epsilon=epsilon)


def _check_nmax(n_max):
    if int(n_max) != n_max or n_max < 0:
        raise ValueError(f"n_max must be a nonnegative integer, got {n_max!r}")
    return int(n_max)


def _check_nonneg(**kw):
    for name, v in kw.items():
        if not (v >= 0 and math.isfinite(v)):
            raise InvalidModelError(f"{name} must be finite and nonnegative, got {v!r}")
