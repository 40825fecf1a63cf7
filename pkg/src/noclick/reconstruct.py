"""Maximum-likelihood reconstruction of photon statistics from no-click data.

The estimator maximizes ``sum_l f_l log(P_l / sum_j P_j)`` over distributions
``rho`` on 0..N, where ``P_l = sum_k (1 - eta_l)^k rho_k``. Its stationarity
conditions are solved by the multiplicative fixed-point update

    rho'_p = rho_p * sum_l w_lp f_l / P_l(rho),   w_lp = (1-eta_l)^p / sum_j (1-eta_j)^p

applied to the normalized iterate. The update is invariant to rescaling its
input, and the unnormalized output satisfies ``sum_l P_l(rho') = F`` with
``F = sum_l f_l``.

An optional mean-energy constraint adds a multiplier ``beta`` that shifts the
denominator ``sum_j (1-eta_j)^p`` by ``-(P/F) beta (p - E)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .detection import closed_form_noclick, noclick_matrix
from .metrics import fidelity as _fidelity
from .simulate import NoClickDataset
from .states import PhotonDistribution

__all__ = [
    "EnergyConstraint",
    "InfeasibleConstraintError",
    "ModelMismatchError",
    "NonPositiveDenominatorError",
    "ReconstructionConfig",
    "ReconstructionError",
    "ReconstructionResult",
    "auto_n_max",
    "em_step",
    "em_step_constrained",
    "log_likelihood",
    "normalized_frequencies",
    "reconstruct",
]

log = logging.getLogger(__name__)


class ReconstructionError(RuntimeError):
    pass


class ModelMismatchError(ReconstructionError):
    """A positive frequency is observed where the model predicts zero."""


class NonPositiveDenominatorError(ReconstructionError):
    """The energy multiplier is too large for the current iterate."""


class InfeasibleConstraintError(ReconstructionError):
    pass


@dataclass(frozen=True)
class EnergyConstraint:
    """Mean photon number target ``energy`` (E), supplied externally.

    ``beta_step=None`` picks a step so that the first correction is at most
    1% of every denominator it reduces.
    """

    energy: float
    beta_step: float | None = None
    beta_max: float = math.inf
    energy_tol: float = 1e-3
    max_outer: int = 50

    def __post_init__(self):
        if not self.energy > 0:
            raise ValueError("energy must be positive")


@dataclass(frozen=True)
class ReconstructionConfig:
    n_max: int | None = None
    max_iters: int = 2000
    stop_tol: float = 1e-12
    init: str | np.ndarray = "uniform"
    energy_constraint: EnergyConstraint | None = None
    mismatch_rel_tol: float = 0.05
    mismatch_z: float = 10.0

    def __post_init__(self):
        if self.n_max is not None and self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.stop_tol > 0:
            raise ValueError("stop_tol must be positive")
        if isinstance(self.init, str) and self.init != "uniform":
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class ReconstructionResult:
    distribution: PhotonDistribution
    iterations: int
    loglik_trace: np.ndarray
    final_residual: float
    converged: bool
    fit_residual: float
    model_mismatch: bool
    underdetermined: bool
    fitted_noclick: np.ndarray
    fidelity_vs_truth: float | None = None
    beta: float = 0.0
    energy_satisfied: bool | None = None
    notes: list = field(default_factory=list)

    def to_doc(self) -> dict:
        return {
            "probs": self.distribution.probs.tolist(),
            "n_max": self.distribution.n_max,
            "iterations": int(self.iterations),
            "loglik_trace": [float(v) for v in self.loglik_trace],
            "residual": float(self.final_residual),
            "fidelity": None if self.fidelity_vs_truth is None else float(self.fidelity_vs_truth),
            "converged": bool(self.converged),
            "fit_residual": float(self.fit_residual),
            "model_mismatch": bool(self.model_mismatch),
            "underdetermined": bool(self.underdetermined),
            "fitted_noclick": [float(v) for v in self.fitted_noclick],
            "beta": float(self.beta),
            "energy_satisfied": self.energy_satisfied,
            "notes": list(self.notes),
        }


def normalized_frequencies(data: NoClickDataset):
    """Return the frequencies ``f`` and their sum ``F``."""
    f = np.asarray(data.freqs, dtype=float)
    total = float(f.sum())
    if not total > 0:
        raise ReconstructionError("all no-click frequencies are zero")
    return f, total


class _Kernel:
    """Precomputed no-click matrix for one dataset and truncation."""

    def __init__(self, data: NoClickDataset, n_max: int):
        self.f, self.F = normalized_frequencies(data)
        self.A = noclick_matrix(data.etas, n_max)
        self.D = self.A.sum(axis=0)
        observable = self.D > 0
        self.W = np.zeros_like(self.A)
        self.W[:, observable] = self.A[:, observable] / self.D[observable]
        self.k = np.arange(n_max + 1, dtype=float)
        self.positive = self.f > 0

    def probs(self, rho):
        return self.A @ rho

    def ratio(self, P):
        if np.any(self.positive & (P <= 0)):
            raise ModelMismatchError(
                "model predicts zero no-click probability where a positive "
                "frequency was measured (truncation too small or corrupt data)")
        out = np.zeros_like(P)
        np.divide(self.f, P, out=out, where=self.positive)
        return out

    def loglik(self, P):
        total = P.sum()
        if np.any(self.positive & (P <= 0)):
            raise ModelMismatchError("log-likelihood is -inf: zero model probability "
                                     "at a positive frequency")
        return float(self.f[self.positive] @ np.log(P[self.positive] / total))

    def step(self, rho_hat, P):
        return rho_hat * (self.W.T @ self.ratio(P))

    def step_constrained(self, rho_hat, P, beta, energy):
        if beta == 0.0:
            return self.step(rho_hat, P)
        denom = self.D - (P.sum() / self.F) * beta * (self.k - energy)
        live = rho_hat > 0
        if np.any(denom[live] <= 0):
            raise NonPositiveDenominatorError(
                f"beta={beta:g} makes a denominator non-positive; shrink beta")
        out = np.zeros_like(rho_hat)
        out[live] = rho_hat[live] * (self.A.T[live] @ self.ratio(P)) / denom[live]
        return out

    def beta_limit(self, rho_hat, energy, sign):
        """Largest |beta| of the given sign keeping live denominators positive."""
        c = (self.probs(rho_hat).sum() / self.F) * (self.k - energy) * sign
        reducing = (c > 0) & (rho_hat > 0)
        if not np.any(reducing):
            return math.inf
        return float(np.min(self.D[reducing] / c[reducing]))


def _normalize(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("rho must be nonnegative")
    s = rho.sum()
    if not s > 0:
        raise ValueError("rho must have positive mass")
    return rho / s


def em_step(rho, data: NoClickDataset) -> np.ndarray:
    """One fixed-point update.

    Returns the unnormalized next iterate ``rho'``; its no-click
    probabilities sum to ``F``. Entries that are zero stay zero.
    """
    rho_hat = _normalize(rho)
    kern = _Kernel(data, rho_hat.size - 1)
    return kern.step(rho_hat, kern.probs(rho_hat))


def em_step_constrained(rho, data: NoClickDataset, beta: float, energy: float) -> np.ndarray:
    """Energy-constrained fixed-point update; equals :func:`em_step` at beta=0.

    Raises
    ------
    NonPositiveDenominatorError
        If ``beta`` drives a denominator of a live component to <= 0.
    """
    rho_hat = _normalize(rho)
    kern = _Kernel(data, rho_hat.size - 1)
    return kern.step_constrained(rho_hat, kern.probs(rho_hat), beta, energy)


def log_likelihood(rho, data: NoClickDataset) -> float:
    """``sum_l f_l log(P_l / sum_j P_j)``; invariant to rescaling ``rho``."""
    rho = np.asarray(rho, dtype=float)
    kern = _Kernel(data, rho.size - 1)
    return kern.loglik(kern.probs(rho))


def auto_n_max(data: NoClickDataset, n_sigma: float = 10.0) -> int:
    """Truncation guess from a moment-matched displaced-thermal fit.

    A single-mode displaced thermal curve is fitted to ``log f`` by least
    squares; the cutoff is its mean plus ``n_sigma`` standard deviations.
    """
    f, eta = np.asarray(data.freqs), np.asarray(data.etas)
    use = (f > 0) & (f < 1)
    if not np.any(use):
        if np.all(f >= 1):
            return 1
        raise ReconstructionError("cannot size the truncation: no interior frequencies")
    f, eta = f[use], eta[use]
    slope = float(np.median(-np.log(f) / eta))

    def resid(params):
        n_t, a = params
        return np.log(closed_form_noclick(n_t, [a], eta)) - np.log(f)

    fit = least_squares(resid, x0=[0.5 * slope, 0.5 * slope], bounds=([0.0, 0.0], [np.inf, np.inf]))
    n_t, a = fit.x
    mean = n_t + a
    var = n_t * (1 + n_t) + (1 + 2 * n_t) * a
    return max(1, int(math.ceil(mean + n_sigma * math.sqrt(var))))


def _initial(config: ReconstructionConfig, data: NoClickDataset):
    if isinstance(config.init, str):
        n_max = config.n_max if config.n_max is not None else auto_n_max(data)
        return np.full(n_max + 1, 1.0 / (n_max + 1))
    init = np.asarray(config.init, dtype=float)
    if config.n_max is not None and init.size != config.n_max + 1:
        raise ValueError("custom init length must be n_max + 1")
    return _normalize(init)


def _solve(kern, x, max_iters, stop_tol, beta=0.0, energy=None):
    """Iterate to ``stop_tol`` or ``max_iters``; returns (x, iters, trace, change, converged)."""
    P = kern.probs(x)
    trace = [kern.loglik(P)]
    change = math.inf
    it = 0
    for it in range(1, max_iters + 1):
        if beta == 0.0:
            nxt = kern.step(x, P)
        else:
            nxt = kern.step_constrained(x, P, beta, energy)
        nxt /= nxt.sum()
        change = float(np.max(np.abs(nxt - x)))
        x = nxt
        P = kern.probs(x)
        trace.append(kern.loglik(P))
        if change < stop_tol:
            return x, it, trace, change, True
    return x, it, trace, change, False


def reconstruct(data: NoClickDataset, config: ReconstructionConfig | None = None,
                truth: PhotonDistribution | None = None) -> ReconstructionResult:
    """Reconstruct the photon-number distribution behind ``data``.

    Starts from the uniform distribution (or ``config.init``) and iterates
    the fixed-point update until the largest change of the normalized
    iterate drops below ``config.stop_tol`` or ``config.max_iters`` is hit.
    With an energy constraint, an outer loop moves ``beta`` away from zero
    in steps until the mean photon number is within ``energy_tol`` of E.
    """
    config = config or ReconstructionConfig()
    x0 = _initial(config, data)
    n_max = x0.size - 1
    kern = _Kernel(data, n_max)
    notes = []

    beta = 0.0
    energy_ok = None
    if config.energy_constraint is None and x0[0] > 0 and np.ptp(kern.f) == 0:
        # equal frequencies call for a flat curve, which only the vacuum gives;
        # the iteration creeps toward this boundary point sublinearly
        x = np.zeros_like(x0)
        x[0] = 1.0
        iters, trace, change, converged = 0, [kern.loglik(kern.probs(x))], 0.0, True
        notes.append("equal frequencies: the vacuum is the unique maximizer")
    elif config.energy_constraint is None:
        x, iters, trace, change, converged = _solve(kern, x0, config.max_iters, config.stop_tol)
    else:
        x, iters, trace, change, converged, beta, energy_ok = _constrained(
            kern, x0, config, notes)

    underdetermined = len(data.grid) < n_max + 1
    if underdetermined:
        log.info("L=%d efficiencies for %d unknowns: the ML solution need not be unique",
                 len(data.grid), n_max + 1)
        notes.append("underdetermined: fewer efficiencies than unknowns, solution may be non-unique")
    if not converged:
        log.warning("no convergence after %d iterations (last change %.3g)", iters, change)

    P = kern.probs(x)
    fitted = P / P.sum() * kern.F
    fit_residual, misfit = _fit_check(data, fitted, config)
    # a poor fit only indicts the model once the iteration has settled
    mismatch = misfit and converged
    if misfit and not converged:
        notes.append("fit check inconclusive: iteration stopped before convergence")
    dist = PhotonDistribution(x)
    fid = None if truth is None else _fidelity(truth, dist)
    return ReconstructionResult(
        distribution=dist, iterations=iters, loglik_trace=np.asarray(trace),
        final_residual=change, converged=converged, fit_residual=fit_residual,
        model_mismatch=mismatch, underdetermined=underdetermined, fitted_noclick=fitted,
        fidelity_vs_truth=fid, beta=beta, energy_satisfied=energy_ok, notes=notes)


def _fit_check(data, fitted, config):
    f = data.freqs
    pos = f > 0
    rel = np.abs(fitted - f)[pos] / f[pos]
    fit_residual = float(rel.max()) if rel.size else 0.0
    if data.is_exact:
        sigma = np.zeros_like(f)
    else:
        p = np.clip(fitted, 0.0, 1.0)
        sigma = np.sqrt(p * (1 - p) / data.trials)
    allowed = config.mismatch_rel_tol * f + config.mismatch_z * sigma
    return fit_residual, bool(np.any(np.abs(fitted - f) > allowed))


def _constrained(kern, x0, config, notes):
    """Outer search over beta for the energy-constrained solution.

    Every solve starts from ``x0`` so the mean is a function of beta alone.
    Beta moves away from zero in additive steps (halved whenever a
    denominator turns non-positive) until the mean crosses E, then the
    bracket is bisected. Among solutions within ``energy_tol`` the most
    likely one is returned.
    """
    ec = config.energy_constraint
    E = ec.energy
    total_iters = 0
    trace = []
    runs = []  # (loglik, energy error, beta, x, change, converged)

    def solve(beta):
        nonlocal total_iters
        x, it, tr, change, conv = _solve(kern, x0, config.max_iters, config.stop_tol, beta, E)
        total_iters += it
        trace.extend(tr)
        mean = float(kern.k @ x)
        runs.append((kern.loglik(kern.probs(x)), abs(mean - E) / E, beta, x, change, conv))
        return mean

    mean = solve(0.0)
    sign = -1.0 if mean > E else 1.0
    step = ec.beta_step
    if step is None:
        step = 0.01 * kern.beta_limit(runs[0][3], E, sign)
        if not math.isfinite(step):
            step = 1.0
    min_step = step * 1e-12
    inner, outer = 0.0, None  # beta bracket: mean(inner) on the start side of E
    tried_nonzero = feasible_nonzero = False
    for _ in range(ec.max_outer):
        if runs[-1][1] <= ec.energy_tol:
            break
        trial = 0.5 * (inner + outer) if outer is not None else inner + sign * step
        if abs(trial) > ec.beta_max:
            notes.append(f"beta_max={ec.beta_max:g} reached before the energy target")
            break
        tried_nonzero = True
        try:
            mean = solve(trial)
        except NonPositiveDenominatorError:
            if outer is not None:
                outer = trial
                continue
            step /= 2
            if step < min_step:
                break
            continue
        feasible_nonzero = True
        if (mean - E) * sign < 0:
            inner = trial
        else:
            outer = trial

    if tried_nonzero and not feasible_nonzero and runs[0][1] > ec.energy_tol:
        raise InfeasibleConstraintError(
            "every nonzero beta tried violated denominator positivity")

    ok = [r for r in runs if r[1] <= ec.energy_tol]
    if ok:
        best = max(ok, key=lambda r: r[0])
    else:
        best = min(runs, key=lambda r: r[1])
        notes.append("energy target not met; returning the closest solution")
    _, _, beta, x, change, conv = best
    return x, total_iters, trace, change, conv, beta, bool(ok)
