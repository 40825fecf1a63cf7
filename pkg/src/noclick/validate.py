"""Built-in oracle suite.

Each check compares two independent routes to the same number: closed forms
against convolutions or truncated sums, the Laguerre sum rule and generating
function, and g2 values against their analytic expressions. Checks tagged
with a scenario run only for that scenario when a filter is given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import states
from .detection import closed_form_noclick, noclick_matrix
from .metrics import g2_displaced_thermal, moments
from .scenarios import SCENARIO_NAMES, load_config, truth_of
from .specfun import laguerre, log_laguerre_neg

# floor for comparisons whose nominal bound is a truncation deficit
ROUNDOFF_FLOOR = 1e-14


@dataclass
class CheckResult:
    name: str
    scenario: str | None
    passed: bool
    detail: str

    def line(self) -> str:
        tag = f"[{self.scenario}] " if self.scenario else ""
        return f"{'PASS' if self.passed else 'FAIL'}  {tag}{self.name}: {self.detail}"


def laguerre_sum_rule(n_cases: int = 200, seed: int = 0, tol: float = 1e-9):
    """Largest normalized residual of the Laguerre addition theorem.

    The residual is divided by ``sum_k |L_k(x) L_{n-k}(y)|`` because the
    sum cancels heavily for mixed-sign arguments.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        n = int(rng.integers(0, 31))
        a, b = (int(v) for v in rng.integers(0, 6, size=2))
        x, y = rng.uniform(-10, 10, size=2)
        terms = [laguerre(k, a, x) * laguerre(n - k, b, y) for k in range(n + 1)]
        lhs = math.fsum(terms)
        rhs = laguerre(n, a + b + 1, x + y)
        scale = max(math.fsum(abs(t) for t in terms), abs(rhs))
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst <= tol, worst


def laguerre_generating_function(K: int = 200, tol: float = 1e-8):
    """Residual of the truncated generating series at a few (lam, x, t)."""
    worst = 0.0
    for lam in (0, 1, 4):
        for x in (-2.0, 0.5, 3.0):
            for t in (-0.5, 0.25, 0.5):
                series = math.fsum(laguerre(n, lam, x) * t ** n for n in range(K + 1))
                exact = (1 - t) ** (-1 - lam) * math.exp(-x * t / (1 - t))
                worst = max(worst, abs(series - exact) / max(1.0, abs(exact)))
    return worst <= tol, worst


def log_laguerre_consistency(tol: float = 1e-10):
    worst = 0.0
    for n in (0, 1, 7, 50, 200):
        for lam in (0, 2, 29):
            for x in (0.1, 0.9, 5.0):
                direct = laguerre(n, lam, -x)
                worst = max(worst, abs(math.exp(log_laguerre_neg(n, lam, x)) / direct - 1))
    return worst <= tol, worst


def g2_thermal(tol: float = 1e-3):
    g2 = moments(states.thermal_pmf(30.0, 1200))[2]
    return abs(g2 - 2) <= tol, abs(g2 - 2)


def g2_coherent(tol: float = 1e-6):
    g2 = moments(states.coherent_pmf(4.0, 80))[2]
    return abs(g2 - 1) <= tol, abs(g2 - 1)


def g2_displaced(n_mean=30.0, alpha_sq=256.0, tol: float = 1e-6):
    dist = states.displaced_thermal_pmf(n_mean, alpha_sq, 2500)
    err = abs(moments(dist)[2] - g2_displaced_thermal(n_mean, alpha_sq))
    return err <= tol, err


def scenario_closed_form(cfg, truth, tol: float = 1e-9):
    """Total PMF by convolution against the multimode Laguerre closed form."""
    m = cfg.model
    if m.n_mean <= 0:
        return True, 0.0
    closed = states.closed_form_multimode_pmf(m.n_mean, m.alpha_sq, truth.n_max)
    # compare before renormalization: the closed form is the untruncated law
    err = float(np.max(np.abs(closed - truth.probs * (1 - truth.truncation_deficit))))
    return err <= tol, err


def scenario_noclick(cfg, truth, n_points: int = 50):
    """Truncated-sum no-click curve against its closed form at 50 efficiencies."""
    etas = np.linspace(0.0, 1.0, n_points)
    trunc = noclick_matrix(etas, truth.n_max) @ truth.probs
    exact = closed_form_noclick(cfg.model.n_mean, cfg.model.alpha_sq, etas)
    err = float(np.max(np.abs(trunc - exact)))
    bound = max(10 * truth.truncation_deficit, ROUNDOFF_FLOOR)
    return err <= bound, err


def scenario_moments(cfg, truth, tol: float = 1e-6):
    """Mean and g2 of the truth against the model's analytic moments."""
    m = cfg.model
    mean, _, g2 = moments(truth)
    g2_model = 1 + (m.variance() - m.mean()) / m.mean() ** 2
    err = max(abs(mean / m.mean() - 1), abs(g2 - g2_model))
    return err <= tol, err


GENERAL_CHECKS: dict[str, Callable] = {
    "laguerre sum rule (200 random cases, 1e-9)": laguerre_sum_rule,
    "laguerre generating function (K=200, 1e-8)": laguerre_generating_function,
    "log-form laguerre vs direct (1e-10)": log_laguerre_consistency,
    "g2 thermal n=30 equals 2 (1e-3)": g2_thermal,
    "g2 coherent equals 1 (1e-6)": g2_coherent,
    "g2 displaced thermal vs closed form (1e-6)": g2_displaced,
}

SCENARIO_CHECKS: dict[str, Callable] = {
    "convolution vs closed-form PMF (1e-9)": scenario_closed_form,
    "truncated vs closed-form no-click curve (10x deficit)": scenario_noclick,
    "mean and g2 vs model moments (1e-6)": scenario_moments,
}


def run_checks(scenario: str | None = None) -> list[CheckResult]:
    results = []
    if scenario is None:
        for name, fn in GENERAL_CHECKS.items():
            results.append(_run(name, None, fn))
    names = SCENARIO_NAMES if scenario is None else (scenario,)
    for sc in names:
        cfg = load_config(sc)
        truth = truth_of(cfg)
        for name, fn in SCENARIO_CHECKS.items():
            results.append(_run(name, sc, fn, cfg, truth))
    return results


def _run(name, scenario, fn, *args):
    try:
        ok, err = fn(*args)
        return CheckResult(name, scenario, bool(ok), f"max error {err:.3e}")
    except Exception as exc:  # a crashing check is a failing check
        return CheckResult(name, scenario, False, f"{type(exc).__name__}: {exc}")
