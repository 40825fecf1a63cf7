import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noclick.specfun import (LaguerreOrder, LaguerreOverflowError, laguerre, log_laguerre_neg,
                             log_laguerre_neg_table)
from noclick.validate import laguerre_generating_function, laguerre_sum_rule


def rational_laguerre(n, lam, x):
    """Exact recurrence in rational arithmetic (oracle)."""
    x = Fraction(x)
    if n == 0:
        return Fraction(1)
    prev, cur = Fraction(1), 1 + lam - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + lam - x) * cur - (k + lam) * prev) / (k + 1)
    return cur


def test_degree_zero_is_one():
    assert laguerre(0, 0, 3.7) == 1.0


def test_degree_one():
    assert laguerre(1, 0, -2.0) == 3.0


def test_degree_two_upper_one_matches_expanded_polynomial():
    # L_2^(1)(x) = (x^2 - 6x + 6) / 2
    x = -1.0
    assert laguerre(2, 1, x) == pytest.approx((x * x - 6 * x + 6) / 2, rel=1e-15)
    assert laguerre(2, 1, x) == pytest.approx(6.5, rel=1e-15)


def test_order_tuple_form():
    assert laguerre(LaguerreOrder(2, 1), -1.0) == laguerre(2, 1, -1.0)
    assert log_laguerre_neg(LaguerreOrder(1), 5.0) == log_laguerre_neg(1, 0, 5.0)


@pytest.mark.parametrize("n,lam,x", [(3, 0, 0.5), (10, 2, -4.0), (25, 5, 7.5), (40, 0, 12.0)])
def test_laguerre_against_mpmath(n, lam, x):
    ref = float(mpmath.laguerre(n, lam, x))
    scale = max(1.0, abs(ref))
    assert abs(laguerre(n, lam, x) - ref) <= 1e-11 * scale


@pytest.mark.parametrize("n,lam", [(-1, 0), (1.5, 0), (2, -1)])
def test_invalid_order(n, lam):
    with pytest.raises(ValueError):
        laguerre(n, lam, 1.0)


def test_nonfinite_argument():
    with pytest.raises(ValueError):
        laguerre(3, 0, math.inf)


def test_overflow_is_signalled():
    with pytest.raises(LaguerreOverflowError):
        laguerre(5000, 0, -50.0)


def test_log_form_trivial_values():
    assert log_laguerre_neg(0, 0, 5.0) == 0.0
    assert log_laguerre_neg(1, 0, 5.0) == pytest.approx(math.log(6.0), rel=1e-15)


def test_log_form_against_rational_oracle():
    x = 0.9
    exact = rational_laguerre(50, 29, -Fraction(x))
    ref = math.log(exact.numerator) - math.log(exact.denominator)
    got = log_laguerre_neg(50, 29, x)
    # relative error of exp(result)
    assert abs(math.expm1(got - ref)) <= 1e-10


@pytest.mark.parametrize("n,lam,x", [(500, 0, 0.3), (2000, 29, 0.25), (3146, 0, 0.2669), (5000, 2, 1.7)])
def test_log_form_against_extended_precision(n, lam, x):
    with mpmath.workdps(60):
        ref = mpmath.log(mpmath.laguerre(n, lam, -mpmath.mpf(x)))
    got = log_laguerre_neg(n, lam, x)
    assert abs(math.expm1(got - float(ref))) <= 1e-10


def test_log_form_rejects_negative_argument():
    with pytest.raises(ValueError):
        log_laguerre_neg(3, 0, -1.0)


def test_table_matches_pointwise():
    tab = log_laguerre_neg_table(300, 4, 2.5)
    for n in (0, 1, 2, 77, 300):
        assert tab[n] == pytest.approx(log_laguerre_neg(n, 4, 2.5), rel=1e-14, abs=1e-14)


def test_table_degree_zero():
    assert np.array_equal(log_laguerre_neg_table(0, 3, 1.0), [0.0])


@settings(max_examples=60, deadline=None)
@given(n=st.integers(0, 150), lam=st.integers(0, 30), x=st.floats(0.0, 20.0))
def test_log_form_consistent_with_direct(n, lam, x):
    direct = laguerre(n, lam, -x)
    assert math.exp(log_laguerre_neg(n, lam, x)) == pytest.approx(direct, rel=1e-10)


def test_sum_rule_random_cases():
    ok, worst = laguerre_sum_rule(n_cases=200, seed=1)
    assert ok, worst


def test_generating_function_residual():
    ok, worst = laguerre_generating_function(K=200)
    assert ok, worst
