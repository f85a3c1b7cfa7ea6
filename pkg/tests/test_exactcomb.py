import itertools
import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from intervol.exactcomb import (Verdict, binomial, compare_ratio_to_exp, compare_ratio_to_float,
                                derangements, exp_bound_interval, falling_factorial, log_ratio,
                                multinomial, q_ary_entropy)


def pascal_row(n):
    row = [1]
    for _ in range(n):
        row = [a + b for a, b in zip([0] + row, row + [0])]
    return row


def test_binomial_small_cases():
    assert binomial(4, 2) == 6
    assert binomial(5, 7) == 0
    assert binomial(5, -1) == 0


def test_binomial_row_50_against_pascal():
    assert binomial(50, 25) == pascal_row(50)[25] == 126410606437752


def test_binomial_rejects_negative_n():
    with pytest.raises(ValueError):
        binomial(-1, 0)


@given(st.integers(1, 400), st.integers(-3, 403))
def test_binomial_pascal_identity(n, k):
    assert binomial(n, k) == binomial(n - 1, k - 1) + binomial(n - 1, k)


def test_binomial_beyond_memo_cap():
    assert binomial(5000, 3) == 5000 * 4999 * 4998 // 6


def count_derangements(m):
    return sum(1 for p in itertools.permutations(range(m)) if all(p[i] != i for i in range(m)))


@pytest.mark.parametrize("m", range(0, 8))
def test_derangements_match_enumeration(m):
    assert derangements(m) == count_derangements(m)


def test_derangement_examples():
    assert derangements(2) == 1
    assert derangements(4) == 9
    assert derangements(6) == 265


@given(st.integers(1, 300))
def test_derangements_alternating_recurrence(m):
    # D_m = m D_{m-1} + (-1)^m, a different recurrence from the implementation
    assert derangements(m) == m * derangements(m - 1) + (-1) ** m


def test_derangements_large_m_no_recursion_limit():
    assert derangements(3000) > 0


@given(st.lists(st.integers(0, 12), min_size=1, max_size=4))
def test_multinomial_matches_factorials(parts):
    expect = math.factorial(sum(parts))
    for p in parts:
        expect //= math.factorial(p)
    assert multinomial(*parts) == expect


def test_multinomial_negative_part_is_zero():
    assert multinomial(3, -1, 2) == 0


def test_falling_factorial():
    assert falling_factorial(8, 2) == 56
    assert falling_factorial(3, 5) == 0
    assert falling_factorial(5, 0) == 1


@pytest.mark.parametrize("q", [2, 3, 4, 5])
def test_entropy_is_one_at_threshold(q):
    assert q_ary_entropy(q, (q - 1) / q) == pytest.approx(1.0, abs=1e-15)


def test_entropy_endpoints():
    assert q_ary_entropy(2, 0.5) == pytest.approx(1.0)
    assert q_ary_entropy(2, 0.0) == 0.0
    assert q_ary_entropy(3, 1.0) == pytest.approx(math.log(2, 3))


@pytest.mark.parametrize("q,x", [(1, 0.5), (2, -0.1), (2, 1.5)])
def test_entropy_domain(q, x):
    with pytest.raises(ValueError):
        q_ary_entropy(q, x)


@given(st.integers(2, 9), st.floats(0.001, 0.999))
def test_entropy_matches_definition(q, x):
    h = (x * math.log(q - 1) - x * math.log(x) - (1 - x) * math.log(1 - x)) / math.log(q)
    assert q_ary_entropy(q, x) == pytest.approx(h, rel=1e-12, abs=1e-14)


def test_log_ratio_handles_huge_integers():
    assert log_ratio(10**400, 10**399) == pytest.approx(math.log(10))
    with pytest.raises(ValueError):
        log_ratio(0, 1)


@given(st.floats(0.0, 5.0), st.floats(0.0, 50.0))
def test_exp_interval_encloses_high_precision_value(c, t):
    lo, hi = exp_bound_interval(c, t)
    with mpmath.workdps(60):
        ref = 2 * mpmath.exp(-mpmath.mpf(c) * mpmath.mpf(t))
        assert mpmath.mpf(lo.numerator) / lo.denominator <= ref
        assert ref <= mpmath.mpf(hi.numerator) / hi.denominator


def test_compare_ratio_to_exp_verdicts():
    assert compare_ratio_to_exp(Fraction(1), 0.0, 3.0) is Verdict.PASS
    assert compare_ratio_to_exp(Fraction(2), 0.5, 0.0) is Verdict.PASS  # equality at t = 0
    assert compare_ratio_to_exp(Fraction(3, 4), 1.0, 1.0) is Verdict.FAIL  # 2/e = 0.7358
    assert compare_ratio_to_exp(Fraction(73, 100), 1.0, 1.0) is Verdict.PASS


def test_compare_ratio_to_exp_reports_ties():
    with mpmath.workprec(2000):
        close = mpmath.mpf(2) * mpmath.exp(-1)
        frac = Fraction(*mpmath.libmp.to_rational(close._mpf_))
    assert compare_ratio_to_exp(frac, 1.0, 1.0) is Verdict.INDETERMINATE


def test_compare_ratio_to_float():
    assert compare_ratio_to_float(Fraction(1, 3), 1 / 3) is Verdict.FAIL  # 1/3 > float(1/3)
    assert compare_ratio_to_float(Fraction(1, 4), 0.25) is Verdict.PASS
    assert compare_ratio_to_float(Fraction(10**9), math.inf) is Verdict.PASS
