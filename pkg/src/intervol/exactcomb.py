"""Exact combinatorial primitives.

Counts are plain Python ``int`` (arbitrary precision) and ratios are
``fractions.Fraction`` (always in lowest terms, positive denominator).
Comparisons of an exact ratio against a transcendental bound such as
``2 * exp(-c * t)`` go through outward-rounded interval arithmetic so a
floating point error can never flip a verdict.
"""
from __future__ import annotations

import math
import threading
from enum import Enum
from fractions import Fraction
from functools import lru_cache

from mpmath import iv
from mpmath.libmp import to_rational

# ExactRatio is a Fraction; the alias documents intent at call sites.
ExactRatio = Fraction

BINOMIAL_MEMO_CAP = 2000

# the interval context keeps its precision globally
_IV_LOCK = threading.Lock()


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INDETERMINATE = "indeterminate"


@lru_cache(maxsize=None)
def _binomial_memo(n: int, k: int) -> int:
    return math.comb(n, k)


def binomial(n: int, k: int) -> int:
    """C(n, k), with C(n, k) = 0 for k < 0 or k > n."""
    if n < 0:
        raise ValueError(f"binomial needs n >= 0, got {n}")
    if k < 0 or k > n:
        return 0
    if n <= BINOMIAL_MEMO_CAP:
        return _binomial_memo(n, min(k, n - k))
    return math.comb(n, k)


@lru_cache(maxsize=None)
def derangements(m: int) -> int:
    """Number of fixed-point-free permutations of ``m`` elements (D_0 = 1)."""
    if m < 0:
        raise ValueError(f"derangements needs m >= 0, got {m}")
    # iterative to keep recursion depth flat for large m
    d_prev, d_cur = 1, 0
    if m == 0:
        return 1
    for j in range(2, m + 1):
        d_prev, d_cur = d_cur, (j - 1) * (d_cur + d_prev)
    return d_cur


def multinomial(*parts: int) -> int:
    total, out = 0, 1
    for p in parts:
        if p < 0:
            return 0
        total += p
        out *= binomial(total, p)
    return out


def falling_factorial(m: int, k: int) -> int:
    """m (m-1) ... (m-k+1); zero when k > m >= 0."""
    out = 1
    for j in range(k):
        out *= m - j
    return out


def q_ary_entropy(q: int, x: float) -> float:
    """The q-ary entropy h_q(x), with the convention 0 log 0 = 0."""
    if q < 2:
        raise ValueError(f"alphabet size must be >= 2, got {q}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"entropy argument must lie in [0, 1], got {x}")
    lq = math.log(q)
    out = x * math.log(q - 1) / lq if q > 2 else 0.0
    if 0.0 < x:
        out -= x * math.log(x) / lq
    if x < 1.0:
        out -= (1.0 - x) * math.log(1.0 - x) / lq
    return out


def log_ratio(num: int, den: int) -> float:
    """ln(num / den) for (possibly huge) positive integers."""
    if num <= 0 or den <= 0:
        raise ValueError("log_ratio needs positive arguments")
    return math.log(num) - math.log(den)


def _interval_to_fractions(x) -> tuple[Fraction, Fraction]:
    lo, hi = x._mpi_
    return Fraction(*to_rational(lo)), Fraction(*to_rational(hi))


def exp_bound_interval(c: float, t: float, factor: float = 2.0,
                       prec: int = 53) -> tuple[Fraction, Fraction]:
    """Rigorous enclosure [lo, hi] of ``factor * exp(-c * t)``.

    ``c``, ``t`` and ``factor`` are taken as the exact binary values of the
    given floats.
    """
    with _IV_LOCK:
        saved = iv.prec
        iv.prec = prec
        try:
            val = iv.mpf(factor) * iv.exp(-(iv.mpf(c) * iv.mpf(t)))
        finally:
            iv.prec = saved
    return _interval_to_fractions(val)


def compare_ratio_to_exp(ratio: Fraction, c: float, t: float,
                         factor: float = 2.0) -> Verdict:
    """Decide ``ratio <= factor * exp(-c t)`` exactly, or report a tie.

    The interval is evaluated at double precision first and retried once at
    256 bits when the exact ratio falls inside it.
    """
    for prec in (53, 256):
        lo, hi = exp_bound_interval(c, t, factor, prec)
        if ratio <= lo:
            return Verdict.PASS
        if ratio > hi:
            return Verdict.FAIL
    return Verdict.INDETERMINATE


def compare_ratio_to_float(ratio: Fraction, bound: float) -> Verdict:
    """Exact comparison of a rational against a float taken at face value."""
    if not math.isfinite(bound):
        return Verdict.PASS if bound > 0 else Verdict.FAIL
    return Verdict.PASS if ratio <= Fraction(bound) else Verdict.FAIL
