"""Second-moment analysis of list decoding for uniformly random q-ary codes.

A random code sends each of M messages to an independent uniform word of
[q]^n. For a center a and an ordered list X of L distinct messages, I(a, X)
indicates that every codeword of X lies in the radius-floor(pn) ball around a;
W = sum I(a, X) vanishes exactly when the code is (p, L-1)-list decodable.
"""
from __future__ import annotations

import csv
import functools
import io
import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from multiprocessing.pool import ThreadPool

import numpy as np
from mpmath import iv
from mpmath.libmp import to_rational

from .exactcomb import (Verdict, _IV_LOCK, binomial, falling_factorial,
                        q_ary_entropy)
from .spaces import (BudgetExceeded, SpaceSpec, all_vectors, ball_offsets,
                     hamming_intersection_volume, translate, vector_distances, volume)

ENUMERATION_BUDGET = 10**8
TRIAL_BUDGET = 5 * 10**9


def decoding_radius(n: int, p: float | Fraction) -> int:
    """floor(p n), computed on the rational nearest to ``p`` so 0.29 * 100 gives 29."""
    frac = p if isinstance(p, Fraction) else Fraction(p).limit_denominator(10**9)
    return math.floor(frac * n)


def compute_mu(q: int, n: int, p: float | Fraction) -> Fraction:
    r = decoding_radius(n, p)
    if not 0 <= r <= n:
        raise ValueError(f"radius floor(pn) = {r} outside [0, {n}]")
    return Fraction(volume(SpaceSpec.hamming(q, n), r), q**n)


@dataclass(frozen=True)
class ListDecodeParams:
    """Parameters of a random-code experiment.

    Either ``epsilon`` fixes the rate R = 1 - h_q(p) - epsilon and the message
    count floor(q^{Rn}), or ``message_count`` is given and epsilon is read
    back from R = log_q(M)/n (it may then be zero or negative). ``L`` defaults
    to floor((1 - gamma)/epsilon) when the decay constant ``c`` is known.
    """

    q: int
    n: int
    p: float
    epsilon: float | None = None
    L: int | None = None
    c: float | None = None
    message_count: int | None = None

    def __post_init__(self):
        if self.q < 2 or self.n < 1:
            raise ValueError("need q >= 2 and n >= 1")
        if not 0 < self.p < (self.q - 1) / self.q:
            raise ValueError(f"p must lie in (0, {(self.q - 1) / self.q:.6g})")
        if self.epsilon is None and self.message_count is None:
            raise ValueError("give epsilon or message_count")
        if self.message_count is not None:
            if self.message_count < 1:
                raise ValueError("message_count must be >= 1")
            eps = 1 - q_ary_entropy(self.q, self.p) - self.rate
            object.__setattr__(self, "epsilon", eps)
        elif self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.L is None:
            if self.c is None or self.epsilon <= 0:
                raise ValueError("L can only be derived from a positive epsilon and a decay constant c")
            object.__setattr__(self, "L", max(1, math.floor((1 - self.gamma) / self.epsilon)))
        if self.L < 1:
            raise ValueError("L must be >= 1")

    @property
    def radius(self) -> int:
        return decoding_radius(self.n, self.p)

    @property
    def rate(self) -> float:
        if self.message_count is not None:
            return math.log(self.message_count, self.q) / self.n
        return 1 - q_ary_entropy(self.q, self.p) - self.epsilon

    @property
    def messages(self) -> int:
        if self.message_count is not None:
            return self.message_count
        # floor(q^{Rn}) with a guard against the float landing just below an integer
        value = self.q ** (self.rate * self.n)
        return math.floor(value + 1e-9)

    @property
    def ell0(self) -> float:
        return (1 - q_ary_entropy(self.q, self.p)) / (2 * self.epsilon)

    @property
    def gamma(self) -> float:
        if self.c is None:
            raise ValueError("gamma needs the decay constant c")
        return 4 * (self.q - 1) / math.log(self.q) * self.q ** (-self.c * self.ell0)

    def to_dict(self) -> dict:
        out = {"q": self.q, "n": self.n, "p": self.p, "epsilon": self.epsilon, "L": self.L,
               "c": self.c, "rate": self.rate, "message_count": self.messages,
               "radius": self.radius}
        if self.epsilon > 0:
            out["ell0"] = self.ell0
            if self.c is not None:
                out["gamma"] = self.gamma
        return out


# -- the events E_l ------------------------------------------------------------

def event_probability(q: int, n: int, p: float | Fraction, L: int, ell: int) -> Fraction:
    """Exact P(E_ell) from the closed-form intersection volumes.

    Conditioning on the distance k between the two centers, the ell shared
    points must land in both balls and the remaining 2(L - ell) in one ball.
    """
    _check_ell(L, ell)
    r = decoding_radius(n, p)
    total = q**n
    mu = compute_mu(q, n, p)
    acc = Fraction(0)
    for k in range(n + 1):
        inter = hamming_intersection_volume(q, n, r, k)
        acc += Fraction(binomial(n, k) * (q - 1) ** k * inter**ell, total ** (ell + 1))
    return acc * mu ** (2 * L - 2 * ell)


def event_probability_enumerated(q: int, n: int, p: float | Fraction, L: int, ell: int,
                                 budget: int = ENUMERATION_BUDGET) -> Fraction:
    """Exact P(E_ell) by visiting every center pair (a, b).

    Each pair's ball intersection is counted directly from distances, with no
    closed form involved; the free points then factor as powers of mu.
    """
    _check_ell(L, ell)
    cost = q ** (3 * n)
    if cost > budget:
        raise BudgetExceeded(f"center-pair enumeration needs {cost} distance evaluations")
    space = SpaceSpec.hamming(q, n)
    r = decoding_radius(n, p)
    vecs = all_vectors(space)
    total = q**n
    inside = np.stack([vector_distances(space, vecs, a) <= r for a in vecs])
    mu = Fraction(int(inside[0].sum()), total)
    acc = 0
    for ia in range(total):
        inter = (inside[ia][None, :] & inside).sum(axis=1)
        acc += sum(int(v) ** ell for v in inter)
    return Fraction(acc, total ** (2 + ell)) * mu ** (2 * L - 2 * ell)


def event_probability_bruteforce(q: int, n: int, p: float | Fraction, L: int, ell: int,
                                 budget: int = 2 * 10**7) -> Fraction:
    """P(E_ell) by scanning every tuple (a, b, x, y, z); tiny instances only."""
    _check_ell(L, ell)
    slots = 2 + ell + 2 * (L - ell)
    if q ** (n * slots) > budget:
        raise BudgetExceeded(f"tuple scan needs {q ** (n * slots)} tuples")
    space = SpaceSpec.hamming(q, n)
    r = decoding_radius(n, p)
    vecs = all_vectors(space)
    inside = np.stack([vector_distances(space, vecs, a) <= r for a in vecs])
    hits = 0
    size = q**n
    for a, b in itertools.product(range(size), repeat=2):
        both = inside[a] & inside[b]
        factors = [both] * ell + [inside[a]] * (L - ell) + [inside[b]] * (L - ell)
        # outer product over slots: one entry per (x, y, z) tuple
        grid = functools.reduce(np.logical_and.outer, factors, np.bool_(True))
        hits += int(np.count_nonzero(grid))
    return Fraction(hits, size**slots)


def _check_ell(L: int, ell: int) -> None:
    if not 0 <= ell <= L:
        raise ValueError(f"need 0 <= ell <= L, got ell={ell}, L={L}")


@dataclass(frozen=True)
class EventBounds:
    bound1: Fraction
    bound2: float
    bound2_interval: tuple[Fraction, Fraction]
    minimum: str

    @property
    def value(self) -> float:
        return float(self.bound1) if self.minimum == "bound1" else self.bound2


def event_bounds(params: ListDecodeParams, ell: int, mu: Fraction | None = None) -> EventBounds:
    """min{mu^{2L-ell+1}, q^{-n} mu^{2L-ell} (1 + 2(q-1) q^{-c ell})^n}."""
    if params.c is None or params.c <= 0:
        raise ValueError("bound2 needs a positive decay constant c")
    _check_ell(params.L, ell)
    if ell == 0:
        raise ValueError("the bounds hold for 1 <= ell <= L; E_0 has probability mu^{2L}")
    mu = compute_mu(params.q, params.n, params.p) if mu is None else mu
    L, q, n = params.L, params.q, params.n
    bound1 = mu ** (2 * L - ell + 1)
    with _IV_LOCK:
        saved = iv.prec
        iv.prec = 80
        try:
            base = 1 + 2 * (q - 1) * iv.power(iv.mpf(q), -(iv.mpf(params.c) * ell))
            val = iv.power(base, n) * iv.mpf(mu.numerator) ** (2 * L - ell) \
                / (iv.mpf(mu.denominator) ** (2 * L - ell) * iv.mpf(q) ** n)
        finally:
            iv.prec = saved
    lo, hi = (Fraction(*to_rational(e)) for e in val._mpi_)
    bound2 = float((lo + hi) / 2)
    return EventBounds(bound1, bound2, (lo, hi), "bound1" if bound1 <= lo else "bound2")


def check_event_bound(prob: Fraction, bounds: EventBounds) -> Verdict:
    """Exact test of P(E_ell) against the smaller of the two bounds."""
    if prob <= bounds.bound1 or prob <= bounds.bound2_interval[0]:
        return Verdict.PASS
    if prob > bounds.bound2_interval[1]:
        return Verdict.FAIL
    return Verdict.INDETERMINATE


# -- witness counting ------------------------------------------------------------

def list_pair_counts(M: int, L: int) -> dict[int, int]:
    """Ordered list pairs (X, Y) of L distinct messages with |X cap Y| = ell."""
    first = falling_factorial(M, L)
    return {ell: first * binomial(L, ell) * binomial(M - L, L - ell) * math.factorial(L)
            for ell in range(L + 1)}


def expected_witnesses(q: int, n: int, p: float | Fraction, M: int, L: int) -> Fraction:
    """E[W] = q^n M(M-1)...(M-L+1) mu^L."""
    return q**n * falling_factorial(M, L) * compute_mu(q, n, p) ** L


def witness_variance(q: int, n: int, p: float | Fraction, M: int, L: int) -> Fraction:
    """Exact Var W: only list pairs that share a message are correlated."""
    mu = compute_mu(q, n, p)
    pairs = list_pair_counts(M, L)
    base = mu ** (2 * L)
    return sum((pairs[ell] * q ** (2 * n) * (event_probability(q, n, p, L, ell) - base)
                for ell in range(1, L + 1)), Fraction(0))


def chebyshev_bound(q: int, n: int, p: float | Fraction, M: int, L: int) -> Fraction | None:
    """Var W / E[W]^2, an upper bound on P(W = 0); None when E[W] = 0."""
    mean = expected_witnesses(q, n, p, M, L)
    if mean == 0:
        return None
    return witness_variance(q, n, p, M, L) / mean**2


def count_witnesses(space: SpaceSpec, codeword_ranks: np.ndarray, r: int, L: int,
                    offsets: np.ndarray | None = None) -> tuple[int, int]:
    """(ordered W, number of centers whose ball holds >= L codewords).

    Codewords are counted with multiplicity, so a repeated image counts once
    per message.
    """
    vecs = all_vectors(space)
    offsets = ball_offsets(space, r, include_center=True) if offsets is None else offsets
    balls = translate(space, vecs[codeword_ranks], offsets).reshape(-1, space.n)
    weights = space.q ** np.arange(space.n - 1, -1, -1, dtype=np.int64)
    counts = np.bincount(balls.astype(np.int64) @ weights, minlength=space.size)
    ordered = 0
    for c, mult in zip(*np.unique(counts[counts >= L], return_counts=True)):
        ordered += falling_factorial(int(c), L) * int(mult)
    return ordered, int(np.count_nonzero(counts >= L))


@dataclass
class WitnessStats:
    params: ListDecodeParams
    mu: Fraction
    trials: int
    seed: int
    witness_counts: dict[int, int]
    ordered_mean: float
    ordered_stderr: float
    expected_W: Fraction
    prob_not_list_decodable: float
    stderr: float
    chebyshev: Fraction | None = None
    ordered_values: list[int] = field(default_factory=list, repr=False)

    @property
    def prob_list_decodable(self) -> float:
        return 1 - self.prob_not_list_decodable

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(),
                "mu": [self.mu.numerator, self.mu.denominator],
                "trials": self.trials, "seed": self.seed,
                "witness_counts": {str(k): v for k, v in sorted(self.witness_counts.items())},
                "ordered_mean": self.ordered_mean, "ordered_stderr": self.ordered_stderr,
                "expected_W": float(self.expected_W),
                "prob_not_list_decodable": self.prob_not_list_decodable,
                "stderr": self.stderr,
                "chebyshev_bound": None if self.chebyshev is None else float(self.chebyshev)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def witness_experiment(params: ListDecodeParams, trials: int, seed: int = 0,
                       jobs: int = 1, with_chebyshev: bool = True) -> WitnessStats:
    """Sample ``trials`` random codes and count list-decoding witnesses.

    Trial t draws its codewords from SeedSequence(seed, spawn_key=(t,)), so
    results do not depend on ``jobs``.
    """
    q, n, L = params.q, params.n, params.L
    space = SpaceSpec.hamming(q, n)
    if space.size > 10**6:
        raise BudgetExceeded("witness counting enumerates all q^n centers; q^n must be <= 10^6")
    M = params.messages
    r = params.radius
    offsets = ball_offsets(space, r, include_center=True)
    if trials * M * offsets.shape[0] > TRIAL_BUDGET:
        raise BudgetExceeded("trials * messages * ball volume above budget")

    def one(t: int) -> tuple[int, int]:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(t,)))
        ranks = rng.integers(0, space.size, size=M)
        return count_witnesses(space, ranks, r, L, offsets)

    if jobs > 1:
        with ThreadPool(jobs) as pool:
            results = pool.map(one, range(trials))
    else:
        results = [one(t) for t in range(trials)]
    ordered = [o for o, _ in results]
    unordered = [u for _, u in results]
    fails = sum(1 for u in unordered if u > 0)
    prob = fails / trials
    arr = np.array(ordered, dtype=np.float64)
    mu = compute_mu(q, n, params.p)
    cheb = chebyshev_bound(q, n, params.p, M, L) if with_chebyshev and M >= L else None
    return WitnessStats(params, mu, trials, seed, dict(Counter(unordered)),
                        float(arr.mean()),
                        float(arr.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan,
                        expected_witnesses(q, n, params.p, M, L), prob,
                        math.sqrt(prob * (1 - prob) / trials), cheb, ordered)


SWEEP_COLUMNS = ("q", "n", "p", "epsilon", "L", "mu_num", "mu_den", "trials", "prob_fail",
                 "stderr", "chebyshev_bound")


def sweep_row(stats: WitnessStats) -> dict:
    pr = stats.params
    return {"q": pr.q, "n": pr.n, "p": pr.p, "epsilon": f"{pr.epsilon:.6f}", "L": pr.L,
            "mu_num": stats.mu.numerator, "mu_den": stats.mu.denominator,
            "trials": stats.trials, "prob_fail": f"{stats.prob_not_list_decodable:.6f}",
            "stderr": f"{stats.stderr:.6f}",
            "chebyshev_bound": "" if stats.chebyshev is None else f"{float(stats.chebyshev):.6g}"}


def message_count_sweep(q: int, n: int, p: float, L: int, message_counts, trials: int,
                        seed: int = 0, jobs: int = 1) -> list[WitnessStats]:
    return [witness_experiment(ListDecodeParams(q, n, p, L=L, message_count=m), trials,
                               seed, jobs) for m in message_counts]


def sweep_csv(stats: list[WitnessStats]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(sweep_row(s) for s in stats)
    return buf.getvalue()
