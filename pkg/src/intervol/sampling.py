"""Seeded uniform shell samplers and statistics of the boundary functional.

The boundary functional for centers a, b is ell(x) = d(x, b) - d(x, a).

RNG streams: samples are drawn in shards of ``SHARD_SIZE``. Shard ``s`` of a
run with seed ``seed`` uses ``SeedSequence(seed, spawn_key=(s,))``, so the
output depends only on (spec, seed), never on how shards are scheduled.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from .exactcomb import Verdict
from .spaces import (Kind, Point, SpaceSpec, distance,
                     enumerate_shell, vector_distances, volume)

SHARD_SIZE = 1 << 14


class EmptyShell(ValueError):
    pass


def shard_rng(seed: int, shard: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(shard,)))


def _random_subsets(rng: np.random.Generator, m: int, n: int, size: int) -> np.ndarray:
    """m independent uniform size-subsets of range(n), one per row."""
    if size == 0:
        return np.zeros((m, 0), dtype=np.intp)
    if size == n:
        return np.tile(np.arange(n, dtype=np.intp), (m, 1))
    keys = rng.random((m, n))
    return np.argpartition(keys, size - 1, axis=1)[:, :size]


def random_derangements(rng: np.random.Generator, m: int, size: int) -> tuple[np.ndarray, int]:
    """m uniform derangements of range(size) by rejection from uniform shuffles.

    Returns the derangements and the total number of shuffles drawn.
    """
    if size == 1:
        raise EmptyShell("there is no derangement of a single element")
    base = np.arange(size)
    out = np.empty((m, size), dtype=np.intp)
    todo = np.arange(m)
    attempts = 0
    while todo.size:
        perms = rng.permuted(np.tile(base, (todo.size, 1)), axis=1)
        attempts += todo.size
        ok = ~np.any(perms == base, axis=1)
        out[todo[ok]] = perms[ok]
        todo = todo[~ok]
    return out, attempts


def sample_shell_vectors(space: SpaceSpec, center: np.ndarray, rho: int, m: int,
                         rng: np.random.Generator) -> np.ndarray:
    """m uniform points of S(center, rho), as vector rows."""
    if space.shell_size(rho) == 0:
        raise EmptyShell(f"S(a, {rho}) is empty in {space.label()}")
    n = space.n
    center = np.asarray(center, dtype=np.int16)
    x = np.tile(center, (m, 1))
    rows = np.arange(m)[:, None]
    if space.kind is Kind.HAMMING:
        support = _random_subsets(rng, m, n, rho)
        shifts = rng.integers(1, space.q, size=(m, rho), dtype=np.int16)
        x[rows, support] = (center[support] + shifts) % space.q
    elif space.kind is Kind.JOHNSON:
        ones = np.flatnonzero(center)
        zeros = np.flatnonzero(center == 0)
        drop = ones[_random_subsets(rng, m, ones.size, rho)]
        add = zeros[_random_subsets(rng, m, zeros.size, rho)]
        x[rows, drop] = 0
        x[rows, add] = 1
    else:
        if rho:
            support = _random_subsets(rng, m, n, rho)
            der, _ = random_derangements(rng, m, rho)
            # x = center o sigma with sigma(support[j]) = support[der[j]]
            x[rows, support] = center[np.take_along_axis(support, der, axis=1)]
    return x


# -- specs and single points -------------------------------------------------

@dataclass(frozen=True)
class ShellSampleSpec:
    space: SpaceSpec
    a: Point
    b: Point
    r: int
    i: int = 0
    sample_count: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.i <= self.r:
            raise ValueError(f"offset i={self.i} outside [0, r={self.r}]")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if tuple(self.a) == tuple(self.b):
            raise ValueError("centers a and b must differ")
        self.space.validate(self.a)
        self.space.validate(self.b)

    @property
    def radius(self) -> int:
        return self.r - self.i

    @property
    def k(self) -> int:
        return distance(self.space, self.a, self.b)

    def to_dict(self) -> dict:
        return {"space": {"kind": self.space.kind.value, "q": self.space.q,
                          "n": self.space.n, "w": self.space.w},
                "a": list(self.a), "b": list(self.b), "r": self.r, "i": self.i,
                "sample_count": self.sample_count, "seed": self.seed}


def sample_shell_point(spec: ShellSampleSpec, rng: np.random.Generator) -> Point:
    vec = sample_shell_vectors(spec.space, spec.space.to_vector(spec.a), spec.radius, 1, rng)
    return spec.space.from_vector(vec[0])


# -- ell statistics ------------------------------------------------------------

def _shard_sizes(total: int) -> list[int]:
    full, rest = divmod(total, SHARD_SIZE)
    return [SHARD_SIZE] * full + ([rest] if rest else [])


def ell_samples(spec: ShellSampleSpec, jobs: int = 1) -> np.ndarray:
    """Values of ell_{a,b} at spec.sample_count independent shell points."""
    space = spec.space
    a_vec, b_vec = space.to_vector(spec.a), space.to_vector(spec.b)
    if space.shell_size(spec.radius) == 0:
        raise EmptyShell(f"S(a, {spec.radius}) is empty in {space.label()}")

    def shard(args):
        s, m = args
        x = sample_shell_vectors(space, a_vec, spec.radius, m, shard_rng(spec.seed, s))
        return vector_distances(space, x, b_vec) - spec.radius

    work = list(enumerate(_shard_sizes(spec.sample_count)))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(shard, work))
    else:
        parts = [shard(w) for w in work]
    return np.concatenate(parts).astype(np.int64)


def tail_thresholds(k: int) -> list[int]:
    """Powers of two up to 2k."""
    out, t = [], 1
    while t <= max(2 * k, 1):
        out.append(t)
        t *= 2
    return out


@dataclass
class EllStatistics:
    mean: float
    variance: float
    min: int
    max: int
    tail_histogram: dict[int, int]
    sample_count: int
    seed: int
    value_counts: dict[int, int] = field(repr=False, default_factory=dict)
    spec: dict = field(repr=False, default_factory=dict)

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.sample_count)

    def tail_count(self, t: float) -> int:
        """Number of samples with |ell - mean| >= t, at any threshold."""
        return sum(c for v, c in self.value_counts.items() if abs(v - self.mean) >= t)

    def to_json(self) -> str:
        d = asdict(self)
        d["tail_histogram"] = {str(t): c for t, c in self.tail_histogram.items()}
        d["value_counts"] = {str(v): c for v, c in sorted(self.value_counts.items())}
        return json.dumps(d, sort_keys=True)


def summarize_ell(values: np.ndarray, k: int, seed: int, spec_dict: dict | None = None,
                  thresholds: list[int] | None = None) -> EllStatistics:
    values = np.asarray(values, dtype=np.int64)
    count = int(values.size)
    # integer sums are exact, so shard merge order cannot matter
    total = int(values.sum())
    total_sq = int(np.dot(values, values))
    mean = total / count
    var = (Fraction(total_sq) - Fraction(total) ** 2 / count) / max(count - 1, 1)
    uniq, counts = np.unique(values, return_counts=True)
    vc = {int(v): int(c) for v, c in zip(uniq, counts)}
    thresholds = thresholds if thresholds is not None else tail_thresholds(k)
    dev = np.abs(values - mean)
    tails = {t: int(np.count_nonzero(dev >= t)) for t in thresholds}
    return EllStatistics(mean=mean, variance=float(var), min=int(values.min()),
                         max=int(values.max()), tail_histogram=tails, sample_count=count,
                         seed=seed, value_counts=vc, spec=spec_dict or {})


def ell_statistics(spec: ShellSampleSpec, jobs: int = 1) -> EllStatistics:
    values = ell_samples(spec, jobs=jobs)
    return summarize_ell(values, spec.k, spec.seed, spec.to_dict())


# -- exact expectations ----------------------------------------------------------

@dataclass(frozen=True)
class EllExpectation:
    value: Fraction
    kind: str  # "exact" or "lower_bound"
    formula: str
    hypotheses_ok: bool = True
    note: str = ""


def exact_ell_expectation(space: SpaceSpec, r: int, k: int, i: int = 0,
                          eps: float | None = None) -> EllExpectation:
    """E[ell_{a,b}(x)] for x uniform on S(a, r - i), d(a, b) = k.

    Hamming and Johnson are exact closed forms. Permutations return the
    certified lower bound eps*k/2 (needs ``eps``); see
    :func:`permutation_ell_expectation` for the exact value.
    """
    rho = r - i
    n = space.n
    if not 0 <= rho <= space.diameter:
        raise ValueError(f"shell radius {rho} outside [0, {space.diameter}]")
    if space.kind is Kind.HAMMING:
        q = space.q
        delta = Fraction(rho, n)
        gamma = 1 - delta / (q - 1)
        ok = Fraction(r, n) < Fraction(q - 1, q)
        return EllExpectation(k * (gamma - delta), "exact", "k*(gamma - delta), "
                              "delta=(r-i)/n, gamma=1-delta/(q-1)", ok,
                              "" if ok else "r/n >= (q-1)/q")
    if space.kind is Kind.JOHNSON:
        w = space.w
        value = k * (Fraction(w - rho, w) - Fraction(rho, n - w))
        ok = Fraction(r, n) < Fraction(w * (n - w), n * n)
        return EllExpectation(value, "exact", "k*((w-rho)/w - rho/(n-w))", ok,
                              "" if ok else "r/n >= lambda(1-lambda)")
    if eps is None:
        raise ValueError("the permutation certificate needs eps")
    eps_f = Fraction(eps).limit_denominator(10**12)
    problems = []
    if r > (1 - eps_f) * n:
        problems.append("r > (1-eps)n")
    if k < 6 / eps_f:
        problems.append("k < 6/eps")
    if i > eps_f * k / 4:
        problems.append("i > eps*k/4")
    if problems:
        return EllExpectation(Fraction(0), "lower_bound", "eps*k/2", False, "; ".join(problems))
    return EllExpectation(eps_f * k / 2, "lower_bound", "eps*k/2 <= k(n-r+i)/n - 3", True)


def permutation_ell_expectation(n: int, rho: int, k: int) -> Fraction:
    """Exact E[ell] on S(id, rho) in S_n against a derangement b of [k].

    Positions outside [k] move with probability rho/n; a position j in [k]
    hits b(j) only if j and b(j) are both in the support and the derangement
    maps one to the other, probability rho/(n(n-1)). Summing gives
    k(n-1-rho)/(n-1).
    """
    if rho == 0:
        return Fraction(k)
    if rho == 1 or rho > n:
        raise EmptyShell(f"S(id, {rho}) is empty in S_{n}")
    return Fraction(k * (n - 1 - rho), n - 1)


def bruteforce_ell_expectation(space: SpaceSpec, a: Point, b: Point, rho: int) -> Fraction:
    """Mean of ell over the full shell S(a, rho), by enumeration."""
    total, count = 0, 0
    for x in enumerate_shell(space, a, rho):
        total += distance(space, x, b) - rho
        count += 1
    if not count:
        raise EmptyShell(f"S(a, {rho}) is empty")
    return Fraction(total, count)


# -- uniformity and Monte Carlo volumes -------------------------------------------

def shell_uniformity(space: SpaceSpec, center: Point, rho: int, samples: int,
                     seed: int) -> tuple[float, np.ndarray]:
    """Chi-square p-value of sampled shell points against uniform.

    Returns (p_value, observed counts in shell enumeration order).
    """
    shell = list(enumerate_shell(space, center, rho))
    vecs = np.array([space.to_vector(x) for x in shell], dtype=np.int64)
    base = 2 if space.kind is Kind.JOHNSON else space.q
    weights = base ** np.arange(space.n - 1, -1, -1, dtype=np.int64)
    keys = vecs @ weights
    order = np.argsort(keys)
    sorted_keys = keys[order]
    counts = np.zeros(len(shell), dtype=np.int64)
    c_vec = space.to_vector(center)
    for s, m in enumerate(_shard_sizes(samples)):
        x = sample_shell_vectors(space, c_vec, rho, m, shard_rng(seed, s))
        pos = np.searchsorted(sorted_keys, x.astype(np.int64) @ weights)
        if np.any(sorted_keys[np.minimum(pos, len(shell) - 1)] != x.astype(np.int64) @ weights):
            raise AssertionError("sampler produced a point outside the shell")
        counts += np.bincount(order[pos], minlength=len(shell))
    if len(shell) == 1:
        return 1.0, counts
    return float(stats.chisquare(counts).pvalue), counts


def derangement_acceptance(support: int, samples: int, seed: int) -> float:
    """Fraction of uniform shuffles of ``support`` elements accepted as derangements."""
    _, attempts = random_derangements(shard_rng(seed, 0), samples, support)
    return samples / attempts


@dataclass(frozen=True)
class VolumeEstimate:
    estimate: float
    stderr: float
    samples: int
    seed: int

    @property
    def interval(self) -> tuple[float, float]:
        return self.estimate - 3 * self.stderr, self.estimate + 3 * self.stderr


def estimate_intersection_volume(space: SpaceSpec, a: Point, b: Point, r: int,
                                 samples: int, seed: int) -> VolumeEstimate:
    """Monte Carlo |B(a,r) & B(b,r)| = vol(r) * P(d(x, b) <= r), x ~ B(a, r)."""
    vol = volume(space, r)
    shells = np.array([float(space.shell_size(rho)) for rho in range(r + 1)])
    probs = shells / shells.sum()
    a_vec, b_vec = space.to_vector(a), space.to_vector(b)
    hits = 0
    for s, m in enumerate(_shard_sizes(samples)):
        rng = shard_rng(seed, s)
        radii = rng.choice(r + 1, size=m, p=probs)
        for rho in np.unique(radii):
            cnt = int(np.count_nonzero(radii == rho))
            x = sample_shell_vectors(space, a_vec, int(rho), cnt, rng)
            hits += int(np.count_nonzero(vector_distances(space, x, b_vec) <= r))
    frac = hits / samples
    return VolumeEstimate(vol * frac, vol * math.sqrt(frac * (1 - frac) / samples),
                          samples, seed)


def tail_verdict(freq: float, bound: float, count: int, sigmas: float = 3.0) -> Verdict:
    sigma = math.sqrt(freq * (1 - freq) / count)
    return Verdict.PASS if freq <= bound + sigmas * sigma else Verdict.FAIL
