"""Discrete metric spaces: q-ary Hamming cube, Johnson slice, symmetric group.

Points are tuples:

* Hamming: ``(x_0, ..., x_{n-1})`` with symbols in ``range(q)``
* Johnson: sorted tuple of ``w`` distinct indices in ``range(n)``
* Permutation: image array ``(s(0), ..., s(n-1))`` of a bijection on ``range(n)``

Indices are 0-based throughout. Johnson radii are in Johnson units (half
the Hamming distance between indicator vectors).

For vectorised work every point also has a vector form (an ``n``-long int
row): the word itself, the 0/1 indicator of the subset, or the image array.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .exactcomb import binomial, derangements, multinomial

ENUMERATION_CAP = 10**7

Point = tuple


class BudgetExceeded(RuntimeError):
    """An enumeration or sampling budget would be exceeded."""


class Kind(str, Enum):
    HAMMING = "hamming"
    JOHNSON = "johnson"
    PERMUTATION = "permutation"


@dataclass(frozen=True)
class SpaceSpec:
    kind: Kind
    n: int
    q: int = 2
    w: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.kind is Kind.HAMMING and self.q < 2:
            raise ValueError(f"Hamming space needs q >= 2, got {self.q}")
        if self.kind is Kind.JOHNSON and not 0 < self.w < self.n:
            raise ValueError(f"Johnson slice needs 0 < w < n, got w={self.w}, n={self.n}")
        # normalise the ignored fields so equal spaces compare equal
        if self.kind is Kind.JOHNSON:
            object.__setattr__(self, "q", 2)
        elif self.kind is Kind.PERMUTATION:
            object.__setattr__(self, "q", self.n)
            object.__setattr__(self, "w", 0)
        else:
            object.__setattr__(self, "w", 0)

    @classmethod
    def hamming(cls, q: int, n: int) -> "SpaceSpec":
        return cls(Kind.HAMMING, n, q=q)

    @classmethod
    def johnson(cls, n: int, w: int) -> "SpaceSpec":
        return cls(Kind.JOHNSON, n, w=w)

    @classmethod
    def permutation(cls, n: int) -> "SpaceSpec":
        return cls(Kind.PERMUTATION, n)

    @property
    def size(self) -> int:
        if self.kind is Kind.HAMMING:
            return self.q**self.n
        if self.kind is Kind.JOHNSON:
            return binomial(self.n, self.w)
        return _factorial(self.n)

    @property
    def diameter(self) -> int:
        if self.kind is Kind.HAMMING:
            return self.n
        if self.kind is Kind.JOHNSON:
            return min(self.w, self.n - self.w)
        return self.n if self.n >= 2 else 0

    def shell_size(self, rho: int) -> int:
        """|S(a, rho)|, independent of the center."""
        if rho < 0 or rho > self.n:
            return 0
        if self.kind is Kind.HAMMING:
            return binomial(self.n, rho) * (self.q - 1) ** rho
        if self.kind is Kind.JOHNSON:
            return binomial(self.w, rho) * binomial(self.n - self.w, rho)
        return binomial(self.n, rho) * derangements(rho)

    def label(self) -> str:
        if self.kind is Kind.HAMMING:
            return f"hamming(q={self.q}, n={self.n})"
        if self.kind is Kind.JOHNSON:
            return f"johnson(n={self.n}, w={self.w})"
        return f"permutation(n={self.n})"

    # -- point conversions -------------------------------------------------

    def validate(self, x: Point) -> None:
        x = tuple(x)
        if self.kind is Kind.HAMMING:
            if len(x) != self.n or any(not 0 <= s < self.q for s in x):
                raise ValueError(f"{x!r} is not a word of {self.label()}")
        elif self.kind is Kind.JOHNSON:
            if (len(x) != self.w or len(set(x)) != self.w
                    or any(not 0 <= s < self.n for s in x)):
                raise ValueError(f"{x!r} is not a {self.w}-subset of range({self.n})")
        elif sorted(x) != list(range(self.n)):
            raise ValueError(f"{x!r} is not a permutation of range({self.n})")

    def to_vector(self, x: Point) -> np.ndarray:
        self.validate(x)
        if self.kind is Kind.JOHNSON:
            v = np.zeros(self.n, dtype=np.int16)
            v[list(x)] = 1
            return v
        return np.asarray(x, dtype=np.int16)

    def from_vector(self, v: Sequence[int]) -> Point:
        if self.kind is Kind.JOHNSON:
            return tuple(int(j) for j in np.flatnonzero(np.asarray(v)))
        return tuple(int(s) for s in v)

    def render(self, x: Point) -> str:
        if self.kind is Kind.HAMMING and self.q <= 10:
            return "".join(str(s) for s in x)
        return " ".join(str(s) for s in x)

    # -- canonical centers -------------------------------------------------

    def canonical_center(self) -> Point:
        if self.kind is Kind.HAMMING:
            return (0,) * self.n
        if self.kind is Kind.JOHNSON:
            return tuple(range(self.w))
        return tuple(range(self.n))

    def canonical_pair(self, k: int) -> tuple[Point, Point]:
        """Two points at distance ``k`` (a fixed, reproducible choice).

        Hamming: 0^n and 1^k 0^(n-k). Johnson: {0..w-1} and the set obtained by
        dropping its first k elements and adding {w..w+k-1}. Permutation: the
        identity and the k-cycle (0 1 ... k-1).
        """
        if not 0 <= k <= self.diameter:
            raise ValueError(f"distance {k} is not attained in {self.label()}")
        a = self.canonical_center()
        if self.kind is Kind.HAMMING:
            return a, (1,) * k + (0,) * (self.n - k)
        if self.kind is Kind.JOHNSON:
            return a, tuple(range(k, self.w + k))
        if k == 1:
            raise ValueError("no two permutations are at Hamming distance 1")
        b = list(range(self.n))
        for i in range(k):
            b[i] = (i + 1) % k
        return a, tuple(b)


def _factorial(n: int) -> int:
    out = 1
    for j in range(2, n + 1):
        out *= j
    return out


# -- distances -------------------------------------------------------------

def distance(space: SpaceSpec, x: Point, y: Point) -> int:
    space.validate(x)
    space.validate(y)
    if space.kind is Kind.JOHNSON:
        return space.w - len(set(x) & set(y))
    return sum(1 for s, t in zip(x, y) if s != t)


def vector_distances(space: SpaceSpec, vecs: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Distances from every row of ``vecs`` to a single vector ``ref``."""
    mism = np.count_nonzero(vecs != ref, axis=-1)
    if space.kind is Kind.JOHNSON:
        return mism // 2
    return mism


# -- volumes ---------------------------------------------------------------

@dataclass(frozen=True)
class VolumeProfile:
    space: SpaceSpec
    radius: int
    volume: int
    shell_volumes: tuple[int, ...] = field(repr=False)


def ball_volume(space: SpaceSpec, r: int) -> VolumeProfile:
    if not 0 <= r <= space.diameter:
        raise ValueError(f"radius {r} outside [0, {space.diameter}] for {space.label()}")
    shells = tuple(space.shell_size(rho) for rho in range(r + 1))
    return VolumeProfile(space, r, sum(shells), shells)


def volume(space: SpaceSpec, r: int) -> int:
    """vol(r), clamping r to [-1, diameter] (vol(-1) = 0)."""
    if r < 0:
        return 0
    return sum(space.shell_size(rho) for rho in range(min(r, space.diameter) + 1))


def hamming_intersection_volume(q: int, n: int, r: int, k: int) -> int:
    """|B(a, r) & B(b, r)| in [q]^n for centers at Hamming distance k.

    Splits a word by the k coordinates where the centers differ (i agree with
    a, j agree with b, the rest take one of the q - 2 other symbols) and the
    n - k coordinates where they agree (t of them moved off the common value).
    """
    if q < 2 or not 0 <= r <= n or not 0 <= k <= n:
        raise ValueError(f"parameters out of range: q={q}, n={n}, r={r}, k={k}")
    if k > 2 * r:
        return 0
    m = n - k
    prefix = []
    acc = 0
    for t in range(m + 1):
        acc += binomial(m, t) * (q - 1) ** t
        prefix.append(acc)
    total = 0
    for i in range(k + 1):
        for j in range(k - i + 1):
            t_max = min(m, r - k + i, r - k + j)
            if t_max < 0:
                continue
            rest = k - i - j
            if q == 2 and rest:
                continue
            total += multinomial(i, j, rest) * (q - 2) ** rest * prefix[t_max]
    return total


def johnson_intersection_volume(n: int, w: int, r: int, k: int) -> int:
    """|B(a, r) & B(b, r)| in the Johnson slice for centers at distance k.

    The ground set splits into a&b (w - k), a-b (k), b-a (k) and the outside
    (n - w - k); a point takes x1, x2, x3, x4 elements from them. Its
    distances are w - x1 - x2 to a and w - x1 - x3 to b.
    """
    if not 0 < w < n or not 0 <= k <= min(w, n - w) or r < 0:
        raise ValueError(f"parameters out of range: n={n}, w={w}, r={r}, k={k}")
    common, out = w - k, n - w - k
    total = 0
    for x1 in range(common + 1):
        c1 = binomial(common, x1)
        for x2 in range(min(k, w - x1) + 1):
            if w - x1 - x2 > r:
                continue
            c2 = c1 * binomial(k, x2)
            for x3 in range(min(k, w - x1 - x2) + 1):
                if w - x1 - x3 > r:
                    continue
                x4 = w - x1 - x2 - x3
                total += c2 * binomial(k, x3) * binomial(out, x4)
    return total


def intersection_volume(space: SpaceSpec, r: int, k: int, cap: int = ENUMERATION_CAP) -> int:
    """Exact intersection volume for centers at distance k.

    Closed forms for Hamming and Johnson; enumeration for permutations (with
    the canonical identity / k-cycle pair).
    """
    if space.kind is Kind.HAMMING:
        return hamming_intersection_volume(space.q, space.n, r, k)
    if space.kind is Kind.JOHNSON:
        return johnson_intersection_volume(space.n, space.w, r, k)
    a, b = space.canonical_pair(k)
    return intersection_volume_bruteforce(space, a, b, r, cap=cap)


# -- enumeration -----------------------------------------------------------

def _check_cap(count: int, cap: int, what: str) -> None:
    if count > cap:
        raise BudgetExceeded(f"{what} has {count} points, above the enumeration cap {cap}")


@lru_cache(maxsize=8)
def _all_vectors(space: SpaceSpec) -> np.ndarray:
    n = space.n
    if space.kind is Kind.HAMMING:
        q = space.q
        idx = np.arange(q**n, dtype=np.int64)
        out = np.empty((q**n, n), dtype=np.int16)
        for j in range(n - 1, -1, -1):
            out[:, j] = idx % q
            idx //= q
    elif space.kind is Kind.JOHNSON:
        combos = np.array(list(itertools.combinations(range(n), space.w)), dtype=np.int64)
        out = np.zeros((len(combos), n), dtype=np.int16)
        np.put_along_axis(out, combos, 1, axis=1)
    else:
        out = np.array(list(itertools.permutations(range(n))), dtype=np.int16)
    out.setflags(write=False)
    return out


def all_vectors(space: SpaceSpec, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Every point in vector form, rows in enumeration order."""
    _check_cap(space.size, cap, space.label())
    return _all_vectors(space)


def enumerate_points(space: SpaceSpec, cap: int = ENUMERATION_CAP) -> Iterator[Point]:
    for v in all_vectors(space, cap):
        yield space.from_vector(v)


def intersection_volume_bruteforce(space: SpaceSpec, a: Point, b: Point, r: int,
                                   cap: int = ENUMERATION_CAP) -> int:
    """Count points within distance r of both a and b by full enumeration."""
    vecs = all_vectors(space, cap)
    da = vector_distances(space, vecs, space.to_vector(a))
    db = vector_distances(space, vecs, space.to_vector(b))
    return int(np.count_nonzero(np.maximum(da, db) <= r))


def intersection_profile_bruteforce(space: SpaceSpec, a: Point, b: Point,
                                    cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Brute-force intersection volume for every radius 0..diameter at once."""
    vecs = all_vectors(space, cap)
    da = vector_distances(space, vecs, space.to_vector(a))
    db = vector_distances(space, vecs, space.to_vector(b))
    hist = np.bincount(np.maximum(da, db), minlength=space.diameter + 1)
    return np.cumsum(hist)[: space.diameter + 1]


def enumerate_shell(space: SpaceSpec, center: Point, radius: int,
                    cap: int = ENUMERATION_CAP) -> Iterator[Point]:
    """Yield every point at distance exactly ``radius`` from ``center``.

    Points come out in enumeration order (lexicographic). The shell is built
    directly, so large spaces with small shells are fine.
    """
    space.validate(center)
    size = space.shell_size(radius)
    _check_cap(size, cap, f"shell of radius {radius} in {space.label()}")
    if size == 0:
        return
    n = space.n
    out: list[Point] = []
    if space.kind is Kind.HAMMING:
        for support in itertools.combinations(range(n), radius):
            for shifts in itertools.product(range(1, space.q), repeat=radius):
                x = list(center)
                for pos, s in zip(support, shifts):
                    x[pos] = (x[pos] + s) % space.q
                out.append(tuple(x))
    elif space.kind is Kind.JOHNSON:
        inside = set(center)
        outside = [j for j in range(n) if j not in inside]
        for drop in itertools.combinations(center, radius):
            kept = inside.difference(drop)
            for add in itertools.combinations(outside, radius):
                out.append(tuple(sorted(kept.union(add))))
    else:
        for support in itertools.combinations(range(n), radius):
            for img in itertools.permutations(support):
                if any(s == t for s, t in zip(support, img)):
                    continue
                # x = center o sigma, sigma moving exactly the support
                x = list(center)
                for s, t in zip(support, img):
                    x[s] = center[t]
                out.append(tuple(x))
    out.sort()
    yield from out


# -- implicit adjacency helpers --------------------------------------------

def ball_offsets(space: SpaceSpec, r: int, include_center: bool = False,
                 cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Vector forms of B(center, r) around the canonical center."""
    center = space.canonical_center()
    rows = []
    start = 0 if include_center else 1
    for rho in range(start, min(r, space.diameter) + 1):
        rows.extend(space.to_vector(x) for x in enumerate_shell(space, center, rho, cap))
    if not rows:
        return np.zeros((0, space.n), dtype=np.int16)
    return np.array(rows, dtype=np.int16)


def translate(space: SpaceSpec, centers: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Move the canonical ball pattern ``offsets`` onto each row of ``centers``.

    Uses an isometry taking the canonical center to each given center:
    translation mod q (Hamming), composition x o s (permutations), and a
    relabelling of the ground set (Johnson). Result shape (m, P, n).
    """
    centers = np.asarray(centers)
    if space.kind is Kind.HAMMING:
        return (centers[:, None, :] + offsets[None, :, :]) % space.q
    if space.kind is Kind.PERMUTATION:
        return centers[:, offsets.astype(np.intp)]
    # Johnson: canonical center is {0..w-1}; send it to the ones of each row
    relabel = np.argsort(-centers, axis=1, kind="stable")  # ones first, then zeros
    inverse = np.argsort(relabel, axis=1)
    m, n = centers.shape
    out = np.empty((m, offsets.shape[0], n), dtype=offsets.dtype)
    for row in range(m):
        out[row] = offsets[:, inverse[row]]
    return out


class PointIndex:
    """Maps vector forms to enumeration ranks (vectorised)."""

    def __init__(self, space: SpaceSpec, vecs: np.ndarray):
        self.space = space
        self.base = 2 if space.kind is Kind.JOHNSON else space.q
        if self.base ** space.n >= 2**63:
            raise BudgetExceeded(f"{space.label()} too large to index with 64-bit keys")
        self._weights = self.base ** np.arange(space.n - 1, -1, -1, dtype=np.int64)
        keys = self.encode(vecs)
        self._order = np.argsort(keys, kind="stable")
        self._sorted = keys[self._order]

    def encode(self, vecs: np.ndarray) -> np.ndarray:
        return np.asarray(vecs, dtype=np.int64) @ self._weights

    def rank(self, vecs: np.ndarray) -> np.ndarray:
        keys = self.encode(vecs)
        pos = np.searchsorted(self._sorted, keys)
        pos = np.minimum(pos, len(self._sorted) - 1)
        if not np.array_equal(self._sorted[pos], keys):
            raise KeyError("vector not in space")
        return self._order[pos]


# -- CSV export ------------------------------------------------------------

VOLUME_COLUMNS = ("kind", "q", "n", "w", "r", "k", "volume",
                  "intersection_volume", "ratio_num", "ratio_den")


def volume_table_row(space: SpaceSpec, r: int, k: int, cap: int = ENUMERATION_CAP) -> dict:
    vol = ball_volume(space, r).volume
    inter = intersection_volume(space, r, k, cap=cap)
    ratio = Fraction(inter, vol)
    return {
        "kind": space.kind.value, "q": space.q if space.kind is Kind.HAMMING else "",
        "n": space.n, "w": space.w if space.kind is Kind.JOHNSON else "",
        "r": r, "k": k, "volume": vol, "intersection_volume": inter,
        "ratio_num": ratio.numerator, "ratio_den": ratio.denominator,
    }


def volume_table_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=VOLUME_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
