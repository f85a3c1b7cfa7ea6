"""Distance graphs, local sparsity audits, code construction, hard-core model.

The ball graph joins two distinct points at distance <= r; its independent
sets are exactly the codes with minimum distance > r. Adjacency is implicit:
neighbors of a vertex are the canonical ball pattern moved by an isometry
(see :func:`intervol.spaces.translate`), so large Hamming graphs never need
their edge lists in memory.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import lambertw

from .spaces import (BudgetExceeded, Kind, Point, PointIndex, SpaceSpec, all_vectors,
                     ball_offsets, translate, vector_distances, volume)

GRAPH_CAP = 10**6
EXACT_MIS_CAP = 60
EXACT_COUNT_CAP = 40
_CHUNK_ENTRIES = 1 << 23


@dataclass
class BallGraph:
    space: SpaceSpec
    r: int
    N: int
    D: int
    min_degree: int
    vectors: np.ndarray = field(repr=False)
    offsets: np.ndarray = field(repr=False)
    index: PointIndex = field(repr=False)
    _xor_masks: np.ndarray | None = field(default=None, repr=False)

    def point(self, v: int) -> Point:
        return self.space.from_vector(self.vectors[v])

    def rank(self, x: Point) -> int:
        return int(self.index.rank(self.space.to_vector(x)[None, :])[0])

    def neighbors_many(self, vs) -> np.ndarray:
        """Neighbor ranks of each vertex in ``vs``, shape (len(vs), D), rows unsorted."""
        vs = np.asarray(vs, dtype=np.int64)
        if self._xor_masks is not None:
            return vs[:, None] ^ self._xor_masks[None, :]
        if self.offsets.shape[0] == 0:
            return np.zeros((vs.size, 0), dtype=np.int64)
        per_vertex = self.offsets.shape[0] * self.space.n
        step = max(1, _CHUNK_ENTRIES // per_vertex)
        out = np.empty((vs.size, self.offsets.shape[0]), dtype=np.int64)
        for s in range(0, vs.size, step):
            block = translate(self.space, self.vectors[vs[s:s + step]], self.offsets)
            m = block.shape[0]
            out[s:s + m] = self.index.rank(block.reshape(-1, self.space.n)).reshape(m, -1)
        return out

    def neighbors(self, v: int) -> np.ndarray:
        return np.sort(self.neighbors_many([v])[0])

    def adjacency_lists(self) -> list[list[int]]:
        if self.N * max(self.D, 1) > 5 * 10**7:
            raise BudgetExceeded("graph too large to materialise adjacency lists")
        rows = self.neighbors_many(np.arange(self.N))
        return [sorted(int(u) for u in row) for row in rows]


def build_ball_graph(space: SpaceSpec, r: int, cap: int = GRAPH_CAP,
                     spot_checks: int = 4) -> BallGraph:
    """Ball graph on every point of ``space``; edges at distance 1..r.

    Degrees are checked by direct distance scans at a few vertices (the first,
    the last and evenly spaced ones) rather than assumed from homogeneity.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    vecs = all_vectors(space, cap)
    n_vertices = vecs.shape[0]
    offsets = ball_offsets(space, r)
    index = PointIndex(space, vecs)
    masks = None
    if space.kind is Kind.HAMMING and space.q == 2:
        masks = index.encode(offsets)
    g = BallGraph(space, r, n_vertices, offsets.shape[0], offsets.shape[0], vecs, offsets,
                  index, masks)
    probes = np.unique(np.linspace(0, n_vertices - 1, max(spot_checks, 2)).astype(np.int64))
    degrees = []
    for v in probes:
        d = vector_distances(space, vecs, vecs[v])
        direct = int(np.count_nonzero((d <= r) & (d > 0)))
        via_pattern = g.neighbors(int(v))
        if direct != via_pattern.size or not np.array_equal(
                np.flatnonzero((d <= r) & (d > 0)), via_pattern):
            raise AssertionError(f"neighbor pattern disagrees with distances at vertex {v}")
        degrees.append(direct)
    g.D = max(degrees)
    g.min_degree = min(degrees)
    return g


# -- sparsity audit ------------------------------------------------------------

@dataclass
class SparsityAudit:
    vertex: Point
    t: int
    size_B: int
    size_I: int
    max_deg_in_B: int
    implied_K: float
    gamma_edge_count: int
    D: int

    @property
    def edge_bound_holds(self) -> bool:
        """2 e(Gamma) <= |B| D/K + |I| |Gamma|."""
        lhs = 2 * self.gamma_edge_count
        rhs = self.size_B * (self.D / self.implied_K) + self.size_I * (self.size_B + self.size_I)
        return lhs <= rhs + 1e-9

    def to_dict(self) -> dict:
        return {"vertex": list(self.vertex), "t": self.t, "size_B": self.size_B,
                "size_I": self.size_I, "max_deg_in_B": self.max_deg_in_B,
                "implied_K": self.implied_K, "gamma_edge_count": self.gamma_edge_count,
                "D": self.D, "edge_bound_holds": self.edge_bound_holds}


def audit_sparsity(graph: BallGraph, vertex: Point | int, t: int) -> SparsityAudit:
    """Split the neighborhood of ``vertex`` at distance r - t and measure it.

    I is the punctured ball of radius r - t, B the rest of the neighborhood.
    Degrees are taken inside the induced neighborhood subgraph.
    """
    if not 0 <= t < graph.r:
        raise ValueError(f"t must satisfy 0 <= t < r = {graph.r}")
    v = vertex if isinstance(vertex, (int, np.integer)) else graph.rank(vertex)
    gamma = graph.neighbors(int(v))
    dist = vector_distances(graph.space, graph.vectors[gamma], graph.vectors[v])
    in_I = dist <= graph.r - t
    nbrs = graph.neighbors_many(gamma)
    member = np.zeros(graph.N, dtype=bool)
    member[gamma] = True
    deg_gamma = member[nbrs].sum(axis=1) if gamma.size else np.zeros(0, dtype=np.int64)
    size_I = int(np.count_nonzero(in_I))
    size_B = int(gamma.size - size_I)
    max_b = int(deg_gamma[~in_I].max()) if size_B else 0
    implied = min(graph.D / max(max_b, 1), graph.D / max(size_I, 1)) if graph.D else math.inf
    return SparsityAudit(graph.point(int(v)), t, size_B, size_I, max_b, implied,
                         int(deg_gamma.sum()) // 2, graph.D)


def sparse_graph_bounds(N: int, D: int, K: float) -> dict:
    """Leading terms of the locally-sparse independence and counting bounds."""
    logk = math.log(K) if K > 1 else 0.0
    return {"independence": N / D * logk if D else float(N),
            "log_count": N / D * logk**2 / 8 if D else float(N) * math.log(2),
            "lambda0": logk / D if D else math.nan,
            "lambda1": math.sqrt(K) / D if D else math.nan}


def occupancy_lower_bound(N: int, D: int, lam: float) -> float:
    """N * lam/(1+lam) * W(D log(1+lam)) / (D log(1+lam)), without the 1+o(1)."""
    z = D * math.log1p(lam)
    return N * lam / (1 + lam) * float(lambertw(z).real) / z


# -- code construction ------------------------------------------------------------

@dataclass
class CodeResult:
    codewords: list[Point]
    size: int
    method: str
    sphere_covering_bound: float
    improvement_factor: float
    ranks: list[int] = field(default_factory=list, repr=False)

    def render(self, space: SpaceSpec) -> str:
        return "".join(space.render(c) + "\n" for c in self.codewords)


def min_pairwise_distance(space: SpaceSpec, codewords: Sequence[Point]) -> int:
    """Smallest distance between distinct codewords (diameter + 1 if fewer than 2)."""
    if len(codewords) < 2:
        return space.diameter + 1
    vecs = np.array([space.to_vector(c) for c in codewords])
    best = space.diameter + 1
    for j in range(len(vecs) - 1):
        d = vector_distances(space, vecs[j + 1:], vecs[j])
        best = min(best, int(d.min()))
    return best


def _greedy_first_fit(graph: BallGraph, order: np.ndarray) -> list[int]:
    blocked = np.zeros(graph.N, dtype=bool)
    chosen = []
    pos = 0
    while pos < order.size:
        free = np.flatnonzero(~blocked[order[pos:]])
        if free.size == 0:
            break
        pos += int(free[0])
        v = int(order[pos])
        chosen.append(v)
        blocked[v] = True
        blocked[graph.neighbors_many([v])[0]] = True
        pos += 1
    return chosen


def _greedy_min_degree(graph: BallGraph, rng: np.random.Generator | None) -> list[int]:
    alive = np.ones(graph.N, dtype=bool)
    deg = np.full(graph.N, graph.D, dtype=np.int64)
    big = np.iinfo(np.int64).max
    chosen = []
    while True:
        masked = np.where(alive, deg, big)
        low = masked.min()
        if low == big:
            break
        if rng is None:
            v = int(np.argmin(masked))
        else:
            v = int(rng.choice(np.flatnonzero(masked == low)))
        chosen.append(v)
        nb = graph.neighbors_many([v])[0]
        removed = np.concatenate(([v], nb[alive[nb]]))
        alive[removed] = False
        # removed vertices lose their edges; only alive degrees matter
        for s in range(0, removed.size, 4096):
            flat = graph.neighbors_many(removed[s:s + 4096]).ravel()
            deg -= np.bincount(flat, minlength=graph.N)
    return chosen


def maximum_independent_set(adj: Sequence[Sequence[int]]) -> list[int]:
    """Exact maximum independent set by branch and bound on bitmasks."""
    n = len(adj)
    nbr = [0] * n
    for v, row in enumerate(adj):
        for u in row:
            nbr[v] |= 1 << u
    memo: dict[int, tuple[int, int]] = {}

    def component(mask: int) -> int:
        seed = mask & -mask
        comp = frontier = seed
        while frontier:
            low = frontier & -frontier
            frontier ^= low
            new = nbr[low.bit_length() - 1] & mask & ~comp
            comp |= new
            frontier |= new
        return comp

    def solve(mask: int) -> tuple[int, int]:
        if mask == 0:
            return 0, 0
        if mask in memo:
            return memo[mask]
        comp = component(mask)
        if comp != mask:
            s1, c1 = solve(comp)
            s2, c2 = solve(mask ^ comp)
            res = (s1 + s2, c1 | c2)
            memo[mask] = res
            return res
        best_v, best_d, low_v, low_d = -1, -1, -1, n + 1
        m = mask
        while m:
            bit = m & -m
            m ^= bit
            v = bit.bit_length() - 1
            d = bin(nbr[v] & mask).count("1")
            if d > best_d:
                best_v, best_d = v, d
            if d < low_d:
                low_v, low_d = v, d
        if low_d <= 1:
            # a vertex of degree <= 1 is always in some maximum independent set
            s, c = solve(mask & ~nbr[low_v] & ~(1 << low_v))
            res = (s + 1, c | (1 << low_v))
        else:
            s_out, c_out = solve(mask & ~(1 << best_v))
            s_in, c_in = solve(mask & ~nbr[best_v] & ~(1 << best_v))
            res = (s_in + 1, c_in | (1 << best_v)) if s_in + 1 >= s_out else (s_out, c_out)
        memo[mask] = res
        return res

    _, chosen = solve((1 << n) - 1)
    return [v for v in range(n) if chosen >> v & 1]


METHODS = ("greedy_maximal", "degeneracy_order", "exact_branch_bound")


def construct_code(graph: BallGraph, method: str = "greedy_maximal",
                   seed: int | None = None) -> CodeResult:
    """An independent set of the ball graph, i.e. a code with distance > r.

    greedy_maximal: first fit in enumeration order (a seed shuffles the order).
    degeneracy_order: repeatedly take a vertex of minimum remaining degree,
    ties broken by rank (or at random with a seed).
    exact_branch_bound: a maximum independent set, N <= 60 only.
    """
    rng = np.random.default_rng(seed) if seed is not None else None
    if method == "greedy_maximal":
        order = np.arange(graph.N) if rng is None else rng.permutation(graph.N)
        chosen = _greedy_first_fit(graph, order)
    elif method == "degeneracy_order":
        chosen = _greedy_min_degree(graph, rng)
    elif method == "exact_branch_bound":
        if graph.N > EXACT_MIS_CAP:
            raise BudgetExceeded(f"exact search limited to {EXACT_MIS_CAP} vertices, got {graph.N}")
        chosen = maximum_independent_set(graph.adjacency_lists())
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    chosen = sorted(chosen)
    scb = graph.N / volume(graph.space, graph.r)
    return CodeResult([graph.point(v) for v in chosen], len(chosen), method, scb,
                      len(chosen) / scb, chosen)


COMPARISON_COLUMNS = ("n", "N", "vol", "sphereCoveringBound", "constructedSize",
                      "improvementFactor")


def comparison_row(graph: BallGraph, result: CodeResult) -> dict:
    return {"n": graph.space.n, "N": graph.N, "vol": volume(graph.space, graph.r),
            "sphereCoveringBound": f"{result.sphere_covering_bound:.6f}",
            "constructedSize": result.size,
            "improvementFactor": f"{result.improvement_factor:.6f}"}


def comparison_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=COMPARISON_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


# -- hard-core model -----------------------------------------------------------------

def _as_adjacency(graph) -> list[list[int]]:
    if isinstance(graph, BallGraph):
        return graph.adjacency_lists()
    return [list(row) for row in graph]


def independence_polynomial(graph) -> list[int]:
    """Coefficients c_j = number of independent sets of size j (N <= 40)."""
    adj = _as_adjacency(graph)
    n = len(adj)
    if n > EXACT_COUNT_CAP:
        raise BudgetExceeded(f"exact counting limited to {EXACT_COUNT_CAP} vertices, got {n}")
    nbr = [0] * n
    for v, row in enumerate(adj):
        for u in row:
            nbr[v] |= 1 << u
    memo: dict[int, list[int]] = {0: [1]}

    def mul(p, q):
        out = [0] * (len(p) + len(q) - 1)
        for i, a in enumerate(p):
            for j, b in enumerate(q):
                out[i + j] += a * b
        return out

    def add(p, q):
        if len(p) < len(q):
            p, q = q, p
        out = list(p)
        for j, b in enumerate(q):
            out[j] += b
        return out

    def poly(mask: int) -> list[int]:
        if mask in memo:
            return memo[mask]
        seed = mask & -mask
        comp = frontier = seed
        while frontier:
            low = frontier & -frontier
            frontier ^= low
            new = nbr[low.bit_length() - 1] & mask & ~comp
            comp |= new
            frontier |= new
        if comp != mask:
            res = mul(poly(comp), poly(mask ^ comp))
        else:
            best_v, best_d = -1, -1
            m = mask
            while m:
                bit = m & -m
                m ^= bit
                v = bit.bit_length() - 1
                d = bin(nbr[v] & mask).count("1")
                if d > best_d:
                    best_v, best_d = v, d
            without = poly(mask & ~(1 << best_v))
            with_v = [0] + poly(mask & ~nbr[best_v] & ~(1 << best_v))
            res = add(without, with_v)
        memo[mask] = res
        return res

    return poly((1 << n) - 1)


def count_independent_sets_exact(graph, lam: float = 1.0) -> tuple[float, float]:
    """(P_G(lam), log of the number of independent sets)."""
    coeffs = independence_polynomial(graph)
    z = math.fsum(c * lam**j for j, c in enumerate(coeffs))
    return z, math.log(sum(coeffs))


def exact_occupancy(graph, lam: float) -> float:
    """lam P'(lam) / P(lam), the mean independent-set size under the hard-core model."""
    coeffs = independence_polynomial(graph)
    z = math.fsum(c * lam**j for j, c in enumerate(coeffs))
    return math.fsum(j * c * lam**j for j, c in enumerate(coeffs)) / z


@dataclass(frozen=True)
class HardcoreEstimate:
    mean_occupancy: float
    stderr: float
    steps: int
    burn_in: int
    batches: int
    seed: int


def hardcore_estimate(graph, lam: float, steps: int, seed: int = 0,
                      batches: int = 20) -> HardcoreEstimate:
    """Heat-bath Glauber dynamics for the hard-core model at fugacity ``lam``.

    Each step picks a uniform vertex; it becomes occupied with probability
    lam/(1+lam) if no neighbor is occupied, and unoccupied otherwise. The
    first steps/10 steps are discarded; the error is from batch means.
    """
    if lam <= 0:
        raise ValueError("fugacity must be positive")
    adj = _as_adjacency(graph)
    n = len(adj)
    if steps < 100 * n:
        raise ValueError(f"need at least 100*N = {100 * n} steps, got {steps}")
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, n, size=steps).tolist()
    coins = (rng.random(steps) < lam / (1 + lam)).tolist()
    occupied = [False] * n
    blocked = [0] * n
    size = 0
    burn = steps // 10
    trace = np.empty(steps - burn, dtype=np.int64)
    for step in range(steps):
        v = picks[step]
        if coins[step]:
            if not occupied[v] and blocked[v] == 0:
                occupied[v] = True
                size += 1
                for u in adj[v]:
                    blocked[u] += 1
        elif occupied[v]:
            occupied[v] = False
            size -= 1
            for u in adj[v]:
                blocked[u] -= 1
        if step >= burn:
            trace[step - burn] = size
    usable = (trace.size // batches) * batches
    means = trace[:usable].reshape(batches, -1).mean(axis=1)
    return HardcoreEstimate(float(trace.mean()), float(means.std(ddof=1) / math.sqrt(batches)),
                            steps, burn, batches, seed)
