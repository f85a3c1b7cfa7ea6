"""Spherical caps: normalized areas, the constants of the cap-intersection
argument, and a Monte Carlo check of the average cap-intersection bound.

All angles are in radians.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .sampling import SHARD_SIZE, shard_rng

QUAD_RTOL = 1e-10
MAX_MC_DIMENSION = 100
MIN_MC_SAMPLES = 10**4


class QuadratureError(RuntimeError):
    pass


class SamplerStall(RuntimeError):
    pass


@dataclass(frozen=True)
class CapParams:
    n: int
    theta: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"ambient dimension must be >= 2, got {self.n}")
        _check_theta(self.theta)


def _check_theta(theta: float) -> None:
    if not 0.0 < theta < math.pi / 2:
        raise ValueError(f"theta must lie strictly inside (0, pi/2) radians, got {theta}")


def _log_sphere_integral(n: int) -> float:
    """log of the integral of sin^{n-2} over [0, pi]."""
    return 0.5 * math.log(math.pi) + gammaln((n - 1) / 2) - gammaln(n / 2)


def log_cap_area(params: CapParams) -> float:
    """log s_n(theta), where s_n(theta) is the normalized area of a theta-cap.

    Integrates the latitude density sin^{n-2} on [0, theta], rescaled by its
    value at theta so large n does not underflow.
    """
    n, theta = params.n, params.theta
    if n == 2:
        return math.log(theta / math.pi)
    m = n - 2
    log_top = m * math.log(math.sin(theta))

    def f(phi: float) -> float:
        s = math.sin(phi)
        return 0.0 if s <= 0.0 else math.exp(m * (math.log(s)) - log_top)

    # the mass sits within a few multiples of tan(theta)/m below theta
    width = math.tan(theta) / m
    breaks = sorted({max(0.0, theta - j * width) for j in (1, 4, 16, 64)} - {0.0, theta})
    val, err = integrate.quad(f, 0.0, theta, points=breaks or None, epsabs=0.0,
                              epsrel=1e-13, limit=400)
    if not val > 0 or err > QUAD_RTOL * val:
        raise QuadratureError(f"cap_area quadrature error {err:.3g} on value {val:.3g}")
    return math.log(val) + log_top - _log_sphere_integral(n)


def cap_area(params: CapParams) -> float:
    """s_n(theta); underflows to 0.0 once it drops below the double range."""
    return math.exp(log_cap_area(params))


def log_asymptotic_cap_area(n: int, theta: float) -> float:
    """log of sin^{n-1}(theta) / (sqrt(2 pi n) cos theta), the leading large-n term."""
    return ((n - 1) * math.log(math.sin(theta)) - 0.5 * math.log(2 * math.pi * n)
            - math.log(math.cos(theta)))


def asymptotic_ratio(n: int, theta: float) -> float:
    """s_n(theta) over its leading large-n term."""
    return math.exp(log_cap_area(CapParams(n, theta)) - log_asymptotic_cap_area(n, theta))


@dataclass(frozen=True)
class CapConstants:
    theta: float
    q_theta: float
    c_theta: float
    gklp_constant: float


def q_theta(theta: float) -> float:
    """Angular radius of the smallest cap holding the lens of two theta-caps at angle theta."""
    _check_theta(theta)
    c = math.cos(theta)
    return math.asin(math.sqrt((c - 1) ** 2 * (1 + 2 * c)) / math.sin(theta))


def spherical_constants(theta: float) -> CapConstants:
    _check_theta(theta)
    c = math.cos(theta)
    s = math.sin(theta)
    c_theta = math.log(s * s / math.sqrt((1 - c) ** 2 * (1 + 2 * c)))
    gklp = math.log(s / (math.sqrt(2) * math.sin(theta / 2)))
    return CapConstants(theta, q_theta(theta), c_theta, gklp)


@dataclass(frozen=True)
class SphericalBounds:
    n: int
    theta: float
    s_theta: float
    q_theta: float
    c_theta: float
    gklp_constant: float
    covering_bound: float
    jjp_bound: float
    gklp_bound: float

    def to_dict(self) -> dict:
        return asdict(self)


def bound_table(n: int, theta: float) -> SphericalBounds:
    """Covering, c_theta-improved and GKLP-improved lower bounds on A(n, theta)."""
    log_s = log_cap_area(CapParams(n, theta))
    s = math.exp(log_s)
    k = spherical_constants(theta)
    cover = math.exp(-log_s) if -log_s < 709 else math.inf
    return SphericalBounds(n, theta, s, k.q_theta, k.c_theta, k.gklp_constant, cover,
                           k.c_theta * n * cover, k.gklp_constant * n * cover)


BOUND_COLUMNS = ("n", "theta", "s_theta", "q_theta", "c_theta", "gklp", "covering", "jjp",
                 "gklp_bound")


def bound_table_csv(rows: list[SphericalBounds]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BOUND_COLUMNS)
    for b in rows:
        writer.writerow([b.n, f"{b.theta:.12g}", f"{b.s_theta:.12g}", f"{b.q_theta:.12g}",
                         f"{b.c_theta:.12g}", f"{b.gklp_constant:.12g}",
                         f"{b.covering_bound:.12g}", f"{b.jjp_bound:.12g}",
                         f"{b.gklp_bound:.12g}"])
    return buf.getvalue()


# -- sampling in a cap ------------------------------------------------------------

def _unit_rows(rng: np.random.Generator, m: int, dim: int) -> np.ndarray:
    g = rng.standard_normal((m, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_cap(rng: np.random.Generator, n: int, theta: float, m: int,
               max_rounds: int = 1000) -> np.ndarray:
    """``m`` uniform points of the cap of radius theta around e_1 in R^n.

    The polar angle has density proportional to sin^{n-2}; the proposal
    phi = arcsin(sin(theta) U^{1/(n-1)}) has density proportional to
    sin^{n-2} cos, so accepting with probability cos(theta)/cos(phi) is exact.
    The rest of the point is uniform on the orthogonal (n-2)-sphere.
    """
    _check_theta(theta)
    phis = np.empty(m)
    filled = 0
    ct, st = math.cos(theta), math.sin(theta)
    for _ in range(max_rounds):
        need = m - filled
        if need == 0:
            break
        batch = int(need / ct) + 16
        phi = np.arcsin(st * rng.random(batch) ** (1.0 / (n - 1)))
        keep = phi[rng.random(batch) * np.cos(phi) < ct][:need]
        phis[filled:filled + keep.size] = keep
        filled += keep.size
    if filled < m:
        raise SamplerStall(f"cap sampler produced {filled}/{m} points in {max_rounds} rounds")
    out = np.empty((m, n))
    out[:, 0] = np.cos(phis)
    out[:, 1:] = np.sin(phis)[:, None] * _unit_rows(rng, m, n - 1)
    return out


@dataclass(frozen=True)
class CapIntersectionReport:
    n: int
    theta: float
    samples: int
    seed: int
    estimate: float
    stderr: float
    bound: float
    s_theta: float
    hit_fraction: float

    @property
    def within_bound(self) -> bool:
        return self.estimate <= self.bound + 3 * self.stderr

    def to_dict(self) -> dict:
        out = asdict(self)
        out["within_bound"] = self.within_bound
        return out


def verify_cap_intersection(n: int, theta: float, samples: int, seed: int = 0) -> CapIntersectionReport:
    """Monte Carlo estimate of E_{u in A} s(C_theta(u) cap A) for A = C_theta(e_1).

    s(C_theta(u) cap A) = s_n(theta) * P_{z in A}(angle(u, z) <= theta), so each
    sample is an independent pair (u, z) of uniform cap points. Shards of
    SHARD_SIZE pairs use their own derived streams.
    """
    CapParams(n, theta)
    if n > MAX_MC_DIMENSION:
        raise ValueError(f"Monte Carlo check limited to n <= {MAX_MC_DIMENSION}")
    if samples < MIN_MC_SAMPLES:
        raise ValueError(f"need at least {MIN_MC_SAMPLES} samples")
    ct = math.cos(theta)
    hits = 0
    for shard, start in enumerate(range(0, samples, SHARD_SIZE)):
        m = min(SHARD_SIZE, samples - start)
        rng = shard_rng(seed, shard)
        u = sample_cap(rng, n, theta, m)
        z = sample_cap(rng, n, theta, m)
        hits += int(np.count_nonzero(np.einsum("ij,ij->i", u, z) >= ct))
    frac = hits / samples
    s = cap_area(CapParams(n, theta))
    bound = 2 * cap_area(CapParams(n, q_theta(theta)))
    return CapIntersectionReport(n, theta, samples, seed, s * frac,
                                 s * math.sqrt(frac * (1 - frac) / samples), bound, s, frac)


def cap_pair_intersection(n: int, theta: float, separation: float, samples: int,
                          seed: int = 0) -> tuple[float, float]:
    """(estimate, stderr) of s(C_theta(u) cap C_theta(e_1)) for u at angle ``separation``."""
    CapParams(n, theta)
    s = cap_area(CapParams(n, theta))
    u = np.zeros(n)
    u[0], u[1] = math.cos(separation), math.sin(separation)
    ct = math.cos(theta)
    hits = 0
    for shard, start in enumerate(range(0, samples, SHARD_SIZE)):
        m = min(SHARD_SIZE, samples - start)
        z = sample_cap(shard_rng(seed, shard), n, theta, m)
        hits += int(np.count_nonzero(z @ u >= ct))
    frac = hits / samples
    return s * frac, s * math.sqrt(frac * (1 - frac) / samples)
