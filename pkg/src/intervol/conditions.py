"""Verifiers for the small-intersection hypotheses.

Each verifier returns a report dataclass with measured constants and a
ternary verdict (pass / fail / indeterminate). Reports serialise to JSON.

* growth: vol(r - t) / vol(r) <= 2 exp(-c t)
* dispersal: E[ell] on S(a, r - i) is >= 2 alpha k for 0 <= i <= alpha k
* subgaussian: P(|ell - E ell| >= t) <= 2 exp(-t^2 / K)
* decay: log(vol(B(a,r) & B(b,r)) / vol(r)) against k
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .exactcomb import (Verdict, binomial, compare_ratio_to_exp, log_ratio,
                        multinomial)
from .sampling import (EllStatistics, ShellSampleSpec, ell_samples,
                       estimate_intersection_volume, exact_ell_expectation,
                       permutation_ell_expectation, summarize_ell, tail_thresholds)
from .spaces import (BudgetExceeded, Kind, SpaceSpec, distance, enumerate_shell,
                     intersection_volume, volume)

SIGMAS = 3.0


def _space_dict(space: SpaceSpec) -> dict:
    return {"kind": space.kind.value, "q": space.q, "n": space.n, "w": space.w}


def _combine(verdicts) -> Verdict:
    verdicts = list(verdicts)
    if any(v is Verdict.FAIL for v in verdicts):
        return Verdict.FAIL
    if any(v is Verdict.INDETERMINATE for v in verdicts):
        return Verdict.INDETERMINATE
    return Verdict.PASS


def derive_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=tuple(keys)).generate_state(1)[0])


# -- growth ------------------------------------------------------------------

@dataclass
class GrowthReport:
    space: SpaceSpec
    r: int
    rate_points: list[tuple[int, Fraction]]
    fitted_rate: float
    boundary_rate: float
    shell_ratios_monotone: bool
    checked_rate: float
    verdict: Verdict
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"space": _space_dict(self.space), "r": self.r,
                "rate_points": [[t, f"{x.numerator}/{x.denominator}"] for t, x in self.rate_points],
                "fitted_rate": self.fitted_rate, "boundary_rate": self.boundary_rate,
                "shell_ratios_monotone": self.shell_ratios_monotone,
                "checked_rate": self.checked_rate, "verdict": self.verdict.value,
                "notes": self.notes}


def boundary_rate(space: SpaceSpec, r: int) -> float:
    """ln(|S(r)| / |S(r-1)|), the local growth rate of shells at radius r.

    When consecutive shell ratios are non-increasing in the radius (true for
    Hamming and Johnson), vol(r - t) / vol(r) <= exp(-rate * t) for all t.
    """
    lo, hi = space.shell_size(r - 1), space.shell_size(r)
    if lo == 0:
        return math.inf
    if hi == 0:
        return -math.inf
    return log_ratio(hi, lo)


def _shell_ratios_monotone(space: SpaceSpec, r: int) -> bool:
    prev = None
    for rho in range(1, r + 1):
        lo, hi = space.shell_size(rho - 1), space.shell_size(rho)
        if lo == 0 or hi == 0:
            return False
        cur = Fraction(hi, lo)
        if prev is not None and cur > prev:
            return False
        prev = cur
    return True


def verify_growth(space: SpaceSpec, r: int, t_max: int | None = None,
                  rate: float | None = None, min_rate: float = 0.05) -> GrowthReport:
    """Exact check of vol(r - t)/vol(r) <= 2 exp(-c t) for t = 0..t_max.

    ``fitted_rate`` is the largest c satisfying every tested t (the pointwise
    minimum of ln(2 vol(r)/vol(r-t))/t). Without an explicit ``rate`` the
    verdict also requires ``boundary_rate >= min_rate``: the factor 2 lets any
    finite space pass with some c > 0, and it is the boundary rate that
    vanishes at the hypothesis threshold.
    """
    if r < 1:
        raise ValueError("growth needs r >= 1")
    if r > space.diameter:
        raise ValueError(f"radius {r} exceeds diameter {space.diameter}")
    t_max = r - 1 if t_max is None else t_max
    if not 0 <= t_max < r:
        raise ValueError(f"t_max must satisfy 0 <= t_max < r, got {t_max}")
    vols = [volume(space, rho) for rho in range(r + 1)]
    v_r = vols[r]
    points = [(t, Fraction(vols[r - t], v_r)) for t in range(t_max + 1)]
    fitted = min((math.log(2) + log_ratio(v_r, vols[r - t])) / t
                 for t in range(1, t_max + 1)) if t_max else math.inf
    b_rate = boundary_rate(space, r)
    notes = []
    if rate is None:
        # shave the fitted value so the argmin point is not an exact tie
        checked = fitted * (1 - 1e-9) if math.isfinite(fitted) else 0.0
    else:
        checked = rate
    verdicts = [compare_ratio_to_exp(x, checked, t) for t, x in points]
    verdict = _combine(verdicts)
    if rate is None and b_rate < min_rate:
        verdict = Verdict.FAIL
        notes.append(f"boundary shell growth rate {b_rate:.4g} below {min_rate}")
    return GrowthReport(space, r, points, fitted, b_rate, _shell_ratios_monotone(space, r),
                        checked, verdict, notes)


# -- dispersal -----------------------------------------------------------------

def default_alpha(space: SpaceSpec, r: int, eps: float | None = None) -> float:
    """Standard dispersal constant alpha for each space.

    Hamming: (1 - pq/(q-1))/2 with p = r/n. Johnson: eps/2. Permutation: eps/4.
    """
    if space.kind is Kind.HAMMING:
        p = r / space.n
        return 0.5 * (1 - p * space.q / (space.q - 1))
    if eps is None:
        raise ValueError("Johnson and permutation constants need eps")
    return eps / 2 if space.kind is Kind.JOHNSON else eps / 4


def claimed_subgaussian_constant(space: SpaceSpec, r: int, k: int) -> float:
    """400k (Hamming), 8 r (Johnson, r = beta n), 72 r (permutation)."""
    if space.kind is Kind.HAMMING:
        return 400.0 * k
    if space.kind is Kind.JOHNSON:
        return 8.0 * r
    return 72.0 * r


@dataclass
class OffsetMean:
    i: int
    mean: float
    kind: str
    stderr: float = 0.0
    verdict: Verdict = Verdict.PASS


@dataclass
class DispersalReport:
    space: SpaceSpec
    r: int
    k: int
    alpha: float
    threshold: float
    per_offset_means: list[OffsetMean]
    verdict: Verdict

    def to_dict(self) -> dict:
        d = {"space": _space_dict(self.space), "r": self.r, "k": self.k, "alpha": self.alpha,
             "threshold": self.threshold, "verdict": self.verdict.value}
        d["per_offset_means"] = [dict(asdict(m), verdict=m.verdict.value)
                                 for m in self.per_offset_means]
        return d


def dispersal_offsets(alpha: float, k: int) -> list[int]:
    return list(range(int(math.floor(alpha * k + 1e-12)) + 1))


def verify_dispersal(space: SpaceSpec, r: int, k: int, alpha: float,
                     mode: str = "exact", samples: int = 100_000, seed: int = 0,
                     jobs: int = 1) -> DispersalReport:
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    a, b = space.canonical_pair(k)
    threshold = Fraction(2 * alpha).limit_denominator(10**12) * k
    rows = []
    for i in dispersal_offsets(alpha, k):
        rho = r - i
        if rho < 0 or space.shell_size(rho) == 0:
            continue
        if mode == "exact":
            if space.kind is Kind.PERMUTATION:
                mean = permutation_ell_expectation(space.n, rho, k)
            else:
                mean = exact_ell_expectation(space, r, k, i).value
            v = Verdict.PASS if mean >= threshold else Verdict.FAIL
            rows.append(OffsetMean(i, float(mean), "exact", 0.0, v))
        elif mode in ("monte_carlo", "montecarlo", "mc"):
            spec = ShellSampleSpec(space, a, b, r, i, samples, derive_seed(seed, i))
            st = summarize_ell(ell_samples(spec, jobs), k, spec.seed)
            se = st.stderr
            thr = float(threshold)
            if st.mean - SIGMAS * se >= thr:
                v = Verdict.PASS
            elif st.mean + SIGMAS * se < thr:
                v = Verdict.FAIL
            else:
                v = Verdict.INDETERMINATE
            rows.append(OffsetMean(i, st.mean, "empirical", se, v))
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return DispersalReport(space, r, k, alpha, float(threshold), rows,
                           _combine(m.verdict for m in rows))


# -- subgaussian tails -----------------------------------------------------------

@dataclass
class TailRow:
    t: int
    frequency: float
    bound: float
    stderr: float
    verdict: Verdict


@dataclass
class SubgaussianReport:
    space: SpaceSpec
    r: int
    k: int
    i: int
    claimed_K: float
    empirical_tail: EllStatistics
    rows: list[TailRow]
    fitted_K: float
    verdict: Verdict

    def to_dict(self) -> dict:
        return {"space": _space_dict(self.space), "r": self.r, "k": self.k, "i": self.i,
                "claimed_K": self.claimed_K, "fitted_K": self.fitted_K,
                "verdict": self.verdict.value,
                "mean": self.empirical_tail.mean, "variance": self.empirical_tail.variance,
                "sample_count": self.empirical_tail.sample_count,
                "seed": self.empirical_tail.seed,
                "rows": [dict(asdict(row), verdict=row.verdict.value) for row in self.rows]}


def verify_subgaussian(space: SpaceSpec, r: int, k: int, i: int, claimed_K: float,
                       samples: int = 10_000, seed: int = 0, jobs: int = 1,
                       min_samples: int = 10_000) -> SubgaussianReport:
    if samples < min_samples:
        raise ValueError(f"subgaussian check needs at least {min_samples} samples")
    a, b = space.canonical_pair(k)
    spec = ShellSampleSpec(space, a, b, r, i, samples, seed)
    thresholds = [0] + tail_thresholds(k)
    st = summarize_ell(ell_samples(spec, jobs), k, seed, spec.to_dict(), thresholds)
    rows = []
    fitted = 0.0
    for t in thresholds:
        freq = st.tail_histogram[t] / samples
        bound = 2.0 * math.exp(-t * t / claimed_K)
        se = math.sqrt(freq * (1 - freq) / samples)
        v = Verdict.PASS if freq <= bound + SIGMAS * se else Verdict.FAIL
        rows.append(TailRow(t, freq, bound, se, v))
        if freq > 0 and t > 0:
            fitted = max(fitted, t * t / math.log(2.0 / freq))
    return SubgaussianReport(space, r, k, i, claimed_K, st, rows, fitted,
                             _combine(row.verdict for row in rows))


# -- decay profile -----------------------------------------------------------------

@dataclass
class DecayReport:
    space: SpaceSpec
    r: int
    points: list[tuple[int, Fraction | float, float]]
    excluded: list[tuple[int, str]]
    slope: float
    intercept: float
    r_squared: float
    verdict: Verdict
    mode: str = "exact"

    def to_dict(self) -> dict:
        pts = []
        for k, ratio, lg in self.points:
            shown = f"{ratio.numerator}/{ratio.denominator}" if isinstance(ratio, Fraction) else ratio
            pts.append([k, shown, lg])
        return {"space": _space_dict(self.space), "r": self.r, "points": pts,
                "excluded": [list(e) for e in self.excluded], "slope": self.slope,
                "intercept": self.intercept, "r_squared": self.r_squared,
                "verdict": self.verdict.value, "mode": self.mode}


def linear_fit(xs, ys) -> tuple[float, float, float]:
    """Least-squares slope, intercept and R^2."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size < 2:
        return math.nan, math.nan, math.nan
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def decay_profile(space: SpaceSpec, r: int, k_values, mode: str = "exact",
                  samples: int = 100_000, seed: int = 0, min_r_squared: float = 0.9,
                  max_slope: float = 0.0) -> DecayReport:
    vol_r = volume(space, r)
    points, excluded = [], []
    for k in k_values:
        k = int(k)
        if k > space.diameter or (space.kind is Kind.PERMUTATION and k == 1):
            excluded.append((k, "distance not attained"))
            continue
        if mode == "exact":
            inter = intersection_volume(space, r, k)
            if inter == 0:
                excluded.append((k, "empty intersection"))
                continue
            ratio = Fraction(inter, vol_r)
            points.append((k, ratio, log_ratio(inter, vol_r)))
        else:
            a, b = space.canonical_pair(k)
            est = estimate_intersection_volume(space, a, b, r, samples, derive_seed(seed, k))
            if est.estimate <= 0:
                excluded.append((k, "no sample in the intersection"))
                continue
            ratio = est.estimate / vol_r
            points.append((k, ratio, math.log(ratio)))
    fit_pts = [(k, lg) for k, _, lg in points if k > 0] or [(k, lg) for k, _, lg in points]
    slope, intercept, r2 = linear_fit([p[0] for p in fit_pts], [p[1] for p in fit_pts])
    ok = math.isfinite(slope) and slope < max_slope and r2 >= min_r_squared
    return DecayReport(space, r, points, excluded, slope, intercept, r2,
                       Verdict.PASS if ok else Verdict.FAIL, mode)


# -- the shell decomposition behind the intersection bound ----------------------------

def hamming_shell_ball_count(q: int, n: int, k: int, rho: int, s: int) -> int:
    """#{x : d(x, a) = rho, d(x, b) <= s} for a = 0^n, b = 1^k 0^(n-k)."""
    total = 0
    for u in range(min(k, rho) + 1):              # ones inside [k]
        for v in range(min(k - u, rho - u) + 1):  # other nonzero symbols inside [k]
            if v and q == 2:
                break
            t = rho - u - v                       # nonzeros outside [k]
            if t > n - k or (k - u) + t > s:
                continue
            total += (multinomial(u, v, k - u - v) * (q - 2) ** v
                      * binomial(n - k, t) * (q - 1) ** t)
    return total


def johnson_shell_ball_count(n: int, w: int, k: int, rho: int, s: int) -> int:
    """Same count in the Johnson slice for the canonical pair at distance k."""
    common, out = w - k, n - w - k
    total = 0
    for x1 in range(common + 1):
        x2 = w - rho - x1
        if not 0 <= x2 <= k:
            continue
        for x3 in range(k + 1):
            x4 = w - x1 - x2 - x3
            if x4 < 0 or w - x1 - x3 > s:
                continue
            total += (binomial(common, x1) * binomial(k, x2) * binomial(k, x3)
                      * binomial(out, x4))
    return total


def shell_ball_count(space: SpaceSpec, k: int, rho: int, s: int) -> int:
    if space.kind is Kind.HAMMING:
        return hamming_shell_ball_count(space.q, space.n, k, rho, s)
    if space.kind is Kind.JOHNSON:
        return johnson_shell_ball_count(space.n, space.w, k, rho, s)
    a, b = space.canonical_pair(k)
    return sum(1 for x in enumerate_shell(space, a, rho) if distance(space, x, b) <= s)


@dataclass
class DecompositionReport:
    space: SpaceSpec
    r: int
    k: int
    alpha: float
    exact_ratio: Fraction
    shell_tails: list[tuple[int, Fraction]]  # (i, P(ell <= i) on S(a, r - i))
    inner_mass: Fraction                       # P(d(eta, a) < r - floor(alpha k))
    bound: Fraction
    holds: bool

    def to_dict(self) -> dict:
        return {"space": _space_dict(self.space), "r": self.r, "k": self.k,
                "alpha": self.alpha, "exact_ratio": _fmt(self.exact_ratio),
                "shell_tails": [[i, _fmt(p)] for i, p in self.shell_tails],
                "inner_mass": _fmt(self.inner_mass), "bound": _fmt(self.bound),
                "holds": self.holds}


def _fmt(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def intersection_decomposition(space: SpaceSpec, r: int, k: int, alpha: float) -> DecompositionReport:
    """Split vol(A & B)/vol(r) over the shells of A.

    For eta uniform on B(a, r), eta lies in B(b, r) iff ell(eta) <= r - d(eta, a).
    Keeping the outer shells r - i, i <= floor(alpha k), and bounding the rest
    by their mass gives ratio <= max_i P(ell <= i | S(a, r-i)) + inner mass.
    All quantities are exact.
    """
    vol_r = volume(space, r)
    i0 = min(int(math.floor(alpha * k + 1e-12)), r)
    tails = []
    for i in range(i0 + 1):
        size = space.shell_size(r - i)
        if size == 0:
            continue
        tails.append((i, Fraction(shell_ball_count(space, k, r - i, r), size)))
    inner = Fraction(volume(space, r - i0 - 1), vol_r)
    try:
        exact = Fraction(intersection_volume(space, r, k), vol_r)
    except BudgetExceeded:
        exact = Fraction(sum(shell_ball_count(space, k, rho, r) for rho in range(r + 1)), vol_r)
    bound = max((p for _, p in tails), default=Fraction(0)) + inner
    return DecompositionReport(space, r, k, alpha, exact, tails, inner, bound, exact <= bound)


def report_json(report) -> str:
    return json.dumps(report.to_dict(), sort_keys=True)
