"""Two-group comparison statistics, correlations, FDR control and survival.

All tests are two-sided.  Functions take plain sequences or numpy arrays and
return small dataclasses; ``None`` marks a quantity that is undefined for
the given input (zero variance and the like).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special
from scipy import stats as sps

from .errors import NumericError, ParameterError

# Mann-Whitney: exact null distribution when n1 + n2 <= this and no ties
MWU_EXACT_THRESHOLD = 12


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str
    n1: int
    n2: int
    effect: float | None = None
    df: float | None = None

    __test__ = False  # keep pytest from collecting this class


@dataclass(frozen=True)
class BootstrapCI:
    mean_diff: float
    lo: float
    hi: float
    n_resamples: int
    confidence: float
    seed: int | None

    @property
    def contains_estimate(self) -> bool:
        return self.lo <= self.mean_diff <= self.hi

    @property
    def excludes_zero(self) -> bool:
        return self.lo > 0 or self.hi < 0


@dataclass(frozen=True)
class SurvivalCurve:
    times: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray
    censored: np.ndarray

    def at(self, t: float) -> float:
        """Survival probability just after time ``t``."""
        idx = np.searchsorted(self.times, t, side="right") - 1
        return 1.0 if idx < 0 else float(self.survival[idx])


def _as_array(x, name="sample") -> np.ndarray:
    a = np.asarray(x, dtype=float).ravel()
    if a.size == 0:
        raise ParameterError(f"{name} is empty")
    return a


def _clip_p(p: float) -> float:
    return float(min(1.0, max(0.0, p)))


def midranks(values) -> np.ndarray:
    """1-based ranks with ties replaced by their average rank."""
    a = np.asarray(values, dtype=float)
    order = np.argsort(a, kind="mergesort")
    ranks = np.empty(a.size, dtype=float)
    sorted_a = a[order]
    i = 0
    n = a.size
    while i < n:
        j = i
        while j + 1 < n and sorted_a[j + 1] == sorted_a[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def welch_t(x, y) -> TestResult:
    """Welch's unequal-variance t test with Satterthwaite degrees of freedom."""
    x, y = _as_array(x, "x"), _as_array(y, "y")
    n1, n2 = x.size, y.size
    if n1 < 2 or n2 < 2:
        raise ParameterError("welch_t needs at least two observations per group")
    v1, v2 = x.var(ddof=1), y.var(ddof=1)
    diff = x.mean() - y.mean()
    se2 = v1 / n1 + v2 / n2
    if se2 == 0:
        if diff == 0:
            return TestResult(0.0, 1.0, "WelchT", n1, n2, df=float(n1 + n2 - 2))
        raise NumericError("both samples have zero variance but different means")
    t = diff / math.sqrt(se2)
    df = se2 ** 2 / ((v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1))
    p = 2.0 * sps.t.sf(abs(t), df)
    return TestResult(float(t), _clip_p(p), "WelchT", n1, n2, df=float(df))


def _u_null_counts(n1: int, n2: int) -> np.ndarray:
    """Number of rank arrangements giving each U value, U = 0..n1*n2."""
    # f[i][j][u]: arrangements of i x's and j y's with statistic u
    f = [[None] * (n2 + 1) for _ in range(n1 + 1)]
    for i in range(n1 + 1):
        for j in range(n2 + 1):
            if i == 0 or j == 0:
                arr = np.zeros(i * j + 1, dtype=object)
                arr[0] = 1
                f[i][j] = arr
                continue
            arr = np.zeros(i * j + 1, dtype=object)
            # largest element is an x: it beats all j y's
            a = f[i - 1][j]
            arr[j:j + a.size] += a
            b = f[i][j - 1]
            arr[:b.size] += b
            f[i][j] = arr
    return f[n1][n2]


def mann_whitney_u(x, y, exact_threshold: int = MWU_EXACT_THRESHOLD) -> TestResult:
    """Mann-Whitney U test; ``statistic`` is U for ``x`` (midranks for ties).

    Small tie-free samples use the exact null distribution; otherwise a normal
    approximation with tie and continuity corrections.  ``effect`` carries
    Cliff's delta.
    """
    x, y = _as_array(x, "x"), _as_array(y, "y")
    n1, n2 = x.size, y.size
    ranks = midranks(np.concatenate([x, y]))
    u = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)
    delta = 2.0 * u / (n1 * n2) - 1.0
    mean = n1 * n2 / 2.0
    has_ties = np.unique(ranks).size < ranks.size
    if n1 + n2 <= exact_threshold and not has_ties:
        counts = _u_null_counts(n1, n2)
        total = sum(counts)
        k = int(round(u))
        lower = sum(counts[: k + 1]) / total
        upper = sum(counts[k:]) / total
        p = min(1.0, 2.0 * min(lower, upper))
        return TestResult(u, _clip_p(float(p)), "MWU", n1, n2, effect=delta)
    n = n1 + n2
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float((tie_counts ** 3 - tie_counts).sum())
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return TestResult(u, 1.0, "MWU", n1, n2, effect=delta)
    z = (abs(u - mean) - 0.5) / math.sqrt(var)
    z = max(z, 0.0)
    p = 2.0 * sps.norm.sf(z)
    return TestResult(u, _clip_p(p), "MWU", n1, n2, effect=delta)


def ks_statistic(x, y) -> float:
    x, y = np.sort(_as_array(x, "x")), np.sort(_as_array(y, "y"))
    grid = np.concatenate([x, y])
    f1 = np.searchsorted(x, grid, side="right") / x.size
    f2 = np.searchsorted(y, grid, side="right") / y.size
    return float(np.max(np.abs(f1 - f2)))


def ks_test(x, y) -> TestResult:
    """Two-sample Kolmogorov-Smirnov test, asymptotic p-value.

    Uses the effective size ``n1 n2 / (n1 + n2)`` with the usual small-sample
    adjustment ``(sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) * D``.
    """
    x, y = _as_array(x, "x"), _as_array(y, "y")
    d = ks_statistic(x, y)
    ne = x.size * y.size / (x.size + y.size)
    sq = math.sqrt(ne)
    p = special.kolmogorov((sq + 0.12 + 0.11 / sq) * d)
    return TestResult(d, _clip_p(float(p)), "KS", x.size, y.size, effect=d)


def cliffs_delta(x, y) -> float:
    x, y = _as_array(x, "x"), _as_array(y, "y")
    ys = np.sort(y)
    greater = np.searchsorted(ys, x, side="left").sum()
    less = (y.size - np.searchsorted(ys, x, side="right")).sum()
    return float((greater - less) / (x.size * y.size))


def cohens_d(x, y) -> float | None:
    x, y = _as_array(x, "x"), _as_array(y, "y")
    n1, n2 = x.size, y.size
    if n1 < 2 or n2 < 2:
        raise ParameterError("cohens_d needs at least two observations per group")
    pooled = ((n1 - 1) * x.var(ddof=1) + (n2 - 1) * y.var(ddof=1)) / (n1 + n2 - 2)
    if pooled == 0:
        return None
    return float((x.mean() - y.mean()) / math.sqrt(pooled))


def effect_sizes(x, y) -> tuple[float | None, float]:
    """(Cohen's d, Cliff's delta)."""
    return cohens_d(x, y), cliffs_delta(x, y)


def bootstrap_mean_diff_ci(
    x, y,
    n_resamples: int = 10_000,
    confidence: float = 0.95,
    seed: int | None = 0,
    chunk: int = 500,
) -> BootstrapCI:
    """Percentile bootstrap CI for mean(x) - mean(y).

    Both samples are resampled independently with replacement.  Resamples are
    drawn in fixed-size chunks so the result depends only on ``seed``.
    """
    x, y = _as_array(x, "x"), _as_array(y, "y")
    if not 0 < confidence < 1:
        raise ParameterError("confidence must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    diffs = np.empty(n_resamples)
    for start in range(0, n_resamples, chunk):
        m = min(chunk, n_resamples - start)
        ix = rng.integers(0, x.size, size=(m, x.size))
        iy = rng.integers(0, y.size, size=(m, y.size))
        diffs[start:start + m] = x[ix].mean(axis=1) - y[iy].mean(axis=1)
    alpha = 1.0 - confidence
    lo, hi = np.quantile(diffs, [alpha / 2, 1 - alpha / 2])
    est = float(x.mean() - y.mean())
    # a degenerate resample distribution should give an exact zero-width band
    lo, hi = min(float(lo), float(hi)), max(float(lo), float(hi))
    if np.all(diffs == diffs[0]):
        lo = hi = float(diffs[0])
    return BootstrapCI(est, lo, hi, n_resamples, confidence, seed)


def spearman(x, y) -> float | None:
    """Pearson correlation of midranks; None when either rank vector is constant."""
    x, y = _as_array(x, "x"), _as_array(y, "y")
    if x.size != y.size:
        raise ParameterError("spearman needs paired samples")
    if x.size < 3:
        raise ParameterError("spearman needs at least three pairs")
    rx, ry = midranks(x), midranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if denom == 0:
        return None
    return float(np.clip(float(rx @ ry) / denom, -1.0, 1.0))


def partial_spearman(x, y, z) -> float | None:
    """Spearman correlation of x and y controlling for z."""
    rxy, rxz, ryz = spearman(x, y), spearman(x, z), spearman(y, z)
    if rxy is None or rxz is None or ryz is None:
        return None
    denom = (1 - rxz ** 2) * (1 - ryz ** 2)
    if denom <= 1e-15:
        return None
    return float(np.clip((rxy - rxz * ryz) / math.sqrt(denom), -1.0, 1.0))


def benjamini_hochberg(p_values, alpha: float = 0.05) -> tuple[np.ndarray, np.ndarray]:
    """Step-up FDR control.  Returns (reject mask, adjusted p-values)."""
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        return np.zeros(0, dtype=bool), np.zeros(0)
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ParameterError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="mergesort")
    ranked = p[order]
    ks = np.arange(1, m + 1)
    passing = np.nonzero(ranked <= ks * alpha / m)[0]
    reject = np.zeros(m, dtype=bool)
    if passing.size:
        reject[order[: passing[-1] + 1]] = True
    adj_sorted = np.minimum.accumulate((ranked * m / ks)[::-1])[::-1]
    adjusted = np.empty(m)
    adjusted[order] = np.minimum(adj_sorted, 1.0)
    return reject, adjusted


def kaplan_meier(durations, event_flags) -> SurvivalCurve:
    """Product-limit estimate over the distinct observed times.

    At a time with both events and censorings the censored subjects are
    counted at risk for the events.
    """
    d = _as_array(durations, "durations")
    e = np.asarray(event_flags, dtype=bool).ravel()
    if e.size != d.size:
        raise ParameterError("durations and event flags differ in length")
    if np.any(d <= 0):
        raise ParameterError("durations must be positive")
    times = np.unique(d)
    events = np.array([np.sum(e & (d == t)) for t in times])
    censored = np.array([np.sum(~e & (d == t)) for t in times])
    at_risk = np.array([np.sum(d >= t) for t in times])
    factors = 1.0 - events / at_risk
    return SurvivalCurve(times, np.cumprod(factors), at_risk, events, censored)


def log_rank(durations_a, events_a, durations_b, events_b) -> TestResult:
    """Two-group log-rank test (one degree of freedom)."""
    da, db = _as_array(durations_a, "group a"), _as_array(durations_b, "group b")
    ea = np.asarray(events_a, dtype=bool).ravel()
    eb = np.asarray(events_b, dtype=bool).ravel()
    event_times = np.unique(np.concatenate([da[ea], db[eb]]))
    obs_a = exp_a = var = 0.0
    for t in event_times:
        na = np.sum(da >= t)
        nb = np.sum(db >= t)
        n = na + nb
        d_a = np.sum(ea & (da == t))
        d = d_a + np.sum(eb & (db == t))
        obs_a += d_a
        exp_a += d * na / n
        if n > 1:
            var += d * (na / n) * (1 - na / n) * (n - d) / (n - 1)
    if var <= 0:
        return TestResult(0.0, 1.0, "LogRank", da.size, db.size, effect=0.0, df=1.0)
    chi2 = (obs_a - exp_a) ** 2 / var
    return TestResult(float(chi2), _clip_p(float(sps.chi2.sf(chi2, 1))), "LogRank",
                      da.size, db.size, effect=float(obs_a - exp_a), df=1.0)


@dataclass
class GroupComparison:
    """Everything reported for one metric in a CB vs DO contrast."""

    metric: str
    n1: int
    n2: int
    mean1: float
    mean2: float
    welch: TestResult
    mwu: TestResult
    ks: TestResult
    cohens_d: float | None
    cliffs_delta: float
    bootstrap: BootstrapCI
    n_missing: int = 0
    welch_p_bh: float | None = None
    mwu_p_bh: float | None = None
    ks_p_bh: float | None = None
    extra: dict = field(default_factory=dict)


def compare_groups(metric, x, y, n_resamples=10_000, seed=0, n_missing=0) -> GroupComparison:
    x, y = _as_array(x, "x"), _as_array(y, "y")
    try:
        welch = welch_t(x, y)
    except NumericError:
        welch = TestResult(float("inf") if x.mean() > y.mean() else float("-inf"), 0.0,
                           "WelchT", x.size, y.size)
    d, delta = effect_sizes(x, y)
    return GroupComparison(
        metric=metric,
        n1=x.size,
        n2=y.size,
        mean1=float(x.mean()),
        mean2=float(y.mean()),
        welch=welch,
        mwu=mann_whitney_u(x, y),
        ks=ks_test(x, y),
        cohens_d=d,
        cliffs_delta=delta,
        bootstrap=bootstrap_mean_diff_ci(x, y, n_resamples=n_resamples, seed=seed),
        n_missing=n_missing,
    )


def adjust_comparisons(comparisons: Sequence[GroupComparison], alpha: float = 0.05) -> None:
    """Fill BH-adjusted p-values across metrics, separately per test family."""
    for attr, test in (("welch_p_bh", "welch"), ("mwu_p_bh", "mwu"), ("ks_p_bh", "ks")):
        _, adj = benjamini_hochberg([getattr(c, test).p_value for c in comparisons], alpha)
        for c, a in zip(comparisons, adj):
            setattr(c, attr, float(a))
