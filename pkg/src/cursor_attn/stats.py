"""Nonparametric significance tests for model/representation comparisons.

Wilcoxon signed-rank with exact two-sided p for up to 25 non-zero pairs
(sum-count dynamic program over rank sums, equivalent to enumerating all
sign assignments) and a continuity-corrected normal approximation beyond.
Friedman rank test with the standard tie correction as the omnibus, and
Holm's step-down procedure for multiple-testing correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AllZeroDifferencesError,
    InvalidValueError,
    TooFewPairsError,
    TooFewTreatmentsError,
)

EXACT_WILCOXON_MAX_N = 25


@dataclass(slots=True)
class ComparisonResult:
    test: str
    statistic: float
    p_value: float
    effect_r: float | None = None
    corrected_p: float | None = None

    def to_json(self) -> dict:
        return {
            "test": self.test,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "effect_r": self.effect_r,
            "corrected_p": self.corrected_p,
        }


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    sorted_vals = values[order]
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) via series / continued
    fraction (switching at x = a + 1), accurate to ~1e-14."""
    if x < 0 or a <= 0:
        raise ValueError("gamma_q requires x >= 0 and a > 0")
    if x == 0:
        return 1.0
    lg = math.lgamma(a)
    if x < a + 1.0:
        # P(a, x) series
        term = 1.0 / a
        total = term
        k = a
        for _ in range(1000):
            k += 1.0
            term *= x / k
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        p = total * math.exp(-x + a * math.log(x) - lg)
        return 1.0 - p
    # Q(a, x) continued fraction (modified Lentz)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - lg)


def chi2_sf(x: float, df: int) -> float:
    """Upper tail of the chi-squared distribution with df degrees of freedom."""
    if x <= 0:
        return 1.0
    return _gamma_q(df / 2.0, x / 2.0)


def _exact_wilcoxon_p(ranks: np.ndarray, w: float) -> float:
    # Ranks may be half-integers under ties; double them to stay integral.
    doubled = np.round(ranks * 2).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    top = 0
    for r in doubled:
        counts[r : top + r + 1] += counts[: top + 1].copy()  # slices overlap
        top += r
    threshold = int(round(w * 2))
    p = 2.0 * counts[: threshold + 1].sum() / counts.sum()
    return min(p, 1.0)


def wilcoxon_signed_rank(a, b) -> ComparisonResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    W is the smaller of the positive/negative rank sums with average ranks
    for tied absolute differences; zero differences are dropped.  The effect
    size r = Z / sqrt(N) keeps the direction of a - b (negative when a
    tends to fall below b).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise InvalidValueError("paired samples must be 1-D and equally long")
    d = a - b
    d = d[d != 0.0]
    if len(d) == 0:
        raise AllZeroDifferencesError("all paired differences are zero")
    if len(d) < 3:
        raise TooFewPairsError(f"need at least 3 non-zero pairs, got {len(d)}")
    n = len(d)
    ranks = _average_ranks(np.abs(d))
    t_plus = float(ranks[d > 0].sum())
    t_minus = float(ranks[d < 0].sum())
    w = min(t_plus, t_minus)

    mu = n * (n + 1) / 4.0
    # Tie correction on the variance.
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    tie_term = float(np.sum(tie_counts.astype(np.float64) ** 3 - tie_counts))
    sigma2 = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0
    sigma = math.sqrt(sigma2)
    if t_plus == mu:
        z = 0.0
    else:
        z = (t_plus - mu - 0.5 * math.copysign(1.0, t_plus - mu)) / sigma

    if n <= EXACT_WILCOXON_MAX_N:
        p = _exact_wilcoxon_p(ranks, w)
    else:
        p = 2.0 * normal_cdf(-abs(z))
        p = min(p, 1.0)
    return ComparisonResult(test="wilcoxon", statistic=w, p_value=p, effect_r=z / math.sqrt(n))


def friedman_test(matrix) -> ComparisonResult:
    """Friedman rank test over a (k treatments x n blocks) matrix.

    Values are ranked within each block with average ranks for ties; the
    statistic uses the standard tie correction and is referred to the
    chi-squared distribution with k - 1 degrees of freedom.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 3:
        raise TooFewTreatmentsError("need a 2-D matrix with at least 3 treatments")
    k, n = m.shape
    if n < 2:
        raise TooFewTreatmentsError("need at least 2 blocks")
    rank_sum = np.zeros(k)
    tie_term = 0.0
    for j in range(n):
        ranks = _average_ranks(m[:, j])
        rank_sum += ranks
        _, tie_counts = np.unique(m[:, j], return_counts=True)
        tie_term += float(np.sum(tie_counts.astype(np.float64) ** 3 - tie_counts))
    mean_ranks = rank_sum / n
    numerator = 12.0 * n / (k * (k + 1)) * float(np.sum((mean_ranks - (k + 1) / 2.0) ** 2))
    correction = 1.0 - tie_term / (n * k * (k * k - 1))
    if numerator == 0.0:
        statistic = 0.0  # fully tied blocks also drive the correction to 0
    else:
        statistic = numerator / correction
    return ComparisonResult(test="friedman", statistic=statistic, p_value=chi2_sf(statistic, k - 1))


def holm_correction(p_values) -> list[float]:
    """Holm step-down adjusted p-values, returned in the input order."""
    p = list(map(float, p_values))
    m = len(p)
    order = sorted(range(m), key=lambda i: p[i])
    out = [0.0] * m
    running = 0.0
    for pos, i in enumerate(order):
        running = max(running, min(1.0, (m - pos) * p[i]))
        out[i] = running
    return out
