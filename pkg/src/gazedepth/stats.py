"""Normality and paired-difference tests used to compare thumbnail methods."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps
from scipy.stats import rankdata

EXACT_MAX_M = 25


@dataclass(frozen=True)
class TestReport:
    statistic: float
    p_value: float
    n: int
    method: str
    exact: bool | None = None

    __test__ = False  # not a pytest class

    def lines(self, prefix: str = "") -> list[str]:
        out = [f"{prefix}method={self.method}", f"{prefix}statistic={self.statistic!r}",
               f"{prefix}p={self.p_value!r}", f"{prefix}n={self.n}"]
        if self.exact is not None:
            out.append(f"{prefix}exact={str(self.exact).lower()}")
        return out


def _poly(coefs, x):
    result = 0.0
    for c in reversed(coefs):
        result = result * x + c
    return result


_C1 = (0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_C3 = (0.544, -0.39978, 0.025054, -6.714e-4)
_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_C6 = (-0.4803, -0.082676, 0.0030302)
_G = (-2.273, 0.459)


def shapiro_weights(n: int) -> np.ndarray:
    """Royston's approximation to the Shapiro-Wilk coefficients (first half)."""
    nn2 = n // 2
    if n == 3:
        return np.array([math.sqrt(0.5)])
    m = sps.norm.ppf((np.arange(1, nn2 + 1) - 0.375) / (n + 0.25))
    summ2 = 2.0 * float(np.sum(m ** 2))
    ssumm2 = math.sqrt(summ2)
    rsn = 1.0 / math.sqrt(n)
    a = np.empty(nn2)
    a1 = _poly(_C1, rsn) - m[0] / ssumm2
    if n > 5:
        a2 = -m[1] / ssumm2 + _poly(_C2, rsn)
        fac = math.sqrt((summ2 - 2 * m[0] ** 2 - 2 * m[1] ** 2) / (1 - 2 * a1 ** 2 - 2 * a2 ** 2))
        a[1] = a2
        start = 2
    else:
        fac = math.sqrt((summ2 - 2 * m[0] ** 2) / (1 - 2 * a1 ** 2))
        start = 1
    a[0] = a1
    a[start:] = -m[start:] / fac
    return a


def shapiro_wilk(x) -> TestReport:
    """Shapiro-Wilk W with Royston's (AS R94) p-value approximation."""
    x = np.sort(np.asarray(x, dtype=float).ravel())
    n = x.size
    if n < 3 or n > 5000:
        raise ValueError(f"Shapiro-Wilk needs 3 <= n <= 5000, got n={n}")
    if x[-1] - x[0] == 0:
        raise ValueError("Shapiro-Wilk W is undefined for a constant sample")
    a = shapiro_weights(n)
    nn2 = n // 2
    numer = float(np.dot(a, x[::-1][:nn2] - x[:nn2])) ** 2
    ss = float(np.sum((x - x.mean()) ** 2))
    w = min(numer / ss, 1.0)
    if n == 3:
        p = (6.0 / math.pi) * (math.asin(math.sqrt(w)) - math.pi / 3.0)
        return TestReport(w, float(min(max(p, 0.0), 1.0)), n, "shapiro-wilk")
    w1 = math.log(1.0 - w) if w < 1.0 else -math.inf
    if n <= 11:
        gamma = _poly(_G, n)
        if w1 >= gamma:
            return TestReport(w, 1e-99, n, "shapiro-wilk")
        w1 = -math.log(gamma - w1)
        mean = _poly(_C3, n)
        sd = math.exp(_poly(_C4, n))
    else:
        ln = math.log(n)
        mean = _poly(_C5, ln)
        sd = math.exp(_poly(_C6, ln))
    p = float(sps.norm.sf((w1 - mean) / sd))
    return TestReport(w, p, n, "shapiro-wilk")


def paired_t_test(a, b) -> TestReport:
    """Two-sided paired Student's t-test."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"paired samples differ in length: {a.size} vs {b.size}")
    n = a.size
    if n < 2:
        raise ValueError("paired t-test needs at least 2 pairs")
    d = a - b
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        raise ValueError("paired differences have zero variance; t is undefined")
    t = float(d.mean() / (sd / math.sqrt(n)))
    p = float(2.0 * sps.t.sf(abs(t), n - 1))
    return TestReport(t, min(p, 1.0), n, "paired-t")


def signed_rank_null_counts(ranks) -> tuple[np.ndarray, int]:
    """Counts of every attainable positive-rank sum over all 2^m sign patterns.

    Ranks are doubled so midranks stay integral; index ``k`` of the result
    counts patterns whose doubled sum equals ``k``.
    """
    doubled = np.rint(2 * np.asarray(ranks, dtype=float)).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    return counts, total


def wilcoxon_signed_rank(a, b) -> TestReport:
    """Two-sided Wilcoxon signed-rank test; zero differences are dropped.

    The statistic is ``min(T+, T-)``. For up to 25 non-zero differences the
    p-value is exact over all sign assignments; beyond that a normal
    approximation with tie correction (no continuity correction) is used.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"paired samples differ in length: {a.size} vs {b.size}")
    d = a - b
    d = d[d != 0]
    m = d.size
    if m == 0:
        raise ValueError("all paired differences are zero")
    ranks = rankdata(np.abs(d))
    t_plus = float(ranks[d > 0].sum())
    t_minus = float(ranks[d < 0].sum())
    w = min(t_plus, t_minus)
    if m <= EXACT_MAX_M:
        counts, _ = signed_rank_null_counts(ranks)
        k = int(round(2 * w))
        p = float(2.0 * counts[:k + 1].sum() / float(2 ** m))
        return TestReport(w, min(p, 1.0), m, "wilcoxon", exact=True)
    mean = m * (m + 1) / 4.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    var = m * (m + 1) * (2 * m + 1) / 24.0 - float(np.sum(tie_counts ** 3 - tie_counts)) / 48.0
    z = (w - mean) / math.sqrt(var)
    p = float(2.0 * sps.norm.cdf(z))
    return TestReport(w, min(p, 1.0), m, "wilcoxon", exact=False)


def test_battery(classic, adaptive, label: str = "") -> list[str]:
    """Run the normality checks plus both paired tests; key=value lines."""
    prefix = f"{label}." if label else ""
    lines = []
    for name, sample in (("shapiro_classic", classic), ("shapiro_adaptive", adaptive)):
        try:
            lines += shapiro_wilk(sample).lines(f"{prefix}{name}.")
        except ValueError as exc:
            lines.append(f"{prefix}{name}.error={exc}")
    for name, fn in (("ttest", paired_t_test), ("wilcoxon", wilcoxon_signed_rank)):
        try:
            lines += fn(classic, adaptive).lines(f"{prefix}{name}.")
        except ValueError as exc:
            lines.append(f"{prefix}{name}.error={exc}")
    return lines


test_battery.__test__ = False
