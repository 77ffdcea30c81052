"""Slow, independent reference computations used as test oracles.

Nothing here imports the package's own algorithms; each function is a
direct enumeration or a textbook formula.
"""
from __future__ import annotations

import itertools
import math

import mpmath
import numpy as np


def cos(a, b) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(a @ b / (math.sqrt(a @ a) * math.sqrt(b @ b)))


def _alignments(n: int, m: int):
    """Every global alignment of lengths n and m as a list of ops
    ('M', i, j), ('A', i) (a-item against a gap), ('B', j)."""
    if n == 0 and m == 0:
        yield []
        return
    if n > 0 and m > 0:
        for rest in _alignments(n - 1, m - 1):
            yield rest + [("M", n - 1, m - 1)]
    if n > 0:
        for rest in _alignments(n - 1, m):
            yield rest + [("A", n - 1)]
    if m > 0:
        for rest in _alignments(n, m - 1):
            yield rest + [("B", m - 1)]


def brute_local_alignment(seq_a, seq_b, gap=0.5, scale=2.0, offset=-1.0) -> float:
    """Max over all substring pairs and all their gapped alignments (floor 0)."""
    best = 0.0
    for i0, i1 in itertools.combinations(range(len(seq_a) + 1), 2):
        for j0, j1 in itertools.combinations(range(len(seq_b) + 1), 2):
            sa, sb = seq_a[i0:i1], seq_b[j0:j1]
            for ops in _alignments(len(sa), len(sb)):
                total = 0.0
                for op in ops:
                    if op[0] == "M":
                        total += scale * cos(sa[op[1]], sb[op[2]]) + offset
                    else:
                        total -= gap
                best = max(best, total)
    return best


def brute_edit_distance(seq_a, seq_b, indel=1.0) -> float:
    """Min over every edit script (substitute/delete/insert sequence)."""
    best = math.inf
    for ops in _alignments(len(seq_a), len(seq_b)):
        total = 0.0
        for op in ops:
            if op[0] == "M":
                total += (1.0 - cos(seq_a[op[1]], seq_b[op[2]])) / 2.0
            else:
                total += indel
        best = min(best, total)
    return best


def brute_grid_cost(points, rows: int, cols: int) -> float:
    """Minimum total squared displacement over every injective cell choice,
    points first rescaled to the grid box the same documented way."""
    pts = np.asarray(points, float)
    scaled = np.empty_like(pts)
    for axis, extent in ((0, cols - 1), (1, rows - 1)):
        v = pts[:, axis]
        span = v.max() - v.min()
        scaled[:, axis] = (v - v.min()) / span * extent if span > 0 else extent / 2
    scaled[:, 1] = (rows - 1) - scaled[:, 1]
    cells = [(c, r) for r in range(rows) for c in range(cols)]
    best = math.inf
    for choice in itertools.permutations(range(len(cells)), len(pts)):
        total = sum((scaled[k, 0] - cells[c][0]) ** 2 + (scaled[k, 1] - cells[c][1]) ** 2
                    for k, c in enumerate(choice))
        best = min(best, total)
    return best


def midranks(values) -> list[float]:
    order = sorted(range(len(values)), key=lambda k: values[k])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def wilcoxon_enumeration(a, b) -> tuple[float, float]:
    """(W, two-sided p) by listing all 2^m sign flips of the nonzero diffs."""
    d = [x - y for x, y in zip(a, b) if x != y]
    r = midranks([abs(v) for v in d])
    total = sum(r)
    t_plus = sum(rk for rk, v in zip(r, d) if v > 0)
    w = min(t_plus, total - t_plus)
    extreme = 0
    for signs in itertools.product((0, 1), repeat=len(d)):
        tp = sum(rk for rk, s in zip(r, signs) if s)
        if min(tp, total - tp) <= w + 1e-9:
            extreme += 1
    return w, extreme / 2 ** len(d)


def paired_t_mpmath(a, b, dps: int = 50) -> tuple[float, float]:
    """t and two-sided p via the regularised incomplete beta function."""
    with mpmath.workdps(dps):
        d = [mpmath.mpf(x) - mpmath.mpf(y) for x, y in zip(a, b)]
        n = len(d)
        mean = mpmath.fsum(d) / n
        var = mpmath.fsum((x - mean) ** 2 for x in d) / (n - 1)
        t = mean / mpmath.sqrt(var / n)
        nu = n - 1
        p = mpmath.betainc(mpmath.mpf(nu) / 2, mpmath.mpf(1) / 2, 0, nu / (nu + t ** 2),
                           regularized=True)
        return float(t), float(p)


def pca_eigh(X, k: int = 2) -> np.ndarray:
    """Projection onto the top-k covariance eigenvectors, largest-|entry| positive."""
    X = np.asarray(X, float)
    C = np.cov(X, rowvar=False)
    vals, vecs = np.linalg.eigh(C)
    top = vecs[:, np.argsort(vals)[::-1][:k]].T
    for row in top:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    return (X - X.mean(axis=0)) @ top.T
