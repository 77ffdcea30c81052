"""Scanpath comparison over feature sequences.

Both measures score a pair of items by the cosine of their feature
vectors. Smith-Waterman maps cosine ``s`` to ``sub_scale * s + sub_offset``
(default ``2s - 1``: +1 for identical, -1 for orthogonal features);
Levenshtein charges ``(1 - s) / 2`` per substitution.
"""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from .features import as_matrix, cosine_matrix


class Normalize(str, Enum):
    NONE = "none"
    BY_MIN_LENGTH = "min"
    BY_MAX_LENGTH = "max"


class Method(str, Enum):
    SW = "sw"
    LEVENSHTEIN = "levenshtein"

    @classmethod
    def parse(cls, value) -> "Method":
        key = str(getattr(value, "value", value)).lower().replace("-", "_")
        if key in ("sw", "smith_waterman", "smithwaterman"):
            return cls.SW
        if key in ("lev", "levenshtein"):
            return cls.LEVENSHTEIN
        raise ValueError(f"unknown alignment method {value!r}")


@dataclass(frozen=True)
class ScoringScheme:
    gap_penalty: float = 0.5
    indel_cost: float = 1.0
    sub_scale: float = 2.0
    sub_offset: float = -1.0
    normalize: Normalize = Normalize.BY_MAX_LENGTH

    def __post_init__(self):
        object.__setattr__(self, "normalize", Normalize(self.normalize))
        if self.gap_penalty < 0:
            raise ValueError(f"gap_penalty must be >= 0, got {self.gap_penalty}")
        if not self.indel_cost > 0:
            raise ValueError(f"indel_cost must be > 0, got {self.indel_cost}")

    def substitution(self, cosine):
        """Smith-Waterman substitution score for a cosine similarity."""
        return self.sub_scale * cosine + self.sub_offset

    @staticmethod
    def substitution_cost(cosine):
        """Levenshtein substitution cost in [0, 1]."""
        return (1.0 - cosine) / 2.0

    def describe(self) -> list[str]:
        d = asdict(self)
        d["normalize"] = self.normalize.value
        return [f"{k}={v}" for k, v in d.items()] + [
            f"sw_substitution={self.sub_scale}*cosine{self.sub_offset:+}",
            "levenshtein_substitution=(1-cosine)/2"]


@dataclass(frozen=True)
class AlignmentResult:
    score: float
    len_a: int
    len_b: int
    normalized: float | None = None


def _normalized(score, la, lb, how: Normalize):
    if how is Normalize.NONE:
        return None
    denom = min(la, lb) if how is Normalize.BY_MIN_LENGTH else max(la, lb)
    return score / denom if denom > 0 else None


def _cosines(seq_a, seq_b):
    A, B = as_matrix(seq_a), as_matrix(seq_b)
    if A.shape[0] and B.shape[0] and A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if A.shape[0] == 0 or B.shape[0] == 0:
        return np.zeros((A.shape[0], B.shape[0]))
    return cosine_matrix(A, B)


def smith_waterman_score(seq_a, seq_b, scheme: ScoringScheme = ScoringScheme()) -> AlignmentResult:
    """Best local alignment score with a linear gap penalty; never below 0."""
    cos = _cosines(seq_a, seq_b)
    n, m = cos.shape
    sub = scheme.substitution(cos)
    g = scheme.gap_penalty
    H = np.zeros((n + 1, m + 1))
    best = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            h = max(0.0, H[i - 1, j - 1] + sub[i - 1, j - 1], H[i - 1, j] - g, H[i, j - 1] - g)
            H[i, j] = h
            if h > best:
                best = h
    return AlignmentResult(float(best), n, m, _normalized(best, n, m, scheme.normalize))


def levenshtein_distance(seq_a, seq_b, scheme: ScoringScheme = ScoringScheme()) -> AlignmentResult:
    """Edit distance with cosine-derived substitution costs."""
    cos = _cosines(seq_a, seq_b)
    n, m = cos.shape
    cost = scheme.substitution_cost(cos)
    ind = scheme.indel_cost
    D = np.zeros((n + 1, m + 1))
    D[:, 0] = np.arange(n + 1) * ind
    D[0, :] = np.arange(m + 1) * ind
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            D[i, j] = min(D[i - 1, j - 1] + cost[i - 1, j - 1], D[i - 1, j] + ind, D[i, j - 1] + ind)
    d = float(D[n, m])
    return AlignmentResult(d, n, m, _normalized(d, n, m, scheme.normalize))


@dataclass
class SimilarityMatrix:
    ids: list[str]
    values: np.ndarray
    method: Method
    scheme: ScoringScheme
    normalized: np.ndarray | None = field(default=None, repr=False)

    def to_csv(self, path=None, use_normalized=False) -> str:
        values = self.normalized if use_normalized and self.normalized is not None else self.values
        buf = io.StringIO()
        buf.write(f"# method={self.method.value}\n")
        buf.write(f"# values={'normalized' if values is self.normalized else 'raw'}\n")
        for line in self.scheme.describe():
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id"] + list(self.ids))
        for sid, row in zip(self.ids, values):
            writer.writerow([sid] + [repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def compare(seq_a, seq_b, method=Method.SW, scheme: ScoringScheme = ScoringScheme()):
    if Method.parse(method) is Method.SW:
        return smith_waterman_score(seq_a, seq_b, scheme)
    return levenshtein_distance(seq_a, seq_b, scheme)


def pairwise_matrix(seqs, method=Method.SW, scheme: ScoringScheme = ScoringScheme(),
                    ids=None) -> SimilarityMatrix:
    """Symmetric all-pairs matrix; the diagonal holds self-scores."""
    method = Method.parse(method)
    n = len(seqs)
    if n < 2:
        raise ValueError(f"pairwise_matrix needs at least 2 sequences, got {n}")
    ids = [str(i) for i in range(n)] if ids is None else [str(i) for i in ids]
    mats = [as_matrix(s) for s in seqs]
    values = np.zeros((n, n))
    normalized = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(i, n):
            if method is Method.LEVENSHTEIN and i == j:
                res = AlignmentResult(0.0, len(mats[i]), len(mats[i]),
                                      _normalized(0.0, len(mats[i]), len(mats[i]), scheme.normalize))
            else:
                try:
                    res = compare(mats[i], mats[j], method, scheme)
                except ValueError as exc:
                    raise ValueError(f"pair ({i}, {j}): {exc}") from exc
            values[i, j] = values[j, i] = res.score
            if res.normalized is not None:
                normalized[i, j] = normalized[j, i] = res.normalized
    return SimilarityMatrix(ids, values, method, scheme,
                            None if scheme.normalize is Normalize.NONE else normalized)


class ScanpathAligner(BaseEstimator):
    """Estimator-style wrapper: ``fit(sequences)`` computes ``matrix_``."""

    def __init__(self, method="sw", gap_penalty=0.5, indel_cost=1.0, sub_scale=2.0,
                 sub_offset=-1.0, normalize="max"):
        self.method = method
        self.gap_penalty = gap_penalty
        self.indel_cost = indel_cost
        self.sub_scale = sub_scale
        self.sub_offset = sub_offset
        self.normalize = normalize

    def scheme(self) -> ScoringScheme:
        return ScoringScheme(self.gap_penalty, self.indel_cost, self.sub_scale, self.sub_offset,
                             Normalize(self.normalize))

    def compare(self, seq_a, seq_b) -> AlignmentResult:
        return compare(seq_a, seq_b, self.method, self.scheme())

    def fit(self, X, y=None):
        self.similarity_ = pairwise_matrix(X, self.method, self.scheme(), ids=y)
        self.matrix_ = self.similarity_.values
        return self
