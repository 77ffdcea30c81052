"""2D projection of patch features and overlap-free grid layout."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .features import as_matrix


class DegenerateProjectionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Embedding2D:
    points: np.ndarray  # (N, 2)
    method: str
    seed: int


@dataclass(frozen=True)
class GridLayout:
    rows: int
    cols: int
    assignment: np.ndarray  # (N, 2) integer (row, col) per point
    cost: float
    scaled: np.ndarray  # points in grid coordinates (col, row)

    def cell_of(self, i: int) -> tuple[int, int]:
        r, c = self.assignment[i]
        return int(r), int(c)


def _sign_fix(components: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(len(components)), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


class PCAProjector(TransformerMixin, BaseEstimator):
    """Principal component projection with a deterministic sign convention."""

    def __init__(self, n_components=2):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_min_samples=2, ensure_min_features=2)
        self.mean_ = X.mean(axis=0)
        centered = X - self.mean_
        k = self.n_components
        _, s, vt = np.linalg.svd(centered, full_matrices=False)
        comps = vt[:k]
        if comps.shape[0] < k:
            comps = np.vstack([comps, np.zeros((k - comps.shape[0], X.shape[1]))])
        self.components_ = _sign_fix(comps)
        var = s ** 2 / max(X.shape[0] - 1, 1)
        self.explained_variance_ = np.pad(var[:k], (0, max(0, k - len(var))))
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X, dtype=float)
        return (X - self.mean_) @ self.components_.T


def _pca(X: np.ndarray, seed: int) -> np.ndarray:
    return PCAProjector(2).fit_transform(X)


REDUCERS: dict[str, Callable[[np.ndarray, int], np.ndarray]] = {"pca": _pca}


def register_reducer(name: str, fn: Callable[[np.ndarray, int], np.ndarray]) -> None:
    """Plug in another dimensionality reduction, e.g. a UMAP wrapper."""
    REDUCERS[name.lower()] = fn


def reduce_2d(features, method: str = "pca", seed: int = 0) -> Embedding2D:
    X = as_matrix(features)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 2:
        raise ValueError(f"reduce_2d needs N >= 2 vectors of D >= 2, got shape {X.shape}")
    try:
        reducer = REDUCERS[method.lower()]
    except KeyError:
        raise ValueError(f"unknown reducer {method!r}; registered: {sorted(REDUCERS)}") from None
    if np.all(X == X[0]):
        warnings.warn("all feature vectors are identical; embedding collapses to the origin",
                      DegenerateProjectionWarning, stacklevel=2)
        return Embedding2D(np.zeros((X.shape[0], 2)), method.lower(), seed)
    points = np.asarray(reducer(X, seed), dtype=float)
    if points.shape != (X.shape[0], 2) or not np.isfinite(points).all():
        raise ValueError(f"reducer {method!r} returned invalid points of shape {points.shape}")
    return Embedding2D(points, method.lower(), seed)


def default_grid(n: int) -> tuple[int, int]:
    """Smallest square grid with ``side * side >= n``."""
    side = max(1, math.isqrt(max(n - 1, 0)) + 1)
    return side, side


def scale_to_grid(points: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Map points into grid coordinates ``(col, row)``; row 0 is the top."""
    points = np.asarray(points, dtype=float)
    out = np.empty_like(points)
    for axis, extent in ((0, cols - 1), (1, rows - 1)):
        v = points[:, axis]
        lo, hi = v.min(), v.max()
        out[:, axis] = (v - lo) / (hi - lo) * extent if hi > lo else np.full_like(v, extent / 2)
    out[:, 1] = (rows - 1) - out[:, 1]
    return out


def assignment_cost(scaled: np.ndarray, cells: np.ndarray) -> float:
    """Total squared displacement for points moved to ``cells`` (row, col)."""
    d = scaled - cells[:, ::-1]
    return float((d ** 2).sum())


def gridify(emb, rows: int | None = None, cols: int | None = None) -> GridLayout:
    """Snap points to distinct grid cells minimising total squared displacement."""
    points = emb.points if isinstance(emb, Embedding2D) else np.asarray(emb, dtype=float)
    n = points.shape[0]
    if rows is None or cols is None:
        rows, cols = default_grid(n)
    if rows < 1 or cols < 1 or rows * cols < n:
        raise ValueError(f"a {rows}x{cols} grid cannot hold {n} points")
    if n == 0:
        return GridLayout(rows, cols, np.zeros((0, 2), int), 0.0, np.zeros((0, 2)))
    scaled = scale_to_grid(points, rows, cols)
    rr, cc = np.divmod(np.arange(rows * cols), cols)
    centers = np.column_stack([cc, rr]).astype(float)
    cost = ((scaled[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    point_idx, cell_idx = linear_sum_assignment(cost)
    assignment = np.zeros((n, 2), dtype=int)
    assignment[point_idx] = np.column_stack([rr[cell_idx], cc[cell_idx]])
    return GridLayout(rows, cols, assignment, float(cost[point_idx, cell_idx].sum()), scaled)


class Gridifier(BaseEstimator):
    """``fit_transform`` returns the (row, col) cell of every 2D point."""

    def __init__(self, rows=None, cols=None):
        self.rows = rows
        self.cols = cols

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_min_samples=1)
        self.layout_ = gridify(X, self.rows, self.cols)
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).layout_.assignment


def write_layout_csv(path, layout: GridLayout, emb: Embedding2D, ids=None) -> Path:
    ids = list(range(len(emb.points))) if ids is None else list(ids)
    lines = ["point_id,row,col,x2d,y2d"]
    for pid, (r, c), (x, y) in zip(ids, layout.assignment, emb.points):
        lines.append(f"{pid},{r},{c},{float(x)!r},{float(y)!r}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
