"""Patch embeddings, cosine similarity and the plain-text feature file format.

The built-in embedder concatenates, over a 4x4 grid of cells,
8-bin-per-channel colour histograms (384 dims) and 8-bin
magnitude-weighted gradient-orientation histograms (128 dims).
Each histogram block is L1-normalised; a cell without any gradient
keeps an all-zero block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._parallel import ordered_map

DEFAULT_DIM = 512
GRID = 4
BINS = 8


class ZeroNormError(ValueError):
    pass


class FeatureFileError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    norm: float

    @classmethod
    def of(cls, values) -> "FeatureVector":
        v = np.array(values, dtype=float).ravel()
        v.setflags(write=False)
        return cls(v, float(np.linalg.norm(v)))

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def __len__(self):
        return self.dim

    def __eq__(self, other):
        return isinstance(other, FeatureVector) and np.array_equal(self.values, other.values)

    __hash__ = None


def as_matrix(seq) -> np.ndarray:
    """Stack a feature sequence (FeatureVectors or rows) into an (n, D) array."""
    if isinstance(seq, np.ndarray):
        arr = np.asarray(seq, dtype=float)
        return arr.reshape(0, 0) if arr.size == 0 and arr.ndim < 2 else arr
    rows = [s.values if isinstance(s, FeatureVector) else np.asarray(s, dtype=float)
            for s in seq]
    if not rows:
        return np.zeros((0, 0))
    dims = {r.shape[0] for r in rows}
    if len(dims) != 1:
        raise ValueError(f"inconsistent feature dimensions in sequence: {sorted(dims)}")
    return np.vstack(rows)


def _cell_edges(n: int) -> np.ndarray:
    return np.linspace(0, n, GRID + 1).round().astype(int)


def embed_raster(pixels: np.ndarray) -> np.ndarray:
    """512-D descriptor of an RGB uint8 raster."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) raster, got shape {pixels.shape}")
    h, w = pixels.shape[:2]
    ey, ex = _cell_edges(h), _cell_edges(w)

    color_bins = np.minimum(pixels.astype(np.int64) * BINS // 256, BINS - 1)
    gray = pixels.astype(float) @ np.array([0.299, 0.587, 0.114])
    gy, gx = np.gradient(gray) if min(h, w) > 1 else (np.zeros_like(gray),) * 2
    mag = np.hypot(gx, gy)
    ori = np.floor((np.arctan2(gy, gx) + math.pi) / (2 * math.pi / BINS)).astype(int) % BINS

    color = np.zeros((GRID, GRID, 3, BINS))
    grad = np.zeros((GRID, GRID, BINS))
    for i in range(GRID):
        for j in range(GRID):
            cell = (slice(ey[i], ey[i + 1]), slice(ex[j], ex[j + 1]))
            cb = color_bins[cell].reshape(-1, 3)
            if cb.shape[0] == 0:
                continue
            for c in range(3):
                color[i, j, c] = np.bincount(cb[:, c], minlength=BINS) / cb.shape[0]
            m = mag[cell].ravel()
            keep = m > 1e-9
            if keep.any():
                hist = np.bincount(ori[cell].ravel()[keep], weights=m[keep], minlength=BINS)
                grad[i, j] = hist / hist.sum()
    return np.concatenate([color.ravel(), grad.ravel()])


def embed_patch(patch) -> FeatureVector:
    """Deterministic built-in embedding of a :class:`~gazedepth.patches.Patch`."""
    pixels = patch.pixels if hasattr(patch, "pixels") else patch
    return FeatureVector.of(embed_raster(pixels))


class PatchEmbedder(TransformerMixin, BaseEstimator):
    """Transformer wrapping :func:`embed_raster`: patches or rasters in, (n, 512) out."""

    def fit(self, X=None, y=None):
        self.n_features_out_ = DEFAULT_DIM
        return self

    def transform(self, X):
        rows = ordered_map(lambda p: embed_raster(p.pixels if hasattr(p, "pixels") else p), X)
        return np.vstack(rows) if rows else np.zeros((0, DEFAULT_DIM))


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two feature vectors; zero norms raise."""
    va = a.values if isinstance(a, FeatureVector) else np.asarray(a, dtype=float)
    vb = b.values if isinstance(b, FeatureVector) else np.asarray(b, dtype=float)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape[0]} vs {vb.shape[0]}")
    na = a.norm if isinstance(a, FeatureVector) else float(np.linalg.norm(va))
    nb = b.norm if isinstance(b, FeatureVector) else float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ZeroNormError("cosine similarity is undefined for a zero-norm vector")
    return float(np.clip(np.dot(va, vb) / (na * nb), -1.0, 1.0))


def cosine_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """All-pairs cosine similarity between the rows of ``A`` and ``B``."""
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    if (na == 0).any() or (nb == 0).any():
        raise ZeroNormError("cosine similarity is undefined for a zero-norm vector")
    return np.clip((A @ B.T) / np.outer(na, nb), -1.0, 1.0)


# --------------------------------------------------------------- file format

def export_features(path, vectors) -> Path:
    """Write ``dim=<D> count=<N>`` followed by one row of floats per vector."""
    mat = as_matrix(vectors)
    n = mat.shape[0]
    dim = mat.shape[1] if n else 0
    lines = [f"dim={dim} count={n}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in mat]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def import_features(path) -> list[FeatureVector]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FeatureFileError(f"{path}: empty file")
    try:
        header = dict(tok.split("=", 1) for tok in lines[0].split())
        dim, count = int(header["dim"]), int(header["count"])
    except (ValueError, KeyError):
        raise FeatureFileError(f"{path}: bad header {lines[0]!r}; expected 'dim=<D> count=<N>'")
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != count:
        raise FeatureFileError(f"{path}: header declares {count} rows, found {len(body)}")
    out = []
    for row, line in enumerate(body, 1):
        try:
            values = [float(tok) for tok in line.split()]
        except ValueError as exc:
            raise FeatureFileError(f"{path}: row {row}: {exc}") from None
        if len(values) != dim:
            raise FeatureFileError(f"{path}: row {row} has {len(values)} values, expected {dim}")
        out.append(FeatureVector.of(values))
    return out


def features_io(path, direction: str, vectors=None):
    """Single entry point: ``direction`` is ``"import"`` or ``"export"``."""
    if direction == "import":
        return import_features(path)
    if direction == "export":
        export_features(path, vectors if vectors is not None else [])
        return None
    raise ValueError(f"direction must be 'import' or 'export', got {direction!r}")
