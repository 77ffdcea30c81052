"""Benchmark processing shared by the ``reproduce`` command and the checks."""
from __future__ import annotations

import csv
import io
import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._parallel import ordered_map
from .alignment import Method, ScoringScheme, SimilarityMatrix, pairwise_matrix
from .features import PatchEmbedder
from .geometry import PRESETS, PatchSpec
from .patches import Patch, SkippedFixationWarning, extract_scanpath_patches
from .projection import GridLayout, gridify, reduce_2d
from .recording import Fixation, detect_fixations
from .simulator import BenchmarkEntry, SceneSpec, label_fixations
from .stats import test_battery

MODES = ("classic", "adaptive")
PRESET_NAMES = tuple(PRESETS)
DEPTH_PAIRS = ((0.5, 1.5), (0.5, 3.0), (1.5, 3.0))


@dataclass
class ProcessedScanpath:
    entry: BenchmarkEntry
    fixations: list[Fixation]
    labels: list[str | None]
    patches: dict = field(default_factory=dict)  # (mode, preset) -> list[Patch]
    features: dict = field(default_factory=dict)  # (mode, preset) -> (n, D) array

    @property
    def name(self) -> str:
        return self.entry.name


def process_entry(entry: BenchmarkEntry, scene: SceneSpec | None = None, dispersion_max: float = 1.0,
                  min_duration: float = 100.0, canonical_px: int = 64,
                  modes=MODES, presets=PRESET_NAMES) -> ProcessedScanpath:
    """Fixations, thumbnails and embeddings of one recording for every setting."""
    rec = entry.recording
    fixes = detect_fixations(rec, dispersion_max, min_duration)
    labels = label_fixations(scene, rec, fixes) if scene is not None else [None] * len(fixes)
    out = ProcessedScanpath(entry, fixes, labels)
    embedder = PatchEmbedder()
    for mode, preset in itertools.product(modes, presets):
        spec = PatchSpec.from_preset(preset, mode, canonical_px)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SkippedFixationWarning)
            patches = extract_scanpath_patches(rec, fixes, spec)
        out.patches[(mode, preset)] = patches
        out.features[(mode, preset)] = embedder.transform(patches)
    return out


def process_benchmark(entries, scene: SceneSpec | None = None, **kwargs) -> dict[str, ProcessedScanpath]:
    done = ordered_map(lambda e: process_entry(e, scene, **kwargs), entries)
    return {p.name: p for p in done}


def setting_matrices(processed: dict[str, ProcessedScanpath], method,
                     scheme: ScoringScheme = ScoringScheme()) -> dict[tuple[str, str], SimilarityMatrix]:
    """All-pairs matrix over every recording, per (mode, preset)."""
    names = list(processed)
    settings = list(next(iter(processed.values())).features)
    out = {}
    for key in settings:
        seqs = [processed[n].features[key] for n in names]
        out[key] = pairwise_matrix(seqs, method, scheme, ids=names)
    return out


@dataclass(frozen=True)
class ScoreRow:
    method: str
    depth_a: float
    depth_b: float
    mode: str
    preset: str
    condition: str
    scanpath: int
    score: float


SCORE_FIELDS = ("method", "depth_a", "depth_b", "mode", "preset", "condition", "scanpath", "score")


def depth_pair_scores(processed: dict[str, ProcessedScanpath], matrices: dict, method,
                      pairs=DEPTH_PAIRS) -> list[ScoreRow]:
    """Scanpath ``s`` at depth A against scanpath ``s`` at depth B, same
    condition; normalised scores when the scheme defines them."""
    method = Method.parse(method)
    by_key = {(p.entry.condition, p.entry.depth_level, p.entry.repetition): p.name
              for p in processed.values()}
    rows = []
    for (mode, preset), mat in matrices.items():
        values = mat.normalized if mat.normalized is not None else mat.values
        index = {n: i for i, n in enumerate(mat.ids)}
        for a, b in pairs:
            for (cond, depth, rep), name_a in sorted(by_key.items()):
                if depth != a or (cond, b, rep) not in by_key:
                    continue
                name_b = by_key[(cond, b, rep)]
                rows.append(ScoreRow(method.value, a, b, mode, preset, cond, rep,
                                     float(values[index[name_a], index[name_b]])))
    return rows


def cell_means(rows: list[ScoreRow]) -> dict[tuple, float]:
    """Mean score per (method, depth_a, depth_b, mode, preset)."""
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        groups.setdefault((r.method, r.depth_a, r.depth_b, r.mode, r.preset), []).append(r.score)
    return {k: float(np.mean(v)) for k, v in groups.items()}


def paired_samples(rows: list[ScoreRow], method: str, pair, preset: str) -> tuple[np.ndarray, np.ndarray]:
    """Classic and adaptive scores aligned on (condition, scanpath)."""
    cells = {}
    for r in rows:
        if r.method == method and (r.depth_a, r.depth_b) == tuple(pair) and r.preset == preset:
            cells.setdefault(r.mode, {})[(r.condition, r.scanpath)] = r.score
    keys = sorted(set(cells.get("classic", {})) & set(cells.get("adaptive", {})))
    return (np.array([cells["classic"][k] for k in keys]),
            np.array([cells["adaptive"][k] for k in keys]))


def stats_report(rows: list[ScoreRow]) -> list[str]:
    lines = []
    methods = sorted({r.method for r in rows})
    pairs = sorted({(r.depth_a, r.depth_b) for r in rows})
    presets = [p for p in PRESET_NAMES if any(r.preset == p for r in rows)]
    for method, pair, preset in itertools.product(methods, pairs, presets):
        classic, adaptive = paired_samples(rows, method, pair, preset)
        if len(classic) == 0:
            continue
        label = f"{method}.{pair[0]:g}-{pair[1]:g}.{preset}"
        lines.append(f"{label}.mean_classic={float(classic.mean())!r}")
        lines.append(f"{label}.mean_adaptive={float(adaptive.mean())!r}")
        lines += test_battery(classic, adaptive, label)
    return lines


def scores_csv(rows: list[ScoreRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCORE_FIELDS)
    for r in rows:
        w.writerow([r.method, repr(r.depth_a), repr(r.depth_b), r.mode, r.preset, r.condition,
                    r.scanpath, repr(r.score)])
    return buf.getvalue()


def read_scores_csv(text: str) -> list[ScoreRow]:
    rows = []
    for i, rec in enumerate(csv.DictReader(io.StringIO(text)), 1):
        try:
            rows.append(ScoreRow(rec["method"], float(rec["depth_a"]), float(rec["depth_b"]),
                                 rec["mode"], rec["preset"], rec["condition"], int(rec["scanpath"]),
                                 float(rec["score"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"scores row {i}: {exc}") from None
    return rows


def participant_projection(processed: dict[str, ProcessedScanpath], participant: str, mode: str,
                           preset: str, seed: int = 0) -> tuple[GridLayout, list[Patch], list]:
    """Gridded 2D layout of every fixation one participant made, all depths."""
    feats, patches, labels = [], [], []
    for p in processed.values():
        if p.entry.participant != participant:
            continue
        ps = p.patches[(mode, preset)]
        if len(ps) != len(p.fixations):
            # adaptive mode drops fixations without depth; keep labels aligned
            keep = {q.fixation_id for q in ps}
            lab = [l for i, l in enumerate(p.labels) if i in keep]
        else:
            lab = list(p.labels)
        feats.append(p.features[(mode, preset)])
        patches += ps
        labels += lab
    if not patches:
        raise ValueError(f"no fixations for participant {participant!r}")
    layout = gridify(reduce_2d(np.vstack(feats), "pca", seed))
    return layout, patches, labels


def intra_label_distance(layout: GridLayout, labels) -> float:
    """Mean Euclidean grid distance over pairs of points sharing a label."""
    cells = np.asarray(layout.assignment, dtype=float)
    dists = [float(np.hypot(*(cells[i] - cells[j])))
             for i, j in itertools.combinations(range(len(labels)), 2)
             if labels[i] is not None and labels[i] == labels[j]]
    if not dists:
        raise ValueError("no two points share a label")
    return float(np.mean(dists))
