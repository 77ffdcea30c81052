"""Command-line entry point: ``gazedepth <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import hashlib
import math
import sys
import warnings
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from ._seeding import derive_seed
from .alignment import Method, Normalize, ScoringScheme, pairwise_matrix
from .features import PatchEmbedder, export_features, import_features
from .geometry import PRESETS, PatchMode, PatchSpec
from .patches import extract_scanpath_patches, load_patches, save_patches
from .projection import gridify, reduce_2d, write_layout_csv
from .recording import Fixation, detect_fixations, load_recording
from . import pipeline as pl
from .render import render_gaze_stripes, render_projection_grid, save_png
from . import simulator as sim

DEFAULTS = {
    "seed": 0, "scanpaths": 7, "depths": "0.5,1.5,3.0", "mode": "adaptive", "preset": "mid",
    "theta_deg": None, "length_m": None, "canonical_px": 64, "dispersion_deg": 1.0,
    "min_duration_ms": 100.0, "method": "sw", "gap_penalty": 0.5, "indel_cost": 1.0,
    "normalize": "max", "tile_px": 64, "bin_ms": None, "participant": "P1",
}
_CONVERT = {"seed": int, "scanpaths": int, "canonical_px": int, "tile_px": int,
            "theta_deg": float, "length_m": float, "dispersion_deg": float,
            "min_duration_ms": float, "gap_penalty": float, "indel_cost": float, "bin_ms": float}


class StepError(RuntimeError):
    def __init__(self, step: str, cause: BaseException):
        super().__init__(f"step '{step}' failed: {cause}")
        self.step = step


@contextmanager
def step(name: str):
    """Tag any failure inside the block with the pipeline step name."""
    try:
        yield
    except StepError:
        raise
    except Exception as exc:
        raise StepError(name, exc) from exc


# ------------------------------------------------------------------ config

def parse_config(text: str) -> dict:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {n}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise ValueError(f"config line {n}: unknown key {key!r}")
        out[key] = _CONVERT.get(key, str)(value)
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(parse_config(Path(args.config).read_text(encoding="utf-8")))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _depths(cfg) -> tuple[float, ...]:
    return tuple(float(v) for v in str(cfg["depths"]).split(","))


def _scheme(cfg) -> ScoringScheme:
    return ScoringScheme(gap_penalty=cfg["gap_penalty"], indel_cost=cfg["indel_cost"],
                         normalize=Normalize(cfg["normalize"]))


def _patch_spec(cfg) -> PatchSpec:
    mode = PatchMode.parse(cfg["mode"])
    if mode is PatchMode.CLASSIC and cfg["theta_deg"] is not None:
        return PatchSpec(mode, theta=math.radians(cfg["theta_deg"]), canonical_px=cfg["canonical_px"])
    if mode is PatchMode.DEPTH_ADAPTIVE and cfg["length_m"] is not None:
        return PatchSpec(mode, actual_length=cfg["length_m"], canonical_px=cfg["canonical_px"])
    return PatchSpec.from_preset(cfg["preset"], mode, cfg["canonical_px"])


def _provenance(cfg, command: str, **extra) -> dict:
    keys = sorted(DEFAULTS)
    digest = hashlib.sha256("\n".join(f"{k}={cfg.get(k)}" for k in keys).encode()).hexdigest()[:16]
    meta = {"command": command, "gazedepth_version": __version__, "seed": str(cfg.get("seed")),
            "config_sha256_16": digest}
    meta.update({k: str(v) for k, v in extra.items()})
    return meta


def write_meta(path, meta: dict) -> Path:
    path = Path(path)
    side = path / "provenance.meta" if path.is_dir() else path.with_name(path.name + ".meta")
    side.write_text("".join(f"{k}={v}\n" for k, v in sorted(meta.items())), encoding="utf-8")
    return side


def _write_text(path, text: str, meta: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    write_meta(path, meta)
    return path


# --------------------------------------------------------- fixation files

FIXATION_FIELDS = ("id", "start_ms", "end_ms", "centroid_x", "centroid_y", "depth_m",
                   "first_sample", "end_sample")


def fixations_csv(fixes: list[Fixation]) -> str:
    lines = [",".join(FIXATION_FIELDS)]
    for k, f in enumerate(fixes):
        depth = "" if f.depth is None else repr(f.depth)
        lines.append(f"{k},{f.start!r},{f.end!r},{f.centroid_x!r},{f.centroid_y!r},{depth},"
                     f"{f.sample_range[0]},{f.sample_range[1]}")
    return "\n".join(lines) + "\n"


def read_fixations_csv(path) -> list[Fixation]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, row in enumerate(csv.DictReader(fh), 1):
            try:
                out.append(Fixation(float(row["start_ms"]), float(row["end_ms"]),
                                    float(row["centroid_x"]), float(row["centroid_y"]),
                                    float(row["depth_m"]) if row["depth_m"] else None,
                                    (int(row["first_sample"]), int(row["end_sample"]))))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: row {n}: {exc}") from None
    return out


def _sequences(args) -> tuple[list[str], list[np.ndarray], list]:
    """Feature sequences from ``--features`` files or embedded ``--patches`` dirs."""
    if args.features:
        seqs = [np.array([v.values for v in import_features(p)]) for p in args.features]
        return [Path(p).stem for p in args.features], seqs, [None] * len(seqs)
    embedder = PatchEmbedder()
    patches = [load_patches(d) for d in args.patches]
    return [Path(d).name for d in args.patches], [embedder.transform(p) for p in patches], patches


# ------------------------------------------------------------- subcommands

def cmd_simulate(args, cfg):
    out = Path(args.out)
    scene = sim.build_benchmark_scene()
    if args.approach:
        with step("simulate"):
            rec = sim.generate_approach_recording(scene, seed=derive_seed(cfg["seed"], "approach"))
            sim.write_recording(rec, out)
            write_meta(out, _provenance(cfg, "simulate", task="approach"))
        return
    with step("simulate"):
        entries = sim.generate_benchmark(cfg["seed"], cfg["scanpaths"], _depths(cfg), scene)
    with step("write recordings"):
        for e in entries:
            sim.write_recording(e.recording, out / e.name)
        out.mkdir(parents=True, exist_ok=True)
        write_meta(out, _provenance(cfg, "simulate", recordings=len(entries)))


def cmd_fixations(args, cfg):
    with step("load recording"):
        rec = load_recording(args.recording)
    with step("fixations"):
        fixes = detect_fixations(rec, cfg["dispersion_deg"], cfg["min_duration_ms"])
    out = Path(args.out) if args.out else Path(args.recording) / "fixations.csv"
    _write_text(out, fixations_csv(fixes), _provenance(cfg, "fixations", recording=args.recording))
    print(f"{len(fixes)} fixations -> {out}")


def cmd_extract(args, cfg):
    with step("load recording"):
        rec = load_recording(args.recording)
    with step("fixations"):
        if args.fixations:
            fixes = read_fixations_csv(args.fixations)
        else:
            fixes = detect_fixations(rec, cfg["dispersion_deg"], cfg["min_duration_ms"])
    with step("extract"):
        spec = _patch_spec(cfg)
        patches = extract_scanpath_patches(rec, fixes, spec)
        out = save_patches(patches, args.out)
        write_meta(out, _provenance(cfg, "extract", recording=args.recording, mode=spec.mode.value,
                                    preset=cfg["preset"]))
    widths = [p.crop_rect[2] for p in patches]
    print(f"{len(patches)} patches (crop widths {min(widths, default=0)}..{max(widths, default=0)}) -> {out}")


def cmd_embed(args, cfg):
    with step("load patches"):
        patches = load_patches(args.patches)
    with step("embed"):
        X = PatchEmbedder().transform(patches)
    with step("write features"):
        out = export_features(args.out, X)
        write_meta(out, _provenance(cfg, "embed", patches=args.patches, embedder="builtin-512"))


def cmd_compare(args, cfg):
    with step("load sequences"):
        ids, seqs, _ = _sequences(args)
    with step("compare"):
        mat = pairwise_matrix(seqs, Method.parse(cfg["method"]), _scheme(cfg), ids=ids)
    text = mat.to_csv(use_normalized=args.normalized)
    if args.out:
        _write_text(args.out, text, _provenance(cfg, "compare", method=mat.method.value))
    else:
        sys.stdout.write(text)


def cmd_project(args, cfg):
    with step("load sequences"):
        ids, seqs, patches = _sequences(args)
    with step("project"):
        X = np.vstack(seqs)
        emb = reduce_2d(X, "pca", cfg["seed"])
        layout = gridify(emb)
    point_ids = [f"{sid}:{k}" for sid, s in zip(ids, seqs) for k in range(len(s))]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with step("write layout"):
        csv_path = out.with_suffix(".csv")
        write_layout_csv(csv_path, layout, emb, point_ids)
        write_meta(csv_path, _provenance(cfg, "project", reducer="pca"))
    if patches[0] is not None:
        with step("render"):
            flat = [p for ps in patches for p in ps]
            save_png(render_projection_grid(layout, flat, cfg["tile_px"]), out,
                     _provenance(cfg, "project", reducer="pca", rows=layout.rows, cols=layout.cols))


def cmd_stripes(args, cfg):
    with step("load patches"):
        seqs = [(Path(d).name, load_patches(d)) for d in args.patches]
    with step("render"):
        img = render_gaze_stripes(seqs, cfg["tile_px"], cfg["bin_ms"])
        save_png(img, args.out, _provenance(cfg, "stripes"))


def cmd_stats(args, cfg):
    with step("load scores"):
        rows = pl.read_scores_csv(Path(args.scores).read_text(encoding="utf-8"))
    with step("stats"):
        text = "\n".join(pl.stats_report(rows)) + "\n"
    if args.out:
        _write_text(args.out, text, _provenance(cfg, "stats", scores=args.scores))
    else:
        sys.stdout.write(text)


def reproduce(cfg: dict, out) -> Path:
    """Full chain from simulation to figures; every artifact gets a sidecar."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    prov = _provenance(cfg, "reproduce")
    (out / "config.txt").write_text(
        "".join(f"{k}={'' if cfg[k] is None else cfg[k]}\n" for k in sorted(DEFAULTS)), encoding="utf-8")
    write_meta(out / "config.txt", prov)
    scene = sim.build_benchmark_scene()
    with step("simulate"):
        entries = sim.generate_benchmark(cfg["seed"], cfg["scanpaths"], _depths(cfg), scene)
        approach = sim.generate_approach_recording(scene, seed=derive_seed(cfg["seed"], "approach"))
    with step("write recordings"):
        for e in entries:
            write_meta(sim.write_recording(e.recording, out / "recordings" / e.name), prov)
        write_meta(sim.write_recording(approach, out / "recordings" / "APPROACH"), prov)
    with step("fixations"):
        processed = pl.process_benchmark(entries, scene, dispersion_max=cfg["dispersion_deg"],
                                         min_duration=cfg["min_duration_ms"],
                                         canonical_px=cfg["canonical_px"])
        for name, p in processed.items():
            _write_text(out / "fixations" / f"{name}.csv", fixations_csv(p.fixations), prov)
    with step("extract"):
        for name, p in processed.items():
            for (mode, preset), patches in p.patches.items():
                d = save_patches(patches, out / "patches" / f"{mode}_{preset}" / name)
                write_meta(d, {**prov, "mode": mode, "preset": preset})
    with step("embed"):
        for name, p in processed.items():
            for (mode, preset), X in p.features.items():
                f = out / "features" / f"{mode}_{preset}" / f"{name}.txt"
                f.parent.mkdir(parents=True, exist_ok=True)
                export_features(f, X)
                write_meta(f, {**prov, "mode": mode, "preset": preset, "embedder": "builtin-512"})
    rows = []
    scheme = _scheme(cfg)
    with step("compare"):
        for method in (Method.SW, Method.LEVENSHTEIN):
            mats = pl.setting_matrices(processed, method, scheme)
            for (mode, preset), mat in mats.items():
                _write_text(out / "matrices" / f"{method.value}_{mode}_{preset}.csv", mat.to_csv(),
                            {**prov, "mode": mode, "preset": preset, "method": method.value})
            rows += pl.depth_pair_scores(processed, mats, method)
        _write_text(out / "fig3_scores.csv", pl.scores_csv(rows),
                    {**prov, "pairing": "scanpath s at depth A vs s at depth B, same condition"})
    with step("stats"):
        _write_text(out / "stats_report.txt", "\n".join(pl.stats_report(rows)) + "\n", prov)
    with step("render"):
        spec_mid = {m: PatchSpec.from_preset(cfg["preset"], m, cfg["canonical_px"]) for m in pl.MODES}
        fixes = detect_fixations(approach, cfg["dispersion_deg"], cfg["min_duration_ms"])
        for mode in pl.MODES:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                patches = extract_scanpath_patches(approach, fixes, spec_mid[mode])
            img = render_gaze_stripes([(f"APPROACH {mode}", patches)], cfg["tile_px"], cfg["bin_ms"])
            save_png(img, out / "figures" / f"stripes_approach_{mode}.png",
                     {**prov, "mode": mode, "preset": cfg["preset"]})
            seqs = [(name, p.patches[(mode, cfg["preset"])]) for name, p in processed.items()
                    if p.entry.participant == cfg["participant"]]
            img = render_gaze_stripes(seqs, cfg["tile_px"], cfg["bin_ms"])
            save_png(img, out / "figures" / f"stripes_{cfg['participant']}_{mode}.png",
                     {**prov, "mode": mode, "preset": cfg["preset"]})
            layout, patches, labels = pl.participant_projection(processed, cfg["participant"], mode,
                                                                cfg["preset"], cfg["seed"])
            cohesion = pl.intra_label_distance(layout, labels)
            save_png(render_projection_grid(layout, patches, cfg["tile_px"]),
                     out / "figures" / f"projection_{cfg['participant']}_{mode}.png",
                     {**prov, "mode": mode, "preset": cfg["preset"], "reducer": "pca",
                      "intra_object_grid_distance": repr(cohesion)})
    return out


def cmd_reproduce(args, cfg):
    out = reproduce(cfg, args.out)
    print(f"artifacts -> {out}")


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazedepth",
                                     description="Depth-adaptive gaze thumbnails and scanpath comparison.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value file; flags override it")
        p.set_defaults(func=fn)
        return p

    def common(p, *keys):
        flags = {
            "seed": dict(type=int), "scanpaths": dict(type=int),
            "depths": dict(help="comma-separated depth levels in metres"),
            "mode": dict(choices=[m.value for m in PatchMode]),
            "preset": dict(choices=sorted(PRESETS)),
            "theta_deg": dict(type=float, help="classic patch angle, overrides the preset"),
            "length_m": dict(type=float, help="adaptive physical length, overrides the preset"),
            "canonical_px": dict(type=int), "dispersion_deg": dict(type=float),
            "min_duration_ms": dict(type=float),
            "method": dict(choices=[m.value for m in Method]),
            "gap_penalty": dict(type=float), "indel_cost": dict(type=float),
            "normalize": dict(choices=[n.value for n in Normalize]),
            "tile_px": dict(type=int), "bin_ms": dict(type=float), "participant": dict(),
        }
        for k in keys:
            p.add_argument("--" + k.replace("_", "-"), dest=k, default=None, **flags[k])

    p = add("simulate", cmd_simulate, "generate synthetic recordings")
    p.add_argument("--out", required=True)
    p.add_argument("--approach", action="store_true", help="the walk-toward-the-guitar recording")
    common(p, "seed", "scanpaths", "depths")

    p = add("fixations", cmd_fixations, "detect fixations in a recording")
    p.add_argument("recording")
    p.add_argument("--out")
    common(p, "dispersion_deg", "min_duration_ms")

    p = add("extract", cmd_extract, "cut thumbnails at fixations")
    p.add_argument("recording")
    p.add_argument("--out", required=True)
    p.add_argument("--fixations", help="fixations.csv to use instead of detecting")
    common(p, "mode", "preset", "theta_deg", "length_m", "canonical_px", "dispersion_deg",
           "min_duration_ms")

    p = add("embed", cmd_embed, "compute 512-D features for a patch directory")
    p.add_argument("patches")
    p.add_argument("--out", required=True)

    for name, fn, help_text in (("compare", cmd_compare, "pairwise scanpath similarity matrix"),
                                ("project", cmd_project, "gridded 2D projection of thumbnails")):
        p = add(name, fn, help_text)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--features", nargs="+", help="feature files, one scanpath each")
        src.add_argument("--patches", nargs="+", help="patch directories, one scanpath each")
        if name == "compare":
            p.add_argument("--out")
            p.add_argument("--normalized", action="store_true", help="write normalised scores")
            common(p, "method", "gap_penalty", "indel_cost", "normalize")
        else:
            p.add_argument("--out", required=True, help="PNG path; the layout CSV goes next to it")
            common(p, "seed", "tile_px")

    p = add("stripes", cmd_stripes, "Gaze Stripes image from patch directories")
    p.add_argument("--patches", nargs="+", required=True)
    p.add_argument("--out", required=True)
    common(p, "tile_px", "bin_ms")

    p = add("stats", cmd_stats, "test battery over a fig3_scores.csv file")
    p.add_argument("scores")
    p.add_argument("--out")

    p = add("reproduce", cmd_reproduce, "run the whole benchmark chain")
    p.add_argument("--out", required=True)
    common(p, "seed", "scanpaths", "depths", "preset", "canonical_px", "dispersion_deg",
           "min_duration_ms", "gap_penalty", "indel_cost", "normalize", "tile_px", "bin_ms",
           "participant")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
    except (OSError, ValueError) as exc:
        parser.error(f"config: {exc}")
    try:
        args.func(args, cfg)
    except StepError as exc:
        print(f"gazedepth {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
