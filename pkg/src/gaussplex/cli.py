"""Command-line front end: dataset generators, the landmark/complex/
persistence pipeline, artifact checking, and SVG plots.

Every artifact-producing run also writes a manifest recording the fully
resolved configuration, library version, per-stage timings, and complex
sizes; ``pipeline --from-manifest`` reruns a manifest and reproduces the
artifact files byte for byte on the same build.

Exit codes: 0 success, 2 input error, 3 solver failure, 4 invariant-check
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, datagen, parallel, plots
from .alpha import AlphaComplex, build_alpha, power_diagram_from_cover, vertex_positions
from .errors import InputError, SolverFailure
from .filtration import (FilteredComplex, alpha_filtration, check_interleaving,
                         witness_weights)
from .landmarks import (CoverParams, ReferenceSet, select_landmarks,
                        superlevel_reference, verify_cover)
from .mixture import (DensityCutoff, GaussianMixture, MaxGaussianCover,
                      PointCloud)
from .persistence import compute_persistence, read_barcode_csv, write_barcode_csv

# parameters the experiments in the source material used; presets and the
# defaults table test key off this
EXAMPLE_DEFAULTS = {
    "geyser": {"h": 0.05, "d0": 0.03, "s": 0.5, "max_dim": 2,
               "reference": "grid:10000"},
    "torus": {"h": 0.3, "d0": 0.005, "s": 0.6, "max_dim": 3,
              "weights": "radial", "gen": "torus", "n": 3000},
    "conf3": {"h": 0.25, "d0": 0.006, "s": 0.4, "max_dim": 3,
              "gen": "conf3", "n": 20000},
    "ising": {"h": 2.0, "d0": 0.001, "s": 0.4, "max_dim": 3,
              "gen": "ising", "graph": "interval:30", "beta": 1.5,
              "trials": 20000, "diffuse_t": 10.0},
    "patches": {"h": 0.16, "s": 0.5, "r": 0.3, "l": 11},
}


class CheckFailure(RuntimeError):
    pass


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    parallel.set_max_threads(args.threads)
    written: list[Path] = []
    try:
        args.func(args, written)
        return 0
    except InputError as exc:
        _cleanup(written)
        print(f"error [{args.command}/input]: {exc}", file=sys.stderr)
        return 2
    except SolverFailure as exc:
        _cleanup(written)
        print(f"error [{args.command}/solver]: {exc} {exc.diagnostics}",
              file=sys.stderr)
        return 3
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        _cleanup(written)
        print(f"error [{args.command}/io]: {exc}", file=sys.stderr)
        return 2


def _cleanup(written):
    for path in written:
        try:
            Path(path).unlink()
        except OSError:
            pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaussplex",
        description="Density-filtered simplicial complexes from Gaussian kernel sums",
    )
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads for data-parallel stages")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("gen", help="generate a dataset")
    gsub = p.add_subparsers(dest="kind", required=True)

    g = gsub.add_parser("torus")
    g.add_argument("--n", type=int, default=EXAMPLE_DEFAULTS["torus"]["n"])
    g.add_argument("--noise-sd", type=float, default=datagen.TORUS_NOISE_SD)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--radial-weights", action="store_true")
    g.add_argument("--out-prefix", required=True)
    g.set_defaults(func=cmd_gen_torus)

    g = gsub.add_parser("conf3")
    g.add_argument("--n", type=int, default=EXAMPLE_DEFAULTS["conf3"]["n"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-prefix", required=True)
    g.set_defaults(func=cmd_gen_conf3)

    g = gsub.add_parser("ising")
    g.add_argument("--graph", default=EXAMPLE_DEFAULTS["ising"]["graph"])
    g.add_argument("--beta", type=float, default=EXAMPLE_DEFAULTS["ising"]["beta"])
    g.add_argument("--trials", type=int, default=EXAMPLE_DEFAULTS["ising"]["trials"])
    g.add_argument("--sweeps-per-trial", type=int, default=2)
    g.add_argument("--burn-in", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--max-transitions", type=int, default=None)
    g.add_argument("--diffuse-t", type=float,
                   default=EXAMPLE_DEFAULTS["ising"]["diffuse_t"],
                   help="Laplacian diffusion time; 0 disables")
    g.add_argument("--out-prefix", required=True)
    g.set_defaults(func=cmd_gen_ising)

    p = sub.add_parser("landmarks", help="select a max-of-Gaussians cover")
    _cloud_args(p)
    p.add_argument("--d0", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--reference", default="data",
                   help='"data" or "grid:N" (grid supported for 1D/2D clouds)')
    p.add_argument("--rule", default="densest", choices=("densest", "greedy-ratio"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_landmarks)

    p = sub.add_parser("complex", help="build the weighted alpha complex")
    p.add_argument("--cover", required=True)
    p.add_argument("--max-dim", type=int, default=3)
    p.add_argument("--level-cap", type=float, default=None,
                   help="explicit weight cap; default -log(d0) - log(s) if both given")
    p.add_argument("--d0", type=float, default=None)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--edge-prefilter", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_complex)

    p = sub.add_parser("persist", help="density weights and barcode for a complex")
    _cloud_args(p)
    p.add_argument("--complex", dest="complex_path", required=True)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_persist)

    p = sub.add_parser("pipeline", help="run all stages end to end")
    p.add_argument("--from-manifest", default=None,
                   help="rerun the configuration stored in a manifest")
    p.add_argument("--preset", choices=sorted(EXAMPLE_DEFAULTS),
                   default=None)
    _cloud_args(p, required=False)
    p.add_argument("--gen", choices=("torus", "conf3"), default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--noise-sd", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d0", type=float, default=None)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--max-dim", type=int, default=None)
    p.add_argument("--level-cap", type=float, default=None)
    p.add_argument("--reference", default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("plot", help="draw a complex as SVG")
    p.add_argument("--complex", dest="complex_path", required=True)
    p.add_argument("--filtered", default=None,
                   help="color by these weights instead of alpha weights")
    p.add_argument("--coords", choices=("landmarks", "barycenters"),
                   default="landmarks")
    p.add_argument("--fill-triangles", action="store_true")
    p.add_argument("--project", default=None,
                   help='for >2D landmarks: "random:SEED" orthonormal projection')
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("barcode-plot", help="draw a barcode CSV as SVG")
    p.add_argument("--barcode", required=True)
    p.add_argument("--min-length", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_barcode_plot)

    p = sub.add_parser("patches", help="project image patches onto the sphere")
    p.add_argument("--images", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--digit", type=int, required=True)
    p.add_argument("--l", type=int, default=EXAMPLE_DEFAULTS["patches"]["l"])
    p.add_argument("--r", type=float, default=EXAMPLE_DEFAULTS["patches"]["r"])
    p.add_argument("--mode", choices=("full-gradient", "quadratic-only"),
                   default="full-gradient")
    p.add_argument("--per-digit", type=int, default=50)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_patches)

    p = sub.add_parser("check", help="verify artifacts against their invariants")
    _cloud_args(p)
    p.add_argument("--d0", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--cover", required=True)
    p.add_argument("--complex", dest="complex_path", required=True)
    p.add_argument("--filtered", required=True)
    p.add_argument("--samples", type=int, default=10000)
    p.set_defaults(func=cmd_check)

    return parser


def _cloud_args(p, required=True):
    p.add_argument("--cloud", required=required, default=None,
                   help="point cloud CSV (headerless) or JSON")
    p.add_argument("--h", type=float, required=required, default=None)
    p.add_argument("--weights", choices=("uniform", "radial", "file"),
                   default="uniform",
                   help='"file" uses weights stored in a cloud JSON')


# ---------------------------------------------------------------------------
# shared loading helpers


def load_cloud(path, weights_mode="uniform"):
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such cloud file: {path}")
    file_weights = None
    if path.suffix == ".json":
        cloud, file_weights = PointCloud.from_json(path)
    else:
        cloud = PointCloud.from_csv(path)
    if weights_mode == "uniform":
        weights = None
    elif weights_mode == "radial":
        weights = datagen.radial_weights(cloud)
    elif weights_mode == "file":
        if file_weights is None:
            raise InputError("cloud file carries no weights")
        weights = file_weights
    else:
        raise InputError(f"unknown weights mode {weights_mode!r}")
    return cloud, weights


def make_mixture(cloud, h, weights):
    return GaussianMixture.kde(cloud, h, weights)


def build_reference(f, cloud, d0, spec):
    """"data" for the superlevel subset of the data; "grid:N" for N evenly
    spaced superlevel points of a bounding-box grid (1D/2D only)."""
    if spec == "data":
        return superlevel_reference(f, cloud, DensityCutoff(d0))
    if spec.startswith("grid:"):
        target = int(spec.split(":", 1)[1])
        dim = cloud.dimension
        if dim > 2:
            raise InputError("grid reference supported for 1D/2D clouds only")
        lo = cloud.points.min(axis=0)
        hi = cloud.points.max(axis=0)
        span = np.maximum(hi - lo, 1e-9)
        lo, hi = lo - 0.15 * span, hi + 0.15 * span
        per_axis = 40000 if dim == 1 else 450
        axes = [np.linspace(lo[d], hi[d], per_axis) for d in range(dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        grid = np.column_stack([g.reshape(-1) for g in mesh])
        dens = f.evaluate_many(grid)
        sup = grid[dens >= d0]
        if sup.shape[0] == 0:
            raise InputError("no grid point reaches the density cutoff")
        idx = np.linspace(0, sup.shape[0] - 1, min(target, sup.shape[0])).astype(int)
        return ReferenceSet(PointCloud(sup[np.unique(idx)]), source="grid")
    raise InputError(f"unknown reference spec {spec!r}")


def _write_json(path, doc, written):
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
    written.append(path)


def _write_manifest(path, command, config, timings, extra, written):
    doc = {
        "command": command,
        "config": config,
        "version": __version__,
        "timings": {k: round(v, 6) for k, v in timings.items()},
    }
    doc.update(extra)
    _write_json(path, doc, written)


# ---------------------------------------------------------------------------
# gen


def cmd_gen_torus(args, written):
    t0 = time.perf_counter()
    cloud = datagen.gen_torus(args.n, args.noise_sd, args.seed)
    weights = datagen.radial_weights(cloud) if args.radial_weights else None
    prefix = Path(args.out_prefix)
    cloud.to_csv(prefix.with_suffix(".csv"))
    written.append(prefix.with_suffix(".csv"))
    _write_json(prefix.with_suffix(".json"), cloud.to_json_dict(weights), written)
    config = {"kind": "torus", "n": args.n, "noise_sd": args.noise_sd,
              "seed": args.seed, "radial_weights": bool(args.radial_weights)}
    _write_manifest(prefix.parent / (prefix.name + ".manifest.json"), "gen",
                    config, {"gen": time.perf_counter() - t0}, {}, written)
    print(f"wrote {args.n} torus points -> {prefix}.csv/.json")


def cmd_gen_conf3(args, written):
    t0 = time.perf_counter()
    cloud = datagen.gen_conf3(args.n, args.seed)
    prefix = Path(args.out_prefix)
    cloud.to_csv(prefix.with_suffix(".csv"))
    written.append(prefix.with_suffix(".csv"))
    _write_json(prefix.with_suffix(".json"), cloud.to_json_dict(), written)
    config = {"kind": "conf3", "n": args.n, "seed": args.seed}
    _write_manifest(prefix.parent / (prefix.name + ".manifest.json"), "gen",
                    config, {"gen": time.perf_counter() - t0}, {}, written)
    print(f"wrote {args.n} configuration-space points -> {prefix}.csv/.json")


def cmd_gen_ising(args, written):
    t0 = time.perf_counter()
    graph = datagen.graph_from_name(args.graph)
    params = datagen.IsingParams(beta=args.beta, trials=args.trials,
                                 sweeps_per_trial=args.sweeps_per_trial,
                                 burn_in=args.burn_in, seed=args.seed)
    sample = datagen.sample_ising(graph, params)
    if args.max_transitions is not None:
        sample = datagen.filter_by_transitions(sample, args.max_transitions)
    prefix = Path(args.out_prefix)
    sample.to_csv(prefix.parent / (prefix.name + ".states.csv"))
    written.append(prefix.parent / (prefix.name + ".states.csv"))
    hist = sample.transition_histogram()
    hist_path = prefix.parent / (prefix.name + ".histogram.csv")
    with open(hist_path, "w") as fh:
        fh.write("transitions,count\n")
        for k, c in enumerate(hist):
            fh.write(f"{k},{c}\n")
    written.append(hist_path)
    config = {"kind": "ising", "graph": args.graph, "beta": args.beta,
              "trials": args.trials, "sweeps_per_trial": args.sweeps_per_trial,
              "burn_in": args.burn_in, "seed": args.seed,
              "max_transitions": args.max_transitions,
              "diffuse_t": args.diffuse_t}
    if args.diffuse_t > 0:
        diffused = datagen.diffuse(sample.states.astype(float), graph,
                                   args.diffuse_t)
        PointCloud(diffused).to_csv(prefix.parent / (prefix.name + ".diffused.csv"))
        written.append(prefix.parent / (prefix.name + ".diffused.csv"))
    _write_manifest(prefix.parent / (prefix.name + ".manifest.json"), "gen",
                    config, {"gen": time.perf_counter() - t0}, {}, written)
    print(f"wrote {len(sample)} spin states -> {prefix}.states.csv "
          f"(histogram head: {hist[:5].tolist()})")


# ---------------------------------------------------------------------------
# pipeline stages


def cmd_landmarks(args, written):
    t0 = time.perf_counter()
    cloud, weights = load_cloud(args.cloud, args.weights)
    f = make_mixture(cloud, args.h, weights)
    ref = build_reference(f, cloud, args.d0, args.reference)
    cover = select_landmarks(f, ref, CoverParams(args.s, rule=args.rule))
    _write_json(args.out, cover.to_json_dict(), written)
    config = {"cloud": str(args.cloud), "weights": args.weights, "h": args.h,
              "d0": args.d0, "s": args.s, "reference": args.reference,
              "rule": args.rule}
    _write_manifest(str(args.out) + ".manifest.json", "landmarks", config,
                    {"landmarks": time.perf_counter() - t0},
                    {"n_landmarks": len(cover), "n_reference": len(ref)}, written)
    print(f"selected {len(cover)} landmarks over {len(ref)} reference points")


def cmd_complex(args, written):
    t0 = time.perf_counter()
    with open(args.cover) as fh:
        cover = MaxGaussianCover.from_json_dict(json.load(fh))
    cap = args.level_cap
    if cap is None and args.d0 is not None and args.s is not None:
        cap = -math.log(args.d0) - math.log(args.s)
    pd = power_diagram_from_cover(cover)
    X = build_alpha(pd, max_dim=args.max_dim, level_cap=cap,
                    edge_prefilter=args.edge_prefilter)
    X.to_json(args.out)
    written.append(Path(args.out))
    config = {"cover": str(args.cover), "max_dim": args.max_dim,
              "level_cap": cap, "edge_prefilter": bool(args.edge_prefilter)}
    _write_manifest(str(args.out) + ".manifest.json", "complex", config,
                    {"complex": time.perf_counter() - t0},
                    {"complex_sizes": list(X.counts())}, written)
    print(f"complex sizes by dimension: {X.counts()}")


def cmd_persist(args, written):
    t0 = time.perf_counter()
    cloud, weights = load_cloud(args.cloud, args.weights)
    f = make_mixture(cloud, args.h, weights)
    X = AlphaComplex.from_json(args.complex_path)
    Y = witness_weights(f, X)
    prefix = Path(args.out_prefix)
    Y.to_json(prefix.parent / (prefix.name + ".filtered.json"))
    written.append(prefix.parent / (prefix.name + ".filtered.json"))
    bars = compute_persistence(Y)
    write_barcode_csv(bars, prefix.parent / (prefix.name + ".barcode.csv"))
    written.append(prefix.parent / (prefix.name + ".barcode.csv"))
    config = {"cloud": str(args.cloud), "weights": args.weights, "h": args.h,
              "complex": str(args.complex_path)}
    _write_manifest(prefix.parent / (prefix.name + ".manifest.json"), "persist",
                    config, {"persist": time.perf_counter() - t0},
                    {"n_bars": len(bars)}, written)
    print(f"{len(bars)} bars -> {prefix}.barcode.csv")


def _resolve_pipeline_config(args) -> dict:
    if args.from_manifest:
        with open(args.from_manifest) as fh:
            doc = json.load(fh)
        if doc.get("command") != "pipeline":
            raise InputError("manifest was not produced by the pipeline command")
        config = dict(doc["config"])
        config["out_dir"] = args.out_dir
        return config
    config = {}
    if args.preset:
        config.update(EXAMPLE_DEFAULTS[args.preset])
        config["preset"] = args.preset
    for key in ("cloud", "h", "weights", "gen", "n", "noise_sd", "seed", "d0",
                "s", "max_dim", "level_cap", "reference"):
        val = getattr(args, key, None)
        if val is not None:
            config[key] = val
    config.setdefault("weights", "uniform")
    config.setdefault("reference", "data")
    config.setdefault("max_dim", 3)
    config.setdefault("seed", 0)
    config["out_dir"] = args.out_dir
    for key in ("h", "d0", "s"):
        if key not in config:
            raise InputError(f"pipeline needs --{key} (or a preset providing it)")
    if "cloud" not in config and "gen" not in config:
        raise InputError("pipeline needs --cloud or --gen")
    return config


def cmd_pipeline(args, written):
    config = _resolve_pipeline_config(args)
    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    timings = {}

    t0 = time.perf_counter()
    if config.get("gen") == "torus":
        cloud = datagen.gen_torus(config.get("n", 3000),
                                  config.get("noise_sd", datagen.TORUS_NOISE_SD),
                                  config.get("seed", 0))
        weights = datagen.radial_weights(cloud) \
            if config.get("weights") == "radial" else None
    elif config.get("gen") == "conf3":
        cloud = datagen.gen_conf3(config.get("n", 20000), config.get("seed", 0))
        weights = None
    else:
        cloud, weights = load_cloud(config["cloud"], config.get("weights", "uniform"))
    timings["load"] = time.perf_counter() - t0

    f = make_mixture(cloud, config["h"], weights)
    cutoff = DensityCutoff(config["d0"])
    params = CoverParams(config["s"])

    t0 = time.perf_counter()
    ref = build_reference(f, cloud, config["d0"], config.get("reference", "data"))
    cover = select_landmarks(f, ref, params)
    timings["landmarks"] = time.perf_counter() - t0

    cap = config.get("level_cap")
    if cap is None:
        cap = cutoff.a0 + params.epsilon
    t0 = time.perf_counter()
    X = build_alpha(power_diagram_from_cover(cover),
                    max_dim=config.get("max_dim", 3), level_cap=cap)
    timings["complex"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    Y = witness_weights(f, X)
    timings["weights"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    bars = compute_persistence(Y)
    timings["persistence"] = time.perf_counter() - t0

    _write_json(out_dir / "cover.json", cover.to_json_dict(), written)
    X.to_json(out_dir / "complex.json")
    written.append(out_dir / "complex.json")
    Y.to_json(out_dir / "filtered.json")
    written.append(out_dir / "filtered.json")
    write_barcode_csv(bars, out_dir / "barcode.csv")
    written.append(out_dir / "barcode.csv")
    _write_manifest(out_dir / "manifest.json", "pipeline", config, timings,
                    {"complex_sizes": list(X.counts()),
                     "n_landmarks": len(cover), "n_bars": len(bars),
                     "level_cap_used": cap,
                     "artifacts": ["cover.json", "complex.json",
                                   "filtered.json", "barcode.csv"]},
                    written)
    print(f"pipeline complete: {len(cover)} landmarks, sizes {X.counts()}, "
          f"{len(bars)} bars -> {out_dir}")


# ---------------------------------------------------------------------------
# plots, patches, check


def _random_projection(dim, seed):
    rng = datagen.make_rng(seed)
    M = rng.normal(0.0, 1.0, (dim, 2))
    q, _ = np.linalg.qr(M)
    return q


def cmd_plot(args, written):
    X = AlphaComplex.from_json(args.complex_path)
    if args.filtered:
        weights = FilteredComplex.from_json(args.filtered).weights()
    else:
        weights = {k: r.alpha_weight for k, r in X.simplices.items()}
    pos = vertex_positions(X, args.coords)
    if args.coords == "barycenters":
        # draw the complex on vertex positions; barycenter mode still needs
        # per-vertex anchors
        pos = {k: v for k, v in pos.items() if len(k) == 1}
    dim = next(iter(pos.values())).shape[0]
    if dim == 1:
        pos = {k: np.array([v[0], 0.0]) for k, v in pos.items()}
    elif dim > 2:
        if not args.project:
            raise InputError(
                "landmarks have dimension > 2; pass --project random:SEED or "
                "project the data first (e.g. spectral_projection for Ising runs)")
        kind, _, seed = args.project.partition(":")
        if kind != "random":
            raise InputError(f"unknown projection {args.project!r}")
        P = _random_projection(dim, int(seed or 0))
        pos = {k: v @ P for k, v in pos.items()}
    plots.complex_svg(pos, weights, args.out,
                      fill_triangles=args.fill_triangles)
    written.append(Path(args.out))
    print(f"wrote {args.out}")


def cmd_barcode_plot(args, written):
    bars = read_barcode_csv(args.barcode)
    if args.min_length > 0:
        from .persistence import filter_bars
        bars = filter_bars(bars, args.min_length)
    plots.barcode_svg(bars, args.out)
    written.append(Path(args.out))
    print(f"wrote {args.out}")


def cmd_patches(args, written):
    from .patches import PatchConfig, digit_patch_cloud, read_idx_images, read_idx_labels
    t0 = time.perf_counter()
    images = read_idx_images(args.images)
    labels = read_idx_labels(args.labels)
    config = PatchConfig(l=args.l, intensity_threshold=args.r,
                         intensity_mode=args.mode)
    cloud = digit_patch_cloud(images, labels, args.digit, config,
                              per_digit=args.per_digit)
    prefix = Path(args.out_prefix)
    cloud.to_csv(prefix.with_suffix(".csv"))
    written.append(prefix.with_suffix(".csv"))
    _write_json(prefix.with_suffix(".json"), cloud.to_json_dict(), written)
    cfg = {"images": str(args.images), "labels": str(args.labels),
           "digit": args.digit, "l": args.l, "r": args.r, "mode": args.mode,
           "per_digit": args.per_digit}
    _write_manifest(prefix.parent / (prefix.name + ".manifest.json"), "patches",
                    cfg, {"patches": time.perf_counter() - t0},
                    {"n_points": len(cloud)}, written)
    print(f"kept {len(cloud)} patch features -> {prefix}.csv")


def cmd_check(args, written):
    cloud, weights = load_cloud(args.cloud, args.weights)
    f = make_mixture(cloud, args.h, weights)
    with open(args.cover) as fh:
        cover = MaxGaussianCover.from_json_dict(json.load(fh))
    X = AlphaComplex.from_json(args.complex_path)
    Y = FilteredComplex.from_json(args.filtered)
    cutoff = DensityCutoff(args.d0)
    problems = []

    ref = superlevel_reference(f, cloud, cutoff)
    rep = verify_cover(f, cover, ref, args.s)
    if not rep.passed:
        problems.append(
            f"cover sandwich violated at {rep.lower_violations} + "
            f"{rep.upper_violations} points (worst margin "
            f"{min(rep.min_lower_margin, rep.min_upper_margin):.3e})")

    pdg = power_diagram_from_cover(cover)
    rng = datagen.make_rng(0)
    lo = cloud.points.min(axis=0)
    hi = cloud.points.max(axis=0)
    xs = rng.uniform(lo, hi, (1000, cloud.dimension))
    ident = np.abs(pdg.weight_function(xs)
                   + 2.0 * cover.scale**2 * np.log(cover.evaluate_many(xs)))
    if ident.max() > 1e-9 * max(1.0, np.abs(pdg.powers).max()):
        problems.append(f"power-diagram identity off by {ident.max():.3e}")

    try:
        X.validate()
    except InputError as exc:
        problems.append(f"alpha complex invalid: {exc}")

    epsilon = -math.log(args.s)
    n = min(args.samples, len(cloud))
    sample_idx = np.linspace(0, len(cloud) - 1, n).astype(int)
    rep2 = check_interleaving(f, cover, X, Y, cutoff, epsilon,
                              samples=cloud.points[sample_idx])
    if not rep2.passed:
        problems.append(
            f"interleaving: {len(rep2.violations)} weight violations, "
            f"{rep2.sample_containment_failures} containment failures")

    if problems:
        raise CheckFailure("; ".join(problems))
    print(f"all checks passed: cover sandwich on {len(ref)} points, "
          f"power identity, complex invariants, interleaving on "
          f"{rep2.n_simplices} simplices / {rep2.n_samples} samples")


if __name__ == "__main__":
    sys.exit(main())
