"""``fugseg`` command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error. Diagnostics go to
stderr; data goes only to the requested output path or stdout.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import FugSegError

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _add_config(p):
    p.add_argument("--config", required=True, help="config file, or the name of a packaged preset (hdl64e, hdl32e, linear, manual14)")
    p.add_argument("--backend", choices=("auto", "python", "compiled"), default="auto", help="kernel backend")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fugseg", description="LiDAR ground segmentation")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("segment", help="segment one scan")
    _add_config(p)
    p.add_argument("--in", dest="input", required=True, help="KITTI .bin scan")
    p.add_argument("--out", required=True, help="output path ('-' for stdout)")
    p.add_argument("--format", choices=("csv", "ply"), default=None, help="default: from the output suffix, else csv")

    p = sub.add_parser("evaluate", help="score a directory of scans against labels")
    _add_config(p)
    p.add_argument("--scans", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--mapping", default=None, help="label mapping file (default: packaged SemanticKITTI mapping)")
    p.add_argument("--limit", type=_positive_int, default=None, help="use only the first N scans")
    p.add_argument("--threads", type=_positive_int, default=1, help="scans processed concurrently")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--out", default=None, help="write the table here instead of stdout")

    p = sub.add_parser("benchmark", help="single-threaded per-stage runtime")
    _add_config(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scans", help="directory of .bin scans")
    src.add_argument("--in", dest="input", nargs="+", help=".bin scan(s)")
    src.add_argument("--synthetic", choices=("flat", "inclined", "curved", "occlusion", "reflection"), help="benchmark on a generated scene")
    p.add_argument("--limit", type=_positive_int, default=None)
    p.add_argument("--repeats", type=_positive_int, default=5)
    p.add_argument("--format", choices=("text", "csv"), default="text")

    p = sub.add_parser("gridsearch", help="rank parameter combinations by mean F1")
    _add_config(p)
    p.add_argument("--scans", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--mapping", default=None)
    p.add_argument("--limit", type=_positive_int, default=None)
    grid = p.add_mutually_exclusive_group(required=True)
    grid.add_argument("--preset", choices=("full",), help="full 5-axis preset grid")
    grid.add_argument(
        "--grid",
        action="append",
        metavar="AXIS=V1,V2,...",
        help="custom axis; delta_alpha and t_delta_slope in degrees, m as a cell count, t_delta_r and t_z in metres",
    )
    p.add_argument("--threads", type=_positive_int, default=1, help="combinations evaluated concurrently")
    p.add_argument("--top", type=_positive_int, default=None, help="print only the best N rows")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--out", default=None)

    p = sub.add_parser("synth", help="generate a synthetic scan with ground truth")
    p.add_argument("--scene", choices=("flat", "inclined", "curved", "occlusion", "reflection"), default="flat")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--name", default="000000", help="file stem for <name>.bin and <name>.label")
    p.add_argument("--noise", type=float, default=None, help="range noise sigma in metres")

    p = sub.add_parser("export-elevation", help="write node heights of one scan as CSV")
    _add_config(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    return parser


def _parse_grid(items):
    import math

    grid = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"--grid expects AXIS=V1,V2,... got {item!r}")
        axis, _, vals = item.partition("=")
        axis = axis.strip()
        try:
            values = [float(v) for v in vals.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"--grid {axis}: values must be numbers") from None
        if axis == "delta_alpha":
            values = [math.radians(v) for v in values]
        elif axis == "t_delta_slope":
            values = [math.tan(math.radians(v)) for v in values]
        elif axis == "m":
            values = [int(v) for v in values]
        elif axis not in ("t_delta_r", "t_z"):
            raise UsageError(f"--grid: unknown axis {axis!r}")
        if not values:
            raise UsageError(f"--grid {axis}: no values")
        grid[axis] = values
    return grid


def _resolve_config(name):
    from .io import default_config_path, load_config

    path = Path(name)
    if not path.exists() and os.sep not in name:
        packaged = Path(default_config_path(path.stem))
        if packaged.exists():
            path = packaged
    return load_config(path)


def _emit(text, out):
    if out is None or out == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")


def _load_pairs(args):
    from .io import load_label_mapping, scan_pairs, semantickitti_mapping

    mapping = load_label_mapping(args.mapping) if args.mapping else semantickitti_mapping()
    pairs = scan_pairs(args.scans, args.labels)
    if args.limit:
        pairs = pairs[: args.limit]
    if not pairs:
        raise FugSegError(f"no .bin scans in {args.scans}")
    return pairs, mapping


def _cmd_segment(args, config):
    from .io import read_point_cloud_bin, write_segmentation
    from .pipeline import run_scan

    fmt = args.format or ("ply" if args.out.lower().endswith(".ply") else "csv")
    scan = read_point_cloud_bin(args.input)
    result = run_scan(scan.points, config)
    write_segmentation(result, scan, args.out, format=fmt)
    return EXIT_OK


def _evaluate_one(pair, config, mapping):
    import time

    from .eval.metrics import compute_metrics
    from .io import read_labels, read_point_cloud_bin
    from .pipeline import run_scan

    scan_path, label_path = pair
    scan = read_point_cloud_bin(scan_path)
    labels = read_labels(label_path)
    t0 = time.perf_counter()
    result = run_scan(scan.points, config)
    ms = 1000.0 * (time.perf_counter() - t0)
    counts, _ = compute_metrics(result.ground, labels, mapping)
    return counts, ms


def _cmd_evaluate(args, config):
    from concurrent.futures import ThreadPoolExecutor

    from .eval.metrics import aggregate_metrics, report_table

    pairs, mapping = _load_pairs(args)
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            out = list(pool.map(lambda p: _evaluate_one(p, config, mapping), pairs))
    else:
        out = [_evaluate_one(p, config, mapping) for p in pairs]
    runtime = sum(ms for _, ms in out) / len(out)
    report = aggregate_metrics([c for c, _ in out], runtime_ms=runtime)
    _emit(report_table([(f"{len(pairs)} scans", report)], args.format), args.out)
    return EXIT_OK


def _cmd_benchmark(args, config):
    from .eval.benchmark import benchmark_runtime
    from .eval.metrics import format_csv, format_table
    from .io import read_point_cloud_bin, scan_pairs

    if args.synthetic:
        from .eval.synth import scene_preset, synth_scene

        scans = [synth_scene(scene_preset(args.synthetic)).points]
    else:
        paths = [p for p, _ in scan_pairs(args.scans)] if args.scans else args.input
        if args.limit:
            paths = paths[: args.limit]
        if not paths:
            raise FugSegError("no scans to benchmark")
        scans = [read_point_cloud_bin(p).points for p in paths]
    rep = benchmark_runtime(scans, config, repeats=args.repeats)
    rows = rep.rows()
    if args.format == "csv":
        _emit(format_csv(rows, ("stage", "mean_ms", "std_ms")), None)
    else:
        text = format_table(rows, ("stage", "mean_ms", "std_ms"))
        text += f"\n{len(scans)} scan(s), {rep.points_per_scan:.0f} points/scan, {args.repeats} repeat(s), backend {rep.backend}, single thread"
        _emit(text, None)
    return EXIT_OK


def _cmd_gridsearch(args, config):
    from .eval.gridsearch import grid_search, gridsearch_table, default_param_grid
    from .io import read_labels, read_point_cloud_bin

    grid = default_param_grid(config.grid.r0, config.grid.r_max) if args.preset else _parse_grid(args.grid)
    pairs, mapping = _load_pairs(args)
    samples = [(read_point_cloud_bin(s).points, read_labels(l)) for s, l in pairs]
    rows = grid_search(samples, grid, base_config=config, mapping=mapping, workers=args.threads)
    if args.top:
        rows = rows[: args.top]
    _emit(gridsearch_table(rows, args.format), args.out)
    return EXIT_OK


def _cmd_synth(args):
    from .eval.synth import scene_preset, synth_scene
    from .io import write_labels, write_point_cloud_bin

    overrides = {} if args.noise is None else {"noise_sigma": args.noise}
    scene = synth_scene(scene_preset(args.scene, seed=args.seed, **overrides))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_point_cloud_bin(scene.record, out / f"{args.name}.bin")
    write_labels(scene.record.labels, out / f"{args.name}.label")
    print(f"{len(scene.truth)} points ({int(scene.truth.sum())} ground): {scene.description}", file=sys.stderr)
    return EXIT_OK


def _cmd_export_elevation(args, config):
    from .io import export_elevation_map, read_point_cloud_bin
    from .pipeline import run_scan

    scan = read_point_cloud_bin(args.input)
    result = run_scan(scan.points, config)
    export_elevation_map(result.nodes, args.out)
    return EXIT_OK


_COMMANDS = {
    "segment": _cmd_segment,
    "evaluate": _cmd_evaluate,
    "benchmark": _cmd_benchmark,
    "gridsearch": _cmd_gridsearch,
    "export-elevation": _cmd_export_elevation,
}


def run_command(argv) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "gridsearch" and args.grid:
            _parse_grid(args.grid)  # validate before touching files
    except UsageError as exc:
        sys.stderr.write(str(exc))
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        if args.command == "synth":
            return _cmd_synth(args)
        if args.backend != "auto":
            from . import _kernels

            _kernels.use_backend(args.backend)
        config = _resolve_config(args.config)
        return _COMMANDS[args.command](args, config)
    except UsageError as exc:
        sys.stderr.write(f"fugseg: error: {exc}\n")
        return EXIT_USAGE
    except (FugSegError, OSError, ValueError) as exc:
        sys.stderr.write(f"fugseg: error: {exc}\n")
        return EXIT_DATA


def main(argv=None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
