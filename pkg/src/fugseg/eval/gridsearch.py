"""Exhaustive parameter search ranked by mean per-scan F1."""
from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigError
from ..io import LabelMapping
from ..pipeline import FugSegConfig, run_scan
from .metrics import REPORT_COLUMNS, aggregate_metrics, compute_metrics, format_csv, format_table

AXES = ("delta_alpha", "m", "t_delta_slope", "t_delta_r", "t_z")

# Preset ranges in user units: degrees, metres of radial resolution, degrees, metres, metres.
SEARCH_RANGES = {
    "delta_alpha_deg": (1.0, 2.0, 3.0, 4.0, 5.0),
    "radial_resolution": (0.5, 1.0, 1.5, 2.0, 2.5),
    "t_delta_slope_deg": (3.0, 5.0, 7.0, 9.0, 11.0),
    "t_delta_r": (3.0, 5.0, 10.0, 15.0, 20.0),
    "t_z": (0.05, 0.10, 0.15, 0.20, 0.25),
}


def cells_for_resolution(resolution: float, r0: float = 0.5, r_max: float = 80.0) -> int:
    return int(round((r_max - r0) / resolution))


def default_param_grid(r0: float = 0.5, r_max: float = 80.0) -> dict:
    """The 5^5 preset grid in internal units (radians, cell count, tangent, m, m)."""
    return {
        "delta_alpha": tuple(math.radians(d) for d in SEARCH_RANGES["delta_alpha_deg"]),
        "m": tuple(cells_for_resolution(r, r0, r_max) for r in SEARCH_RANGES["radial_resolution"]),
        "t_delta_slope": tuple(math.tan(math.radians(d)) for d in SEARCH_RANGES["t_delta_slope_deg"]),
        "t_delta_r": SEARCH_RANGES["t_delta_r"],
        "t_z": SEARCH_RANGES["t_z"],
    }


def combinations(param_grid: dict):
    if not param_grid:
        raise ConfigError("empty parameter grid")
    unknown = set(param_grid) - set(AXES)
    if unknown:
        raise ConfigError(f"unknown grid axes {sorted(unknown)}; allowed {AXES}")
    names = [a for a in AXES if a in param_grid]
    values = [tuple(param_grid[a]) for a in names]
    if any(len(v) == 0 for v in values):
        raise ConfigError("empty parameter grid")
    return [dict(zip(names, combo)) for combo in itertools.product(*values)]


def apply_params(config: FugSegConfig, params: dict) -> FugSegConfig:
    grid, lab, cls = config.grid, config.labeling, config.classify
    if "delta_alpha" in params:
        grid = replace(grid, delta_alpha=float(params["delta_alpha"]))
    if "m" in params:
        if grid.radial_division == "manual":
            raise ConfigError("the m axis cannot be combined with manual radial boundaries")
        grid = replace(grid, num_cells_m=int(params["m"]))
    if "t_delta_slope" in params:
        lab = replace(lab, t_delta_slope=float(params["t_delta_slope"]))
    if "t_delta_r" in params:
        lab = replace(lab, t_delta_r=float(params["t_delta_r"]))
    if "t_z" in params:
        cls = replace(cls, t_z=float(params["t_z"]))
    return replace(config, grid=grid, labeling=lab, classify=cls)


_SHARED = {}


def _init_worker(samples, mapping):
    _SHARED["samples"] = samples
    _SHARED["mapping"] = mapping


def _evaluate(config: FugSegConfig, params: dict, samples=None, mapping=None) -> dict:
    samples = _SHARED["samples"] if samples is None else samples
    mapping = _SHARED.get("mapping") if mapping is None else mapping
    cfg = apply_params(config, params)
    counts, f1s = [], []
    t0 = time.perf_counter()
    for pts, truth in samples:
        res = run_scan(pts, cfg)
        c, rep = compute_metrics(res.ground, truth, mapping)
        counts.append(c)
        f1s.append(rep.f1)
    runtime_ms = 1000.0 * (time.perf_counter() - t0) / len(samples)
    micro = aggregate_metrics(counts, runtime_ms)
    return {**params, "mean_f1": float(np.mean(f1s)), **micro.as_dict()}


def grid_search(
    samples: Sequence,
    param_grid: dict,
    base_config: Optional[FugSegConfig] = None,
    mapping: Optional[LabelMapping] = None,
    workers: int = 1,
    executor: str = "process",
) -> list:
    """Evaluate every combination; rows sorted by mean per-scan F1, best first.

    ``samples`` is a sequence of ``(points, truth)`` pairs. Truth is a
    boolean ground mask, or class ids when ``mapping`` is given. Each row
    also carries micro-aggregated metrics over all samples. Combinations run
    in parallel across ``workers``; each pipeline run stays single-threaded.
    """
    combos = combinations(param_grid)
    samples = [(np.ascontiguousarray(getattr(p, "points", p), dtype=np.float64), np.asarray(t)) for p, t in samples]
    if not samples:
        raise ConfigError("grid search needs at least one scan")
    config = base_config or FugSegConfig()
    for params in combos:  # fail fast on invalid combinations
        apply_params(config, params)

    if workers <= 1 or len(combos) == 1:
        rows = [_evaluate(config, p, samples, mapping) for p in combos]
    elif executor == "thread":
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda p: _evaluate(config, p, samples, mapping), combos))
    elif executor == "process":
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(samples, mapping)) as pool:
            rows = list(pool.map(_evaluate, [config] * len(combos), combos, chunksize=max(1, len(combos) // (4 * workers))))
    else:
        raise ConfigError(f"executor must be 'process' or 'thread', not {executor!r}")
    order = sorted(range(len(rows)), key=lambda k: (-rows[k]["mean_f1"], k))
    return [{"rank": n + 1, **rows[k]} for n, k in enumerate(order)]


def gridsearch_table(rows, fmt: str = "text") -> str:
    axes = [a for a in AXES if rows and a in rows[0]]
    if fmt == "text":
        display = []
        for r in rows:
            d = dict(r)
            if "delta_alpha" in d:
                d["delta_alpha"] = math.degrees(d["delta_alpha"])
            if "t_delta_slope" in d:
                d["t_delta_slope"] = math.degrees(math.atan(d["t_delta_slope"]))
            display.append(d)
        names = ["rank"] + [{"delta_alpha": "delta_alpha_deg", "t_delta_slope": "t_delta_slope_deg"}.get(a, a) for a in axes]
        for d in display:
            if "delta_alpha" in d:
                d["delta_alpha_deg"] = d.pop("delta_alpha")
            if "t_delta_slope" in d:
                d["t_delta_slope_deg"] = d.pop("t_delta_slope")
        return format_table(display, names + ["mean_f1"] + list(REPORT_COLUMNS))
    return format_csv(rows, ["rank"] + axes + ["mean_f1"] + list(REPORT_COLUMNS) + ["tp", "fp", "tn", "fn"])
