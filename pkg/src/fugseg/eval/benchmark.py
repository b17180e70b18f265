"""Single-threaded runtime measurement of the pipeline stages."""
from __future__ import annotations

import os
import statistics
from dataclasses import dataclass

import numpy as np

from ..pipeline import STAGES, FugSegConfig, run_scan

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")


@dataclass(frozen=True)
class StageTiming:
    mean_ms: float
    std_ms: float


@dataclass(frozen=True)
class BenchmarkReport:
    stages: dict  # name -> StageTiming
    total: StageTiming
    runs: int
    points_per_scan: float
    backend: str

    def rows(self):
        out = [{"stage": s, "mean_ms": t.mean_ms, "std_ms": t.std_ms} for s, t in self.stages.items()]
        out.append({"stage": "total", "mean_ms": self.total.mean_ms, "std_ms": self.total.std_ms})
        return out

    @property
    def dominant_stage(self) -> str:
        return max(self.stages, key=lambda s: self.stages[s].mean_ms)


def pin_single_thread():
    """Ask BLAS-style pools for one worker; the pipeline itself never spawns threads."""
    for var in _THREAD_VARS:
        os.environ.setdefault(var, "1")


def _summary(values) -> StageTiming:
    if len(values) == 1:
        return StageTiming(values[0], 0.0)
    return StageTiming(statistics.fmean(values), statistics.stdev(values))


def benchmark_runtime(scans, config: FugSegConfig, repeats: int = 5, warmup: int = 1) -> BenchmarkReport:
    """Mean and stddev (over ``repeats``) of the per-scan time of each stage.

    Each repeat runs every scan once and contributes its mean per-scan time.
    Warm-up passes are run but not recorded. Totals are sums of stage times
    so stages and total agree exactly.
    """
    from .._kernels import BACKEND_NAME

    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    scans = [np.ascontiguousarray(getattr(s, "points", s), dtype=np.float64) for s in scans]
    if not scans:
        raise ValueError("benchmark needs at least one scan")
    pin_single_thread()
    for _ in range(warmup):
        for pts in scans:
            run_scan(pts, config)
    per_stage = {s: [] for s in STAGES}
    totals = []
    for _ in range(repeats):
        sums = dict.fromkeys(STAGES, 0.0)
        for pts in scans:
            res = run_scan(pts, config)
            for s in STAGES:
                sums[s] += res.timings_us[s] / 1000.0
        # one sample per repeat: mean time per scan
        for s in STAGES:
            per_stage[s].append(sums[s] / len(scans))
        totals.append(sum(sums.values()) / len(scans))
    return BenchmarkReport(
        stages={s: _summary(v) for s, v in per_stage.items()},
        total=_summary(totals),
        runs=repeats,
        points_per_scan=float(np.mean([len(p) for p in scans])),
        backend=BACKEND_NAME,
    )
