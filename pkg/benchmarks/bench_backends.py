"""Compare the compiled core against the pure-Python fallback.

    python benchmarks/bench_backends.py [--scene curved] [--repeats 3]

Prints per-stage mean milliseconds for each available backend and the
speedup of the compiled core. Both runs use the same synthetic scan and
are checked for identical labels first.
"""
import argparse
import sys

import numpy as np

from fugseg import _kernels
from fugseg.eval.benchmark import benchmark_runtime, pin_single_thread
from fugseg.eval.synth import scene_preset, scene_sensor, synth_scene
from fugseg.pipeline import STAGES, FugSegConfig, run_scan


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scene", default="curved", choices=("flat", "inclined", "curved", "occlusion", "reflection"))
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--azimuth-step", type=float, default=0.18, help="degrees between firings")
    args = ap.parse_args(argv)

    pin_single_thread()
    scene = synth_scene(scene_preset(args.scene, azimuth_step_deg=args.azimuth_step))
    config = FugSegConfig(sensor=scene_sensor(scene.spec))
    backends = sorted(_kernels.available_backends())

    results, reports = {}, {}
    for name in backends:
        _kernels.use_backend(name)
        results[name] = run_scan(scene.points, config)
        reports[name] = benchmark_runtime([scene.points], config, repeats=args.repeats)
    _kernels.use_backend("auto")

    if len(backends) == 2:
        a, b = (results[n] for n in backends)
        if not np.array_equal(a.ground, b.ground):
            print("backends disagree on ground labels", file=sys.stderr)
            return 1

    print(f"{args.scene}: {len(scene.points)} points, {args.repeats} repeat(s), single thread")
    header = f"{'stage':>6}" + "".join(f"{n + ' ms':>14}" for n in backends)
    if "compiled" in reports and "python" in reports:
        header += f"{'speedup':>10}"
    print(header)
    for stage in STAGES + ("total",):
        cells = []
        for n in backends:
            t = reports[n].total if stage == "total" else reports[n].stages[stage]
            cells.append(t.mean_ms)
        line = f"{stage:>6}" + "".join(f"{v:>14.2f}" for v in cells)
        if len(cells) == 2:
            line += f"{cells[1] / cells[0]:>9.1f}x"
        print(line)
    if "compiled" not in reports:
        print("compiled core not built; only the fallback was timed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
