"""Benchmark: compiled flow-binning kernel vs the NumPy fallback.

The per-pixel directional binning is the hot inner loop of feature
extraction (every pixel of every frame of every clip passes through
it). This script times both backends on a KTH-sized frame and on a
small end-to-end extraction.

Usage: python3 benchmarks/bench_kernels.py [--frames N]
"""

import argparse
import shutil
import tempfile
import time
from pathlib import Path

import numpy as np

from freqforest import _kernels_py
from freqforest.flow import BoundingBox, partition_bbox, rasterize_layout

try:
    from freqforest import _kernels
except ImportError:
    _kernels = None


def bench_kernel(fn, u, v, region, repeats):
    fn(u, v, region, 5)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(u, v, region, 5)
    return (time.perf_counter() - t0) / repeats


def kernel_benchmark(repeats):
    rng = np.random.default_rng(0)
    width, height = 160, 120  # typical KTH frame
    u = np.ascontiguousarray(rng.normal(scale=2.0, size=(height, width)))
    v = np.ascontiguousarray(rng.normal(scale=2.0, size=(height, width)))
    zero = rng.random((height, width)) < 0.2
    u[zero] = 0.0
    v[zero] = 0.0
    box = BoundingBox(20, 5, 70, 110)
    region = rasterize_layout(partition_bbox(box), width, height)

    print(f"directional_stats on a {width}x{height} frame ({repeats} repeats):")
    t_py = bench_kernel(_kernels_py.directional_stats, u, v, region, repeats)
    print(f"  numpy fallback : {t_py * 1e3:8.3f} ms/frame")
    if _kernels is None:
        print("  compiled       : not built")
        return
    t_c = bench_kernel(_kernels.directional_stats, u, v, region, repeats)
    print(f"  compiled       : {t_c * 1e3:8.3f} ms/frame")
    print(f"  speedup        : {t_py / t_c:8.2f}x")

    a = _kernels.directional_stats(u, v, region, 5)
    b = _kernels_py.directional_stats(u, v, region, 5)
    assert all(np.allclose(x, y) for x, y in zip(a, b)), "backends disagree"
    print("  backends agree on this input")


def end_to_end_benchmark(frames):
    import os

    from freqforest.pipeline import extract_dataset
    from freqforest.synth import SynthConfig, synth_generate

    out = Path(tempfile.mkdtemp(prefix="ffbench"))
    try:
        manifest = synth_generate(
            SynthConfig(classes=3, actors=2, clips_per=1, frames=frames, seed=0), out)
        print(f"\nend-to-end extraction of {len(manifest.clips)} clips "
              f"({frames} frames each), current backend "
              f"(FREQFOREST_PURE={os.environ.get('FREQFOREST_PURE', '')!r}):")
        t0 = time.perf_counter()
        extract_dataset(manifest)
        print(f"  {time.perf_counter() - t0:.2f}s")
    finally:
        shutil.rmtree(out, ignore_errors=True)


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=200)
    parser.add_argument("--frames", type=int, default=64)
    args = parser.parse_args()
    kernel_benchmark(args.repeats)
    end_to_end_benchmark(args.frames)
