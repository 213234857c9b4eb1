"""Benchmark the numba kernels against the pure-numpy fallback.

Runs every hot kernel on a realistic 128x128 workload, reports per-kernel
timings plus speedup, and verifies that both backends produce the same
output (bit-exact for the integer-valued kernels).

Usage: python benchmarks/bench_backends.py [--repeat N]
"""
import argparse
import time

import numpy as np

from mcwl import _kernels_numpy as knp
from mcwl.backend import HAVE_NUMBA
from mcwl.motion import MESH_CANDIDATE_OFFSETS, _candidate_shifts
from mcwl.volume import PhantomSpec, generate_phantom

if HAVE_NUMBA:
    from mcwl import _kernels_numba as knb


def bench(fn, *args, repeat=3, warmup=True):
    if warmup:
        out = fn(*args)
    t0 = time.perf_counter()
    for _ in range(repeat):
        out = fn(*args)
    return (time.perf_counter() - t0) / repeat, out


def build_workload():
    spec = PhantomSpec(width=128, height=128, frame_count=2, blob_count=16,
                       contraction_amplitude=4.0, noise_sigma=5.0, rng_seed=1)
    vol, _ = generate_phantom(spec)
    rng = np.random.default_rng(2)
    ref, cur = vol.frame(0), vol.frame(1)
    h, w = ref.shape
    cands = _candidate_shifts(8)
    init = rng.integers(-4, 5, size=(h // 8 + 1, w // 8 + 1, 2)).astype(np.int32)
    vec = rng.integers(-6, 7, size=(h // 8 + 1, w // 8 + 1, 2)).astype(np.int32)
    sx = rng.uniform(0, w - 1, size=(h, w))
    sy = rng.uniform(0, h - 1, size=(h, w))
    xi = np.clip(np.tile(np.arange(w, dtype=np.int32), (h, 1))
                 + rng.integers(-6, 7, size=(h, w)), 0, w - 1).astype(np.int32)
    yi = np.clip(np.repeat(np.arange(h, dtype=np.int32), w).reshape(h, w)
                 + rng.integers(-6, 7, size=(h, w)), 0, h - 1).astype(np.int32)
    written = rng.random((h, w)) > 0.05
    values = rng.random((h, w)) * 100
    n = h * w
    deg = 25
    indptr = np.arange(0, deg * n + 1, deg, dtype=np.int64)
    indices = rng.integers(0, n, size=deg * n).astype(np.int32)
    data = rng.integers(1, 2 ** 31, size=deg * n).astype(np.float64) / 2 ** 32
    x = rng.integers(0, 4096, size=n).astype(np.float64)
    img = ref.astype(np.float64)
    return {
        "block_search": (ref, cur, 8, cands),
        "mesh_refine": (ref, cur, init, 8, 8, 2, MESH_CANDIDATE_OFFSETS),
        "upsample_positions": (vec, 8, w, h),
        "warp_bilinear": (img, sx, sy),
        "knn_select": (xi, yi, 25),
        "nn_fill": (values, written),
        "csr_matvec": (indptr, indices, data, x, n),
    }


def outputs_equal(a, b):
    if isinstance(a, tuple):
        return all(outputs_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    workload = build_workload()
    print(f"{'kernel':<20} {'numpy':>12} {'numba':>12} {'speedup':>9}  agreement")
    for name, call_args in workload.items():
        t_np, out_np = bench(getattr(knp, name), *call_args,
                             repeat=args.repeat, warmup=False)
        if not HAVE_NUMBA:
            print(f"{name:<20} {t_np * 1e3:>10.2f}ms {'-':>12} {'-':>9}  numba unavailable")
            continue
        t_nb, out_nb = bench(getattr(knb, name), *call_args, repeat=args.repeat)
        agree = "bit-exact" if outputs_equal(out_np, out_nb) else "DIFFERS"
        print(f"{name:<20} {t_np * 1e3:>10.2f}ms {t_nb * 1e3:>10.2f}ms "
              f"{t_np / t_nb:>8.1f}x  {agree}")


if __name__ == "__main__":
    main()
