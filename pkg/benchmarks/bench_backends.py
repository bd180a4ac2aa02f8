"""Time the numba kernels against their pure-numpy fallbacks.

Both implementations are called directly, so the ``LIDARFOG_BACKEND`` flag
does not matter here. Each kernel is run once untimed (JIT warmup), then
timed as the best of ``--repeat`` runs; outputs are compared as a sanity
check.

    python3 benchmarks/bench_backends.py [--repeat 5] [--points 120000]
"""

import argparse
import math
import time

import numpy as np

from lidarfog import kernels
from lidarfog.fogsim import FogSimConfig, _profile_key, precompute_soft_profile
from lidarfog.mie import WATER_905NM, OpticalConstants
from lidarfog.optics import FogOptics
from lidarfog.units import SPEED_OF_LIGHT


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def cases(n_points):
    rng = np.random.default_rng(0)
    x = OpticalConstants().size_parameter(np.linspace(0.01, 150.0, 7501) * 1e-6)
    yield "mie_sums (7501 diameters)", (
        lambda: kernels.mie_sums_numba(x, WATER_905NM, 0),
        lambda: kernels.mie_sums_numpy(x, WATER_905NM, 0),
    )

    ranges = np.linspace(0.5, 120.0, 1196)
    args = (math.inf, 0.029, 10e-9, SPEED_OF_LIGHT, 0.0, 10.0, 0.5, 64)
    yield "soft_power (1196 ranges, n=64)", (
        lambda: kernels.soft_power_numba(ranges, *args),
        lambda: kernels.soft_power_numpy(ranges, *args),
    )

    cfg = FogSimConfig(FogOptics(0.029, 0.0203))
    prof = precompute_soft_profile(_profile_key(cfg), 128.0)
    d = rng.normal(size=(n_points, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    pts = np.column_stack([d * rng.uniform(1, 120, n_points)[:, None], rng.uniform(0, 1, n_points)])
    pts = pts.astype(np.float32)
    u = rng.random(n_points)
    kargs = (0.029, 0.005, 100.0, prof.min_range, prof.step, prof.soft_max, prof.argmax_range, u, 0.05)
    yield f"augment_points ({n_points} points)", (
        lambda: kernels.augment_points_numba(pts, *kargs),
        lambda: kernels.augment_points_numpy(pts, *kargs),
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--points", type=int, default=120_000)
    args = parser.parse_args()

    if not kernels.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return
    print(f"{'kernel':<36}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>9}  max|diff|")
    for name, (fast, slow) in cases(args.points):
        t_fast, out_fast = best_of(fast, args.repeat)
        t_slow, out_slow = best_of(slow, args.repeat)
        if isinstance(out_fast, tuple):
            diff = max(float(np.nanmax(np.abs(a.astype(float) - b.astype(float)))) for a, b in zip(out_fast, out_slow))
        else:
            diff = float(np.max(np.abs(out_fast - out_slow)))
        print(f"{name:<36}{1e3 * t_fast:>12.2f}{1e3 * t_slow:>12.2f}{t_slow / t_fast:>8.1f}x  {diff:.2e}")


if __name__ == "__main__":
    main()
