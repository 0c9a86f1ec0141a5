#!/usr/bin/env python3
"""Benchmark the numba-jitted kernels against the pure-numpy fallback.

Run:  python3 benchmarks/bench_kernels.py [--repeats N]

Each kernel is checked for agreement between the two implementations and
timed with the median of N repeats. With MRBNN_BACKEND=numpy (or without
numba installed) only the fallback is timed.
"""

import argparse
import statistics
import time

import numpy as np

from mrbnn import _kernels


def timeit(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def bench_all_pass(rng, repeats):
    cos_phi = np.cos(rng.uniform(0, 2 * np.pi, 2_000_000))
    jit = lambda: _kernels.all_pass_transmission(cos_phi, 0.9615, 0.99)
    ref = lambda: _kernels.all_pass_transmission_numpy(cos_phi, 0.9615, 0.99)
    assert np.allclose(jit(), ref(), rtol=1e-12)
    return "all_pass_transmission (2e6 pts)", timeit(jit, repeats), \
        timeit(ref, repeats)


def bench_channel_noise(rng, repeats):
    lams = 1550.0 + np.arange(400) * 0.05
    powers = rng.uniform(0.2, 1.0, 400)

    def jit():
        for _ in range(50):
            _kernels.channel_noise_powers(lams, 5425.0, powers)

    def ref():
        for _ in range(50):
            _kernels.channel_noise_powers_numpy(lams, 5425.0, powers)

    a = _kernels.channel_noise_powers(lams, 5425.0, powers)
    b = _kernels.channel_noise_powers_numpy(lams, 5425.0, powers)
    assert np.allclose(a, b, rtol=1e-12)
    return "channel_noise_powers (400 ch x 50)", timeit(jit, repeats), \
        timeit(ref, repeats)


def bench_noisy_fc(rng, repeats):
    n, out_d, in_d = 256, 256, 512
    acts = rng.uniform(0, 1, (n, in_d))
    w = np.sign(rng.normal(size=(out_d, in_d)))
    wp = (w > 0).astype(float)
    wn = (w < 0).astype(float)
    ra = rng.uniform(0.9, 2.5, (out_d, in_d))
    rp = rng.uniform(0.9, 2.5, (out_d, in_d))
    rn = rng.uniform(0.9, 2.5, (out_d, in_d))
    jit = lambda: _kernels.noisy_fc_forward(acts, wp, wn, ra, rp, rn)
    ref = lambda: _kernels.noisy_fc_forward_numpy(acts, wp, wn, ra, rp, rn)
    assert np.allclose(jit(), ref(), rtol=1e-11, atol=1e-12)
    return "noisy_fc_forward (256x256x512)", timeit(jit, repeats), \
        timeit(ref, repeats)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    print(f"backend: {_kernels.BACKEND}")
    if not _kernels.USING_NUMBA:
        print("numba disabled; timing the numpy fallback only")
    rng = np.random.Generator(np.random.PCG64(123))

    rows = []
    for bench in (bench_all_pass, bench_channel_noise, bench_noisy_fc):
        rows.append(bench(rng, args.repeats))

    width = max(len(r[0]) for r in rows)
    header = f"{'kernel':<{width}}  {'jit [ms]':>10}  {'numpy [ms]':>10}  speedup"
    print(header)
    print("-" * len(header))
    for name, t_jit, t_np in rows:
        speed = t_np / t_jit if t_jit > 0 else float("inf")
        print(f"{name:<{width}}  {t_jit * 1e3:>10.2f}  {t_np * 1e3:>10.2f}  "
              f"{speed:>6.2f}x")


if __name__ == "__main__":
    main()
