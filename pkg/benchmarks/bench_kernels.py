"""Timing comparison of the numba and numpy kernel backends.

Runs the two convolution shapes and the two pooling shapes that occur in
the default micro net, forward and backward, and reports the median of
repeated timings after a warmup pass (the warmup also absorbs numba's
JIT compilation).  Results from the two backends are cross-checked before
timing so the numbers always describe agreeing implementations.

Usage: python benchmarks/bench_kernels.py [--batch 32] [--repeats 7]
"""

import argparse
import statistics
import time

import numpy as np

from evosynth.kernels import NUMBA_AVAILABLE, backend_functions


def cases(batch):
    rng = np.random.default_rng(0)

    def f32(*shape):
        return rng.normal(0, 0.5, shape).astype(np.float32)

    conv_cases = [
        ("conv 1x28x28 -> 8@5x5", f32(batch, 1, 28, 28), f32(8, 1, 5, 5),
         f32(8)),
        ("conv 8x12x12 -> 16@5x5", f32(batch, 8, 12, 12), f32(16, 8, 5, 5),
         f32(16)),
    ]
    pool_cases = [
        ("pool 8x24x24", f32(batch, 8, 24, 24)),
        ("pool 16x8x8", f32(batch, 16, 8, 8)),
    ]
    return conv_cases, pool_cases


def median_time(fn, repeats):
    fn()  # warmup / JIT
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def check_agreement(np_funcs, nb_funcs, conv_cases, pool_cases):
    for name, x, w, b in conv_cases:
        ya = np_funcs["conv2d_forward"](x, w, b)
        yb = nb_funcs["conv2d_forward"](x, w, b)
        np.testing.assert_allclose(ya, yb, rtol=2e-5, atol=2e-6,
                                   err_msg=name)
        gy = np.ones_like(ya)
        for ga, gb_ in zip(np_funcs["conv2d_backward"](x, w, gy),
                           nb_funcs["conv2d_backward"](x, w, gy)):
            np.testing.assert_allclose(ga, gb_, rtol=3e-4, atol=3e-5,
                                       err_msg=name)
    for name, x in pool_cases:
        ya, wa = np_funcs["maxpool2_forward"](x)
        yb, wb = nb_funcs["maxpool2_forward"](x)
        np.testing.assert_array_equal(ya, yb, err_msg=name)
        np.testing.assert_array_equal(wa, wb, err_msg=name)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    if not NUMBA_AVAILABLE:
        print("numba is not installed; nothing to compare")
        return

    np_funcs = backend_functions("numpy")
    nb_funcs = backend_functions("numba")
    conv_cases, pool_cases = cases(args.batch)
    check_agreement(np_funcs, nb_funcs, conv_cases, pool_cases)
    print(f"batch={args.batch} repeats={args.repeats} (median seconds)")
    print(f"{'case':<28} {'numpy':>10} {'numba':>10} {'speedup':>8}")

    for name, x, w, b in conv_cases:
        gy = np.ones_like(np_funcs["conv2d_forward"](x, w, b))
        for stage, np_fn, nb_fn in (
                ("fwd", lambda f=np_funcs: f["conv2d_forward"](x, w, b),
                 lambda f=nb_funcs: f["conv2d_forward"](x, w, b)),
                ("bwd", lambda f=np_funcs: f["conv2d_backward"](x, w, gy),
                 lambda f=nb_funcs: f["conv2d_backward"](x, w, gy))):
            t_np = median_time(np_fn, args.repeats)
            t_nb = median_time(nb_fn, args.repeats)
            print(f"{name + ' ' + stage:<28} {t_np:>10.5f} {t_nb:>10.5f} "
                  f"{t_np / t_nb:>7.2f}x")

    for name, x in pool_cases:
        y, which = np_funcs["maxpool2_forward"](x)
        gy = np.ones_like(y)
        h, w_ = x.shape[2:]
        for stage, np_fn, nb_fn in (
                ("fwd", lambda f=np_funcs: f["maxpool2_forward"](x),
                 lambda f=nb_funcs: f["maxpool2_forward"](x)),
                ("bwd",
                 lambda f=np_funcs: f["maxpool2_backward"](gy, which, h, w_),
                 lambda f=nb_funcs: f["maxpool2_backward"](gy, which, h, w_))):
            t_np = median_time(np_fn, args.repeats)
            t_nb = median_time(nb_fn, args.repeats)
            print(f"{name + ' ' + stage:<28} {t_np:>10.5f} {t_nb:>10.5f} "
                  f"{t_np / t_nb:>7.2f}x")


if __name__ == "__main__":
    main()
