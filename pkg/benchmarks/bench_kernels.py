"""Compare the compiled and numpy convolution kernels.

Usage: python benchmarks/bench_kernels.py [--repeats N]
Times forward and backward passes at several batch/channel shapes, including
the network's two convolution layers at the default architecture.
"""

import argparse
import time

import numpy as np

from windadapt.nn import _conv_numpy

try:
    from windadapt.nn import _conv_ext
except ImportError:
    _conv_ext = None

SHAPES = [
    # (label, B, C_in, C_out, T, K)
    ("tiny", 8, 2, 4, 24, 3),
    ("layer1 small", 64, 6, 16, 24, 3),
    ("layer2 small", 64, 16, 32, 24, 3),
    ("layer1 default", 64, 6, 32, 24, 3),
    ("layer2 default", 64, 32, 64, 24, 3),
]


def time_call(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()

    if _conv_ext is None:
        print("compiled extension not built; only the numpy kernel is available")

    rng = np.random.default_rng(0)
    header = f"{'shape':<16} {'pass':<8} {'numpy ms':>9}"
    if _conv_ext is not None:
        header += f" {'compiled ms':>12} {'speedup':>8}"
    print(header)
    for label, b, ci, co, t, k in SHAPES:
        x = rng.standard_normal((b, ci, t))
        w = rng.standard_normal((co, ci, k))
        bias = rng.standard_normal(co)
        g = np.ascontiguousarray(rng.standard_normal((b, co, t)))
        for name, np_fn, np_args, ext_args in (
            ("forward", _conv_numpy.conv1d_forward, (x, w, bias), (x, w, bias)),
            ("backward", _conv_numpy.conv1d_backward, (x, w, g), (x, w, g)),
        ):
            t_np = time_call(np_fn, np_args, args.repeats)
            row = f"{label:<16} {name:<8} {1e3 * t_np:9.3f}"
            if _conv_ext is not None:
                ext_fn = getattr(_conv_ext, np_fn.__name__)
                t_ext = time_call(ext_fn, ext_args, args.repeats)
                row += f" {1e3 * t_ext:12.3f} {t_np / t_ext:7.2f}x"
            print(row)


if __name__ == "__main__":
    main()
