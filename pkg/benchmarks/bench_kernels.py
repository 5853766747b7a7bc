"""Benchmark the compiled evaluation kernels against the pure-Python fallback.

Usage:
    python3 benchmarks/bench_kernels.py [--batch 256] [--dim 512] [--repeat 20]

Both backends are imported explicitly, so the comparison runs regardless of
which one the package selected at import time.
"""

import argparse
import statistics
import time

import numpy as np

from capforge.evalmath import KERNEL_BACKEND, _fallback

try:
    from capforge.evalmath import _core
except ImportError:
    _core = None


def unit_rows(rng, b, d):
    m = rng.normal(size=(b, d))
    return np.ascontiguousarray(m / np.linalg.norm(m, axis=1, keepdims=True))


def time_call(fn, repeat):
    samples = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return min(samples), statistics.median(samples)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=256)
    parser.add_argument("--dim", type=int, default=512)
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--tau", type=float, default=0.07)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    audio = unit_rows(rng, args.batch, args.dim)
    text = unit_rows(rng, args.batch, args.dim)
    sim = audio @ text.T

    cases = {
        "infonce_forward": lambda mod: mod.infonce_forward(audio, text, args.tau),
        "infonce_backward": lambda mod: mod.infonce_backward(audio, text, args.tau),
        "recall_percent@10": lambda mod: mod.recall_percent(sim, 10, True),
    }

    print(f"selected backend at import: {KERNEL_BACKEND}")
    print(f"batch={args.batch} dim={args.dim} tau={args.tau} repeat={args.repeat}")
    header = f"{'kernel':<20} {'python best':>12} {'compiled best':>14} {'speedup':>8}"
    print(header)
    print("-" * len(header))

    for name, call in cases.items():
        py_best, _ = time_call(lambda: call(_fallback), args.repeat)
        if _core is None:
            print(f"{name:<20} {py_best * 1e3:>10.3f}ms {'unavailable':>14} {'-':>8}")
            continue
        c_best, _ = time_call(lambda: call(_core), args.repeat)
        # sanity: both backends must agree before we compare speed
        py_out = call(_fallback)
        c_out = call(_core)
        if not isinstance(py_out, tuple):
            py_out, c_out = (py_out,), (c_out,)
        for a, b in zip(py_out, c_out):
            np.testing.assert_allclose(np.asarray(a), np.asarray(b), atol=1e-10)
        print(f"{name:<20} {py_best * 1e3:>10.3f}ms {c_best * 1e3:>12.3f}ms "
              f"{py_best / c_best:>7.1f}x")


if __name__ == "__main__":
    main()
