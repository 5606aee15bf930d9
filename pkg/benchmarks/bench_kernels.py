"""Compare the numba and numpy implementations of the hot kernels.

    python3 benchmarks/bench_kernels.py [--n 4000000] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from nvmag import kernels
from nvmag.dsp_spectral import onepole_coefficient
from nvmag.trace_synth import servo_coefficients


def best_of(fn, repeat):
    fn()  # warm-up, includes jit compilation
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4_000_000, help="samples per call")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    x = np.random.default_rng(0).standard_normal(args.n)
    a = onepole_coefficient(149.4, 3200.0, 4)
    alpha, gain = servo_coefficients(400.0, 10.0, 2.0)
    ms = [1, 40, 400, 4000]

    cases = {
        "onepole_cascade (order 4)": (
            lambda: kernels.onepole_cascade_numba(x, a, np.zeros(4)),
            lambda: kernels.onepole_cascade_numpy(x, a, np.zeros(4)),
        ),
        "servo": (
            lambda: kernels.servo_numba(x, alpha, gain),
            lambda: kernels.servo_numpy(x, alpha, gain),
        ),
        f"allan_sum (m in {ms})": (
            lambda: [kernels.allan_sum_numba(x, m) for m in ms],
            lambda: [kernels.allan_sum_numpy(x, m) for m in ms],
        ),
    }
    print(f"n = {args.n} samples, best of {args.repeat}")
    print(f"{'kernel':36s} {'numba ms':>10s} {'numpy ms':>10s} {'speed-up':>9s}")
    for name, (fast, ref) in cases.items():
        t_nb = best_of(fast, args.repeat)
        t_np = best_of(ref, args.repeat)
        print(f"{name:36s} {t_nb * 1e3:10.2f} {t_np * 1e3:10.2f} {t_np / t_nb:8.2f}x")


if __name__ == "__main__":
    main()
