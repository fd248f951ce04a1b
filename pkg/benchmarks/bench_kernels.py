"""Time the compiled kernels against the numpy fallback on realistic sizes.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from cthocs import kernels


def cases(rng):
    L = 131072
    syms = np.exp(0.5j * np.pi * rng.integers(0, 4, 13000))
    idx = np.sort(rng.choice(L, L // 10, replace=False)).astype(np.int64)
    vals = rng.standard_normal(idx.size) + 1j * rng.standard_normal(idx.size)
    chans = rng.standard_normal((2, L)) + 1j * rng.standard_normal((2, L))
    valid = np.ones((2, L), dtype=bool)
    power = rng.random(L)
    bins = np.arange(0, L, 97, dtype=np.int64)
    freqs = np.linspace(-40000, 40000, 13)
    return {
        "pulse_train (13000 sym, L=131072)":
            lambda k: k.pulse_train(syms, 0, 1 / 12999.5625, 0.0, 131072.0, L, 8, 0.3),
        "project (13107 samples x 13 freqs)":
            lambda k: k.project(vals, idx, freqs, 1 / 131072.0),
        "lag_product (n=4, L=131072)":
            lambda k: k.lag_product(chans, valid, np.array([0, 1, 0, 1]), 2),
        "cfar_noise (1352 cells)":
            lambda k: k.cfar_noise(power, bins, 2, 16),
        "rc_pulse (10^6 points)":
            lambda k: k.rc_pulse(np.linspace(-8, 8, 1_000_000), 0.3),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; timing the numpy fallback only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<40}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in cases(rng).items():
        times = []
        for b in backends:
            mod = kernels.get_backend(b)
            fn(mod)
            times.append(min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)))
        row = f"{name:<40}" + "".join(f"{1e3 * t:>10.2f}ms" for t in times)
        if len(times) > 1:
            row += f"{times[0] / times[1]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
