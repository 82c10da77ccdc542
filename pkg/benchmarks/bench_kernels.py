"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--bins 5000] [--repeat 5]

Both backends are called directly so one process can compare them; the
outputs are also checked for exact equality.
"""
import argparse
import timeit

import numpy as np

from optopro import _fallback
from optopro.lif import LifParams, gen_stimulus

try:
    from optopro import _kernels
except ImportError:
    _kernels = None


def lif_args(flashes):
    p = LifParams()
    return (flashes, p.C, p.R, p.v_th, p.v_reset, p.stimulus_height, p.bin_ms,
            p.substeps_per_bin)


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bins", type=int, default=5000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    flashes = gen_stimulus(args.bins, 0.14, args.seed)
    spikes = np.asarray(_fallback.lif_euler(*lif_args(flashes))[0], dtype=np.uint8)
    cases = {
        "lif_euler": lambda mod: mod.lif_euler(*lif_args(flashes)),
        "history_features": lambda mod: mod.history_features(flashes, spikes, False),
    }
    print(f"{args.bins} bins, best of {args.repeat}")
    print(f"{'kernel':<18}{'python (ms)':>14}{'cython (ms)':>14}{'speedup':>10}")
    for name, call in cases.items():
        t_py = best_of(lambda: call(_fallback), args.repeat) * 1e3
        if _kernels is None:
            print(f"{name:<18}{t_py:>14.2f}{'n/a':>14}{'':>10}")
            continue
        t_cy = best_of(lambda: call(_kernels), args.repeat) * 1e3
        a, b = call(_fallback), call(_kernels)
        same = all(np.array_equal(np.asarray(x, float), np.asarray(y, float), equal_nan=True) for x, y in zip(a, b))
        print(f"{name:<18}{t_py:>14.2f}{t_cy:>14.3f}{t_py / t_cy:>9.0f}x"
              + ("" if same else "  (outputs differ!)"))


if __name__ == "__main__":
    main()
