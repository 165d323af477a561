"""Time the compiled recurrence kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--n 4000] [--repeat 3]

Prints one line per kernel with the best wall time of each backend and the
speedup, after checking that both return the same numbers.
"""
import argparse
import timeit

import numpy as np

from cdkernels import _kernels_py
from cdkernels.oprl import JacobiParams
from cdkernels.opuc import VerblunskyParams
from cdkernels.universality import default_grid

try:
    from cdkernels import _kernels as compiled
except ImportError:
    compiled = None


def cases(n):
    # the free model keeps the recurrence bounded near the spectrum at any n;
    # the cost per step does not depend on the coefficients
    a, b = JacobiParams.free().arrays(n)
    alpha = VerblunskyParams.random(1, radius=0.3, horizon=n).arrays(n)
    grid = default_grid()
    zs = np.array([0.3 + z / n for z, _ in grid])
    ws = np.array([0.3 + w / n for _, w in grid])
    us, vs = np.exp(1j * (zs - 0.3)), np.exp(1j * (ws - 0.3))
    return {
        "matrix_kernel_pairs (169 pairs)": lambda m: m.matrix_kernel_pairs(a, b, n, 0.5, zs, ws),
        "subordinacy_sums": lambda m: m.subordinacy_sums(a, b, n, 0.3),
        "bisect_eigenvalue": lambda m: m.bisect_eigenvalue(a, b, n, n // 2, -6.0, 6.0, 1e-12),
        "opuc_kernel_pairs (169 pairs)": lambda m: m.opuc_kernel_pairs(alpha, n, us, vs),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=4000, help="recurrence length")
    parser.add_argument("--repeat", type=int, default=3, help="timing repetitions (best is kept)")
    args = parser.parse_args()
    if compiled is None:
        print("compiled extension not built; only the Python backend is available")
        return
    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'kernel':34s} {'compiled':>11s} {'python':>11s} {'speedup':>9s}")
    for name, fn in cases(args.n).items():
        ref, got = fn(_kernels_py), fn(compiled)
        if not np.allclose(np.asarray(got), np.asarray(ref), rtol=1e-10, atol=1e-12):
            raise SystemExit(f"backends disagree on {name}")
        t_c = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat))
        t_p = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat))
        print(f"{name:34s} {t_c * 1e3:9.2f}ms {t_p * 1e3:9.2f}ms {t_p / t_c:8.1f}x")


if __name__ == "__main__":
    main()
