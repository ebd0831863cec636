"""Compare the compiled and numpy sampling kernels.

Usage: python benchmarks/bench_kernels.py [--rounds N] [--repeat R] [--workers W]
"""

import argparse
import time

import numpy as np

from mdimem import _kernels_py, bsm, channels, game, kernels

try:
    from mdimem import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rounds", type=int, default=10 ** 6)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    table = game.outcome_table(channels.depolarizing(0.3), bsm.bsm_povm(0.1)).reshape(16, 3)
    cdf = np.cumsum(table, axis=1)[:, :2]
    key = kernels.stream_key(1, kernels.STREAM_GAME)

    impls = [("python", _kernels_py)]
    if _kernels_c is not None:
        impls.append(("compiled", _kernels_c))
    else:
        print("compiled kernels not built; timing the numpy fallback only")

    results = {}
    for name, impl in impls:
        results[name] = {
            "play_rounds": best_of(lambda: kernels.play_rounds(key, args.rounds, cdf, 0.8,
                                                               args.workers, impl=impl), args.repeat),
            "count_below": best_of(lambda: impl.count_below(key, 0, args.rounds, 0.3), args.repeat),
            "uniforms": best_of(lambda: impl.uniforms(key, 0, args.rounds), args.repeat),
        }

    if len(impls) == 2:
        a = kernels.play_rounds(key, args.rounds, cdf, 0.8, args.workers, impl=_kernels_py)
        b = kernels.play_rounds(key, args.rounds, cdf, 0.8, args.workers, impl=_kernels_c)
        same = np.array_equal(a[0], b[0]) and a[1] == b[1]
        print(f"outputs bit-identical: {same}")

    print(f"{args.rounds} draws, best of {args.repeat}, workers={args.workers}")
    print(f"{'kernel':<12}" + "".join(f"{name:>12}" for name, _ in impls) + ("     speedup" if len(impls) == 2 else ""))
    for kernel in ("play_rounds", "count_below", "uniforms"):
        row = f"{kernel:<12}" + "".join(f"{results[name][kernel] * 1e3:>10.2f}ms" for name, _ in impls)
        if len(impls) == 2:
            row += f"{results['python'][kernel] / results['compiled'][kernel]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
