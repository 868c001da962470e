"""Time tree building with the compiled and pure-Python kernels.

    python benchmarks/bench_forest.py --n 1000 --q 50 --trees 10
"""

import argparse
import time

import numpy as np

from disco import kernels


def bench(backend, X, y, trees, max_features, seed=0):
    n = X.shape[0]
    rng = np.random.default_rng(seed)
    samples = [rng.integers(0, n, n).astype(np.int64) for _ in range(trees)]
    t0 = time.perf_counter()
    out = [backend.build_tree(X, y, s, max_features, 2, seed + j) for j, s in enumerate(samples)]
    return time.perf_counter() - t0, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--q", type=int, default=50)
    p.add_argument("--trees", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    X = rng.normal(size=(args.n, args.q))
    y = X[:, 0] - 0.5 * X[:, 1] ** 2 + 0.1 * rng.normal(size=args.n)
    mf = max(1, args.q // 3)

    t_py, trees_py = bench(kernels.python_backend, X, y, args.trees, mf, args.seed)
    print(f"python  : {t_py:8.3f} s  ({t_py / args.trees * 1e3:.1f} ms/tree)")
    if kernels.compiled_backend is None:
        print("compiled: extension not built (pip install -e . --no-build-isolation)")
        return 0
    t_c, trees_c = bench(kernels.compiled_backend, X, y, args.trees, mf, args.seed)
    same = all(np.array_equal(a, b) for ta, tb in zip(trees_py, trees_c) for a, b in zip(ta, tb))
    print(f"compiled: {t_c:8.3f} s  ({t_c / args.trees * 1e3:.1f} ms/tree)")
    print(f"speedup : {t_py / t_c:8.1f}x   identical trees: {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
