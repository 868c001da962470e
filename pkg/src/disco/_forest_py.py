"""Pure-Python regression-tree kernels.

This is the fallback used when the compiled ``_forest_core`` extension is
missing.  Both implementations follow the same arithmetic order (sequential
prefix sums over a stable sort, stable partitions, a shared splitmix64
stream for feature sampling), so they grow bit-identical trees.
"""

from __future__ import annotations

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def below(self, k: int) -> int:
        return self.next() % k


def _best_split_on_feature(xs: np.ndarray, ys: np.ndarray):
    """Return (proxy, position, threshold) of the best cut, or None if ``xs`` is constant."""
    order = np.argsort(xs, kind="stable")
    xs = xs[order]
    valid = xs[:-1] < xs[1:]
    if not valid.any():
        return None
    cs = np.cumsum(ys[order])
    total = cs[-1]
    n = xs.size
    n_left = np.arange(1, n, dtype=np.float64)
    left = cs[:-1]
    right = total - left
    proxy = left * left / n_left + right * right / (n - n_left)
    proxy = np.where(valid, proxy, -np.inf)
    pos = int(np.argmax(proxy))
    lo, hi = xs[pos], xs[pos + 1]
    thr = (lo + hi) / 2.0
    if not (thr < hi) or not np.isfinite(thr):
        thr = lo
    return float(proxy[pos]), pos, float(thr)


def build_tree(X, y, sample, max_features: int, min_samples_split: int, seed: int):
    """Grow one regression tree on the rows ``sample`` (may repeat) of ``X``.

    Returns ``(feature, threshold, left, right, value, n_node_samples)`` with
    ``feature == -1`` marking leaves.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    seg_all = np.asarray(sample, dtype=np.int64)
    n_samples = seg_all.size
    q = X.shape[1]
    cap = max(1, 2 * n_samples - 1)
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap, dtype=np.float64)
    counts = np.zeros(cap, dtype=np.int64)

    rng = SplitMix64(seed)
    perm = list(range(q))
    n_nodes = 1
    stack = [(0, seg_all)]
    while stack:
        node, seg = stack.pop()
        ys = y[seg]
        n = seg.size
        counts[node] = n
        value[node] = np.cumsum(ys)[-1] / n
        if n < min_samples_split or ys.max() == ys.min():
            continue

        best = None  # (proxy, feature, threshold)
        visited = 0
        while visited < q and (visited < max_features or best is None):
            j = visited + rng.below(q - visited)
            perm[visited], perm[j] = perm[j], perm[visited]
            f = perm[visited]
            visited += 1
            res = _best_split_on_feature(X[seg, f], ys)
            if res is not None and (best is None or res[0] > best[0]):
                best = (res[0], f, res[2])
        if best is None:
            continue

        _, f, thr = best
        go_left = X[seg, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node], right[node] = n_nodes, n_nodes + 1
        n_nodes += 2
        stack.append((int(right[node]), seg[~go_left]))
        stack.append((int(left[node]), seg[go_left]))

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        counts[:n_nodes].copy(),
    )


def predict_tree(feature, threshold, left, right, value, X):
    X = np.asarray(X, dtype=np.float64)
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    active = feature[node] >= 0
    while active.any():
        r = rows[active]
        nd = node[active]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return value[node]
