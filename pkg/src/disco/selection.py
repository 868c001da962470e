"""Geometric selection primitives shared by the acquisition functions.

All distances are Euclidean in float64.  Ties are broken toward the lowest
row index everywhere, which together with seeded generators makes every
routine a pure function of its inputs.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation

_CHUNK = 4096


def _as_points(points) -> np.ndarray:
    P = np.asarray(points, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    if P.ndim != 2:
        raise ContractViolation(f"expected a 2-D point matrix, got shape {P.shape}")
    return P


def sqdist_to(points: np.ndarray, center: np.ndarray) -> np.ndarray:
    diff = points - center
    return np.einsum("ij,ij->i", diff, diff)


def pairwise_sqdist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Squared distances via the Gram expansion, clipped at zero."""
    aa = np.einsum("ij,ij->i", A, A)[:, None]
    bb = np.einsum("ij,ij->i", B, B)[None, :]
    return np.maximum(aa - 2.0 * (A @ B.T) + bb, 0.0)


def nearest_index(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Index of the nearest row of ``B`` for each row of ``A``, computed in chunks."""
    out = np.empty(A.shape[0], dtype=np.int64)
    for s in range(0, A.shape[0], _CHUNK):
        out[s : s + _CHUNK] = np.argmin(pairwise_sqdist(A[s : s + _CHUNK], B), axis=1)
    return out


def sample_without_replacement(weights, b: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``b`` distinct indices sequentially, renormalising over the remainder.

    One uniform variate is consumed per draw.  Zero-weight entries are only
    chosen once every positive-weight entry is exhausted, lowest index first.
    """
    w = np.array(weights, dtype=np.float64, copy=True)
    n = w.size
    if b > n:
        raise ContractViolation(f"cannot draw {b} items from {n}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ContractViolation("weights must be finite and non-negative")
    chosen = np.empty(b, dtype=np.int64)
    taken = np.zeros(n, dtype=bool)
    for k in range(b):
        cs = np.cumsum(w)
        total = cs[-1]
        u = rng.random()
        if total > 0.0:
            i = int(np.searchsorted(cs, u * total, side="right"))
            i = min(i, n - 1)
            while w[i] == 0.0:  # guard against u * total landing on the last edge
                i -= 1
        else:
            i = int(np.flatnonzero(~taken)[0])
        chosen[k] = i
        taken[i] = True
        w[i] = 0.0
    return chosen


def sample_without_replacement_logits(logits, b: int, rng: np.random.Generator) -> np.ndarray:
    """Like :func:`sample_without_replacement` with weights ``exp(logits)``.

    The maximum is subtracted over the remaining candidates before every
    draw, so very small temperatures cannot underflow the whole remainder.
    """
    z = np.array(logits, dtype=np.float64, copy=True)
    n = z.size
    if b > n:
        raise ContractViolation(f"cannot draw {b} items from {n}")
    if np.any(np.isnan(z)) or np.any(z == np.inf):
        raise ContractViolation("logits must be finite or -inf")
    chosen = np.empty(b, dtype=np.int64)
    for k in range(b):
        w = np.exp(z - z.max())
        cs = np.cumsum(w)
        u = rng.random()
        i = min(int(np.searchsorted(cs, u * cs[-1], side="right")), n - 1)
        while w[i] == 0.0:
            i -= 1
        chosen[k] = i
        z[i] = -np.inf
    return chosen


def farthest_first(candidates, anchors, b: int) -> np.ndarray:
    """Greedy k-center traversal over ``candidates`` given fixed ``anchors``.

    Each step picks the candidate whose distance to the nearest anchor or
    previously picked candidate is largest.  With no anchors the first pick
    is candidate 0.
    """
    C = _as_points(candidates)
    n = C.shape[0]
    if b > n:
        raise ContractViolation(f"cannot select {b} of {n} candidates")
    mind = np.full(n, np.inf)
    A = np.asarray(anchors, dtype=np.float64)
    if A.size:
        A = A.reshape(-1, C.shape[1])
        step = max(1, 2_000_000 // max(1, C.size))
        for s in range(0, A.shape[0], step):
            diff = C[:, None, :] - A[None, s : s + step, :]
            mind = np.minimum(mind, np.einsum("ijk,ijk->ij", diff, diff).min(axis=1))
    picked = np.empty(b, dtype=np.int64)
    for k in range(b):
        i = int(np.argmax(mind))
        picked[k] = i
        mind = np.minimum(mind, sqdist_to(C, C[i]))
        mind[picked[: k + 1]] = -1.0
    return picked


def kmeanspp_seed(points, b: int, rng_seed: int = 0, first: int | None = None) -> np.ndarray:
    """k-means++ seeding: first seed uniform, then D^2-weighted draws.

    Draw protocol (relied on by replay checks): ``rng.integers(n)`` for the
    first seed unless ``first`` is given; afterwards one ``rng.random()`` per
    seed while some point has positive squared distance, mapped through the
    cumulative sum of squared distances.  When every remaining point
    coincides with a seed the lowest unselected index is taken without a draw.
    """
    P = _as_points(points)
    n = P.shape[0]
    if b > n:
        raise ContractViolation(f"cannot seed {b} centers from {n} points")
    if b == 0:
        return np.empty(0, dtype=np.int64)
    rng = np.random.default_rng(rng_seed)
    chosen = np.empty(b, dtype=np.int64)
    taken = np.zeros(n, dtype=bool)
    chosen[0] = int(rng.integers(n)) if first is None else int(first)
    taken[chosen[0]] = True
    d2 = sqdist_to(P, P[chosen[0]])
    for k in range(1, b):
        d2[taken] = 0.0
        cs = np.cumsum(d2)
        total = cs[-1]
        if total > 0.0:
            i = int(np.searchsorted(cs, rng.random() * total, side="right"))
            i = min(i, n - 1)
            while d2[i] == 0.0:
                i -= 1
        else:
            i = int(np.flatnonzero(~taken)[0])
        chosen[k] = i
        taken[i] = True
        d2 = np.minimum(d2, sqdist_to(P, P[i]))
    return chosen


def lloyd_kmeans(
    points,
    b: int,
    rng_seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-4,
    return_n_iter: bool = False,
):
    """k-means++ seeding followed by Lloyd iterations.

    Stops when no centroid moves by ``tol`` or more, or after ``max_iter``
    iterations.  A cluster left empty is re-seeded at the point farthest from
    its assigned centroid.
    """
    P = _as_points(points)
    n = P.shape[0]
    if not 1 <= b <= n:
        raise ContractViolation(f"need 1 <= b <= {n}, got {b}")
    centroids = P[kmeanspp_seed(P, b, rng_seed)].copy()
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d = pairwise_sqdist(P, centroids)
        labels = np.argmin(d, axis=1)
        counts = np.bincount(labels, minlength=b)
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, P)
        new = centroids.copy()
        nz = counts > 0
        new[nz] = sums[nz] / counts[nz, None]
        empty = np.flatnonzero(~nz)
        if empty.size:
            far = d[np.arange(n), labels]
            for c in empty:
                i = int(np.argmax(far))
                new[c] = P[i]
                far[i] = -1.0
        shift = np.sqrt(((new - centroids) ** 2).sum(axis=1)).max()
        centroids = new
        if shift < tol:
            break
    if return_n_iter:
        return centroids, n_iter
    return centroids


def nearest_unique_mapping(targets, pool) -> np.ndarray:
    """Map each target, in order, to its nearest pool row not yet assigned."""
    T = _as_points(targets)
    Q = _as_points(pool)
    if T.shape[0] > Q.shape[0]:
        raise ContractViolation("more targets than pool rows")
    free = np.ones(Q.shape[0], dtype=bool)
    out = np.empty(T.shape[0], dtype=np.int64)
    for k in range(T.shape[0]):
        d = sqdist_to(Q, T[k])
        d[~free] = np.inf
        i = int(np.argmin(d))
        out[k] = i
        free[i] = False
    return out
