# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled regression-tree kernels.

Mirrors ``disco._forest_py`` operation for operation; the two must stay in
lockstep so that both backends produce identical trees.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, isfinite
from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport free, malloc, qsort

cnp.import_array()


ctypedef struct KeyPos:
    double x
    int64_t pos


cdef int _cmp_keypos(const void* a, const void* b) noexcept nogil:
    cdef const KeyPos* pa = <const KeyPos*> a
    cdef const KeyPos* pb = <const KeyPos*> b
    if pa.x < pb.x:
        return -1
    if pa.x > pb.x:
        return 1
    if pa.pos < pb.pos:
        return -1
    if pa.pos > pb.pos:
        return 1
    return 0


cdef inline uint64_t _splitmix_next(uint64_t* state) noexcept nogil:
    state[0] += <uint64_t> 0x9E3779B97F4A7C15ULL
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t> 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t> 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef int _best_split_on_feature(
    const double[:, ::1] X,
    const double[::1] y,
    const int64_t* seg,
    int64_t n,
    int64_t f,
    KeyPos* keys,
    double* cs,
    double* out_proxy,
    double* out_thr,
) noexcept nogil:
    """Write the best cut on feature ``f`` to the out-params; return 0 if constant."""
    cdef int64_t i
    cdef double left, right, total, proxy, nl, best = -INFINITY
    cdef int64_t best_pos = -1
    cdef double lo, hi, thr
    for i in range(n):
        keys[i].x = X[seg[i], f]
        keys[i].pos = i
    qsort(keys, n, sizeof(KeyPos), _cmp_keypos)
    cs[0] = y[seg[keys[0].pos]]
    for i in range(1, n):
        cs[i] = cs[i - 1] + y[seg[keys[i].pos]]
    total = cs[n - 1]
    for i in range(n - 1):
        if keys[i].x < keys[i + 1].x:
            left = cs[i]
            right = total - left
            nl = <double> (i + 1)
            proxy = left * left / nl + right * right / (<double> n - nl)
            if best_pos < 0 or proxy > best:
                best = proxy
                best_pos = i
    if best_pos < 0:
        return 0
    lo = keys[best_pos].x
    hi = keys[best_pos + 1].x
    thr = (lo + hi) / 2.0
    if not (thr < hi) or not isfinite(thr):
        thr = lo
    out_proxy[0] = best
    out_thr[0] = thr
    return 1


def build_tree(X, y, sample, Py_ssize_t max_features, Py_ssize_t min_samples_split, seed):
    """Grow one regression tree; see ``disco._forest_py.build_tree``."""
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef cnp.ndarray[int64_t, ndim=1] work_arr = np.array(sample, dtype=np.int64, copy=True)
    cdef int64_t[::1] work = work_arr
    cdef int64_t n_samples = work_arr.shape[0]
    cdef int64_t q = Xv.shape[1]
    cdef int64_t cap = max(1, 2 * n_samples - 1)

    feature_arr = np.full(cap, -1, dtype=np.int64)
    threshold_arr = np.zeros(cap, dtype=np.float64)
    left_arr = np.full(cap, -1, dtype=np.int64)
    right_arr = np.full(cap, -1, dtype=np.int64)
    value_arr = np.zeros(cap, dtype=np.float64)
    counts_arr = np.zeros(cap, dtype=np.int64)
    cdef int64_t[::1] feature = feature_arr
    cdef double[::1] threshold = threshold_arr
    cdef int64_t[::1] left = left_arr
    cdef int64_t[::1] right = right_arr
    cdef double[::1] value = value_arr
    cdef int64_t[::1] counts = counts_arr

    cdef uint64_t state = <uint64_t> (int(seed) & 0xFFFFFFFFFFFFFFFF)
    perm_arr = np.arange(q, dtype=np.int64)
    cdef int64_t[::1] perm = perm_arr

    # stack entries: node, start, end
    stack_arr = np.empty((cap, 3), dtype=np.int64)
    cdef int64_t[:, ::1] stack = stack_arr
    cdef int64_t sp = 0
    cdef int64_t n_nodes = 1

    cdef KeyPos* keys = <KeyPos*> malloc(max(1, n_samples) * sizeof(KeyPos))
    cdef double* cs = <double*> malloc(max(1, n_samples) * sizeof(double))
    cdef int64_t* tmp = <int64_t*> malloc(max(1, n_samples) * sizeof(int64_t))
    if keys == NULL or cs == NULL or tmp == NULL:
        free(keys); free(cs); free(tmp)
        raise MemoryError()

    cdef int64_t node, start, end, n, i, j, f, visited, best_f, n_left, n_right, swap
    cdef double s, ymin, ymax, proxy, thr, best_proxy, best_thr
    cdef bint have_best

    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n_samples
    sp = 1
    try:
        with nogil:
            while sp > 0:
                sp -= 1
                node = stack[sp, 0]
                start = stack[sp, 1]
                end = stack[sp, 2]
                n = end - start
                counts[node] = n
                s = 0.0
                ymin = INFINITY
                ymax = -INFINITY
                for i in range(start, end):
                    s = s + yv[work[i]]
                    if yv[work[i]] < ymin:
                        ymin = yv[work[i]]
                    if yv[work[i]] > ymax:
                        ymax = yv[work[i]]
                value[node] = s / n
                if n < min_samples_split or ymax == ymin:
                    continue

                have_best = False
                best_proxy = -INFINITY
                best_thr = 0.0
                best_f = -1
                visited = 0
                while visited < q and (visited < max_features or not have_best):
                    j = visited + <int64_t> (_splitmix_next(&state) % <uint64_t> (q - visited))
                    swap = perm[visited]
                    perm[visited] = perm[j]
                    perm[j] = swap
                    f = perm[visited]
                    visited += 1
                    if _best_split_on_feature(Xv, yv, &work[start], n, f, keys, cs, &proxy, &thr):
                        if not have_best or proxy > best_proxy:
                            have_best = True
                            best_proxy = proxy
                            best_thr = thr
                            best_f = f
                if not have_best:
                    continue

                # stable partition of work[start:end]
                n_left = 0
                for i in range(start, end):
                    if Xv[work[i], best_f] <= best_thr:
                        tmp[n_left] = work[i]
                        n_left += 1
                n_right = 0
                for i in range(start, end):
                    if not (Xv[work[i], best_f] <= best_thr):
                        tmp[n_left + n_right] = work[i]
                        n_right += 1
                for i in range(n):
                    work[start + i] = tmp[i]

                feature[node] = best_f
                threshold[node] = best_thr
                left[node] = n_nodes
                right[node] = n_nodes + 1
                n_nodes += 2
                stack[sp, 0] = right[node]
                stack[sp, 1] = start + n_left
                stack[sp, 2] = end
                sp += 1
                stack[sp, 0] = left[node]
                stack[sp, 1] = start
                stack[sp, 2] = start + n_left
                sp += 1
    finally:
        free(keys)
        free(cs)
        free(tmp)

    return (
        feature_arr[:n_nodes].copy(),
        threshold_arr[:n_nodes].copy(),
        left_arr[:n_nodes].copy(),
        right_arr[:n_nodes].copy(),
        value_arr[:n_nodes].copy(),
        counts_arr[:n_nodes].copy(),
    )


def predict_tree(feature, threshold, left, right, value, X):
    cdef const int64_t[::1] fv = np.ascontiguousarray(feature, dtype=np.int64)
    cdef const double[::1] tv = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef const int64_t[::1] lv = np.ascontiguousarray(left, dtype=np.int64)
    cdef const int64_t[::1] rv = np.ascontiguousarray(right, dtype=np.int64)
    cdef const double[::1] vv = np.ascontiguousarray(value, dtype=np.float64)
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    out_arr = np.empty(Xv.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef int64_t node
    with nogil:
        for i in range(Xv.shape[0]):
            node = 0
            while fv[node] >= 0:
                if Xv[i, fv[node]] <= tv[node]:
                    node = lv[node]
                else:
                    node = rv[node]
            out[i] = vv[node]
    return out_arr
