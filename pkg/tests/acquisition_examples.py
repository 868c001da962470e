"""Worked examples for every acquisition-module operation.

Each ``check_*`` function raises ``AssertionError`` on failure.  They are
collected into ``EXAMPLES`` so the unit tests and the acceptance suite run
exactly the same checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import replace

import numpy as np

from disco import acquisition as acq
from disco.errors import CapabilityError
from disco.models import EnsembleMlp, EstimatorOutput
from disco.selection import (
    farthest_first,
    kmeanspp_seed,
    lloyd_kmeans,
    nearest_unique_mapping,
)


def out_from_rows(rows) -> EstimatorOutput:
    return EstimatorOutput.from_members(np.array(rows, dtype=float))


def rows_with_bald(scores):
    """Two-member rows whose BALD score is exactly ``0.5*log1p(var)`` for the target scores."""
    rows = []
    for s in scores:
        half = math.sqrt(math.expm1(2.0 * s))  # population variance of (-a, a) is a^2
        rows.append([-half, half])
    return out_from_rows(rows)


def make_input(n, b, seed=0, **kw):
    return acq.AcquisitionInput(avail_features=np.zeros((n, 1)), batch_size=b, rng_seed=seed, **kw)


# ---- greedy replay oracles (plain Python, no shared code with the package) ----

def greedy_k_center_oracle(cands, anchors, b):
    cands = [tuple(map(float, c)) for c in np.atleast_2d(cands)]
    anchors = [tuple(map(float, a)) for a in anchors]
    chosen = []
    for _ in range(b):
        best_i, best_d = None, -1.0
        for i, c in enumerate(cands):
            if i in chosen:
                continue
            refs = anchors + [cands[j] for j in chosen]
            d = min((math.dist(c, r) for r in refs), default=math.inf)
            if d > best_d:
                best_i, best_d = i, d
        chosen.append(best_i)
    return chosen


def kmeanspp_replay(points, b, seed, first=None):
    """Independent replay of the documented k-means++ draw protocol."""
    pts = [tuple(map(float, p)) for p in points]
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(len(pts))) if first is None else first]
    for _ in range(1, b):
        w = []
        for i, p in enumerate(pts):
            if i in chosen:
                w.append(0.0)
            else:
                w.append(min(sum((a - c) ** 2 for a, c in zip(p, pts[j])) for j in chosen))
        total = 0.0
        cum = []
        for x in w:
            total += x
            cum.append(total)
        if total > 0:
            u = rng.random() * total
            i = next(k for k, c in enumerate(cum) if c > u)
        else:
            i = next(k for k in range(len(pts)) if k not in chosen)
        chosen.append(i)
    return chosen


# ---- bald_scores ----

def check_bald_constant_row():
    assert acq.bald_scores(out_from_rows([[1, 1, 1]])).values[0] == 0.0


def check_bald_zero_two():
    v = acq.bald_scores(out_from_rows([[0, 2]])).values[0]
    assert abs(v - 0.5 * math.log(2.0)) <= 1e-12
    assert abs(v - 0.34657) < 1e-5


def check_bald_3337():
    v = acq.bald_scores(out_from_rows([[3, 3, 3, 7]])).values[0]
    assert abs(v - 0.5 * math.log(4.0)) <= 1e-12
    assert abs(v - 0.69315) < 1e-5


# ---- topuncertain ----

def check_top_order():
    scores = [0.1, 0.9, 0.5]
    out = rows_with_bald(scores)
    batch = acq.acquire_topuncertain(make_input(3, 2, estimator_output=out))
    oracle = sorted(range(3), key=lambda i: -scores[i])[:2]
    assert batch.indices.tolist() == oracle == [1, 2]


def check_top_ties():
    out = out_from_rows([[0, 1]] * 5)
    batch = acq.acquire_topuncertain(make_input(5, 2, estimator_output=out))
    assert batch.indices.tolist() == [0, 1]


def check_top_whole_pool():
    out = rows_with_bald([0.3, 0.1, 0.2])
    batch = acq.acquire_topuncertain(make_input(3, 3, estimator_output=out))
    assert sorted(batch.indices.tolist()) == [0, 1, 2]


# ---- softuncertain ----

def softbald_subset_counts(out, b, temperature, draws, seed0=0):
    base = make_input(out.n, b, estimator_output=out, temperature=temperature)
    counts = {}
    for s in range(seed0, seed0 + draws):
        key = tuple(sorted(acq.acquire_softuncertain(replace(base, rng_seed=s)).indices.tolist()))
        counts[key] = counts.get(key, 0) + 1
    return counts


def check_soft_uniform_chisq(draws=100_000):
    from scipy.stats import chisquare

    out = out_from_rows([[0, 1]] * 4)
    counts = softbald_subset_counts(out, 2, 1.0, draws)
    subsets = list(itertools.combinations(range(4), 2))
    observed = [counts.get(s, 0) for s in subsets]
    assert sum(observed) == draws
    p = chisquare(observed).pvalue
    assert p > 0.01, f"chi-square p={p}"


def check_soft_two_thirds(draws=30_000):
    # BALD = ln 2 needs variance 3; second row has variance 0
    out = out_from_rows([[-math.sqrt(3), math.sqrt(3)], [0.0, 0.0]])
    assert abs(acq.bald_scores(out).values[0] - math.log(2)) < 1e-12
    base = make_input(2, 1, estimator_output=out, temperature=1.0)
    hits = sum(
        acq.acquire_softuncertain(replace(base, rng_seed=s)).indices[0] == 0 for s in range(draws)
    )
    p_hat = hits / draws
    sigma = math.sqrt((2 / 3) * (1 / 3) / draws)
    assert abs(p_hat - 2 / 3) < 4 * sigma, f"P(first)={p_hat}"


def check_soft_cold_limit():
    rng = np.random.default_rng(3)
    scores = rng.permutation(np.linspace(0.05, 1.0, 12))
    out = rows_with_bald(scores)
    top = set(acq.acquire_topuncertain(make_input(12, 4, estimator_output=out)).indices.tolist())
    for s in range(20):
        soft = acq.acquire_softuncertain(
            make_input(12, 4, seed=s, estimator_output=out, temperature=1e-6)
        )
        assert set(soft.indices.tolist()) == top


# ---- margin ----

def check_margin_value():
    assert acq.margin_scores(out_from_rows([[1, 3, 2]])).values[0] == 2.0


def check_margin_single_member():
    out = out_from_rows([[0.3], [1.2], [-4.0], [2.0]])
    assert np.all(acq.margin_scores(out).values == 0.0)
    assert acq.acquire_margin(make_input(4, 2, estimator_output=out)).indices.tolist() == [0, 1]


def check_margin_flat_row():
    assert acq.margin_scores(out_from_rows([[-2, -2]])).values[0] == 0.0


# ---- random ----

def check_random_whole_pool():
    assert sorted(acq.acquire_random(make_input(7, 7, seed=11)).indices.tolist()) == list(range(7))


def check_random_uniform_single(trials=100_000, n=5):
    base = make_input(n, 1)
    counts = np.zeros(n, dtype=np.int64)
    for s in range(trials):
        counts[acq.acquire_random(replace(base, rng_seed=s)).indices[0]] += 1
    p = 1.0 / n
    sigma = math.sqrt(p * (1 - p) / trials)
    freq = counts / trials
    assert np.all(np.abs(freq - p) <= 3 * sigma), freq


def check_random_deterministic():
    a = acq.acquire_random(make_input(50, 10, seed=5)).indices
    b = acq.acquire_random(make_input(50, 10, seed=5)).indices
    assert np.array_equal(a, b)


# ---- farthest_first ----

def check_ff_hand_trace():
    cands = np.array([[1.0], [5.0], [10.0]])
    got = farthest_first(cands, np.array([[0.0]]), 2).tolist()
    assert got == [2, 1]
    # brute force: the greedy sequence is the unique order maximising each step's gap
    best = None
    for order in itertools.permutations(range(3), 2):
        gaps, refs = [], [0.0]
        for i in order:
            gaps.append(min(abs(cands[i, 0] - r) for r in refs))
            refs.append(cands[i, 0])
        if best is None or gaps > best[0]:
            best = (gaps, list(order))
    assert got == best[1]


def check_ff_all():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(9, 3))
    assert sorted(farthest_first(pts, np.empty((0, 3)), 9).tolist()) == list(range(9))


def check_ff_duplicates():
    pts = np.ones((6, 2))
    assert farthest_first(pts, np.ones((2, 2)), 3).tolist() == [0, 1, 2]


# ---- coreset ----

def check_coreset_endpoints():
    emb = np.column_stack([np.arange(8.0), 2.0 * np.arange(8.0)])
    inp = make_input(8, 2, embeddings_avail=emb, embeddings_cum=np.empty((0, 2)))
    assert sorted(acq.acquire_coreset(inp).indices.tolist()) == [0, 7]


def check_coreset_coincident_last():
    emb = np.array([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0], [0.5, 0.5]])
    cum = np.array([[0.0, 0.0]])
    order = acq.acquire_coreset(
        make_input(4, 4, embeddings_avail=emb, embeddings_cum=cum)
    ).indices.tolist()
    assert order[-1] == 0  # distance 0 to an acquired point; everything else is farther


def check_coreset_oracle():
    rng = np.random.default_rng(42)
    for trial in range(25):
        n = int(rng.integers(4, 13))
        emb = rng.normal(size=(n, 2))
        n_cum = int(rng.integers(0, 3))
        cum = rng.normal(size=(n_cum, 2))
        b = int(rng.integers(1, min(4, n) + 1))
        got = acq.acquire_coreset(
            make_input(n, b, embeddings_avail=emb, embeddings_cum=cum)
        ).indices.tolist()
        assert got == greedy_k_center_oracle(emb, cum, b), trial


# ---- kmeanspp_seed ----

def check_kpp_all():
    pts = np.random.default_rng(1).normal(size=(6, 2))
    assert sorted(kmeanspp_seed(pts, 6, 3).tolist()) == list(range(6))


def check_kpp_d2_weights(draws=20_000):
    pts = np.array([[0.0], [1.0], [10.0]])
    hits = sum(kmeanspp_seed(pts, 2, s, first=0)[1] == 2 for s in range(draws))
    p = 100 / 101
    sigma = math.sqrt(p * (1 - p) / draws)
    assert abs(hits / draws - p) < 4 * sigma, hits / draws


def check_kpp_duplicates():
    base = np.array([[0.0, 0.0], [3.0, 1.0], [-2.0, 5.0]])
    pts = np.repeat(base, 2, axis=0)
    for s in range(200):
        picked = kmeanspp_seed(pts, 3, s)
        assert len({tuple(pts[i]) for i in picked}) == 3


# ---- lloyd_kmeans ----

PAIRS = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])


def check_lloyd_pairs():
    for s in range(10):
        c = lloyd_kmeans(PAIRS, 2, rng_seed=s)
        c = c[np.argsort(c[:, 0])]
        assert np.allclose(c, [[0.0, 0.5], [10.0, 0.5]], atol=1e-12)


def check_lloyd_single():
    pts = np.random.default_rng(2).normal(size=(30, 3))
    assert np.allclose(lloyd_kmeans(pts, 1, rng_seed=0)[0], pts.mean(axis=0), atol=1e-12)


def check_lloyd_identical():
    pts = np.tile([[1.5, -2.0]], (5, 1))
    c, n_iter = lloyd_kmeans(pts, 3, rng_seed=0, return_n_iter=True)
    assert n_iter == 1
    assert np.all(c == pts[0])


# ---- nearest_unique_mapping ----

def _mapping_oracle(targets, pool):
    free = list(range(len(pool)))
    out = []
    for t in targets:
        i = min(free, key=lambda j: (math.dist(t, pool[j]), j))
        out.append(i)
        free.remove(i)
    return out


def check_map_exact():
    pool = np.random.default_rng(4).normal(size=(8, 2))
    assert nearest_unique_mapping(pool[[5, 2, 7]], pool).tolist() == [5, 2, 7]


def check_map_conflict():
    pool = np.array([[0.0], [1.0], [3.0]])
    targets = np.array([[0.9], [1.1]])
    got = nearest_unique_mapping(targets, pool).tolist()
    assert got == [1, 0]
    assert got == _mapping_oracle(targets.tolist(), pool.tolist())


def check_map_single():
    pool = np.random.default_rng(5).normal(size=(10, 3))
    t = np.array([[0.1, 0.2, -0.1]])
    nearest = int(np.argmin(((pool - t) ** 2).sum(axis=1)))
    assert nearest_unique_mapping(t, pool).tolist() == [nearest]


# ---- kmeansdata / kmeansembed ----

def check_kmd_pairs():
    for s in range(10):
        got = acq.acquire_kmeans_data(
            acq.AcquisitionInput(avail_features=PAIRS, batch_size=2, rng_seed=s)
        ).indices.tolist()
        assert sorted(i // 2 for i in got) == [0, 1]


def check_kmd_all():
    pts = np.random.default_rng(6).normal(size=(7, 2))
    inp = acq.AcquisitionInput(avail_features=pts, batch_size=7, rng_seed=0)
    assert sorted(acq.acquire_kmeans_data(inp).indices.tolist()) == list(range(7))


def check_kmd_deterministic():
    pts = np.random.default_rng(7).normal(size=(40, 3))
    inp = acq.AcquisitionInput(avail_features=pts, batch_size=5, rng_seed=9)
    assert np.array_equal(acq.acquire_kmeans_data(inp).indices, acq.acquire_kmeans_data(inp).indices)


def check_kme_pairs_in_embedding_space():
    feats = np.random.default_rng(8).normal(size=(4, 3))  # irrelevant for kmeansembed
    for s in range(10):
        inp = acq.AcquisitionInput(avail_features=feats, batch_size=2, rng_seed=s,
                                   embeddings_avail=PAIRS)
        assert sorted(i // 2 for i in acq.acquire_kmeans_embed(inp).indices.tolist()) == [0, 1]


def check_kme_all_and_deterministic():
    emb = np.random.default_rng(9).normal(size=(6, 4))
    inp = acq.AcquisitionInput(avail_features=np.zeros((6, 1)), batch_size=6, rng_seed=1,
                               embeddings_avail=emb)
    assert sorted(acq.acquire_kmeans_embed(inp).indices.tolist()) == list(range(6))
    inp = replace(inp, batch_size=3)
    assert np.array_equal(acq.acquire_kmeans_embed(inp).indices, acq.acquire_kmeans_embed(inp).indices)


def check_kme_missing_embeddings():
    inp = acq.AcquisitionInput(avail_features=np.zeros((6, 1)), batch_size=2)
    try:
        acq.acquire_kmeans_embed(inp)
    except CapabilityError:
        return
    raise AssertionError("missing embeddings must raise CapabilityError")


# ---- badge ----

def check_badge_identical():
    grads = np.tile([[0.5, -1.0, 1.0]], (6, 1))
    for s in range(20):
        got = acq.acquire_badge(make_input(6, 3, seed=s, gradient_embeddings=grads)).indices.tolist()
        first = int(np.random.default_rng(s).integers(6))
        rest = [i for i in range(6) if i != first][:2]
        assert got == [first] + rest


def check_badge_zero_rows():
    rng = np.random.default_rng(10)
    grads = np.zeros((10, 3))
    nonzero = [2, 5, 8]
    grads[nonzero] = rng.normal(size=(3, 3))
    for s in range(100):
        got = acq.acquire_badge(make_input(10, 4, seed=s, gradient_embeddings=grads)).indices.tolist()
        if got[0] not in nonzero:
            # once a zero row is a seed every other zero row has D^2 = 0
            assert sorted(got[1:]) == nonzero


def check_badge_replay():
    rng = np.random.default_rng(11)
    for s in range(10):
        grads = rng.normal(size=(10, 4))
        got = acq.acquire_badge(make_input(10, 3, seed=s, gradient_embeddings=grads)).indices.tolist()
        assert got == kmeanspp_replay(grads, 3, s)


# ---- advbim ----

def single_member_net(q=3, seed=0):
    rng = np.random.default_rng(seed)
    return EnsembleMlp(rng.normal(size=(1, 4, q)), rng.normal(size=(1, 4)),
                       rng.normal(size=(1, 4)), rng.normal(size=1))


def check_advbim_single_member():
    X = np.random.default_rng(12).normal(size=(9, 3))
    inp = acq.AcquisitionInput(avail_features=X, batch_size=4, model=single_member_net())
    assert acq.acquire_advbim(inp).indices.tolist() == [0, 1, 2, 3]


def check_advbim_clip():
    rng = np.random.default_rng(13)
    model = EnsembleMlp(rng.normal(size=(3, 6, 4)), rng.normal(size=(3, 6)),
                        rng.normal(size=(3, 6)), rng.normal(size=3))
    X = rng.normal(size=(25, 4))
    gamma = 0.2
    path = acq.adversarial_perturb(model, X, gamma, 15, return_path=True)
    radius = gamma * np.linalg.norm(X, axis=1)
    for T in path:
        assert np.all(np.linalg.norm(T - X, axis=1) <= radius + 1e-9)


def check_advbim_direction():
    # members g_j(t) = w2_j * relu(t) + b2_j; for t > 0 dVar/dt = 0.5 (g1 - g2)(w2_1 - w2_2)
    def two_member(b2):
        return EnsembleMlp(np.ones((2, 1, 1)), np.zeros((2, 1)), [[1.0], [3.0]], b2)

    X = np.array([[1.0]])
    up = acq.adversarial_perturb(two_member([0.0, 0.0]), X, 0.1, 5)  # grad = 0.5*(-2)*(-2) = 2
    down = acq.adversarial_perturb(two_member([5.0, 0.0]), X, 0.1, 5)  # 0.5*(3)*(-2) = -3
    assert up[0, 0] > 1.0 and down[0, 0] < 1.0
    assert abs(up[0, 0] - 1.1) < 1e-12 and abs(down[0, 0] - 0.9) < 1e-12


# ---- compatibility ----

def check_compat_forest_coreset():
    assert acq.compatibility("random_forest", "coreset") is False


def check_compat_mlp_badge():
    assert acq.compatibility("ensemble_mlp", "badge") is True


def check_compat_forest_random():
    assert acq.compatibility("random_forest", "random") is True


EXAMPLES = {name[len("check_"):]: fn for name, fn in sorted(globals().items())
            if name.startswith("check_") and callable(fn)}
