"""The nine batch acquisition functions.

Every function takes an :class:`AcquisitionInput` describing the available
pool and returns an :class:`~disco.core.AcquisitionBatch` of row positions
into that pool (``0 .. n_avail - 1``).  Rows are assumed to be in ascending
dataset-index order, so "lowest position" and "lowest pool index" coincide
for tie-breaking.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import AcquisitionBatch
from .errors import CapabilityError, ConfigurationError, ContractViolation
from .models.mlp import EnsembleMlp, variance_gradient
from .models.output import EstimatorOutput
from .selection import (
    farthest_first,
    kmeanspp_seed,
    lloyd_kmeans,
    nearest_index,
    nearest_unique_mapping,
    sample_without_replacement,
    sample_without_replacement_logits,
)

ACQUISITIONS = (
    "random",
    "badge",
    "topuncertain",
    "softuncertain",
    "coreset",
    "margin",
    "advbim",
    "kmeansdata",
    "kmeansembed",
)
MODEL_KINDS = ("ensemble_mlp", "random_forest")
FOREST_ACQUISITIONS = frozenset({"random", "topuncertain", "softuncertain", "margin", "kmeansdata"})

# what the loop must compute before calling each function
REQUIREMENTS = {
    "random": frozenset(),
    "badge": frozenset({"gradient_embeddings"}),
    "topuncertain": frozenset({"estimator_output"}),
    "softuncertain": frozenset({"estimator_output"}),
    "coreset": frozenset({"embeddings"}),
    "margin": frozenset({"estimator_output"}),
    "advbim": frozenset({"model"}),
    "kmeansdata": frozenset(),
    "kmeansembed": frozenset({"embeddings"}),
}

DEFAULT_TEMPERATURE = 1.0
DEFAULT_GAMMA = 0.1
DEFAULT_ADV_STEPS = 15


@dataclass(frozen=True)
class ScoreVector:
    values: np.ndarray
    kind: str


@dataclass(frozen=True)
class AcquisitionInput:
    avail_features: np.ndarray
    batch_size: int
    rng_seed: int = 0
    cum_features: np.ndarray | None = None
    estimator_output: EstimatorOutput | None = None
    embeddings_avail: np.ndarray | None = None
    embeddings_cum: np.ndarray | None = None
    gradient_embeddings: np.ndarray | None = None
    model: EnsembleMlp | None = None
    temperature: float = DEFAULT_TEMPERATURE
    gamma: float = DEFAULT_GAMMA
    adv_steps: int = DEFAULT_ADV_STEPS

    @property
    def n_avail(self) -> int:
        return np.asarray(self.avail_features).shape[0]

    def effective_b(self) -> int:
        if self.batch_size < 1:
            raise ConfigurationError(f"batch size must be >= 1, got {self.batch_size}")
        if self.n_avail == 0:
            raise ContractViolation("the available pool is empty")
        return min(self.batch_size, self.n_avail)

    def require(self, name: str, acquisition: str):
        value = getattr(self, name)
        if value is None:
            raise CapabilityError(f"{acquisition} needs {name}, which the model did not supply")
        return value


def compatibility(model_kind: str, acquisition_kind: str) -> bool:
    """Whether ``acquisition_kind`` can run on top of ``model_kind``."""
    if model_kind not in MODEL_KINDS:
        raise ConfigurationError(f"unknown model kind {model_kind!r}")
    if acquisition_kind not in ACQUISITIONS:
        raise ConfigurationError(f"unknown acquisition {acquisition_kind!r}")
    if model_kind == "random_forest":
        return acquisition_kind in FOREST_ACQUISITIONS
    return True


def bald_scores(out: EstimatorOutput) -> ScoreVector:
    """Mutual information under a unit-variance Gaussian likelihood: ``0.5 * log1p(var)``."""
    return ScoreVector(0.5 * np.log1p(out.variance), "bald")


def margin_scores(out: EstimatorOutput) -> ScoreVector:
    pm = out.per_member
    return ScoreVector(pm.max(axis=1) - pm.min(axis=1), "margin")


def _top_b(scores: np.ndarray, b: int) -> AcquisitionBatch:
    order = np.lexsort((np.arange(scores.size), -scores))[:b]
    return AcquisitionBatch(order, scores[order])


def acquire_random(inp: AcquisitionInput) -> AcquisitionBatch:
    b = inp.effective_b()
    rng = np.random.default_rng(inp.rng_seed)
    return AcquisitionBatch(sample_without_replacement(np.ones(inp.n_avail), b, rng))


def acquire_topuncertain(inp: AcquisitionInput) -> AcquisitionBatch:
    b = inp.effective_b()
    out = inp.require("estimator_output", "topuncertain")
    return _top_b(bald_scores(out).values, b)


def acquire_softuncertain(inp: AcquisitionInput) -> AcquisitionBatch:
    """Sequential draws with probability proportional to ``exp(score / T)``."""
    if not inp.temperature > 0:
        raise ConfigurationError(f"temperature must be positive, got {inp.temperature}")
    b = inp.effective_b()
    scores = bald_scores(inp.require("estimator_output", "softuncertain")).values
    logits = scores / inp.temperature
    idx = sample_without_replacement_logits(logits, b, np.random.default_rng(inp.rng_seed))
    return AcquisitionBatch(idx, scores[idx])


def acquire_margin(inp: AcquisitionInput) -> AcquisitionBatch:
    b = inp.effective_b()
    return _top_b(margin_scores(inp.require("estimator_output", "margin")).values, b)


def acquire_coreset(inp: AcquisitionInput) -> AcquisitionBatch:
    b = inp.effective_b()
    emb = inp.require("embeddings_avail", "coreset")
    anchors = inp.embeddings_cum
    if anchors is None:
        anchors = np.empty((0, np.asarray(emb).shape[1]))
    return AcquisitionBatch(farthest_first(emb, anchors, b))


def _kmeans_pick(points, b: int, seed: int) -> AcquisitionBatch:
    centroids = lloyd_kmeans(points, b, rng_seed=seed)
    return AcquisitionBatch(nearest_unique_mapping(centroids, points))


def acquire_kmeans_data(inp: AcquisitionInput) -> AcquisitionBatch:
    b = inp.effective_b()
    return _kmeans_pick(inp.avail_features, b, inp.rng_seed)


def acquire_kmeans_embed(inp: AcquisitionInput) -> AcquisitionBatch:
    b = inp.effective_b()
    return _kmeans_pick(inp.require("embeddings_avail", "kmeansembed"), b, inp.rng_seed)


def acquire_badge(inp: AcquisitionInput) -> AcquisitionBatch:
    b = inp.effective_b()
    grads = inp.require("gradient_embeddings", "badge")
    return AcquisitionBatch(kmeanspp_seed(grads, b, inp.rng_seed))


def adversarial_perturb(
    model: EnsembleMlp, X, gamma: float, steps: int, return_path: bool = False
):
    """Iterated signed-gradient ascent on ensemble variance inside an L2 ball.

    The ball around each point ``t`` has radius ``gamma * ||t||``; each step
    moves by ``radius / steps`` per coordinate along ``sign(grad Var)`` and
    rescales the offset back onto the ball when it overshoots.  With
    ``return_path`` the list of all iterates (starting at ``X``) is returned.
    """
    X = np.asarray(X, dtype=np.float64)
    eps = gamma * np.linalg.norm(X, axis=1)
    eta = eps / steps
    T = X.copy()
    path = [T]
    for _ in range(steps):
        T = T + eta[:, None] * np.sign(variance_gradient(model, T))
        delta = T - X
        norm = np.linalg.norm(delta, axis=1)
        over = norm > eps
        scale = np.where(over, eps / np.where(norm > 0, norm, 1.0), 1.0)
        T = X + delta * scale[:, None]
        path.append(T)
    return path if return_path else T


def acquire_advbim(inp: AcquisitionInput) -> AcquisitionBatch:
    """Perturb every pool point, then map perturbations back to real pool rows.

    Perturbed points are visited in ascending distance to their nearest pool
    row (ties by position) and each claims its nearest unclaimed row until
    ``b`` rows are taken.
    """
    if not inp.gamma > 0:
        raise ConfigurationError(f"gamma must be positive, got {inp.gamma}")
    if inp.adv_steps < 1:
        raise ConfigurationError(f"adv_steps must be >= 1, got {inp.adv_steps}")
    b = inp.effective_b()
    model = inp.require("model", "advbim")
    if not isinstance(model, EnsembleMlp):
        raise CapabilityError("advbim needs a differentiable ensemble model")
    X = np.asarray(inp.avail_features, dtype=np.float64)
    T = adversarial_perturb(model, X, inp.gamma, inp.adv_steps)
    near = nearest_index(T, X)
    dist = np.einsum("ij,ij->i", T - X[near], T - X[near])
    order = np.lexsort((np.arange(X.shape[0]), dist))[:b]
    return AcquisitionBatch(nearest_unique_mapping(T[order], X))


ACQUIRE: dict[str, Callable[[AcquisitionInput], AcquisitionBatch]] = {
    "random": acquire_random,
    "badge": acquire_badge,
    "topuncertain": acquire_topuncertain,
    "softuncertain": acquire_softuncertain,
    "coreset": acquire_coreset,
    "margin": acquire_margin,
    "advbim": acquire_advbim,
    "kmeansdata": acquire_kmeans_data,
    "kmeansembed": acquire_kmeans_embed,
}


def acquire(kind: str, inp: AcquisitionInput) -> AcquisitionBatch:
    try:
        fn = ACQUIRE[kind]
    except KeyError:
        raise ConfigurationError(f"unknown acquisition {kind!r}") from None
    return fn(inp)
