"""Active-learning orchestration: schedule, retrain, acquire, commit, score.

Cycle ``k`` (1-based) first commits a batch, then retrains the model from
scratch on everything acquired so far and scores it on the fixed test set.
The batch of cycle 1 is uniform random from a stream that depends only on
the run seed, so every acquisition function starts from the same labels;
later batches come from the acquisition function applied to the model of
the previous cycle.  Record ``k`` therefore describes a model trained on
``k * b`` labelled units.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import acquisition as acq
from .core import AlignedDataset, CycleRecord, PoolState, commit_batch, make_pool_state
from .errors import ConfigurationError, DiscoError, RunFailure
from .models import (
    DEFAULT_HIDDEN_GRID,
    badge_gradient_embedding,
    penultimate_embeddings,
    predict_ensemble,
    rf_predict,
    train_mlp_ensemble,
    train_random_forest,
)
from .seeding import derive_seed

log = logging.getLogger(__name__)

MAX_CYCLES = 40
REFERENCE_BATCH = 64


@dataclass(frozen=True)
class RunSpec:
    model_kind: str = "ensemble_mlp"
    acquisition_kind: str = "random"
    batch_size: int = 16
    num_cycles: int | None = None  # None -> cycle_schedule(batch_size)
    seed: int = 0
    temperature: float = acq.DEFAULT_TEMPERATURE
    gamma: float = acq.DEFAULT_GAMMA
    adv_steps: int = acq.DEFAULT_ADV_STEPS
    m: int | None = None  # None -> 10 members / 100 trees
    hidden_grid: tuple[int, ...] = DEFAULT_HIDDEN_GRID
    max_epochs: int = 100
    hit_quantile: float = 0.05
    test_fraction: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "hidden_grid", tuple(int(h) for h in self.hidden_grid))
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.num_cycles is not None and self.num_cycles < 1:
            raise ConfigurationError(f"num_cycles must be >= 1, got {self.num_cycles}")
        if not 0.0 < self.hit_quantile <= 0.5:
            raise ConfigurationError(f"hit_quantile must lie in (0, 0.5], got {self.hit_quantile}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigurationError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if not acq.compatibility(self.model_kind, self.acquisition_kind):
            raise ConfigurationError(
                f"acquisition {self.acquisition_kind!r} is not compatible with "
                f"model {self.model_kind!r}"
            )

    @property
    def cycles(self) -> int:
        return self.num_cycles if self.num_cycles is not None else cycle_schedule(self.batch_size)

    @property
    def ensemble_size(self) -> int:
        if self.m is not None:
            return self.m
        return 10 if self.model_kind == "ensemble_mlp" else 100


def cycle_schedule(b: int) -> int:
    """40 cycles up to b = 64, then as many as keep the total at 64 * 40 units."""
    if b < 1:
        raise ConfigurationError(f"batch size must be >= 1, got {b}")
    if b <= REFERENCE_BATCH:
        return MAX_CYCLES
    return math.ceil(REFERENCE_BATCH * MAX_CYCLES / b)


def hit_set(outcomes, test_idx, quantile: float = 0.05) -> np.ndarray:
    """Non-test units with the largest ``|y|``: ``round(quantile * n_nontest)`` of them, at least 1."""
    y = np.asarray(outcomes, dtype=np.float64)
    nontest = np.setdiff1d(np.arange(y.size), np.asarray(test_idx, dtype=np.int64))
    k = max(1, int(round(quantile * nontest.size)))
    order = np.lexsort((nontest, -np.abs(y[nontest])))
    return np.sort(nontest[order[:k]])


def hit_ratio(hits, cum_idx) -> float:
    hits = np.asarray(hits, dtype=np.int64)
    if hits.size == 0:
        raise ValueError("hit set is empty")
    return float(np.isin(hits, np.asarray(cum_idx, dtype=np.int64)).sum() / hits.size)


def evaluate_mse(predictions, outcomes) -> float:
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(outcomes, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {y.shape}")
    return float(np.mean((p - y) ** 2))


@dataclass
class _Fitted:
    kind: str
    model: object

    def predict(self, X):
        if self.kind == "ensemble_mlp":
            return predict_ensemble(self.model, X)
        return rf_predict(self.model, X)


def _fit(spec: RunSpec, X, y, seed: int) -> _Fitted:
    if spec.model_kind == "ensemble_mlp":
        model = train_mlp_ensemble(
            X, y, m=spec.ensemble_size, hidden_grid=spec.hidden_grid,
            max_epochs=spec.max_epochs, rng_seed=seed,
        )
    else:
        model = train_random_forest(X, y, m=spec.ensemble_size, rng_seed=seed)
    return _Fitted(spec.model_kind, model)


def build_acquisition_input(
    spec: RunSpec, fitted: _Fitted, data: AlignedDataset, state: PoolState, cycle: int
) -> acq.AcquisitionInput:
    need = acq.REQUIREMENTS[spec.acquisition_kind]
    Xa = data.features[state.avail_idx]
    Xc = data.features[state.cum_idx]
    kw = {}
    if "estimator_output" in need:
        kw["estimator_output"] = fitted.predict(Xa)
    if fitted.kind == "ensemble_mlp":
        if "embeddings" in need:
            kw["embeddings_avail"] = penultimate_embeddings(fitted.model, Xa).values
            kw["embeddings_cum"] = penultimate_embeddings(fitted.model, Xc).values
        if "gradient_embeddings" in need:
            kw["gradient_embeddings"] = badge_gradient_embedding(
                fitted.model, Xa, rng_seed=derive_seed(spec.seed, "badge", cycle)
            )
        if "model" in need:
            kw["model"] = fitted.model
    return acq.AcquisitionInput(
        avail_features=Xa,
        cum_features=Xc,
        batch_size=spec.batch_size,
        rng_seed=derive_seed(spec.seed, "acquire", cycle),
        temperature=spec.temperature,
        gamma=spec.gamma,
        adv_steps=spec.adv_steps,
        **kw,
    )


def seed_batch(state: PoolState, b: int, seed: int) -> np.ndarray:
    """Uniform random first batch, shared by all acquisition functions for a seed."""
    inp = acq.AcquisitionInput(
        avail_features=np.zeros((state.avail_idx.size, 1)),
        batch_size=b,
        rng_seed=derive_seed(seed, "seed-batch"),
    )
    return state.avail_idx[acq.acquire_random(inp).indices]


@dataclass
class RunResult:
    records: list[CycleRecord]
    state: PoolState
    hits: np.ndarray
    batches: list[np.ndarray] = field(default_factory=list)


def run_active_learning_detailed(
    data: AlignedDataset,
    spec: RunSpec,
    on_record: Callable[[CycleRecord], None] | None = None,
) -> RunResult:
    """Like :func:`run_active_learning` but also returns final pool state and batches."""
    state = make_pool_state(data.n, spec.test_fraction, derive_seed(spec.seed, "split"))
    hits = hit_set(data.outcomes, state.test_idx, spec.hit_quantile)
    X, y = data.features, data.outcomes
    X_test, y_test = X[state.test_idx], y[state.test_idx]
    records: list[CycleRecord] = []
    batches: list[np.ndarray] = []
    fitted = None
    for cycle in range(1, spec.cycles + 1):
        if state.avail_idx.size == 0:
            log.info("pool exhausted after %d cycles", cycle - 1)
            break
        t0 = time.perf_counter()
        try:
            if fitted is None:
                batch = seed_batch(state, spec.batch_size, spec.seed)
            else:
                inp = build_acquisition_input(spec, fitted, data, state, cycle)
                batch = state.avail_idx[acq.acquire(spec.acquisition_kind, inp).indices]
            state = commit_batch(state, batch)
            batches.append(batch)
            fitted = _fit(spec, X[state.cum_idx], y[state.cum_idx],
                          derive_seed(spec.seed, "train", cycle))
            mse = evaluate_mse(fitted.predict(X_test).mean, y_test)
        except DiscoError as exc:
            if isinstance(exc, RunFailure):
                raise
            raise RunFailure(str(exc), cycle) from exc
        rec = CycleRecord(
            cycle=cycle,
            n_acquired_total=int(state.cum_idx.size),
            test_mse=mse,
            hit_ratio=hit_ratio(hits, state.cum_idx),
            acquired_units=tuple(data.units[i] for i in batch),
            wall_time_s=time.perf_counter() - t0,
        )
        records.append(rec)
        if on_record is not None:
            on_record(rec)
        log.debug("cycle %d: n=%d mse=%.5g hit=%.3f", cycle, rec.n_acquired_total,
                  rec.test_mse, rec.hit_ratio)
    return RunResult(records, state, hits, batches)


def run_active_learning(
    data: AlignedDataset,
    spec: RunSpec,
    on_record: Callable[[CycleRecord], None] | None = None,
) -> list[CycleRecord]:
    return run_active_learning_detailed(data, spec, on_record).records

