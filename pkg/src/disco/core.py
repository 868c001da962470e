"""Domain types for pools, batches and run records.

All containers are frozen dataclasses holding read-only numpy arrays, so a
value can be shared between threads or worker processes without copying
defensively.  Index sets are sorted ``int64`` arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, ContractViolation, ShapeError

DEFAULT_TEST_FRACTION = 0.2


def _frozen(a, dtype=None) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _index_array(values) -> np.ndarray:
    return _frozen(np.sort(np.asarray(values, dtype=np.int64).ravel()))


def _check_unique(units: Sequence[str], what: str) -> None:
    if len(set(units)) != len(units):
        raise ContractViolation(f"{what}: unit identifiers must be unique")


@dataclass(frozen=True)
class DescriptorTable:
    """Unit identifiers paired with a dense ``n_units x q`` feature matrix."""

    units: tuple[str, ...]
    features: np.ndarray
    n_duplicates: int = 0
    n_dropped: int = 0
    source: str = ""

    def __post_init__(self):
        units = tuple(str(u) for u in self.units)
        feats = _frozen(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise ShapeError(f"features must be 2-D, got shape {feats.shape}")
        if feats.shape[0] != len(units):
            raise ShapeError(f"{len(units)} units but {feats.shape[0]} feature rows")
        if feats.shape[1] < 1:
            raise ShapeError("descriptor dimensionality q must be at least 1")
        if not np.all(np.isfinite(feats)):
            raise ContractViolation("descriptor features must be finite")
        _check_unique(units, "DescriptorTable")
        object.__setattr__(self, "units", units)
        object.__setattr__(self, "features", feats)

    @property
    def q(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return len(self.units)


@dataclass(frozen=True)
class OutcomeTable:
    """Unit identifiers paired with scalar outcomes relative to control."""

    units: tuple[str, ...]
    outcomes: np.ndarray
    n_duplicates: int = 0
    n_dropped: int = 0
    source: str = ""

    def __post_init__(self):
        units = tuple(str(u) for u in self.units)
        y = _frozen(self.outcomes, dtype=np.float64).ravel()
        if y.shape[0] != len(units):
            raise ShapeError(f"{len(units)} units but {y.shape[0]} outcomes")
        if not np.all(np.isfinite(y)):
            raise ContractViolation("outcomes must be finite")
        _check_unique(units, "OutcomeTable")
        object.__setattr__(self, "units", units)
        object.__setattr__(self, "outcomes", y)

    def __len__(self) -> int:
        return len(self.units)


@dataclass(frozen=True)
class AlignedDataset:
    """Descriptors and outcomes over a common, ordered set of units."""

    units: tuple[str, ...]
    features: np.ndarray
    outcomes: np.ndarray
    provenance: tuple[str, ...] = ()
    truth: dict | None = field(default=None, compare=False)
    n_unmatched_descriptors: int = 0
    n_unmatched_outcomes: int = 0

    def __post_init__(self):
        units = tuple(str(u) for u in self.units)
        feats = _frozen(self.features, dtype=np.float64)
        y = _frozen(self.outcomes, dtype=np.float64).ravel()
        if feats.ndim != 2 or feats.shape[0] != len(units) or y.shape[0] != len(units):
            raise ShapeError(
                f"inconsistent sizes: {len(units)} units, features {feats.shape}, "
                f"outcomes {y.shape}"
            )
        _check_unique(units, "AlignedDataset")
        object.__setattr__(self, "units", units)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "outcomes", y)
        object.__setattr__(self, "provenance", tuple(str(p) for p in self.provenance))

    @property
    def n(self) -> int:
        return len(self.units)

    @property
    def q(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class PoolState:
    """Disjoint test / available / acquired index sets at cycle ``cycle``."""

    test_idx: np.ndarray
    avail_idx: np.ndarray
    cum_idx: np.ndarray
    cycle: int = 0

    def __post_init__(self):
        for name in ("test_idx", "avail_idx", "cum_idx"):
            object.__setattr__(self, name, _index_array(getattr(self, name)))
        parts = np.concatenate([self.test_idx, self.avail_idx, self.cum_idx])
        if np.unique(parts).size != parts.size:
            raise ContractViolation("test, available and acquired sets must be disjoint")
        if parts.size and not np.array_equal(np.sort(parts), np.arange(parts.size)):
            raise ContractViolation("index sets must cover 0..n-1 exactly")
        if self.cycle < 0:
            raise ContractViolation("cycle must be non-negative")

    @property
    def n(self) -> int:
        return self.test_idx.size + self.avail_idx.size + self.cum_idx.size


@dataclass(frozen=True)
class AcquisitionBatch:
    """An ordered batch of selected indices with optional per-index scores.

    Acquisition functions return positions into the rows of the available
    pool; the loop maps them to dataset indices before committing.
    """

    indices: np.ndarray
    scores: np.ndarray | None = None

    def __post_init__(self):
        idx = _frozen(np.asarray(self.indices, dtype=np.int64).ravel())
        if np.unique(idx).size != idx.size:
            raise ContractViolation("batch indices must be unique")
        object.__setattr__(self, "indices", idx)
        if self.scores is not None:
            s = _frozen(self.scores, dtype=np.float64).ravel()
            if s.size != idx.size:
                raise ShapeError("scores must align with indices")
            object.__setattr__(self, "scores", s)

    def __len__(self) -> int:
        return self.indices.size


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    n_acquired_total: int
    test_mse: float
    hit_ratio: float
    acquired_units: tuple[str, ...]
    wall_time_s: float


def make_pool_state(
    n: int, test_fraction: float = DEFAULT_TEST_FRACTION, rng_seed: int = 0
) -> PoolState:
    """Split ``range(n)`` into a fixed random test set and the available pool.

    The test set has ``round(test_fraction * n)`` members drawn uniformly
    without stratification; everything else starts available.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigurationError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if n < 5:
        raise ConfigurationError(f"need at least 5 units for a test split, got {n}")
    n_test = int(round(test_fraction * n))
    if n_test < 1 or n_test >= n:
        raise ConfigurationError(
            f"test_fraction={test_fraction} with n={n} leaves an empty test set or pool"
        )
    rng = np.random.default_rng(rng_seed)
    perm = rng.permutation(n)
    return PoolState(test_idx=perm[:n_test], avail_idx=perm[n_test:], cum_idx=[], cycle=0)


def commit_batch(state: PoolState, batch: AcquisitionBatch | Sequence[int]) -> PoolState:
    """Move ``batch`` (dataset indices) from the available set to the acquired set."""
    idx = batch.indices if isinstance(batch, AcquisitionBatch) else np.asarray(batch, np.int64)
    idx = np.asarray(idx, dtype=np.int64).ravel()
    if np.unique(idx).size != idx.size:
        raise ContractViolation("batch contains duplicate indices")
    missing = idx[~np.isin(idx, state.avail_idx)]
    if missing.size:
        raise ContractViolation(f"indices not in the available pool: {missing.tolist()}")
    return PoolState(
        test_idx=state.test_idx,
        avail_idx=np.setdiff1d(state.avail_idx, idx, assume_unique=True),
        cum_idx=np.union1d(state.cum_idx, idx),
        cycle=state.cycle + 1,
    )
