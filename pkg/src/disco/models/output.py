from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError


@dataclass(frozen=True)
class EstimatorOutput:
    """Per-member predictions ``(n, m)`` plus their row mean and population variance."""

    per_member: np.ndarray
    mean: np.ndarray
    variance: np.ndarray

    @classmethod
    def from_members(cls, per_member) -> "EstimatorOutput":
        pm = np.array(per_member, dtype=np.float64, copy=True)
        if pm.ndim != 2 or pm.shape[1] < 1:
            raise ShapeError(f"per_member must be (n, m) with m >= 1, got {pm.shape}")
        # shift by the first member so constant rows give exactly mean = value, variance = 0
        d = pm - pm[:, :1]
        dm = d.mean(axis=1)
        mean = pm[:, 0] + dm
        variance = ((d - dm[:, None]) ** 2).mean(axis=1)
        for a in (pm, mean, variance):
            a.setflags(write=False)
        return cls(per_member=pm, mean=mean, variance=variance)

    @property
    def n(self) -> int:
        return self.per_member.shape[0]

    @property
    def m(self) -> int:
        return self.per_member.shape[1]

    def take(self, rows) -> "EstimatorOutput":
        return EstimatorOutput.from_members(self.per_member[np.asarray(rows, dtype=np.int64)])


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Post-activation hidden vectors of one ensemble member, one row per input."""

    values: np.ndarray
    source: int = 0
