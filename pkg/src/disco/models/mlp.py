"""Deep ensemble of one-hidden-layer ReLU regressors.

Each member is ``g(t) = w2 . relu(W1 z + b1) + b2`` with ``z`` the input
z-scored against the training rows.  Members are trained independently from
their own seed streams; their spread across the ensemble is the epistemic
uncertainty consumed by the acquisition functions.

Members sharing a hidden size are trained together as one batched tensor
program, which keeps per-step Python overhead independent of the ensemble
size.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ContractViolation, InsufficientDataError, NumericalFailure, ShapeError
from ..seeding import derive_seed
from .output import EmbeddingMatrix, EstimatorOutput

log = logging.getLogger(__name__)

DEFAULT_HIDDEN_GRID = (16, 32, 64, 128)
DEFAULT_M = 10


@dataclass(frozen=True)
class MlpMember:
    W1: np.ndarray  # (hidden, q)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: float

    @property
    def hidden_size(self) -> int:
        return self.W1.shape[0]


@dataclass(frozen=True)
class TrainMeta:
    epochs: tuple[int, ...]
    early_stopped: tuple[bool, ...]
    val_mse: tuple[float, ...]
    grid_scores: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 100
    patience: int = 5
    learning_rate: float = 1e-2
    momentum: float = 0.9
    batch_size: int = 32
    val_fraction: float = 0.2


class EnsembleMlp:
    """Stacked parameters of ``m`` members sharing hidden size and input scaling."""

    def __init__(self, W1, b1, w2, b2, x_mean=None, x_scale=None, meta: TrainMeta | None = None):
        W1 = np.array(W1, dtype=np.float64, ndmin=3)
        m, h, q = W1.shape
        b1 = np.array(b1, dtype=np.float64).reshape(m, h)
        w2 = np.array(w2, dtype=np.float64).reshape(m, h)
        b2 = np.array(b2, dtype=np.float64).reshape(m)
        if m < 1 or h < 1 or q < 1:
            raise ShapeError(f"invalid ensemble shape m={m}, hidden={h}, q={q}")
        x_mean = np.zeros(q) if x_mean is None else np.asarray(x_mean, dtype=np.float64)
        x_scale = np.ones(q) if x_scale is None else np.asarray(x_scale, dtype=np.float64)
        if x_mean.shape != (q,) or x_scale.shape != (q,):
            raise ShapeError("input scaler must have length q")
        for a in (W1, b1, w2, b2, x_mean, x_scale):
            if not np.all(np.isfinite(a)):
                raise ContractViolation("ensemble parameters must be finite")
            a.setflags(write=False)
        self.W1, self.b1, self.w2, self.b2 = W1, b1, w2, b2
        self.x_mean, self.x_scale = x_mean, x_scale
        self.meta = meta

    @classmethod
    def from_members(cls, members: Sequence[MlpMember], x_mean=None, x_scale=None):
        return cls(
            np.stack([mb.W1 for mb in members]),
            np.stack([mb.b1 for mb in members]),
            np.stack([mb.w2 for mb in members]),
            np.array([mb.b2 for mb in members]),
            x_mean,
            x_scale,
        )

    @property
    def m(self) -> int:
        return self.W1.shape[0]

    @property
    def hidden_size(self) -> int:
        return self.W1.shape[1]

    @property
    def q(self) -> int:
        return self.W1.shape[2]

    @property
    def members(self) -> tuple[MlpMember, ...]:
        return tuple(
            MlpMember(self.W1[j], self.b1[j], self.w2[j], float(self.b2[j])) for j in range(self.m)
        )

    def _standardize(self, features) -> np.ndarray:
        X = np.asarray(features, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.q:
            raise ShapeError(f"expected (n, {self.q}) features, got {X.shape}")
        return (X - self.x_mean) / self.x_scale

    def _check_member(self, member_index: int) -> int:
        if not 0 <= member_index < self.m:
            raise ContractViolation(f"member_index {member_index} out of range for m={self.m}")
        return member_index

    def forward(self, features):
        """Return ``(pre, hidden, out)`` with shapes ``(m, n, h)``, ``(m, n, h)``, ``(m, n)``."""
        Z = self._standardize(features)
        pre = np.matmul(Z[None, :, :], self.W1.transpose(0, 2, 1)) + self.b1[:, None, :]
        hidden = np.maximum(pre, 0.0)
        out = np.matmul(hidden, self.w2[:, :, None])[..., 0] + self.b2[:, None]
        return pre, hidden, out


def predict_ensemble(model: EnsembleMlp, features) -> EstimatorOutput:
    _, _, out = model.forward(features)
    return EstimatorOutput.from_members(out.T)


def penultimate_embeddings(model: EnsembleMlp, features, member_index: int = 0) -> EmbeddingMatrix:
    """Hidden-layer activations ``relu(W1 z + b1)`` of one member."""
    j = model._check_member(member_index)
    Z = model._standardize(features)
    values = np.maximum(Z @ model.W1[j].T + model.b1[j], 0.0)
    return EmbeddingMatrix(values=values, source=j)


def badge_gradient_embedding(
    model: EnsembleMlp, features, member_index: int = 0, rng_seed: int = 0, targets=None
) -> np.ndarray:
    """Final-layer gradients of ``0.5 * (g - y_hat)**2`` with ``y_hat ~ N(g, 1)``.

    Row ``i`` is ``(g_i - y_hat_i) * [h_i, 1]``, shape ``(n, hidden + 1)``.
    ``targets`` replaces the sampled pseudo-labels when given.
    """
    j = model._check_member(member_index)
    H = penultimate_embeddings(model, features, j).values
    g = H @ model.w2[j] + model.b2[j]
    if targets is None:
        y_hat = g + np.random.default_rng(rng_seed).standard_normal(g.shape[0])
    else:
        y_hat = np.asarray(targets, dtype=np.float64).reshape(g.shape)
    resid = g - y_hat
    return resid[:, None] * np.hstack([H, np.ones((H.shape[0], 1))])


def variance_gradient(model: EnsembleMlp, features) -> np.ndarray:
    """Gradient of the across-member population variance w.r.t. each raw input row."""
    pre, _, out = model.forward(features)
    m = model.m
    dev = out - out.mean(axis=0, keepdims=True)  # (m, n)
    # d g_j / d z = W1_j^T (w2_j * 1[pre_j > 0])
    gate = (pre > 0.0) * model.w2[:, None, :]  # (m, n, h)
    dg_dz = np.matmul(gate, model.W1)  # (m, n, q)
    grad_z = (2.0 / m) * np.einsum("mn,mnq->nq", dev, dg_dz)
    return grad_z / model.x_scale


def variance_gradient_wrt_input(model: EnsembleMlp, t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if t.shape != (model.q,):
        raise ShapeError(f"expected a length-{model.q} vector, got shape {t.shape}")
    return variance_gradient(model, t[None, :])[0]


def _holdout_split(n: int, val_fraction: float, seed: int):
    n_val = min(n - 1, max(1, int(round(val_fraction * n))))
    perm = np.random.default_rng(seed).permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def _train_group(Ztr, ytr, Zval, yval, hidden: int, seeds: Sequence[int], cfg: TrainConfig):
    """Train ``len(seeds)`` members of one hidden size; return stacked params and stats."""
    G = len(seeds)
    n, q = Ztr.shape
    rngs = [np.random.default_rng(s) for s in seeds]
    W1 = np.stack([r.normal(0.0, np.sqrt(2.0 / q), size=(hidden, q)) for r in rngs])
    b1 = np.zeros((G, hidden))
    w2 = np.zeros((G, hidden))
    b2 = np.full(G, ytr.mean())
    params = [W1, b1, w2, b2]
    vel = [np.zeros_like(p) for p in params]
    best = [p.copy() for p in params]
    best_val = np.full(G, np.inf)
    wait = np.zeros(G, dtype=np.int64)
    active = np.ones(G, dtype=bool)
    epochs = np.zeros(G, dtype=np.int64)
    stopped = np.zeros(G, dtype=bool)
    B = cfg.batch_size
    lr, mu = cfg.learning_rate, cfg.momentum

    def val_mse():
        pre = np.matmul(Zval[None], W1.transpose(0, 2, 1)) + b1[:, None, :]
        out = np.matmul(np.maximum(pre, 0.0), w2[:, :, None])[..., 0] + b2[:, None]
        return ((out - yval[None, :]) ** 2).mean(axis=1)

    for epoch in range(1, cfg.max_epochs + 1):
        perms = np.stack([r.permutation(n) for r in rngs])
        mask = active.astype(np.float64)
        epoch_loss = np.zeros(G)
        for start in range(0, n, B):
            idx = perms[:, start : start + B]
            Xb = Ztr[idx]  # (G, b, q)
            yb = ytr[idx]
            pre = np.matmul(Xb, W1.transpose(0, 2, 1)) + b1[:, None, :]
            H = np.maximum(pre, 0.0)
            out = np.matmul(H, w2[:, :, None])[..., 0] + b2[:, None]
            resid = out - yb
            epoch_loss += (resid**2).sum(axis=1)
            d = (2.0 / idx.shape[1]) * resid  # d mean(r^2) / d out
            g_w2 = np.matmul(d[:, None, :], H)[:, 0, :]
            g_b2 = d.sum(axis=1)
            dH = d[:, :, None] * w2[:, None, :] * (pre > 0.0)
            g_W1 = np.matmul(dH.transpose(0, 2, 1), Xb)
            g_b1 = dH.sum(axis=1)
            for p, v, g in zip(params, vel, (g_W1, g_b1, g_w2, g_b2)):
                v *= mu
                v -= lr * g
                v *= mask.reshape((G,) + (1,) * (v.ndim - 1))
                p += v
        if not np.all(np.isfinite(epoch_loss[active])):
            raise NumericalFailure("non-finite training loss", epoch)
        epochs[active] = epoch
        vm = val_mse()
        if not np.all(np.isfinite(vm[active])):
            raise NumericalFailure("non-finite validation loss", epoch)
        improved = active & (vm < best_val)
        for p, bp in zip(params, best):
            bp[improved] = p[improved]
        best_val[improved] = vm[improved]
        wait[improved] = 0
        wait[active & ~improved] += 1
        newly = active & (wait >= cfg.patience)
        stopped |= newly
        active &= ~newly
        if not active.any():
            break
    return best, best_val, epochs, stopped


def train_mlp_ensemble(
    features,
    outcomes,
    m: int = DEFAULT_M,
    hidden_grid: Sequence[int] = DEFAULT_HIDDEN_GRID,
    max_epochs: int = 100,
    rng_seed: int = 0,
    config: TrainConfig | None = None,
) -> EnsembleMlp:
    """Select a hidden size on a 20% holdout, then train ``m`` members from scratch.

    The same holdout drives hidden-size selection and early stopping; each
    member keeps the parameters of its best validation epoch.  Features and
    targets are both z-scored for training; the returned parameters predict
    in the original outcome units.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(outcomes, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ShapeError(f"features {X.shape} and outcomes {y.shape} do not align")
    if X.shape[0] < 2:
        raise InsufficientDataError(f"need at least 2 training rows, got {X.shape[0]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ContractViolation("training data must be finite")
    if m < 1:
        raise ContractViolation("ensemble size m must be >= 1")
    grid = sorted({int(h) for h in hidden_grid})
    if not grid or grid[0] < 1:
        raise ContractViolation(f"hidden_grid must hold positive sizes, got {hidden_grid}")
    cfg = config or TrainConfig()
    cfg = TrainConfig(**{**cfg.__dict__, "max_epochs": int(max_epochs)})

    x_mean = X.mean(axis=0)
    x_scale = X.std(axis=0)
    x_scale[x_scale == 0.0] = 1.0
    Z = (X - x_mean) / x_scale
    # targets are z-scored for training and the scale is folded back into the output layer
    y_mean, y_scale = y.mean(), y.std()
    if y_scale == 0.0:
        y_scale = 1.0
    ys = (y - y_mean) / y_scale
    tr, val = _holdout_split(X.shape[0], cfg.val_fraction, derive_seed(rng_seed, "holdout"))
    Ztr, ytr, Zval, yval = Z[tr], ys[tr], Z[val], ys[val]

    grid_scores = {}
    if len(grid) == 1:
        hidden = grid[0]
    else:
        for h in grid:
            _, score, _, _ = _train_group(
                Ztr, ytr, Zval, yval, h, [derive_seed(rng_seed, "grid", h)], cfg
            )
            grid_scores[h] = float(score[0]) * y_scale**2
        hidden = min(grid, key=lambda h: (grid_scores[h], h))
        log.debug("hidden size %d selected from %s", hidden, grid_scores)

    seeds = [derive_seed(rng_seed, "member", j) for j in range(m)]
    (W1, b1, w2, b2), val_mse, epochs, stopped = _train_group(
        Ztr, ytr, Zval, yval, hidden, seeds, cfg
    )
    w2 = w2 * y_scale
    b2 = b2 * y_scale + y_mean
    meta = TrainMeta(
        epochs=tuple(int(e) for e in epochs),
        early_stopped=tuple(bool(s) for s in stopped),
        val_mse=tuple(float(v) * y_scale**2 for v in val_mse),
        grid_scores=grid_scores,
    )
    return EnsembleMlp(W1, b1, w2, b2, x_mean, x_scale, meta=meta)
