"""Adam training loop for coordinate networks."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import rng
from . import tensor as T
from .errors import ShapeError, TrainingDiverged
from .model import CafeModel, FeatureMask, count_params
from .optim import AdamState, adam_step

FULL_GRID_LIMIT = 2**16


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation settings.

    The learning rate is multiplied by ``lr_decay`` once, after
    ``decay_at * iterations`` steps. ``batch_size = 0`` means full-grid
    steps; larger grids default to seeded shuffled batches of
    ``FULL_GRID_LIMIT`` samples.
    """

    iterations: int = 2000
    lr: float = 1e-3
    lr_decay: float = 0.1
    decay_at: float = 0.7
    batch_size: int = 0
    seed: int = 0
    log_every: int = 50

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if not self.lr > 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.batch_size < 0:
            raise ValueError(f"batch_size must be >= 0, got {self.batch_size}")

    def lr_at(self, step: int) -> float:
        milestone = int(round(self.decay_at * self.iterations))
        return self.lr * (self.lr_decay if step >= milestone else 1.0)


@dataclass
class FitReport:
    config: dict
    losses: list[tuple[int, float]] = field(default_factory=list)
    final_loss: float = float("nan")
    metric_name: str = ""
    metric: float = float("nan")
    seconds: float = 0.0
    seed: int = 0
    params: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


def _batches(n: int, cfg: TrainConfig):
    size = cfg.batch_size or (n if n <= FULL_GRID_LIMIT else FULL_GRID_LIMIT)
    if size >= n:
        while True:
            yield None
    gen = rng.stream(cfg.seed, "batching")
    while True:
        order = gen.permutation(n)
        for lo in range(0, n - size + 1, size):
            yield order[lo:lo + size]


def train(model: CafeModel, coords, targets, cfg: TrainConfig, *,
          mask: FeatureMask | str = FeatureMask.NONE, features: np.ndarray | None = None,
          echo: dict | None = None) -> tuple[CafeModel, FitReport]:
    """Fit ``model`` to ``targets`` with Adam on the MSE loss, in place.

    Features are computed once (the frequency basis is fixed). The loss is
    logged every ``cfg.log_every`` steps and after the last step. Raises
    :class:`TrainingDiverged` on a non-finite loss.
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    Y = np.asarray(targets, dtype=np.float64).reshape(coords.shape[0], -1)
    if Y.shape[1] != model.spec.out_dim:
        raise ShapeError(f"targets have {Y.shape[1]} channels, model outputs {model.spec.out_dim}")
    phi = model.features(coords, mask).values if features is None else np.asarray(features)
    if phi.shape[0] != Y.shape[0]:
        raise ShapeError(f"{phi.shape[0]} feature rows for {Y.shape[0]} targets")

    report = FitReport(config=dict(echo or {}, **{f"train.{k}": v for k, v in asdict(cfg).items()}),
                       seed=cfg.seed, params=count_params(model))
    params = model.parameters()
    state = AdamState.for_params(params, lr=cfg.lr)
    batches = _batches(Y.shape[0], cfg)
    phi_full = T.Tensor(phi)
    start = time.perf_counter()
    loss_value = float("nan")
    for step in range(cfg.iterations):
        idx = next(batches)
        x_b = phi_full if idx is None else T.Tensor(phi[idx])
        y_b = Y if idx is None else Y[idx]
        loss = T.mse_loss(model.forward_features(x_b), y_b)
        loss_value = loss.item()
        if not np.isfinite(loss_value):
            raise TrainingDiverged(f"loss is {loss_value} at step {step} (lr {cfg.lr_at(step)})")
        if step % cfg.log_every == 0:
            report.losses.append((step, loss_value))
        grads = T.grads_for(params, loss)
        state.lr = cfg.lr_at(step)
        adam_step(state, params, grads)

    final = float(T.mse_loss(model.forward_features(phi_full), Y).item())
    report.losses.append((cfg.iterations, final))
    report.final_loss = final
    report.seconds = time.perf_counter() - start
    return model, report


def predict(model: CafeModel, coords, mask: FeatureMask | str = FeatureMask.NONE,
            chunk: int = FULL_GRID_LIMIT) -> np.ndarray:
    """Forward pass in chunks, without building a reverse graph."""
    coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    outs = []
    for lo in range(0, coords.shape[0], chunk):
        phi = model.features(coords[lo:lo + chunk], mask).values
        outs.append(_forward_nograd(model, phi))
    return np.concatenate(outs, axis=0)


def _forward_nograd(model: CafeModel, phi: np.ndarray) -> np.ndarray:
    z = phi
    if model.stack:
        z = None
        for w, b in model.stack:
            h = phi @ w.data.T + b.data
            z = h if z is None else z * h
    for w, b in model.mlp[:-1]:
        z = np.maximum(z @ w.data.T + b.data, 0.0)
    w, b = model.mlp[-1]
    return z @ w.data.T + b.data
