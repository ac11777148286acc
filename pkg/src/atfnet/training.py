"""Joint training on the blended output (MSE), early stopping, evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySplit, InvalidInput, NonFiniteLoss
from .model import ATFNet
from .nn import autodiff as ad
from .nn.adam import Adam
from .nn.autodiff import Tensor
from .data import Dataset, windows


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 3
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.lr < 0:
            raise InvalidInput("lr must be nonnegative")
        if self.patience < 1:
            raise InvalidInput("patience must be >= 1")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise InvalidInput("batch_size and max_epochs must be positive")


@dataclass(frozen=True)
class EvalReport:
    mse: float
    mae: float
    n_windows: int
    per_horizon_mse: tuple

    def to_dict(self) -> dict:
        return {
            "mse": self.mse,
            "mae": self.mae,
            "n_windows": self.n_windows,
            "per_horizon_mse": list(self.per_horizon_mse),
        }


def mse_loss(y_hat: Tensor, target: np.ndarray) -> Tensor:
    """Mean over all elements of squared error (tape scalar)."""
    return ad.mean_(ad.square(y_hat - np.asarray(target, dtype=np.float64)))


def mse_value(y_hat, target) -> float:
    diff = np.asarray(y_hat, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return float(np.mean(diff * diff))


def mae_value(y_hat, target) -> float:
    diff = np.asarray(y_hat, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return float(np.mean(np.abs(diff)))


class EarlyStopper:
    """Stop after `patience` consecutive epochs without improvement.

    ``update`` returns True when training should stop; ``best_index`` is the
    0-based epoch of the best value seen.
    """

    def __init__(self, patience: int):
        if patience < 1:
            raise InvalidInput("patience must be >= 1")
        self.patience = patience
        self.best_value = float("inf")
        self.best_index = -1
        self.counter = 0
        self.n_seen = 0

    def update(self, value: float) -> bool:
        index = self.n_seen
        self.n_seen += 1
        if value < self.best_value:
            self.best_value = value
            self.best_index = index
            self.counter = 0
            return False
        self.counter += 1
        return self.counter >= self.patience


@dataclass
class EpochRecord:
    epoch: int
    train_mse: float
    val_mse: float


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)
    best_epoch: int = -1
    stopped_early: bool = False


def _batch_arrays(window_list, indices):
    x = np.stack([window_list[i].lookback for i in indices])
    y = np.stack([window_list[i].target for i in indices])
    return x, y


def evaluate_windows(model: ATFNet, window_list, chunk: int = 256) -> EvalReport:
    """Deterministic metrics over a window list, normalized space."""
    if not window_list:
        raise EmptySplit("no windows to evaluate")
    horizon = model.config.horizon
    sq_sum = np.zeros(horizon)
    abs_sum = 0.0
    for start in range(0, len(window_list), chunk):
        idx = range(start, min(start + chunk, len(window_list)))
        x, y = _batch_arrays(window_list, idx)
        y_hat = model.forward(x).y_hat.data
        diff = y_hat - y
        sq_sum += np.sum(diff * diff, axis=0)
        abs_sum += float(np.sum(np.abs(diff)))
    n = len(window_list)
    per_horizon = sq_sum / n
    return EvalReport(
        mse=float(per_horizon.mean()),
        mae=abs_sum / (n * horizon),
        n_windows=n,
        per_horizon_mse=tuple(float(v) for v in per_horizon),
    )


def evaluate(model: ATFNet, dataset: Dataset, part: str) -> EvalReport:
    window_list = windows(dataset, model.config.lookback, model.config.horizon, part)
    if not window_list:
        raise EmptySplit(f"split part {part!r} has no complete windows")
    return evaluate_windows(model, window_list)


def train(model: ATFNet, dataset: Dataset, cfg: TrainConfig):
    """Minibatch Adam on the blended MSE; restores the best-validation state.

    Per epoch: seeded shuffle of train windows, forward/backward/update per
    batch, then one validation pass. Stops when validation MSE has not
    improved for ``patience`` consecutive epochs.
    """
    lookback, horizon = model.config.lookback, model.config.horizon
    train_windows = windows(dataset, lookback, horizon, "train")
    val_windows = windows(dataset, lookback, horizon, "val")
    if not train_windows or not val_windows:
        raise EmptySplit("training needs at least one train and one val window")

    rng = np.random.default_rng(cfg.seed)
    params = model.parameters()
    optimizer = Adam(params, lr=cfg.lr)
    stopper = EarlyStopper(cfg.patience)
    history = TrainHistory()
    best_state = [p.data.copy() for p in params]

    n = len(train_windows)
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        sq_err_total = 0.0
        for batch_index, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            x, y = _batch_arrays(train_windows, idx)
            optimizer.zero_grad()
            bundle = model.forward(x)
            loss = mse_loss(bundle.y_hat, y)
            loss_value = float(loss.data)
            if not np.isfinite(loss_value):
                raise NonFiniteLoss(epoch, batch_index)
            loss.backward()
            optimizer.step()
            sq_err_total += loss_value * len(idx)
        train_mse = sq_err_total / n
        val_mse = evaluate_windows(model, val_windows).mse
        history.records.append(EpochRecord(epoch, train_mse, val_mse))
        should_stop = stopper.update(val_mse)
        if stopper.best_index == epoch:
            best_state = [p.data.copy() for p in params]
        if should_stop:
            history.stopped_early = True
            break
    for p, saved in zip(params, best_state):
        p.data = saved
    history.best_epoch = stopper.best_index
    return model, history
