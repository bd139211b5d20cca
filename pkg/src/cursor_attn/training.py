"""Training protocol: epoch loop with early stopping, random hyperparameter
search with repeated validation, and the learning-rate range finder.

Recurrent models train for up to 90 epochs monitoring validation loss with
patience 20; the compact convnet trains for up to 300 epochs monitoring
validation AUC with patience 30 and picks its learning rate with the range
finder.  Search trials derive their seeds by name from the master seed, so
results are identical whether trials run serially or in parallel.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySetError, EmptySpaceError, InvalidValueError
from .metrics import roc_auc
from .nn import AdamState, Model, ModelSpec, adam_step, init_model
from .seeding import derive

ETA_GRID = (1e-3, 1e-4, 1e-5, 1e-6, 1e-7)
BATCH_GRID = (16, 32, 64)

RECURRENT_MAX_EPOCHS = 90
RECURRENT_PATIENCE = 20
CONV_MAX_EPOCHS = 300
CONV_PATIENCE = 30

MONITOR_VAL_LOSS = "val_loss"
MONITOR_VAL_AUC = "val_auc"


@dataclass(frozen=True, slots=True)
class TrainConfig:
    eta: float
    batch_size: int = 32
    max_epochs: int = RECURRENT_MAX_EPOCHS
    patience: int = RECURRENT_PATIENCE
    monitor: str = MONITOR_VAL_LOSS
    seed: int = 0

    def __post_init__(self) -> None:
        if self.eta <= 0:
            raise InvalidValueError(f"eta must be positive, got {self.eta}")
        if self.batch_size not in BATCH_GRID:
            raise InvalidValueError(f"batch_size must be one of {BATCH_GRID}, got {self.batch_size}")
        if not 0 < self.patience < self.max_epochs:
            raise InvalidValueError(f"need 0 < patience < max_epochs, got {self.patience}/{self.max_epochs}")
        if self.monitor not in (MONITOR_VAL_LOSS, MONITOR_VAL_AUC):
            raise InvalidValueError(f"unknown monitor {self.monitor!r}")


def recurrent_config(eta: float, batch_size: int = 32, seed: int = 0) -> TrainConfig:
    return TrainConfig(eta=eta, batch_size=batch_size, seed=seed)


def conv_config(eta: float, batch_size: int = 32, seed: int = 0) -> TrainConfig:
    return TrainConfig(
        eta=eta,
        batch_size=batch_size,
        max_epochs=CONV_MAX_EPOCHS,
        patience=CONV_PATIENCE,
        monitor=MONITOR_VAL_AUC,
        seed=seed,
    )


@dataclass(slots=True)
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_auc: list[float | None] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    @property
    def epochs_run(self) -> int:
        return len(self.train_loss)

    def best_value(self, monitor: str) -> float:
        series = self.val_loss if monitor == MONITOR_VAL_LOSS else self.val_auc
        return float(series[self.best_epoch - 1])


def _evaluate(model: Model, x: np.ndarray, y: np.ndarray) -> tuple[float, float | None]:
    p = model.forward(x, train=False)
    pc = np.clip(p, 1e-7, 1 - 1e-7)
    loss = float(-np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)))
    auc = roc_auc(p, y) if ((y == 0).any() and (y == 1).any()) else None
    return loss, auc


def fit(
    model: Model,
    train_set: tuple[np.ndarray, np.ndarray],
    val_set: tuple[np.ndarray, np.ndarray],
    config: TrainConfig,
) -> tuple[Model, TrainHistory]:
    """Mini-batch Adam training with early stopping and best-epoch restore.

    Batches are reshuffled every epoch with a seed-derived RNG; the last
    incomplete batch is kept.  Training stops when the monitored validation
    metric has not improved for ``config.patience`` consecutive epochs, and
    the parameters from the best epoch are restored before returning.
    """
    x_train, y_train = train_set
    x_val, y_val = val_set
    if len(x_train) == 0 or len(x_val) == 0:
        raise EmptySetError("train and validation sets must be nonempty")
    if config.monitor == MONITOR_VAL_AUC and not ((y_val == 0).any() and (y_val == 1).any()):
        raise EmptySetError("validation AUC monitoring needs both classes in the validation set")

    rng = np.random.default_rng(derive(config.seed, "shuffle"))
    state = AdamState(eta=config.eta)
    history = TrainHistory()
    sign = 1.0 if config.monitor == MONITOR_VAL_LOSS else -1.0  # minimize signed metric
    best = np.inf
    best_params = model.copy_params()
    since_best = 0

    for epoch in range(1, config.max_epochs + 1):
        perm = rng.permutation(len(x_train))
        total = 0.0
        for start in range(0, len(perm), config.batch_size):
            idx = perm[start : start + config.batch_size]
            loss, grads = model.loss_and_grads(x_train[idx], y_train[idx], train=True)
            adam_step(state, model.params(), grads)
            total += loss * len(idx)
        history.train_loss.append(total / len(perm))

        val_loss, val_auc = _evaluate(model, x_val, y_val)
        history.val_loss.append(val_loss)
        history.val_auc.append(val_auc)
        monitored = val_loss if config.monitor == MONITOR_VAL_LOSS else val_auc

        if sign * monitored < best:
            best = sign * monitored
            history.best_epoch = epoch
            best_params = model.copy_params()
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                history.stopped_early = True
                break

    model.set_params(best_params)
    return model, history


@dataclass(frozen=True, slots=True)
class SearchSpace:
    """Hyperparameter grids for the recurrent random search."""

    arch: str
    input_shape: tuple[int, ...]
    budget: int = 20
    eta_grid: tuple[float, ...] = ETA_GRID
    n_grid: tuple[int, ...] = tuple(range(16, 129, 8))
    q_grid: tuple[float, ...] = (0.5, 0.4, 0.3, 0.2, 0.1)
    b_grid: tuple[int, ...] = BATCH_GRID
    max_epochs: int = RECURRENT_MAX_EPOCHS
    patience: int = RECURRENT_PATIENCE
    monitor: str = MONITOR_VAL_LOSS


@dataclass(slots=True)
class SearchResult:
    best_spec: ModelSpec
    best_config: TrainConfig
    best_mean_loss: float
    records: list[dict]


def _run_trial(space: SearchSpace, train_set, val_set, seed: int, trial: int, params: dict, k: int) -> list[dict]:
    records = []
    for rep in range(k):
        model_seed = derive(seed, "trial", trial, "rep", rep, "model")
        fit_seed = derive(seed, "trial", trial, "rep", rep, "fit")
        spec = ModelSpec(
            arch=space.arch,
            input_shape=space.input_shape,
            hidden_n=params["n"],
            drop_rate=params["q"],
            seed=model_seed,
        )
        config = TrainConfig(
            eta=params["eta"],
            batch_size=params["b"],
            max_epochs=space.max_epochs,
            patience=space.patience,
            monitor=space.monitor,
            seed=fit_seed,
        )
        started = time.perf_counter()
        _, history = fit(init_model(spec), train_set, val_set, config)
        records.append(
            {
                "trial": trial,
                "repeat": rep,
                "eta": params["eta"],
                "n": params["n"],
                "q": params["q"],
                "b": params["b"],
                "model_seed": model_seed,
                "fit_seed": fit_seed,
                "best_epoch": history.best_epoch,
                "epochs_run": history.epochs_run,
                "stopped_early": history.stopped_early,
                "best_val_loss": float(history.val_loss[history.best_epoch - 1]),
                "val_auc_at_best": history.val_auc[history.best_epoch - 1],
                "train_loss": history.train_loss,
                "val_loss": history.val_loss,
                "wall_time_s": time.perf_counter() - started,
            }
        )
    return records


def random_search(
    space: SearchSpace,
    train_set: tuple[np.ndarray, np.ndarray],
    val_set: tuple[np.ndarray, np.ndarray],
    k: int = 3,
    seed: int = 0,
    jobs: int = 1,
) -> SearchResult:
    """Sample ``budget`` configurations uniformly from the grids, train each
    one k times with derived seeds, and pick the minimum mean validation
    loss (ties broken by smaller eta, then smaller n)."""
    if space.budget < 1:
        raise EmptySpaceError("search budget must be at least 1")
    if not (space.eta_grid and space.n_grid and space.q_grid and space.b_grid):
        raise EmptySpaceError("all hyperparameter grids must be nonempty")

    rng = np.random.default_rng(derive(seed, "search"))
    trials = []
    for t in range(space.budget):
        trials.append(
            {
                "eta": float(space.eta_grid[rng.integers(len(space.eta_grid))]),
                "n": int(space.n_grid[rng.integers(len(space.n_grid))]),
                "q": float(space.q_grid[rng.integers(len(space.q_grid))]),
                "b": int(space.b_grid[rng.integers(len(space.b_grid))]),
            }
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_run_trial, space, train_set, val_set, seed, t, params, k)
                for t, params in enumerate(trials)
            ]
            per_trial = [f.result() for f in futures]
    else:
        per_trial = [_run_trial(space, train_set, val_set, seed, t, params, k) for t, params in enumerate(trials)]

    records = [rec for chunk in per_trial for rec in chunk]
    best_t = min(
        range(len(trials)),
        key=lambda t: (
            float(np.mean([r["best_val_loss"] for r in per_trial[t]])),
            trials[t]["eta"],
            trials[t]["n"],
            t,
        ),
    )
    params = trials[best_t]
    best_spec = ModelSpec(
        arch=space.arch,
        input_shape=space.input_shape,
        hidden_n=params["n"],
        drop_rate=params["q"],
        seed=derive(seed, "winner", "model"),
    )
    best_config = TrainConfig(
        eta=params["eta"],
        batch_size=params["b"],
        max_epochs=space.max_epochs,
        patience=space.patience,
        monitor=space.monitor,
        seed=derive(seed, "winner", "fit"),
    )
    return SearchResult(
        best_spec=best_spec,
        best_config=best_config,
        best_mean_loss=float(np.mean([r["best_val_loss"] for r in per_trial[best_t]])),
        records=records,
    )


# -- learning-rate range finder ----------------------------------------------

@dataclass(slots=True)
class LrRangeResult:
    suggestion: float
    etas: list[float]
    losses: list[float]
    smoothed: list[float]
    diverged_at: int | None = None


def smooth_ema(losses, factor: float = 0.98) -> list[float]:
    """Bias-corrected exponential moving average of a loss series."""
    out = []
    acc = 0.0
    for i, loss in enumerate(losses, start=1):
        acc = factor * acc + (1.0 - factor) * loss
        out.append(acc / (1.0 - factor ** i))
    return out


def suggest_eta(etas, smoothed, window: int | None = None) -> float:
    """The learning rate at the steepest negative smoothed-loss slope,
    divided by 10; falls back to the smallest rate when the curve never
    descends.

    The slope at step i is averaged over [i, i + window] to suppress
    batch-composition noise, and the rate is read at the window's end
    (the EMA lags the raw loss, so the descent is credited where it has
    fully registered).
    """
    if len(etas) < 2:
        return float(etas[0])
    sm = np.asarray(smoothed, dtype=np.float64)
    if window is None:
        window = max(1, len(etas) // 10)
    window = min(window, len(etas) - 1)
    slopes = (sm[window:] - sm[:-window]) / window
    best = int(np.argmin(slopes))
    if slopes[best] >= 0.0:
        return float(etas[0])
    return float(etas[best + window]) / 10.0


def lr_range_test(
    spec: ModelSpec,
    train_set: tuple[np.ndarray, np.ndarray],
    eta_min: float = 1e-6,
    eta_max: float = 1.0,
    steps: int = 60,
    batch_size: int = 32,
    seed: int = 0,
) -> LrRangeResult:
    """Sweep the learning rate geometrically over ``steps`` mini-batches.

    Records the bias-corrected EMA (factor 0.98) of the batch loss; the
    sweep truncates once the smoothed loss exceeds 4x its running minimum
    and the suggestion is made from whatever prefix was recorded.
    """
    if not (0 < eta_min < eta_max):
        raise InvalidValueError(f"need 0 < eta_min < eta_max, got {eta_min}, {eta_max}")
    x_train, y_train = train_set
    if len(x_train) == 0:
        raise EmptySetError("train set must be nonempty")

    model = init_model(spec)
    state = AdamState(eta=eta_min)
    rng = np.random.default_rng(derive(seed, "lr-range"))
    ratio = eta_max / eta_min

    etas: list[float] = []
    losses: list[float] = []
    acc = 0.0
    smoothed: list[float] = []
    best_smoothed = np.inf
    diverged_at = None

    order: list[int] = []
    for i in range(steps):
        if len(order) < batch_size:
            order.extend(rng.permutation(len(x_train)).tolist())
        idx = np.asarray(order[:batch_size])
        del order[:batch_size]

        eta = eta_min * ratio ** (i / (steps - 1)) if steps > 1 else eta_min
        loss, grads = model.loss_and_grads(x_train[idx], y_train[idx], train=True)
        state.eta = eta
        adam_step(state, model.params(), grads)

        etas.append(eta)
        losses.append(loss)
        acc = 0.98 * acc + 0.02 * loss
        sm = acc / (1.0 - 0.98 ** (i + 1))
        smoothed.append(sm)
        best_smoothed = min(best_smoothed, sm)
        if sm > 4.0 * best_smoothed:
            diverged_at = i
            break

    return LrRangeResult(
        suggestion=suggest_eta(etas, smoothed),
        etas=etas,
        losses=losses,
        smoothed=smoothed,
        diverged_at=diverged_at,
    )
