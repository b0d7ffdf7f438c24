"""Loss, optimizers, early stopping, CV strategies, and gradient checks.

Every model trained here exposes the same small surface: ``forward``
(returning predictions and a cache), ``backward`` (exact gradients of
the discretized quadratic loss), ``predict``, ``parameters`` /
``set_parameters`` (aliasing ndarrays, interleaved intercept/weight),
``penalty`` and ``output_grid``.  The loops below never look inside a
model beyond that.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .grids import Grid

SCHEMA_VERSION = 1

OPTIMIZERS = ("adam", "gd")

ES_STRATEGIES = ("mean", "median", "max", "min", "wavg")


class TrainingDiverged(RuntimeError):
    """Raised when the training loss stops being finite."""

    def __init__(self, iteration: int, message: str | None = None):
        self.iteration = iteration
        super().__init__(message or f"non-finite loss at iteration {iteration}")


def quadratic_loss(pred, truth, grid: Grid) -> float:
    """Mean over samples of the trapezoid integral of the squared residual.

    ``pred`` and ``truth`` are (n, m) stacks of curves on ``grid``; a
    single curve of shape (m,) is promoted to a batch of one.
    """
    pred = np.atleast_2d(np.asarray(pred, dtype=float))
    truth = np.atleast_2d(np.asarray(truth, dtype=float))
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs truth {truth.shape}")
    if pred.shape[1] != grid.m:
        raise ValueError(f"curves have {pred.shape[1]} points, grid has {grid.m}")
    resid = pred - truth
    per_sample = (resid * resid) @ grid.trapezoid_weights
    return float(per_sample.mean())


def rmse(pred, truth, grid: Grid) -> float:
    return math.sqrt(quadratic_loss(pred, truth, grid))


class Adam:
    """Adaptive-moment gradient scheme (decay 0.9/0.999, eps 1e-8)."""

    def __init__(self, step_size: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.step_size = step_size
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = None
        self._v = None

    def step(self, params, grads):
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        correct1 = 1.0 - b1**self.t
        correct2 = 1.0 - b2**self.t
        for p, g, m, v in zip(params, grads, self._m, self._v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.step_size * (m / correct1) / (np.sqrt(v / correct2) + self.eps)


class PlainGradient:
    def __init__(self, step_size: float):
        self.step_size = step_size

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.step_size * g


def _make_optimizer(cfg: "TrainConfig"):
    if cfg.optimizer == "adam":
        return Adam(cfg.step_size)
    return PlainGradient(cfg.step_size)


@dataclass
class TrainConfig:
    step_size: float = 1e-3
    max_iterations: int = 1000
    patience: float = 50
    optimizer: str = "adam"
    batch_size: int | None = None
    lam_b: float = 0.0
    lam_w: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if self.lam_b < 0 or self.lam_w < 0:
            raise ValueError("smoothing parameters must be non-negative")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")

    def replace(self, **kw) -> "TrainConfig":
        doc = {**self.__dict__, **kw}
        return TrainConfig(**doc)


@dataclass
class FitResult:
    """History of one training run plus the retained parameters."""

    train_loss: np.ndarray
    val_loss: np.ndarray | None
    stopping_iteration: int
    best_iteration: int
    best_val_loss: float
    parameters: list = field(repr=False)
    test_rmse: float | None = None

    def to_json(self, path):
        doc = {
            "schema_version": SCHEMA_VERSION,
            "stopping_iteration": self.stopping_iteration,
            "best_iteration": self.best_iteration,
            "best_val_loss": self.best_val_loss,
            "test_rmse": self.test_rmse,
            "train_loss": np.asarray(self.train_loss).tolist(),
            "val_loss": None
            if self.val_loss is None
            else np.asarray(self.val_loss).tolist(),
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "train_loss", "val_loss"])
            for i, tr in enumerate(self.train_loss, start=1):
                if self.val_loss is None:
                    writer.writerow([i, repr(float(tr)), ""])
                else:
                    writer.writerow(
                        [i, repr(float(tr)), repr(float(self.val_loss[i - 1]))]
                    )


def _copy_params(model):
    return [p.copy() for p in model.parameters()]


def _objective_step(model, x, y, cfg, optimizer, iteration):
    """One gradient update; returns the pre-update penalized objective."""
    pred, cache = model.forward(x)
    resid = pred - y
    data_loss = float(((resid * resid) @ model.output_grid.trapezoid_weights).mean())
    grads = model.backward(cache, resid)
    if cfg.lam_b > 0 or cfg.lam_w > 0:
        pen_value, pen_grads = model.penalty(cfg.lam_b, cfg.lam_w)
        for g, pg in zip(grads, pen_grads):
            g += pg
    else:
        pen_value = 0.0
    objective = data_loss + pen_value
    if not np.isfinite(objective):
        raise TrainingDiverged(iteration)
    optimizer.step(model.parameters(), grads)
    return objective


def _minibatch(rng, n, batch_size):
    if batch_size is None or batch_size >= n:
        return None
    return rng.choice(n, size=batch_size, replace=False)


def train_fixed(model, x, y, iterations: int, cfg: TrainConfig) -> FitResult:
    """Run exactly ``iterations`` updates; no validation, no early stop.

    The model keeps its final parameters.  Used to retrain after CV
    aggregation and for penalty-only fits.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    optimizer = _make_optimizer(cfg)
    rng = np.random.default_rng(cfg.seed)
    history = np.empty(iterations)
    square = None
    for i in range(1, iterations + 1):
        idx = _minibatch(rng, x.shape[0], cfg.batch_size)
        if idx is None:
            _objective_step(model, x, y, cfg, optimizer, i)
        else:
            _objective_step(model, x[idx], y[idx], cfg, optimizer, i)
        square = quadratic_loss(model.predict(x), y, model.output_grid)
        if not np.isfinite(square):
            raise TrainingDiverged(i)
        history[i - 1] = square
    return FitResult(
        train_loss=history,
        val_loss=None,
        stopping_iteration=iterations,
        best_iteration=iterations,
        best_val_loss=float(history[-1]) if iterations else math.nan,
        parameters=_copy_params(model),
    )


def train_early_stopping(model, train, val, cfg: TrainConfig) -> FitResult:
    """Gradient training with patience-based early stopping.

    ``train`` and ``val`` are (x, y) pairs on the model's grids.  Each
    iteration takes one optimizer step on the penalized loss, then logs
    the unpenalized train and validation losses.  After ``cfg.patience``
    iterations without a validation improvement the loop stops; the
    model is restored to (and the result reports) the best-validation
    parameters, counting the initial state as iteration 0.
    """
    x_train, y_train = (np.asarray(a, dtype=float) for a in train)
    x_val, y_val = (np.asarray(a, dtype=float) for a in val)
    grid = model.output_grid
    optimizer = _make_optimizer(cfg)
    rng = np.random.default_rng(cfg.seed)

    best_val = quadratic_loss(model.predict(x_val), y_val, grid)
    best_params = _copy_params(model)
    best_iteration = 0
    since_improved = 0
    train_hist: list[float] = []
    val_hist: list[float] = []

    stopping_iteration = 0
    for i in range(1, cfg.max_iterations + 1):
        idx = _minibatch(rng, x_train.shape[0], cfg.batch_size)
        if idx is None:
            _objective_step(model, x_train, y_train, cfg, optimizer, i)
        else:
            _objective_step(model, x_train[idx], y_train[idx], cfg, optimizer, i)
        train_now = quadratic_loss(model.predict(x_train), y_train, grid)
        val_now = quadratic_loss(model.predict(x_val), y_val, grid)
        if not (np.isfinite(train_now) and np.isfinite(val_now)):
            raise TrainingDiverged(i)
        train_hist.append(train_now)
        val_hist.append(val_now)
        stopping_iteration = i
        if val_now < best_val:
            best_val = val_now
            best_iteration = i
            best_params = _copy_params(model)
            since_improved = 0
        else:
            since_improved += 1
            if since_improved >= cfg.patience:
                break

    model.set_parameters(best_params)
    return FitResult(
        train_loss=np.asarray(train_hist),
        val_loss=np.asarray(val_hist),
        stopping_iteration=stopping_iteration,
        best_iteration=best_iteration,
        best_val_loss=float(best_val),
        parameters=best_params,
    )


@dataclass
class CvResult:
    strategy: str
    fold_best_iterations: list[int]
    fold_val_losses: list[float]
    aggregate_iterations: int | None
    retrain_seed: object = None


def _kfold_indices(n: int, k: int, rng) -> list[np.ndarray]:
    perm = rng.permutation(n)
    return [np.sort(part) for part in np.array_split(perm, k)]


def cv_early_stopping(model_factory, data, k: int = 5, strategy: str = "mean",
                      cfg: TrainConfig | None = None):
    """K-fold cross-validated early stopping.

    Each fold serves once as the validation set.  For mean/median/max/
    min, the per-fold best iterations are aggregated and a freshly
    initialized model is retrained on all data for exactly that many
    iterations.  For wavg, all folds share one initialization seed and
    the returned model carries the parameter-wise average of the fold
    models.  Returns (model, CvResult).
    """
    if cfg is None:
        cfg = TrainConfig()
    if strategy not in ES_STRATEGIES:
        raise ValueError(f"strategy must be one of {ES_STRATEGIES}")
    if k < 2:
        raise ValueError("k must be at least 2")
    x, y = (np.asarray(a, dtype=float) for a in data)
    n = x.shape[0]
    if k > n:
        raise ValueError(f"k={k} exceeds the {n} available samples")

    children = np.random.SeedSequence(cfg.seed).spawn(k + 2)
    shuffle_seed, fold_seeds, retrain_seed = children[0], children[1:-1], children[-1]
    folds = _kfold_indices(n, k, np.random.default_rng(shuffle_seed))

    best_iters: list[int] = []
    val_losses: list[float] = []
    fold_models = []
    for fold_idx, val_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(n), val_idx)
        init_seed = fold_seeds[0] if strategy == "wavg" else fold_seeds[fold_idx]
        model = model_factory(init_seed)
        res = train_early_stopping(
            model,
            (x[train_idx], y[train_idx]),
            (x[val_idx], y[val_idx]),
            cfg,
        )
        best_iters.append(res.best_iteration)
        val_losses.append(res.best_val_loss)
        if strategy == "wavg":
            fold_models.append(res.parameters)

    if strategy == "wavg":
        model = model_factory(fold_seeds[0])
        averaged = [
            np.mean([params[i] for params in fold_models], axis=0)
            for i in range(len(fold_models[0]))
        ]
        model.set_parameters(averaged)
        return model, CvResult(strategy, best_iters, val_losses, None)

    if strategy == "mean":
        agg = int(round(float(np.mean(best_iters))))
    elif strategy == "median":
        agg = int(round(float(np.median(best_iters))))
    elif strategy == "max":
        agg = int(max(best_iters))
    else:
        agg = int(min(best_iters))
    model = model_factory(retrain_seed)
    train_fixed(model, x, y, agg, cfg)
    return model, CvResult(strategy, best_iters, val_losses, agg, retrain_seed)


def tune_lambda(model_factory, data, lam_grid, k: int = 5,
                cfg: TrainConfig | None = None):
    """Pick the smoothing level minimizing mean validation loss over folds.

    Grid entries are either scalars (shared by both penalties) or
    (lam_b, lam_w) pairs.  Folds and fold initializations are shared
    across grid points so comparisons are paired; ties go to the larger
    (smoother) candidate.
    """
    if cfg is None:
        cfg = TrainConfig()
    pairs = []
    for entry in lam_grid:
        if np.isscalar(entry):
            pairs.append((float(entry), float(entry)))
        else:
            lam_b, lam_w = entry
            pairs.append((float(lam_b), float(lam_w)))
    if not pairs:
        raise ValueError("lambda grid is empty")
    if k < 2:
        raise ValueError("k must be at least 2")
    x, y = (np.asarray(a, dtype=float) for a in data)
    n = x.shape[0]
    if k > n:
        raise ValueError(f"k={k} exceeds the {n} available samples")

    children = np.random.SeedSequence(cfg.seed).spawn(k + 1)
    shuffle_seed, fold_seeds = children[0], children[1:]
    folds = _kfold_indices(n, k, np.random.default_rng(shuffle_seed))

    best_pair = None
    best_score = math.inf
    for lam_b, lam_w in sorted(pairs, key=lambda p: (p[0] + p[1], p[0])):
        run_cfg = cfg.replace(lam_b=lam_b, lam_w=lam_w)
        scores = []
        for fold_idx, val_idx in enumerate(folds):
            train_idx = np.setdiff1d(np.arange(n), val_idx)
            model = model_factory(fold_seeds[fold_idx])
            res = train_early_stopping(
                model,
                (x[train_idx], y[train_idx]),
                (x[val_idx], y[val_idx]),
                run_cfg,
            )
            scores.append(res.best_val_loss)
        score = float(np.mean(scores))
        if score <= best_score:
            best_score = score
            best_pair = (lam_b, lam_w)
    return best_pair


def grad_check(model, x, y, lam_b: float = 0.0, lam_w: float = 0.0,
               eps: float = 1e-5, max_coords: int | None = None,
               seed: int = 0) -> float:
    """Central finite differences against the analytic gradient.

    Perturbs every parameter coordinate (or a random subset of
    ``max_coords`` per array) and returns the worst relative error,
    with denominator max(|analytic|, |numeric|, 1e-8).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    grid = model.output_grid

    def objective() -> float:
        value = quadratic_loss(model.predict(x), y, grid)
        if lam_b > 0 or lam_w > 0:
            value += model.penalty(lam_b, lam_w)[0]
        return value

    pred, cache = model.forward(x)
    grads = model.backward(cache, pred - y)
    if lam_b > 0 or lam_w > 0:
        pen_grads = model.penalty(lam_b, lam_w)[1]
        grads = [g + pg for g, pg in zip(grads, pen_grads)]

    rng = np.random.default_rng(seed)
    worst = 0.0
    for param, grad in zip(model.parameters(), grads):
        flat = param.reshape(-1)
        gflat = grad.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = rng.choice(flat.size, size=max_coords, replace=False)
        for c in coords:
            keep = flat[c]
            flat[c] = keep + eps
            up = objective()
            flat[c] = keep - eps
            down = objective()
            flat[c] = keep
            numeric = (up - down) / (2.0 * eps)
            denom = max(abs(gflat[c]), abs(numeric), 1e-8)
            worst = max(worst, abs(gflat[c] - numeric) / denom)
    return worst
