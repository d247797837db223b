"""Standardisation, windowing, Adam, early-stopped training and metrics."""

from __future__ import annotations

import copy
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .mixer import LOSSES, ForecastModel
from .tensor import DTYPE, NonFiniteError

log = logging.getLogger(__name__)

# FD roundoff at step 1e-5 is ~1e-11 * |loss|; gradients below this size are
# compared in absolute terms.
GRADCHECK_FLOOR = 1e-5


class DataError(ValueError):
    pass


class TrainingDivergedError(FloatingPointError):
    def __init__(self, epoch: int, batch: int, detail: str = ""):
        self.epoch, self.batch = epoch, batch
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}" + (f": {detail}" if detail else ""))


def standardize(series, train_range):
    """Scale each column to zero mean / unit variance using rows in ``train_range``.

    ``train_range`` is a ``(start, stop)`` pair. Returns the normalised series
    and the per-feature means and standard deviations.
    """
    series = np.asarray(series, dtype=DTYPE)
    start, stop = train_range
    train = series[start:stop]
    if len(train) == 0:
        raise DataError(f"empty training range {train_range}")
    means = train.mean(axis=0)
    stds = train.std(axis=0)
    zero = np.flatnonzero(stds == 0)
    if zero.size:
        raise DataError(f"feature {int(zero[0])} has zero variance on the training range")
    return (series - means) / stds, means, stds


def window(series, L: int, H: int, start: int = 0, stop: int | None = None, context: int = 0):
    """Slide a stride-1 window over ``series[start:stop]``.

    Returns ``(X [N, L, C], Y [N, H, C], input_starts)``. Targets always lie
    inside ``[start, stop)``. Inputs also stay inside unless ``context > 0``,
    in which case a window's input may reach back up to ``context`` rows
    before ``start``.
    """
    series = np.asarray(series, dtype=DTYPE)
    stop = len(series) if stop is None else stop
    # context <= L keeps every target at or after `start`
    first = max(start - min(context, L), 0)
    n = stop - first - L - H + 1
    if n < 1:
        raise DataError(
            f"series segment [{start}, {stop}) too short for L={L}, H={H} (needs {L + H} rows)"
        )
    starts = np.arange(first, first + n)
    idx_in = starts[:, None] + np.arange(L)
    idx_out = starts[:, None] + L + np.arange(H)
    return series[idx_in], series[idx_out], starts


@dataclass
class WindowedDataset:
    """Input/target window pairs for each partition."""

    L: int
    H: int
    train: tuple[np.ndarray, np.ndarray]
    valid: tuple[np.ndarray, np.ndarray]
    test: tuple[np.ndarray, np.ndarray]
    starts: dict[str, np.ndarray] = field(default_factory=dict)
    ranges: dict[str, tuple[int, int]] = field(default_factory=dict)

    @classmethod
    def from_series(cls, series, ranges, L: int, H: int, lookback_from_previous: bool = False):
        """Window each of ``ranges = {"train":.., "valid":.., "test":..}`` separately.

        With ``lookback_from_previous`` the valid/test inputs may use rows of
        the preceding partitions (targets never do).
        """
        parts, starts = {}, {}
        for name in ("train", "valid", "test"):
            lo, hi = ranges[name]
            ctx = L if (lookback_from_previous and name != "train") else 0
            X, Y, s = window(series, L, H, lo, hi, context=ctx)
            parts[name], starts[name] = (X, Y), s
        return cls(L, H, parts["train"], parts["valid"], parts["test"], starts, {k: tuple(v) for k, v in ranges.items()})


def persistence_forecast(X, H: int):
    """Repeat the last observed row across the horizon."""
    X = np.asarray(X, dtype=DTYPE)
    return np.repeat(X[:, -1:, :], H, axis=1)


# ---------------------------------------------------------------- losses

def loss_and_grad(pred, target, kind: str = "mse"):
    diff = pred - target
    n = diff.size
    if kind == "mse":
        return float(np.mean(diff ** 2)), 2.0 * diff / n
    if kind == "mae":
        return float(np.mean(np.abs(diff))), np.sign(diff) / n
    raise ValueError(f"unknown loss {kind!r}; expected one of {LOSSES}")


def loss_difference(pred_a, pred_b, target, kind: str = "mse") -> float:
    """loss(pred_a) - loss(pred_b) without subtracting two rounded totals."""
    da, db = pred_a - target, pred_b - target
    if kind == "mse":
        return math.fsum(((pred_a - pred_b) * (da + db)).ravel()) / da.size
    if kind == "mae":
        return math.fsum((np.abs(da) - np.abs(db)).ravel()) / da.size
    raise ValueError(f"unknown loss {kind!r}; expected one of {LOSSES}")


def mse_mae(pred, target):
    diff = np.asarray(pred, dtype=DTYPE) - np.asarray(target, dtype=DTYPE)
    return float(np.mean(diff ** 2)), float(np.mean(np.abs(diff)))


# ---------------------------------------------------------------- adam

@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState, lr: float) -> AdamState:
    """In-place bias-corrected Adam update of every array in ``params``."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for name, p in params.items():
        g = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m, v = state.m[name], state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return state


# ---------------------------------------------------------------- training

@dataclass
class TrainConfig:
    max_epochs: int = 200
    patience: int = 5
    loss: str = "mse"
    learning_rate: float = 1e-3
    batch_size: int = 32
    seed: int = 0
    # early-stopping criterion; independent of the training objective
    valid_loss: str = "mse"

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.loss not in LOSSES or self.valid_loss not in LOSSES:
            raise ValueError(f"loss and valid_loss must be one of {LOSSES}")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    valid_loss: list[float] = field(default_factory=list)
    best_epoch: int = 0
    wall_seconds: float = 0.0

    @property
    def epochs(self) -> int:
        return len(self.train_loss)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("epoch,train_loss,valid_loss\n")
            for i, (tr, va) in enumerate(zip(self.train_loss, self.valid_loss), start=1):
                fh.write(f"{i},{tr!r},{va!r}\n")


def _eval_loss(model, X, Y, kind, batch_size=1024):
    total = 0.0
    for i in range(0, len(X), batch_size):
        pred = model.forward(X[i:i + batch_size], training=False)[0]
        diff = pred - Y[i:i + batch_size]
        total += float(np.sum(diff ** 2 if kind == "mse" else np.abs(diff)))
    return total / Y.size


def train(model: ForecastModel, data: WindowedDataset, cfg: TrainConfig, callback=None):
    """Minibatch Adam with early stopping on the validation loss.

    The model is left holding the parameters (and norm statistics) of the
    best validation epoch; it is also returned with the history.
    """
    Xtr, Ytr = data.train
    Xva, Yva = data.valid
    if len(Xtr) == 0 or len(Xva) == 0:
        raise DataError("training needs non-empty train and valid partitions")
    state = AdamState()
    hist = TrainHistory()
    best = np.inf
    best_state = model.snapshot()
    stale = 0
    t0 = time.perf_counter()
    params = model.parameters()
    for epoch in range(1, cfg.max_epochs + 1):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(len(Xtr))
        total = 0.0
        for b, lo in enumerate(range(0, len(order), cfg.batch_size)):
            idx = order[lo:lo + cfg.batch_size]
            drop_rng = np.random.default_rng([cfg.seed, epoch, b])
            try:
                pred, caches = model.forward(Xtr[idx], training=True, rng=drop_rng)
            except NonFiniteError as exc:
                raise TrainingDivergedError(epoch, b, str(exc)) from exc
            loss, gpred = loss_and_grad(pred, Ytr[idx], cfg.loss)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, b)
            grads = model.backward(caches, gpred)
            adam_step(params, grads, state, cfg.learning_rate)
            total += loss * len(idx)
        train_loss = total / len(Xtr)
        try:
            valid_loss = _eval_loss(model, Xva, Yva, cfg.valid_loss)
        except NonFiniteError as exc:
            raise TrainingDivergedError(epoch, -1, str(exc)) from exc
        hist.train_loss.append(train_loss)
        hist.valid_loss.append(valid_loss)
        log.debug("epoch %d train %.6f valid %.6f", epoch, train_loss, valid_loss)
        if callback is not None:
            callback(epoch, train_loss, valid_loss)
        if valid_loss < best:
            best, stale = valid_loss, 0
            hist.best_epoch = epoch
            best_state = model.snapshot()
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    model.load_state(best_state)
    hist.wall_seconds = time.perf_counter() - t0
    return model, hist


def evaluate(model: ForecastModel, X, Y, batch_size: int = 1024):
    """Test-set ``(mse, mae)`` in eval mode, averaged over samples, steps and features."""
    X = np.asarray(X, dtype=DTYPE)
    Y = np.asarray(Y, dtype=DTYPE)
    if len(X) == 0:
        raise DataError("cannot evaluate on an empty partition")
    sq = ab = 0.0
    for i in range(0, len(X), batch_size):
        diff = model.forward(X[i:i + batch_size], training=False)[0] - Y[i:i + batch_size]
        sq += float(np.sum(diff ** 2))
        ab += float(np.sum(np.abs(diff)))
    return sq / Y.size, ab / Y.size


def relative_error(analytic, numeric, floor: float = GRADCHECK_FLOOR):
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def gradient_check(model: ForecastModel, sample, eps: float = 1e-5, loss: str = "mse",
                   training: bool = True, max_params: int = 10_000, seed: int = 0,
                   details: bool = False):
    """Largest relative error between analytic and central-difference gradients.

    Runs on a copy of ``model``. In training mode the dropout masks are held
    fixed across evaluations and norm statistics are not updated. Models with
    more than ``max_params`` scalars are checked on a seeded random subset.
    """
    model = copy.deepcopy(model)
    x, y = (np.asarray(a, dtype=DTYPE) for a in sample)

    def run():
        rng = np.random.default_rng([seed, 1]) if training else None
        pred, caches = model.forward(x, training=training, rng=rng, update_stats=False)
        return pred, caches

    pred, caches = run()
    _, gpred = loss_and_grad(pred, y, loss)
    grads = model.backward(caches, gpred)

    params = model.parameters()
    coords = [(name, idx) for name, p in params.items() for idx in np.ndindex(p.shape)]
    if len(coords) > max_params:
        pick = np.random.default_rng(seed).choice(len(coords), size=max_params, replace=False)
        coords = [coords[i] for i in np.sort(pick)]

    worst, where = 0.0, None
    for name, idx in coords:
        p = params[name]
        orig = p[idx]
        p[idx] = orig + eps
        pp = run()[0]
        p[idx] = orig - eps
        pm = run()[0]
        p[idx] = orig
        num = loss_difference(pp, pm, y, loss) / (2 * eps)
        err = float(relative_error(grads[name][idx], num))
        if err > worst:
            worst, where = err, (name, idx, float(grads[name][idx]), num)
    if details:
        return worst, where
    return worst
