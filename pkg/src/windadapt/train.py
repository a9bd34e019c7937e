"""Supervised training with plateau-based early stopping, plus evaluation."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .labeling import WindowedDataset
from .nn import (
    AdamState,
    Architecture,
    FreezeMask,
    ModelParams,
    adam_step,
    forward,
    init_params,
    loss_and_grads,
)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    batch_size: int = 64
    max_epochs: int = 200
    patience: int = 10
    min_delta: float = 1e-4
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if min(self.lr, self.batch_size, self.max_epochs, self.patience, self.min_delta) <= 0:
            raise ValueError("all training settings must be positive")
        if self.patience >= self.max_epochs:
            raise ValueError("patience must be below max_epochs")


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    train_acc: float
    eval_acc: float
    seconds: float


@dataclass
class History:
    initial_eval_acc: float
    records: list[EpochRecord] = field(default_factory=list)

    def eval_accs(self) -> list[float]:
        return [r.eval_acc for r in self.records]

    def mean_seconds_per_epoch(self) -> float:
        return float(np.mean([r.seconds for r in self.records]))


def write_history_csv(path: str | Path, history: History) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "loss", "train_acc", "eval_acc", "seconds"])
        w.writerow([0, "", "", repr(history.initial_eval_acc), ""])
        for r in history.records:
            w.writerow([r.epoch, repr(r.loss), repr(r.train_acc),
                        repr(r.eval_acc), f"{r.seconds:.6f}"])


def evaluate(params: ModelParams, ds: WindowedDataset,
             batch_size: int = 256) -> tuple[float, np.ndarray]:
    """Eval-mode accuracy and confusion matrix (rows = true class)."""
    if len(ds) == 0:
        raise ValueError("cannot evaluate an empty dataset")
    n_cls = params.arch.n_classes
    confusion = np.zeros((n_cls, n_cls), dtype=np.int64)
    for lo in range(0, len(ds), batch_size):
        xb = ds.X[lo:lo + batch_size]
        yb = ds.y[lo:lo + batch_size]
        logits, _ = forward(params, xb, mode="eval")
        pred = np.argmax(logits, axis=1)  # ties resolve to the lowest index
        np.add.at(confusion, (yb, pred), 1)
    accuracy = float(np.trace(confusion) / confusion.sum())
    return accuracy, confusion


def train_loop(
    params: ModelParams,
    ds_train: WindowedDataset,
    ds_eval: WindowedDataset,
    cfg: TrainConfig,
    mask: FreezeMask,
) -> tuple[ModelParams, History]:
    """Shared loop for source training and target adaptation.

    Early-stops once mean epoch loss has not improved by min_delta for
    `patience` consecutive epochs; returns the best-eval-accuracy snapshot.
    """
    if len(ds_train) == 0 or len(ds_eval) == 0:
        raise ValueError("training and evaluation datasets must be non-empty")

    state = AdamState.for_params(params, lr=cfg.lr)
    history = History(initial_eval_acc=evaluate(params, ds_eval)[0])
    best_acc = -1.0
    best_params = params.copy()
    best_loss = np.inf
    stall = 0
    n = len(ds_train)

    for epoch in range(1, cfg.max_epochs + 1):
        t0 = time.perf_counter()
        if cfg.shuffle:
            order = np.random.default_rng([cfg.seed, epoch]).permutation(n)
        else:
            order = np.arange(n)

        losses = []
        correct = 0
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            loss, logits, grads = loss_and_grads(params, ds_train.X[idx], ds_train.y[idx], mask)
            adam_step(params, grads, state, mask)
            losses.append(loss * len(idx))
            correct += int((np.argmax(logits, axis=1) == ds_train.y[idx]).sum())
        mean_loss = float(np.sum(losses) / n)
        eval_acc, _ = evaluate(params, ds_eval)
        history.records.append(EpochRecord(
            epoch=epoch, loss=mean_loss, train_acc=correct / n,
            eval_acc=eval_acc, seconds=time.perf_counter() - t0))

        if eval_acc > best_acc:
            best_acc = eval_acc
            best_params = params.copy()
        if mean_loss < best_loss - cfg.min_delta:
            best_loss = mean_loss
            stall = 0
        else:
            stall += 1
            if stall >= cfg.patience:
                break
    return best_params, history


def train_source(
    ds_train: WindowedDataset,
    ds_eval: WindowedDataset,
    arch: Architecture,
    cfg: TrainConfig,
) -> tuple[ModelParams, History]:
    """Train from scratch with every parameter group trainable."""
    params = init_params(arch, cfg.seed)
    return train_loop(params, ds_train, ds_eval, cfg, FreezeMask.all_trainable())


def epochs_to_saturation(history: History, frac: float = 0.95) -> int:
    """Earliest epoch reaching frac of the run's best evaluation accuracy."""
    if not history.records:
        raise ValueError("empty history")
    if not 0.0 < frac <= 1.0:
        raise ValueError("frac must be in (0, 1]")
    accs = history.eval_accs()
    target = frac * max(accs)
    for r, acc in zip(history.records, accs):
        if acc >= target:
            return r.epoch
    return history.records[-1].epoch
