"""Capacity-factor binning, sliding-window dataset construction, and splits."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .errors import EmptySideError, OutOfRangeError
from .ingest import AlignedSample

HOUR = timedelta(hours=1)


@dataclass(frozen=True)
class BinSpec:
    """Equal-width discretization of [0, 1] into n_bins classes."""

    n_bins: int
    edges: tuple[float, ...]

    def __post_init__(self):
        if self.n_bins < 2:
            raise ValueError("need at least 2 bins")
        if len(self.edges) != self.n_bins + 1 or self.edges[0] != 0.0 or self.edges[-1] != 1.0:
            raise ValueError("edges must run from 0 to 1 with n_bins+1 entries")
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError("edges must be strictly increasing")


def make_bins(n: int) -> BinSpec:
    if n < 2:
        raise ValueError(f"need at least 2 bins, got {n}")
    return BinSpec(n_bins=n, edges=tuple(i / n for i in range(n + 1)))


def assign_bin(v: float, spec: BinSpec) -> int:
    """Class of capacity factor v; v=1 maps to the top class."""
    if not 0.0 <= v <= 1.0:
        raise OutOfRangeError(f"capacity factor {v} outside [0, 1]")
    return min(int(v * spec.n_bins), spec.n_bins - 1)


def assign_bins(values: np.ndarray, spec: BinSpec) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise OutOfRangeError("capacity factor outside [0, 1]")
    return np.minimum((values * spec.n_bins).astype(np.int64), spec.n_bins - 1)


def histogram(samples: list[AlignedSample], spec: BinSpec) -> np.ndarray:
    counts = np.zeros(spec.n_bins, dtype=np.int64)
    if samples:
        labels = assign_bins(np.array([s.capacity_factor for s in samples]), spec)
        np.add.at(counts, labels, 1)
    return counts


def write_histogram_csv(path: str | Path, counts: np.ndarray, spec: BinSpec) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_low", "bin_high", "count"])
        for i in range(spec.n_bins):
            w.writerow([spec.edges[i], spec.edges[i + 1], int(counts[i])])


@dataclass
class WindowedDataset:
    """Stacked model inputs: X is n×W×F, y the class at each window's final hour."""

    X: np.ndarray
    y: np.ndarray
    end_times: list[datetime]
    start_times: list[datetime]
    window_len: int
    feature_indices: list[int]
    bin_spec: BinSpec
    domain_tag: str = ""

    def __len__(self) -> int:
        return len(self.y)

    def subset(self, idx) -> "WindowedDataset":
        idx = np.asarray(idx)
        return WindowedDataset(
            X=self.X[idx], y=self.y[idx],
            end_times=[self.end_times[i] for i in idx],
            start_times=[self.start_times[i] for i in idx],
            window_len=self.window_len, feature_indices=self.feature_indices,
            bin_spec=self.bin_spec, domain_tag=self.domain_tag,
        )


def contiguous_runs(samples: list[AlignedSample]) -> list[tuple[int, int]]:
    """Half-open [start, stop) index ranges of hour-contiguous stretches."""
    runs = []
    start = 0
    for i in range(1, len(samples)):
        if samples[i].timestamp - samples[i - 1].timestamp != HOUR:
            runs.append((start, i))
            start = i
    if samples:
        runs.append((start, len(samples)))
    return runs


def window(
    samples: list[AlignedSample],
    w: int,
    feature_indices: list[int],
    spec: BinSpec,
    domain_tag: str = "",
) -> WindowedDataset:
    """Stride-1 sliding windows within each contiguous run; label at the final hour."""
    if w < 1:
        raise ValueError("window length must be >= 1")
    feats = np.array([s.features for s in samples], dtype=np.float64)[:, feature_indices]
    cfs = np.array([s.capacity_factor for s in samples])

    xs, ys, ends, starts = [], [], [], []
    for lo, hi in contiguous_runs(samples):
        if hi - lo < w:
            continue
        view = np.lib.stride_tricks.sliding_window_view(feats[lo:hi], w, axis=0)
        xs.append(np.ascontiguousarray(view.transpose(0, 2, 1)))  # n_win × W × F
        ys.append(assign_bins(cfs[lo + w - 1: hi], spec))
        ends.extend(s.timestamp for s in samples[lo + w - 1: hi])
        starts.extend(s.timestamp for s in samples[lo: hi - w + 1])
    if not xs:
        raise EmptySideError(f"no contiguous run of at least {w} hours")
    return WindowedDataset(
        X=np.concatenate(xs), y=np.concatenate(ys), end_times=ends, start_times=starts,
        window_len=w, feature_indices=list(feature_indices), bin_spec=spec,
        domain_tag=domain_tag,
    )


def split_chronological(ds: WindowedDataset, train_frac: float) -> tuple[WindowedDataset, WindowedDataset]:
    """Earliest windows to train, rest to test, dropping test windows that
    share any hour with a train window."""
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must be in (0, 1)")
    order = np.argsort(np.array(ds.end_times, dtype="datetime64[s]"), kind="stable")
    n_train = int(train_frac * len(ds))
    if n_train == 0 or n_train == len(ds):
        raise EmptySideError(f"train_frac={train_frac} leaves an empty side for {len(ds)} windows")
    train_idx = order[:n_train]
    boundary = max(ds.end_times[i] for i in train_idx)
    test_idx = [i for i in order[n_train:] if ds.start_times[i] > boundary]
    if not test_idx:
        raise EmptySideError("all test windows overlap the training period")
    return ds.subset(train_idx), ds.subset(np.array(test_idx))
