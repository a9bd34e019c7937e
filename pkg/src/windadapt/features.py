"""Random-forest feature ranking (Gini importance) and correlation export.

The forest is classification-only: CART trees on binned capacity-factor
labels, continuous splits at midpoints between consecutive distinct values.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateFeatureError

@dataclass(frozen=True)
class Leaf:
    class_counts: np.ndarray


@dataclass(frozen=True)
class Split:
    feature_index: int
    threshold: float
    left: "Split | Leaf"
    right: "Split | Leaf"
    impurity_decrease: float
    n_samples: int


TreeNode = Split | Leaf


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 12
    min_samples_leaf: int = 5
    features_per_split: int = 0  # 0 = ceil(sqrt(F))
    bootstrap: bool = True
    seed: int = 0


@dataclass
class Forest:
    trees: list[TreeNode]
    importances: np.ndarray
    config: ForestConfig


def gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.dot(p, p))


def _best_split_for_feature(x, onehot, parent_impurity, min_leaf):
    """Best (gain, threshold) over all valid midpoint thresholds of one feature."""
    n = len(x)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    left_counts = np.cumsum(onehot[order], axis=0)  # left_counts[i-1] = counts of first i
    total = left_counts[-1]

    # split position i puts i samples left; require a value change across the cut
    pos = np.arange(min_leaf, n - min_leaf + 1)
    pos = pos[xs[pos - 1] < xs[pos]]
    if len(pos) == 0:
        return -1.0, 0.0
    cl = left_counts[pos - 1].astype(np.float64)
    cr = total.astype(np.float64) - cl
    nl = pos.astype(np.float64)
    nr = n - nl
    gl = 1.0 - np.einsum("ij,ij->i", cl, cl) / (nl * nl)
    gr = 1.0 - np.einsum("ij,ij->i", cr, cr) / (nr * nr)
    gains = parent_impurity - (nl / n) * gl - (nr / n) * gr
    best = int(np.argmax(gains))
    i = pos[best]
    return float(gains[best]), float(0.5 * (xs[i - 1] + xs[i]))


def build_tree(X: np.ndarray, y: np.ndarray, cfg: ForestConfig, rng: np.random.Generator,
               n_classes: int | None = None, importance_out: np.ndarray | None = None) -> TreeNode:
    """CART induction maximizing Gini impurity decrease over a sampled feature subset."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise ValueError("cannot build a tree on an empty sample")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    n_feat = X.shape[1]
    mtry = cfg.features_per_split or int(np.ceil(np.sqrt(n_feat)))
    mtry = min(mtry, n_feat)
    onehot = np.eye(n_classes, dtype=np.int64)[y]
    n_root = len(y)

    def grow(idx: np.ndarray, depth: int) -> TreeNode:
        counts = onehot[idx].sum(axis=0)
        impurity = gini(counts)
        n = len(idx)
        if impurity == 0.0 or depth >= cfg.max_depth or n < 2 * cfg.min_samples_leaf:
            return Leaf(class_counts=counts)

        candidates = np.sort(rng.choice(n_feat, size=mtry, replace=False))
        best_gain, best_feat, best_thr = 0.0, -1, 0.0
        for f in candidates:
            gain, thr = _best_split_for_feature(
                X[idx, f], onehot[idx], impurity, cfg.min_samples_leaf)
            if gain > best_gain + 1e-15:
                best_gain, best_feat, best_thr = gain, int(f), thr
        if best_feat < 0:
            return Leaf(class_counts=counts)

        go_left = X[idx, best_feat] <= best_thr
        if importance_out is not None:
            importance_out[best_feat] += (n / n_root) * best_gain
        return Split(
            feature_index=best_feat, threshold=best_thr,
            left=grow(idx[go_left], depth + 1), right=grow(idx[~go_left], depth + 1),
            impurity_decrease=best_gain, n_samples=n,
        )

    return grow(np.arange(len(y)), 0)


def fit_forest(X: np.ndarray, y: np.ndarray, cfg: ForestConfig) -> Forest:
    """Bootstrap ensemble; importances = normalized mean decrease in impurity.

    Each tree draws from its own (seed, tree_index) stream, so growing the
    ensemble never reshuffles earlier trees.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise ValueError("cannot fit a forest on an empty sample")
    n_classes = int(y.max()) + 1
    n_feat = X.shape[1]

    trees = []
    total_imp = np.zeros(n_feat)
    for t in range(cfg.n_trees):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, t]))
        if cfg.bootstrap:
            idx = rng.integers(0, len(y), size=len(y))
        else:
            idx = np.arange(len(y))
        tree_imp = np.zeros(n_feat)
        trees.append(build_tree(X[idx], y[idx], cfg, rng, n_classes, tree_imp))
        total_imp += tree_imp

    total = total_imp.sum()
    importances = total_imp / total if total > 0 else total_imp
    return Forest(trees=trees, importances=importances, config=cfg)


def select_top_k(forest: Forest, k: int) -> list[int]:
    """Indices of the k largest importances, descending; ties go to the lower index."""
    imp = forest.importances
    if not 1 <= k <= len(imp):
        raise ValueError(f"k={k} out of range for {len(imp)} features")
    order = np.lexsort((np.arange(len(imp)), -imp))
    return [int(i) for i in order[:k]]


def correlation_matrix(samples, feature_indices: list[int]) -> np.ndarray:
    """Pearson correlation of the selected features across samples."""
    X = np.array([s.features for s in samples], dtype=np.float64)[:, feature_indices]
    if len(X) < 2:
        raise ValueError("need at least 2 samples")
    sd = X.std(axis=0)
    for j, s in enumerate(sd):
        if s == 0.0:
            raise DegenerateFeatureError(
                f"feature index {feature_indices[j]} has zero variance")
    m = np.corrcoef(X, rowvar=False)
    m = np.clip((m + m.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(m, 1.0)
    return m


def write_importances_csv(path: str | Path, importances: np.ndarray, names: list[str]) -> None:
    order = np.lexsort((np.arange(len(importances)), -importances))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["feature", "importance"])
        for i in order:
            w.writerow([names[i], repr(float(importances[i]))])


def write_correlation_csv(path: str | Path, corr: np.ndarray, names: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([""] + names)
        for i, name in enumerate(names):
            w.writerow([name] + [repr(float(v)) for v in corr[i]])
