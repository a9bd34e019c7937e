"""Experiment runners: the adaptation matrix, partial-vs-full and feature
ablations, and the convergence-curve comparison."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .adapt import AdaptMode, adapt, zero_shot_eval
from .features import ForestConfig, fit_forest, select_top_k
from .ingest import AlignedSample
from .labeling import BinSpec, WindowedDataset, assign_bins, make_bins, split_chronological, window
from .nn import Architecture, save_checkpoint
from .train import History, TrainConfig, epochs_to_saturation, evaluate, train_source


@dataclass
class DomainSpec:
    name: str
    samples: list[AlignedSample]
    feature_names: list[str]


@dataclass(frozen=True)
class ExperimentConfig:
    n_bins: int = 6
    window_len: int = 24
    k: int = 6
    train_frac: float = 0.8
    kernel: int = 3
    c1: int = 32
    c2: int = 64
    hidden: int = 128
    train: TrainConfig = TrainConfig()
    forest: ForestConfig = ForestConfig()
    seed: int = 0

    def bin_spec(self) -> BinSpec:
        return make_bins(self.n_bins)

    def arch(self, n_features: int) -> Architecture:
        return Architecture(window_len=self.window_len, n_features=n_features,
                            kernel=self.kernel, c1=self.c1, c2=self.c2,
                            hidden=self.hidden, n_classes=self.n_bins)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def derive_seed(root: int, *key: int) -> int:
    return int(np.random.SeedSequence([root, *key]).generate_state(1)[0])


def rank_features(domain: DomainSpec, cfg: ExperimentConfig):
    """Fit the selection forest on the domain's chronological training portion;
    returns (top-k indices in descending importance, fitted forest)."""
    n_train = max(1, int(cfg.train_frac * len(domain.samples)))
    train = domain.samples[:n_train]
    X = np.array([s.features for s in train])
    y = assign_bins(np.array([s.capacity_factor for s in train]), cfg.bin_spec())
    forest_cfg = dataclasses.replace(cfg.forest, seed=derive_seed(cfg.seed, 97))
    forest = fit_forest(X, y, forest_cfg)
    return select_top_k(forest, cfg.k), forest


def select_features(domain: DomainSpec, cfg: ExperimentConfig) -> list[int]:
    """Selected feature indices in ascending index order (dataset column order)."""
    indices, _ = rank_features(domain, cfg)
    return sorted(indices)


def make_splits(domain: DomainSpec, feature_indices: list[int],
                cfg: ExperimentConfig) -> tuple[WindowedDataset, WindowedDataset]:
    ds = window(domain.samples, cfg.window_len, feature_indices, cfg.bin_spec(),
                domain_tag=domain.name)
    return split_chronological(ds, cfg.train_frac)


def _train_to_checkpoint(domain: DomainSpec, feature_indices, cfg: ExperimentConfig,
                         seed: int, work_dir: Path) -> tuple[Path, float, History]:
    tr, te = make_splits(domain, feature_indices, cfg)
    tcfg = dataclasses.replace(cfg.train, seed=seed)
    params, hist = train_source(tr, te, cfg.arch(len(feature_indices)), tcfg)
    path = work_dir / f"{domain.name}_seed{seed}.ckpt"
    save_checkpoint(params, path)
    acc, _ = evaluate(params, te)
    return path, acc, hist


@dataclass
class MatrixResult:
    domains: list[str]
    cells: dict[tuple[str, str], tuple[float, float, float]]  # (w/o, w., diff) in %

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["source", "target", "acc_without", "acc_with", "diff"])
            for s in self.domains:
                for t in self.domains:
                    if s == t:
                        w.writerow([s, t, "N/A", "N/A", "N/A"])
                    else:
                        wo, wi, d = self.cells[(s, t)]
                        w.writerow([s, t, f"{wo:.4f}", f"{wi:.4f}", f"{d:.4f}"])


def diff_points(acc_without: float, acc_with: float) -> float:
    return acc_with - acc_without


def run_matrix(domains: list[DomainSpec], cfg: ExperimentConfig,
               work_dir: str | Path | None = None) -> MatrixResult:
    """For every ordered domain pair, compare zero-shot accuracy against
    accuracy after partial adaptation."""
    if len(domains) < 2:
        raise ValueError("need at least 2 domains")
    work = Path(work_dir) if work_dir else Path(tempfile.mkdtemp(prefix="windadapt_"))
    work.mkdir(parents=True, exist_ok=True)

    feature_indices = select_features(domains[0], cfg)
    cells = {}
    for i, src in enumerate(domains):
        ckpt, _, _ = _train_to_checkpoint(
            src, feature_indices, cfg, derive_seed(cfg.seed, 1, i), work)
        for j, tgt in enumerate(domains):
            if src.name == tgt.name:
                continue
            tgt_tr, tgt_te = make_splits(tgt, feature_indices, cfg)
            acc_wo = 100.0 * zero_shot_eval(ckpt, tgt_te)
            tcfg = dataclasses.replace(cfg.train, seed=derive_seed(cfg.seed, 2, i, j))
            adapted, _ = adapt(ckpt, tgt_tr, tgt_te, AdaptMode.PARTIAL, tcfg)
            acc_w = 100.0 * evaluate(adapted, tgt_te)[0]
            cells[(src.name, tgt.name)] = (acc_wo, acc_w, diff_points(acc_wo, acc_w))
    return MatrixResult(domains=[d.name for d in domains], cells=cells)


@dataclass
class PartialFullResult:
    acc_partial: float
    acc_full: float
    difference: float  # full - partial, points
    history_partial: History
    history_full: History


def run_partial_vs_full(source: DomainSpec, target: DomainSpec,
                        cfg: ExperimentConfig,
                        work_dir: str | Path | None = None) -> PartialFullResult:
    """One pretrained checkpoint adapted twice: head-only vs all-weights updates."""
    work = Path(work_dir) if work_dir else Path(tempfile.mkdtemp(prefix="windadapt_"))
    work.mkdir(parents=True, exist_ok=True)
    feature_indices = select_features(source, cfg)
    ckpt, _, _ = _train_to_checkpoint(source, feature_indices, cfg,
                                      derive_seed(cfg.seed, 3), work)
    tgt_tr, tgt_te = make_splits(target, feature_indices, cfg)
    tcfg = dataclasses.replace(cfg.train, seed=derive_seed(cfg.seed, 4))

    part_params, hist_p = adapt(ckpt, tgt_tr, tgt_te, AdaptMode.PARTIAL, tcfg)
    full_params, hist_f = adapt(ckpt, tgt_tr, tgt_te, AdaptMode.FULL, tcfg)
    acc_p = 100.0 * evaluate(part_params, tgt_te)[0]
    acc_f = 100.0 * evaluate(full_params, tgt_te)[0]
    return PartialFullResult(acc_partial=acc_p, acc_full=acc_f,
                             difference=acc_f - acc_p,
                             history_partial=hist_p, history_full=hist_f)


@dataclass
class FeatureAblationResult:
    acc_all: float
    acc_selected: float
    difference: float  # all - selected, points
    selected_indices: list[int]


def run_feature_ablation(domain: DomainSpec, k: int, cfg: ExperimentConfig) -> FeatureAblationResult:
    """Train once on all numeric features and once on the forest's top k."""
    n_features = len(domain.feature_names)
    if not 1 <= k <= n_features:
        raise ValueError(f"k={k} out of range for {n_features} features")
    cfg_k = dataclasses.replace(cfg, k=k)
    selected = select_features(domain, cfg_k)
    seed = derive_seed(cfg.seed, 5)

    accs = []
    for indices in (list(range(n_features)), selected):
        tr, te = make_splits(domain, indices, cfg)
        tcfg = dataclasses.replace(cfg.train, seed=seed)
        params, _ = train_source(tr, te, cfg.arch(len(indices)), tcfg)
        accs.append(100.0 * evaluate(params, te)[0])
    return FeatureAblationResult(acc_all=accs[0], acc_selected=accs[1],
                                 difference=accs[0] - accs[1],
                                 selected_indices=selected)


@dataclass
class ConvergenceResult:
    history_scratch: History
    history_adapted: History
    saturation_scratch: int
    saturation_adapted: int


def run_convergence_comparison(source: DomainSpec, target: DomainSpec,
                               cfg: ExperimentConfig,
                               work_dir: str | Path | None = None) -> ConvergenceResult:
    """From-scratch target training vs partial adaptation, on identical target
    splits and seed, tracking how fast each reaches its accuracy plateau."""
    work = Path(work_dir) if work_dir else Path(tempfile.mkdtemp(prefix="windadapt_"))
    work.mkdir(parents=True, exist_ok=True)
    feature_indices = select_features(source, cfg)
    ckpt, _, _ = _train_to_checkpoint(source, feature_indices, cfg,
                                      derive_seed(cfg.seed, 6), work)
    tgt_tr, tgt_te = make_splits(target, feature_indices, cfg)
    tcfg = dataclasses.replace(cfg.train, seed=derive_seed(cfg.seed, 7))

    _, hist_scratch = train_source(tgt_tr, tgt_te, cfg.arch(len(feature_indices)), tcfg)
    _, hist_adapted = adapt(ckpt, tgt_tr, tgt_te, AdaptMode.PARTIAL, tcfg)
    return ConvergenceResult(
        history_scratch=hist_scratch, history_adapted=hist_adapted,
        saturation_scratch=epochs_to_saturation(hist_scratch),
        saturation_adapted=epochs_to_saturation(hist_adapted),
    )


def write_paired_curves_csv(path: str | Path, result: ConvergenceResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "scratch_eval_acc", "adapted_eval_acc"])
        w.writerow([0, repr(result.history_scratch.initial_eval_acc),
                    repr(result.history_adapted.initial_eval_acc)])
        n = max(len(result.history_scratch.records), len(result.history_adapted.records))
        for i in range(n):
            s = result.history_scratch.records[i].eval_acc \
                if i < len(result.history_scratch.records) else ""
            a = result.history_adapted.records[i].eval_acc \
                if i < len(result.history_adapted.records) else ""
            w.writerow([i + 1, repr(s) if s != "" else "", repr(a) if a != "" else ""])


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(json.dumps(cfg.as_dict(), sort_keys=True).encode()).hexdigest()


def write_manifest(path: str | Path, cfg: ExperimentConfig,
                   files: dict[str, str | Path]) -> None:
    """Reproducibility record: root seed, config hash, and output file hashes."""
    manifest = {
        "seed": cfg.seed,
        "config": cfg.as_dict(),
        "config_sha256": config_hash(cfg),
        "files": {name: {"path": str(p), "sha256": file_sha256(p)}
                  for name, p in files.items() if Path(p).exists()},
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
