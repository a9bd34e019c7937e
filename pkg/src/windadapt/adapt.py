"""Source-free target adaptation: fine-tune a pretrained checkpoint on target
data, either partially (FC layers only, frozen BN statistics) or fully."""

from __future__ import annotations

import enum
from pathlib import Path

from .errors import ArchMismatchError
from .labeling import WindowedDataset
from .nn import Architecture, FreezeMask, ModelParams, load_checkpoint
from .train import History, TrainConfig, evaluate, train_loop


class AdaptMode(enum.Enum):
    PARTIAL = "partial"
    FULL = "full"


def make_freeze_mask(mode: AdaptMode, arch: Architecture) -> FreezeMask:
    if mode is AdaptMode.PARTIAL:
        return FreezeMask.fc_only()
    return FreezeMask.all_trainable()


def _check_arch(arch: Architecture, ds: WindowedDataset, what: str) -> None:
    if (arch.window_len != ds.window_len
            or arch.n_features != ds.X.shape[2]
            or arch.n_classes != ds.bin_spec.n_bins):
        raise ArchMismatchError(
            f"architecture mismatch: checkpoint (W={arch.window_len}, F={arch.n_features}, "
            f"N={arch.n_classes}) vs {what} (W={ds.window_len}, F={ds.X.shape[2]}, "
            f"N={ds.bin_spec.n_bins})")


def adapt(
    pretrained: str | Path,
    ds_target_train: WindowedDataset,
    ds_target_eval: WindowedDataset,
    mode: AdaptMode,
    cfg: TrainConfig,
) -> tuple[ModelParams, History]:
    """Fine-tune the checkpointed model on target data.

    Only the checkpoint crosses the domain boundary: optimizer moments start
    fresh, and in PARTIAL mode every non-FC tensor stays bitwise intact.
    """
    params = load_checkpoint(pretrained)
    _check_arch(params.arch, ds_target_train, "target data")
    mask = make_freeze_mask(mode, params.arch)
    return train_loop(params, ds_target_train, ds_target_eval, cfg, mask)


def zero_shot_eval(pretrained: str | Path, ds_target_eval: WindowedDataset) -> float:
    """Accuracy of the untouched pretrained model on target data."""
    params = load_checkpoint(pretrained)
    _check_arch(params.arch, ds_target_eval, "target data")
    return evaluate(params, ds_target_eval)[0]
