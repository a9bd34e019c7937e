"""Bit-exact model checkpoints.

Layout: magic b"WADP"; u32 LE version (=1); eight u32 LE architecture fields
(W, F, K, C1, C2, H, N, W'); then each parameter group in PARAM_GROUPS order
as a u64 LE element count followed by that many float64 LE values, row-major.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import BadMagicError, TruncatedError, VersionMismatchError
from .model import PARAM_GROUPS, Architecture, ModelParams

MAGIC = b"WADP"
VERSION = 1


def _arch_fields(arch: Architecture) -> tuple[int, ...]:
    return (arch.window_len, arch.n_features, arch.kernel, arch.c1, arch.c2,
            arch.hidden, arch.n_classes, arch.conv_out_len)


def expected_shapes(arch: Architecture) -> dict[str, tuple[int, ...]]:
    a = arch
    return {
        "conv1_w": (a.c1, a.n_features, a.kernel), "conv1_b": (a.c1,),
        "bn1_gamma": (a.c1,), "bn1_beta": (a.c1,),
        "bn1_run_mean": (a.c1,), "bn1_run_var": (a.c1,),
        "conv2_w": (a.c2, a.c1, a.kernel), "conv2_b": (a.c2,),
        "bn2_gamma": (a.c2,), "bn2_beta": (a.c2,),
        "bn2_run_mean": (a.c2,), "bn2_run_var": (a.c2,),
        "fc1_w": (a.hidden, a.flat_dim), "fc1_b": (a.hidden,),
        "fc2_w": (a.n_classes, a.hidden), "fc2_b": (a.n_classes,),
    }


def save_checkpoint(params: ModelParams, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<8I", *_arch_fields(params.arch)))
        for name in PARAM_GROUPS:
            arr = np.ascontiguousarray(params.group(name), dtype=np.float64)
            fh.write(struct.pack("<Q", arr.size))
            fh.write(arr.tobytes())


def load_checkpoint(path: str | Path) -> ModelParams:
    path = Path(path)
    data = path.read_bytes()
    off = 0

    def take(n: int, what: str) -> bytes:
        nonlocal off
        if off + n > len(data):
            raise TruncatedError(f"{path}: truncated while reading {what}")
        chunk = data[off:off + n]
        off += n
        return chunk

    if take(4, "magic") != MAGIC:
        raise BadMagicError(f"{path}: not a windadapt checkpoint")
    (version,) = struct.unpack("<I", take(4, "version"))
    if version != VERSION:
        raise VersionMismatchError(f"{path}: checkpoint version {version}, expected {VERSION}")
    w, f, k, c1, c2, h, n, w_out = struct.unpack("<8I", take(32, "architecture"))
    arch = Architecture(window_len=w, n_features=f, kernel=k, c1=c1, c2=c2,
                        hidden=h, n_classes=n)
    if arch.conv_out_len != w_out:
        raise TruncatedError(f"{path}: inconsistent post-conv length {w_out}")

    shapes = expected_shapes(arch)
    groups = {}
    for name in PARAM_GROUPS:
        (count,) = struct.unpack("<Q", take(8, f"{name} count"))
        shape = shapes[name]
        if count != int(np.prod(shape)):
            raise TruncatedError(
                f"{path}: group {name} holds {count} values, architecture implies {int(np.prod(shape))}")
        raw = take(8 * count, f"{name} payload")
        groups[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    if off != len(data):
        raise TruncatedError(f"{path}: {len(data) - off} trailing bytes")
    return ModelParams(arch=arch, **groups)


def group_byte_ranges(arch: Architecture) -> dict[str, tuple[int, int]]:
    """Byte offsets (start, stop) of each group's payload inside a checkpoint file."""
    shapes = expected_shapes(arch)
    off = 4 + 4 + 32
    out = {}
    for name in PARAM_GROUPS:
        count = int(np.prod(shapes[name]))
        off += 8
        out[name] = (off, off + 8 * count)
        off += 8 * count
    return out
