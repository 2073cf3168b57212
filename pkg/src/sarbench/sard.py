"""SARD binary container for datasets, images and model checkpoints.

Layout (all integers little-endian):

    magic b"SARD" | version u8 | kind u8

Dataset (kind 0):
    task: u16 length + utf-8 bytes
    class_count u32 | input_size u32 | sample_count u32
    three split index blocks (train/val/test), each u32 length + u32 entries
    per sample: label u8 + input_size^2 float32 values, row-major

Checkpoint (kind 1):
    record_count u32, then named tensor records:
    name: u16 length + utf-8 | dtype u8 (0=f32, 1=f64, 2=i64) | ndim u8
    | u32 dims | raw values

Checkpoint tensors keep their native dtype, so round-trips are bit-exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .cnn.network import ModelParams
from .datasets import LabeledDataset, Sample

__all__ = [
    "write_dataset",
    "read_dataset",
    "write_checkpoint",
    "read_checkpoint",
    "read_kind",
]

MAGIC = b"SARD"
VERSION = 1
KIND_DATASET = 0
KIND_CHECKPOINT = 1

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8"), 2: np.dtype("<i8")}
_CODE_FOR = {np.dtype(np.float32): 0, np.dtype(np.float64): 1, np.dtype(np.int64): 2}


class SardFormatError(ValueError):
    pass


def _pack_str(text: str) -> bytes:
    raw = text.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise SardFormatError("string too long for container")
    return struct.pack("<H", len(raw)) + raw


class _Reader:
    def __init__(self, blob: bytes, path: str):
        self.blob = blob
        self.pos = 0
        self.path = path

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.blob):
            raise SardFormatError(f"{self.path}: truncated container")
        out = self.blob[self.pos : self.pos + count]
        self.pos += count
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def string(self) -> str:
        return self.take(self.u16()).decode("utf-8")

    def array(self, dtype: np.dtype, count: int) -> np.ndarray:
        return np.frombuffer(self.take(count * dtype.itemsize), dtype=dtype).copy()


def _header(kind: int) -> bytes:
    return MAGIC + struct.pack("<BB", VERSION, kind)


def _open(path: str | Path) -> _Reader:
    blob = Path(path).read_bytes()
    reader = _Reader(blob, str(path))
    if reader.take(4) != MAGIC:
        raise SardFormatError(f"{path}: not a SARD container")
    version = reader.u8()
    if version != VERSION:
        raise SardFormatError(f"{path}: unsupported container version {version}")
    return reader


def read_kind(path: str | Path) -> int:
    reader = _open(path)
    return reader.u8()


def write_dataset(path: str | Path, dataset: LabeledDataset, task: str) -> None:
    if dataset.class_count > 255:
        raise SardFormatError("label byte supports at most 255 classes")
    p = dataset.input_size
    for i, sample in enumerate(dataset.samples):
        if sample.input.shape != (p, p):
            raise SardFormatError(
                f"sample {i} has shape {sample.input.shape}, expected ({p}, {p})"
            )
    parts = [
        _header(KIND_DATASET),
        _pack_str(task),
        struct.pack("<III", dataset.class_count, p, len(dataset.samples)),
    ]
    for idx in (dataset.train_idx, dataset.val_idx, dataset.test_idx):
        parts.append(struct.pack("<I", len(idx)))
        parts.append(np.asarray(idx, dtype="<u4").tobytes())
    for sample in dataset.samples:
        parts.append(struct.pack("<B", sample.label))
        parts.append(np.ascontiguousarray(sample.input, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_dataset(path: str | Path) -> LabeledDataset:
    reader = _open(path)
    if reader.u8() != KIND_DATASET:
        raise SardFormatError(f"{path}: container does not hold a dataset")
    task = reader.string()
    class_count = reader.u32()
    input_size = reader.u32()
    count = reader.u32()
    splits = []
    for _ in range(3):
        splits.append(reader.array(np.dtype("<u4"), reader.u32()).astype(np.int64))
    samples = []
    for i in range(count):
        label = reader.u8()
        values = reader.array(np.dtype("<f4"), input_size * input_size)
        samples.append(
            Sample(
                input=values.astype(np.float64).reshape(input_size, input_size),
                label=label,
                provenance={"task": task, "file_index": i, "source": str(path)},
            )
        )
    return LabeledDataset(
        samples=samples,
        class_count=class_count,
        train_idx=splits[0],
        val_idx=splits[1],
        test_idx=splits[2],
    )


def _tensor_record(name: str, arr: np.ndarray) -> bytes:
    arr = np.asarray(arr)
    if arr.ndim and not arr.flags.c_contiguous:
        arr = np.ascontiguousarray(arr)
    dtype = arr.dtype.newbyteorder("<")
    base = np.dtype(arr.dtype.type)
    if base not in _CODE_FOR:
        raise SardFormatError(f"unsupported tensor dtype {arr.dtype} for {name}")
    code = _CODE_FOR[base]
    parts = [
        _pack_str(name),
        struct.pack("<BB", code, arr.ndim),
        struct.pack(f"<{arr.ndim}I", *arr.shape) if arr.ndim else b"",
        arr.astype(dtype, copy=False).tobytes(),
    ]
    return b"".join(parts)


def _checkpoint_records(params: ModelParams) -> dict[str, np.ndarray]:
    return {
        "conv_w": params.conv_w,
        "conv_b": params.conv_b,
        "bn_scale": params.bn_scale,
        "bn_offset": params.bn_offset,
        "bn_mean": params.bn_mean,
        "bn_var": params.bn_var,
        "fc_w": params.fc_w,
        "fc_b": params.fc_b,
        "input_size": np.int64(params.input_size),
        "filter_size": np.int64(params.filter_size),
        "n_filters": np.int64(params.n_filters),
        "n_classes": np.int64(params.n_classes),
        "bn_eps": np.float64(params.bn_eps),
        "bn_momentum": np.float64(params.bn_momentum),
        "bn_batches": np.int64(params.bn_batches),
        "normalize_inputs": np.int64(int(params.normalize_inputs)),
    }


def write_checkpoint(path: str | Path, params: ModelParams) -> None:
    records = _checkpoint_records(params)
    parts = [_header(KIND_CHECKPOINT), struct.pack("<I", len(records))]
    for name, arr in records.items():
        parts.append(_tensor_record(name, np.asarray(arr)))
    Path(path).write_bytes(b"".join(parts))


def read_checkpoint(path: str | Path) -> ModelParams:
    reader = _open(path)
    if reader.u8() != KIND_CHECKPOINT:
        raise SardFormatError(f"{path}: container does not hold a checkpoint")
    count = reader.u32()
    records: dict[str, np.ndarray] = {}
    for _ in range(count):
        name = reader.string()
        code = reader.u8()
        if code not in _DTYPE_CODES:
            raise SardFormatError(f"{path}: unknown dtype code {code}")
        ndim = reader.u8()
        shape = tuple(
            struct.unpack(f"<{ndim}I", reader.take(4 * ndim)) if ndim else ()
        )
        n_items = int(np.prod(shape)) if ndim else 1
        arr = reader.array(_DTYPE_CODES[code], n_items).reshape(shape)
        records[name] = arr
    def scalar(name: str):
        return records[name].reshape(-1)[0]

    try:
        return ModelParams(
            conv_w=records["conv_w"],
            conv_b=records["conv_b"],
            bn_scale=records["bn_scale"],
            bn_offset=records["bn_offset"],
            bn_mean=records["bn_mean"],
            bn_var=records["bn_var"],
            fc_w=records["fc_w"],
            fc_b=records["fc_b"],
            input_size=int(scalar("input_size")),
            filter_size=int(scalar("filter_size")),
            n_filters=int(scalar("n_filters")),
            n_classes=int(scalar("n_classes")),
            bn_eps=float(scalar("bn_eps")),
            bn_momentum=float(scalar("bn_momentum")),
            bn_batches=int(scalar("bn_batches")),
            normalize_inputs=bool(int(scalar("normalize_inputs"))),
        )
    except KeyError as exc:
        raise SardFormatError(f"{path}: checkpoint record {exc} missing") from exc
