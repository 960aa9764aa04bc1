"""MNIST-style IDX ingestion, synthetic desk-scale datasets and stratified subsets."""
from __future__ import annotations

import gzip
import math
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConsistencyError, ContractViolation, FormatError, TruncatedError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
GZIP_PREFIX = b"\x1f\x8b"
N_CLASSES = 10


@dataclass(frozen=True)
class LabeledDataset:
    """Flattened uint8 images of shape (n, dim) with class ids 0-9."""

    images: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        images = np.asarray(self.images)
        labels = np.asarray(self.labels)
        if images.ndim != 2:
            raise ContractViolation(f"images must be 2-D (n, dim), got shape {images.shape}")
        if labels.shape != (images.shape[0],):
            raise ConsistencyError(
                f"{images.shape[0]} images but labels have shape {labels.shape}"
            )
        if images.size and (images.min() < 0 or images.max() > 255):
            raise ContractViolation("intensities must lie in [0, 255]")
        if labels.size and (labels.min() < 0 or labels.max() >= N_CLASSES):
            raise ConsistencyError(f"labels must lie in [0, {N_CLASSES - 1}]")
        object.__setattr__(self, "images", images.astype(np.uint8, copy=False))
        object.__setattr__(self, "labels", labels.astype(np.uint8, copy=False))

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.images.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1 if len(self) else 0

    def take(self, indices, name: str | None = None) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.images[idx], self.labels[idx], self.name if name is None else name)


def _read_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == GZIP_PREFIX:
        try:
            return gzip.decompress(raw)
        except (OSError, EOFError, zlib.error) as exc:
            raise FormatError(f"{path}: corrupt gzip stream ({exc})") from exc
    return raw


def parse_idx(data: bytes, expected_magic: int, source: str = "<bytes>") -> np.ndarray:
    """Decode an unsigned-byte IDX payload into an array of its declared shape."""
    if len(data) < 4:
        raise TruncatedError(f"{source}: {len(data)} bytes is too short for an IDX magic number")
    (magic,) = struct.unpack(">I", data[:4])
    if magic != expected_magic:
        raise FormatError(
            f"{source}: magic number 0x{magic:08X}, expected 0x{expected_magic:08X}"
        )
    ndim = magic & 0xFF
    header_len = 4 + 4 * ndim
    if len(data) < header_len:
        raise TruncatedError(f"{source}: header needs {header_len} bytes, file has {len(data)}")
    dims = struct.unpack(f">{ndim}I", data[4:header_len])
    expected = header_len + math.prod(dims)
    if len(data) < expected:
        raise TruncatedError(
            f"{source}: dimensions {dims} need {expected} bytes, file has {len(data)}"
        )
    if len(data) > expected:
        raise FormatError(
            f"{source}: {len(data) - expected} trailing bytes after dimensions {dims}"
        )
    return np.frombuffer(data, dtype=np.uint8, offset=header_len).reshape(dims)


def load_idx(images_path, labels_path, name: str | None = None) -> LabeledDataset:
    """Load an IDX image/label file pair (optionally gzip-compressed)."""
    images = parse_idx(_read_bytes(images_path), IMAGE_MAGIC, str(images_path))
    labels = parse_idx(_read_bytes(labels_path), LABEL_MAGIC, str(labels_path))
    if images.shape[0] != labels.shape[0]:
        raise ConsistencyError(
            f"{images_path} holds {images.shape[0]} images but {labels_path} holds {labels.shape[0]} labels"
        )
    if labels.size and labels.max() >= N_CLASSES:
        raise ConsistencyError(f"{labels_path}: label {int(labels.max())} outside 0-{N_CLASSES - 1}")
    pixels = math.prod(images.shape[1:])
    if pixels == 0:
        raise FormatError(f"{images_path}: image dimensions {images.shape[1:]} hold no pixels")
    flat = images.reshape(images.shape[0], pixels)
    return LabeledDataset(flat.copy(), labels.copy(), name or Path(images_path).name)


def _image_dims(dim: int) -> tuple[int, int]:
    side = math.isqrt(dim)
    return (side, side) if side * side == dim else (1, dim)


def encode_idx(array: np.ndarray) -> bytes:
    array = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x00000800 | array.ndim
    return struct.pack(f">I{array.ndim}I", magic, *array.shape) + array.tobytes()


def write_idx(ds: LabeledDataset, images_path, labels_path) -> None:
    """Write ``ds`` as an IDX pair; paths ending in ``.gz`` are gzip-compressed."""
    rows, cols = _image_dims(ds.dim)
    payloads = (
        (images_path, encode_idx(ds.images.reshape(len(ds), rows, cols))),
        (labels_path, encode_idx(ds.labels)),
    )
    for path, payload in payloads:
        path = Path(path)
        if path.suffix == ".gz":
            payload = gzip.compress(payload, mtime=0)
        path.write_bytes(payload)


def synth_prototypes(n_classes: int, image_dim: int) -> np.ndarray:
    """Boolean masks (n_classes, image_dim) of disjoint contiguous bright patches."""
    if n_classes < 2:
        raise ContractViolation("n_classes must be >= 2")
    if n_classes > N_CLASSES:
        raise ContractViolation(f"n_classes must be <= {N_CLASSES}")
    if image_dim < n_classes:
        raise ContractViolation("image_dim must be at least n_classes")
    width = image_dim // n_classes
    masks = np.zeros((n_classes, image_dim), dtype=bool)
    for c in range(n_classes):
        masks[c, c * width:(c + 1) * width] = True
    return masks


def synth_dataset(n_classes: int, samples_per_class: int, image_dim: int, seed: int) -> LabeledDataset:
    """Class prototypes plus per-sample noise; deterministic given ``seed``.

    Patch pixels are bright (160-255) with a 10% dropout; background pixels
    are mostly dark with sparse low-level noise.
    """
    if samples_per_class < 1:
        raise ContractViolation("samples_per_class must be >= 1")
    masks = synth_prototypes(n_classes, image_dim)
    rng = np.random.default_rng(seed)
    n = n_classes * samples_per_class
    labels = np.repeat(np.arange(n_classes), samples_per_class)
    bright = rng.integers(160, 256, size=(n, image_dim))
    keep = rng.random((n, image_dim)) >= 0.1
    background = rng.integers(0, 40, size=(n, image_dim)) * (rng.random((n, image_dim)) < 0.15)
    on_patch = masks[labels] & keep
    images = np.where(on_patch, bright, background)
    order = rng.permutation(n)
    return LabeledDataset(
        images[order].astype(np.uint8),
        labels[order].astype(np.uint8),
        f"synth-{n_classes}x{samples_per_class}x{image_dim}",
    )


def _quotas(counts: np.ndarray, n: int) -> np.ndarray:
    # largest remainder; ties go to the lower class id
    total = counts.sum()
    exact = counts * n / total
    quota = np.floor(exact).astype(np.int64)
    remainder = exact - quota
    short = n - quota.sum()
    order = sorted(range(len(counts)), key=lambda c: (-remainder[c], c))
    for c in order[:short]:
        quota[c] += 1
    return quota


def _class_pools(ds: LabeledDataset, rng: np.random.Generator) -> tuple[np.ndarray, list[np.ndarray]]:
    classes = np.unique(ds.labels)
    pools = [rng.permutation(np.flatnonzero(ds.labels == c)) for c in classes]
    counts = np.array([p.size for p in pools])
    return counts, pools


def subset(ds: LabeledDataset, n: int, seed: int) -> LabeledDataset:
    """Class-stratified random subset of size ``n``, deterministic given ``seed``."""
    if not 1 <= n <= len(ds):
        raise ContractViolation(f"subset size {n} outside [1, {len(ds)}]")
    rng = np.random.default_rng(seed)
    counts, pools = _class_pools(ds, rng)
    quota = _quotas(counts, n)
    chosen = np.concatenate([pool[:q] for pool, q in zip(pools, quota)])
    return ds.take(rng.permutation(chosen), f"{ds.name}[{n}]")


def stratified_split(ds: LabeledDataset, n_train: int, n_test: int, seed: int) -> tuple[LabeledDataset, LabeledDataset]:
    """Two disjoint class-stratified subsets drawn from ``ds``."""
    if n_train < 1 or n_test < 1 or n_train + n_test > len(ds):
        raise ContractViolation(
            f"cannot split {len(ds)} samples into {n_train} train + {n_test} test"
        )
    rng = np.random.default_rng(seed)
    counts, pools = _class_pools(ds, rng)
    q_train = _quotas(counts, n_train)
    q_test = _quotas(counts - q_train, n_test)
    train_idx = np.concatenate([p[:a] for p, a in zip(pools, q_train)])
    test_idx = np.concatenate([p[a:a + b] for p, a, b in zip(pools, q_train, q_test)])
    return (
        ds.take(rng.permutation(train_idx), f"{ds.name}[train {n_train}]"),
        ds.take(rng.permutation(test_idx), f"{ds.name}[test {n_test}]"),
    )
