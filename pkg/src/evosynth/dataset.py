"""Image datasets: IDX files, stratified subsets, and synthetic blobs.

The IDX reader is strict: a wrong magic number, a truncated payload, a
trailing byte, or an out-of-range label all raise FormatError carrying the
byte offset of the first invalid byte.  Writers exist so a file can be
round-tripped byte for byte.

The synthetic source draws one Gaussian bump per class at a fixed grid
center, with integer center jitter and additive uniform noise, giving a
cheap fully deterministic classification task.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, FormatError, ShapeError
from .streams import DOMAIN_DATA, stream

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


@dataclass(frozen=True)
class LabeledImages:
    """Float images in [0, 1], shape (N, C, H, W), with int64 labels."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.images.ndim != 4:
            raise ShapeError(f"images must be (N, C, H, W), got {self.images.shape}")
        if self.labels.shape != (len(self.images),):
            raise ShapeError(
                f"{len(self.images)} images vs labels shape {self.labels.shape}")

    def __len__(self):
        return len(self.images)

    def subset(self, indices) -> "LabeledImages":
        idx = np.asarray(indices)
        return LabeledImages(self.images[idx], self.labels[idx])


def load_idx_images(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise FormatError("image file header truncated", offset=len(raw))
    magic = int.from_bytes(raw[:4], "big")
    if magic != IDX_IMAGES_MAGIC:
        raise FormatError(f"bad image magic 0x{magic:08x}", offset=0)
    if len(raw) < 16:
        raise FormatError("image dimension header truncated", offset=len(raw))
    n, h, w = struct.unpack(">III", raw[4:16])
    expected = 16 + n * h * w
    if len(raw) < expected:
        raise FormatError(f"image payload truncated, expected {expected} bytes",
                          offset=len(raw))
    if len(raw) > expected:
        raise FormatError("trailing bytes after image payload", offset=expected)
    pixels = np.frombuffer(raw, np.uint8, n * h * w, 16)
    return (pixels.reshape(n, 1, h, w).astype(np.float32)) / 255.0


def load_idx_labels(path, num_classes: int = 10) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise FormatError("label file header truncated", offset=len(raw))
    magic = int.from_bytes(raw[:4], "big")
    if magic != IDX_LABELS_MAGIC:
        raise FormatError(f"bad label magic 0x{magic:08x}", offset=0)
    if len(raw) < 8:
        raise FormatError("label count header truncated", offset=len(raw))
    n = struct.unpack(">I", raw[4:8])[0]
    expected = 8 + n
    if len(raw) < expected:
        raise FormatError(f"label payload truncated, expected {expected} bytes",
                          offset=len(raw))
    if len(raw) > expected:
        raise FormatError("trailing bytes after label payload", offset=expected)
    labels = np.frombuffer(raw, np.uint8, n, 8)
    bad = np.flatnonzero(labels >= num_classes)
    if bad.size:
        raise FormatError(
            f"label {labels[bad[0]]} out of range [0, {num_classes})",
            offset=8 + int(bad[0]))
    return labels.astype(np.int64)


def write_idx_images(path, images) -> None:
    x = np.asarray(images)
    if x.ndim != 4 or x.shape[1] != 1:
        raise ShapeError(f"expected (N, 1, H, W) images, got {x.shape}")
    n, _, h, w = x.shape
    pixels = np.rint(np.clip(x, 0.0, 1.0) * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, h, w))
        fh.write(pixels.tobytes())


def write_idx_labels(path, labels) -> None:
    y = np.asarray(labels)
    if y.ndim != 1:
        raise ShapeError(f"expected 1-d labels, got shape {y.shape}")
    if y.size and (y.min() < 0 or y.max() > 255):
        raise DataError("labels must fit in one byte")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABELS_MAGIC, len(y)))
        fh.write(y.astype(np.uint8).tobytes())


def stratified_subset(data: LabeledImages, fraction: float,
                      seed_root: int = 0) -> LabeledImages:
    """Per-class random subset keeping class proportions; original order."""
    if not (0.0 < fraction <= 1.0):
        raise ConfigError(f"fraction must be in (0, 1], got {fraction}")
    picks = []
    for cls in np.unique(data.labels):
        idx = np.flatnonzero(data.labels == cls)
        k = max(1, int(round(fraction * idx.size)))
        rng = stream(seed_root, DOMAIN_DATA, 1, int(cls))
        picks.append(idx[np.sort(rng.permutation(idx.size)[:k])])
    return data.subset(np.sort(np.concatenate(picks)))


def _blob_centers(classes: int, h: int, w: int):
    cols = math.ceil(math.sqrt(classes))
    rows = math.ceil(classes / cols)
    centers = []
    for i in range(classes):
        r, c = divmod(i, cols)
        centers.append(((r + 0.5) * h / rows, (c + 0.5) * w / cols))
    return centers


def synthetic_blobs(per_class: int, classes: int = 10, hw=(28, 28),
                    sigma: float = 2.0, noise: float = 0.1, jitter: int = 1,
                    seed_root: int = 0) -> LabeledImages:
    """One jittered Gaussian bump per class plus uniform noise, clipped to [0, 1]."""
    if per_class < 1 or classes < 1:
        raise ConfigError("per_class and classes must be >= 1")
    h, w = hw
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    images = np.empty((classes * per_class, 1, h, w), dtype=np.float32)
    labels = np.repeat(np.arange(classes, dtype=np.int64), per_class)
    for cls, (cy, cx) in enumerate(_blob_centers(classes, h, w)):
        rng = stream(seed_root, DOMAIN_DATA, 2, cls)
        offsets = rng.integers(-jitter, jitter + 1, (per_class, 2)) if jitter \
            else np.zeros((per_class, 2), dtype=np.int64)
        grain = rng.random((per_class, h, w)) * noise
        dy2 = (yy[None] - (cy + offsets[:, 0])[:, None, None]) ** 2
        dx2 = (xx[None] - (cx + offsets[:, 1])[:, None, None]) ** 2
        bump = np.exp(-(dy2 + dx2) / (2.0 * sigma * sigma))
        block = np.clip(bump + grain, 0.0, 1.0).astype(np.float32)
        images[cls * per_class:(cls + 1) * per_class, 0] = block
    return LabeledImages(images, labels)


@dataclass(frozen=True)
class DataConfig:
    source: str = "blobs"
    data_dir: str = None
    train_fraction: float = None
    seed_root: int = 0
    blob_train_per_class: int = 128
    blob_test_per_class: int = 32
    blob_classes: int = 10
    blob_hw: tuple = (28, 28)

    def __post_init__(self):
        if self.source not in ("blobs", "mnist"):
            raise ConfigError(f"unknown dataset source {self.source!r}")
        if self.source == "mnist" and not self.data_dir:
            raise ConfigError("mnist source requires data_dir")


def load_dataset(config: DataConfig):
    """(train, test) pair for the configured source."""
    if config.source == "blobs":
        train = synthetic_blobs(config.blob_train_per_class,
                                classes=config.blob_classes,
                                hw=tuple(config.blob_hw),
                                seed_root=config.seed_root)
        test = synthetic_blobs(config.blob_test_per_class,
                               classes=config.blob_classes,
                               hw=tuple(config.blob_hw),
                               seed_root=config.seed_root + 1)
    else:
        base = Path(config.data_dir)
        paths = {k: base / v for k, v in MNIST_FILES.items()}
        missing = [str(p) for p in paths.values() if not p.is_file()]
        if missing:
            raise DataError(f"missing dataset files: {', '.join(missing)}")
        train = LabeledImages(load_idx_images(paths["train_images"]),
                              load_idx_labels(paths["train_labels"]))
        test = LabeledImages(load_idx_images(paths["test_images"]),
                             load_idx_labels(paths["test_labels"]))
    if config.train_fraction is not None:
        train = stratified_subset(train, config.train_fraction,
                                  seed_root=config.seed_root)
    return train, test
