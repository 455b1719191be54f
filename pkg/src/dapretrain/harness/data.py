"""Datasets: correlated synthetic data and IDX image files."""
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..autoencoder import sigmoid
from ..errors import DomainError, FormatError
from ..streams import stream

IDX_IMAGE_MAGIC = 0x00000803
_HEADER = struct.Struct(">IIII")


@dataclass(frozen=True)
class Dataset:
    """Instances as rows, entries in [0, 1].

    ``instances`` already carries the trailing all-ones column when ``bias``
    is set; ``raw`` drops it again.
    """

    instances: np.ndarray
    source: str
    bias: bool = False

    def __post_init__(self):
        X = self.instances
        if X.ndim != 2 or X.shape[0] < 1:
            raise DomainError(f"dataset needs at least one row, got shape {X.shape}")
        if not np.all((X >= 0.0) & (X <= 1.0)):
            raise DomainError("dataset entries must lie in [0, 1]")

    @property
    def n(self):
        return self.instances.shape[0]

    @property
    def d_v(self):
        return self.instances.shape[1]

    @property
    def raw(self):
        return self.instances[:, :-1] if self.bias else self.instances

    def subset(self, rows):
        return Dataset(self.instances[rows], self.source, self.bias)


def append_bias(X):
    return np.hstack([X, np.ones((X.shape[0], 1))])


def gen_synthetic(n, d_v, rho, seed, bias=False):
    """Logistic-squashed Gaussians with constant pairwise latent correlation ``rho``."""
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"rho must lie in [0, 1), got {rho}")
    if n < 1 or d_v < 1:
        raise DomainError(f"need n >= 1 and d_v >= 1, got n={n}, d_v={d_v}")
    rng = stream(seed)
    common = rng.standard_normal((n, 1))
    own = rng.standard_normal((n, d_v))
    X = sigmoid(np.sqrt(rho) * common + np.sqrt(1.0 - rho) * own)
    if bias:
        X = append_bias(X)
    return Dataset(X, f"synthetic(rho={rho}, seed={seed})", bias)


def parse_idx(buf, path="<bytes>", bias=False):
    if len(buf) < _HEADER.size:
        raise FormatError(f"{path}: truncated header, {len(buf)} of {_HEADER.size} bytes", offset=len(buf))
    magic, n, rows, cols = _HEADER.unpack_from(buf, 0)
    if magic != IDX_IMAGE_MAGIC:
        raise FormatError(f"{path}: magic 0x{magic:08x} is not an IDX image file (0x{IDX_IMAGE_MAGIC:08x})", offset=0)
    if n == 0 or rows == 0 or cols == 0:
        raise FormatError(f"{path}: empty dimensions n={n}, rows={rows}, cols={cols}", offset=4)
    size = n * rows * cols
    if size > np.iinfo(np.int64).max // 8:
        raise FormatError(f"{path}: dimension product {size} overflows", offset=4)
    end = _HEADER.size + size
    if len(buf) < end:
        raise FormatError(f"{path}: payload truncated, need {size} pixel bytes", offset=len(buf))
    pixels = np.frombuffer(buf, dtype=np.uint8, count=size, offset=_HEADER.size)
    X = pixels.reshape(n, rows * cols).astype(np.float64) / 255.0
    if bias:
        X = append_bias(X)
    return Dataset(X, f"idx({path})", bias)


def load_idx(path, bias=False):
    path = Path(path)
    return parse_idx(path.read_bytes(), str(path), bias)


def write_idx(path, dataset, rows=None, cols=None):
    """Quantise a dataset to bytes and write it as an IDX image file."""
    X = dataset.raw
    n, d = X.shape
    if rows is None:
        rows, cols = 1, d
    if rows * cols != d:
        raise DomainError(f"{rows}x{cols} does not match {d} columns")
    pixels = np.rint(X * 255.0).astype(np.uint8)
    Path(path).write_bytes(_HEADER.pack(IDX_IMAGE_MAGIC, n, rows, cols) + pixels.tobytes())
