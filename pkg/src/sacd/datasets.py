"""LIBSVM text parsing/serialization and 1D data partitioning."""

import bz2
import gzip
import io
import os
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

import numpy as np

from .errors import ConfigurationError, ParseError
from .matrix import SparseMatrixCSR

DATA_DIR_ENV = "SACD_DATA_DIR"


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    A: SparseMatrixCSR
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.float64)
        object.__setattr__(self, "labels", labels)
        if labels.shape != (self.A.num_rows,):
            raise ConfigurationError(
                f"{labels.shape[0]} labels for {self.A.num_rows} rows")

    @property
    def num_rows(self):
        return self.A.num_rows

    @property
    def num_cols(self):
        return self.A.num_cols

    def is_binary(self):
        return bool(np.all(np.abs(self.labels) == 1.0))

    @classmethod
    def from_dense(cls, dense, labels, name=""):
        return cls(SparseMatrixCSR.from_dense(dense), labels, name)


def parse_libsvm(stream, n_features=None, name="") -> LabeledDataset:
    """Parse ``label idx:val ...`` lines (1-based, increasing indices).

    ``stream`` is a text file object or a string.  Blank lines and ``#``
    comments are ignored.  ``n_features`` overrides the column count when the
    file omits trailing all-zero features.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    labels = []
    offsets = [0]
    cols = []
    vals = []
    max_col = 0
    for lineno, line in enumerate(stream, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            labels.append(float(tokens[0]))
        except ValueError:
            raise ParseError(f"bad label {tokens[0]!r}", lineno) from None
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(f"malformed pair {tok!r}", lineno)
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ParseError(f"non-numeric pair {tok!r}", lineno) from None
            if idx <= prev:
                raise ParseError(
                    f"indices must be positive and increasing ({idx} after {prev})",
                    lineno)
            if not np.isfinite(val):
                raise ParseError(f"non-finite value {tok!r}", lineno)
            cols.append(idx - 1)
            vals.append(val)
            prev = idx
        max_col = max(max_col, prev)
        offsets.append(len(cols))
    n = max_col
    if n_features is not None:
        if n_features < max_col:
            raise ParseError(f"feature index {max_col} exceeds declared count {n_features}")
        n = n_features
    A = SparseMatrixCSR(len(labels), n, np.array(offsets), np.array(cols, dtype=np.int64),
                        np.array(vals, dtype=np.float64))
    return LabeledDataset(A, np.array(labels), name)


def _open_text(path):
    path = str(path)
    if path.endswith(".gz"):
        return gzip.open(path, "rt", encoding="ascii")
    if path.endswith(".bz2"):
        return bz2.open(path, "rt", encoding="ascii")
    return open(path, "r", encoding="ascii")


def resolve_path(path) -> Path:
    """Return ``path`` if it exists, else try it under ``$SACD_DATA_DIR``."""
    p = Path(path)
    if not p.exists() and not p.is_absolute() and os.environ.get(DATA_DIR_ENV):
        alt = Path(os.environ[DATA_DIR_ENV]) / p
        if alt.exists():
            return alt
    return p


def load_libsvm(path, n_features=None) -> LabeledDataset:
    path = resolve_path(path)
    name = path.name
    for suffix in (".gz", ".bz2"):
        name = name.removesuffix(suffix)
    with _open_text(path) as fh:
        return parse_libsvm(fh, n_features=n_features, name=name)


def _fmt(x):
    return str(int(x)) if float(x).is_integer() and abs(x) < 2**53 else repr(float(x))


def serialize_libsvm(dataset: LabeledDataset, stream=None):
    """Write ``dataset`` in LIBSVM format; returns the text if no stream is given."""
    out = stream if stream is not None else io.StringIO()
    A = dataset.A
    for i in range(A.num_rows):
        idx, val = A.row(i)
        label = dataset.labels[i]
        parts = [("+" if label > 0 else "") + _fmt(label)]
        parts.extend(f"{j + 1}:{repr(float(v))}" for j, v in zip(idx.tolist(), val.tolist()))
        out.write(" ".join(parts) + "\n")
    if stream is None:
        return out.getvalue()
    return None


@dataclass(frozen=True)
class Partition:
    axis: str
    worker_ranges: Tuple[Tuple[int, int], ...]

    @property
    def num_workers(self):
        return len(self.worker_ranges)

    def sizes(self) -> List[int]:
        return [hi - lo for lo, hi in self.worker_ranges]


def partition(dataset_or_size, axis, P) -> Partition:
    """Contiguous balanced ranges over rows or columns; sizes differ by at most one."""
    if axis not in ("rows", "cols"):
        raise ConfigurationError(f"axis must be 'rows' or 'cols', got {axis!r}")
    if isinstance(dataset_or_size, int):
        total = dataset_or_size
    else:
        total = dataset_or_size.num_rows if axis == "rows" else dataset_or_size.num_cols
    if P < 1:
        raise ConfigurationError("need at least one worker")
    if P > total:
        raise ConfigurationError(f"{P} workers for only {total} {axis}")
    base, extra = divmod(total, P)
    ranges = []
    lo = 0
    for w in range(P):
        hi = lo + base + (1 if w < extra else 0)
        ranges.append((lo, hi))
        lo = hi
    return Partition(axis, tuple(ranges))


@dataclass(frozen=True)
class DatasetStats:
    m: int
    n: int
    nnz: int
    density_percent: float


def dataset_stats(dataset: LabeledDataset) -> DatasetStats:
    A = dataset.A
    cells = A.num_rows * A.num_cols
    return DatasetStats(A.num_rows, A.num_cols, A.nnz,
                        100.0 * A.nnz / cells if cells else 0.0)
