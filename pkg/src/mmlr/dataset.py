"""In-memory dataset representation, CSV ingestion, centering, column statistics.

A Dataset is an immutable n-by-k feature table plus response vector with
precomputed column statistics.  Rows are stored row-major so a full-table
scan (one dot product per row) streams cache-friendly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import CsvFormatError


@dataclass(frozen=True)
class RowIndexSet:
    """A sorted set of distinct row indices into a parent Dataset."""

    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 1:
            raise ValueError("indices must be one-dimensional")
        if idx.size > 1 and not np.all(np.diff(idx) > 0):
            raise ValueError("indices must be strictly increasing")
        if idx.size and idx[0] < 0:
            raise ValueError("indices must be nonnegative")
        idx.flags.writeable = False
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_any(cls, indices) -> "RowIndexSet":
        """Build from any iterable of indices, sorting and deduplicating."""
        return cls(np.unique(np.asarray(indices, dtype=np.int64)))

    def __len__(self) -> int:
        return int(self.indices.size)


@dataclass(frozen=True)
class Dataset:
    """Numeric feature table with response vector and column statistics.

    Immutable after construction; safe to read from multiple threads.
    """

    features: np.ndarray
    response: np.ndarray
    col_min: np.ndarray
    col_max: np.ndarray
    col_mean: np.ndarray
    response_mean: float
    col_names: tuple[str, ...] = field(default=())
    response_name: str = "y"

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def k(self) -> int:
        return self.features.shape[1]

    @classmethod
    def from_arrays(cls, features, response, col_names=None, response_name="y") -> "Dataset":
        """Validate arrays, compute column statistics, and freeze the result."""
        feats = np.ascontiguousarray(np.asarray(features, dtype=np.float64))
        resp = np.asarray(response, dtype=np.float64).ravel()
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D array")
        n, k = feats.shape
        if n < 1 or k < 1:
            raise ValueError("dataset needs at least one row and one feature column")
        if resp.shape[0] != n:
            raise ValueError(f"response length {resp.shape[0]} != row count {n}")
        if not np.all(np.isfinite(feats)) or not np.all(np.isfinite(resp)):
            raise ValueError("dataset contains non-finite values")
        if col_names is None:
            col_names = tuple(f"x{j + 1}" for j in range(k))
        else:
            col_names = tuple(col_names)
            if len(col_names) != k:
                raise ValueError("col_names length must match feature count")
        col_min = feats.min(axis=0)
        col_max = feats.max(axis=0)
        col_mean = feats.mean(axis=0)
        for arr in (feats, resp, col_min, col_max, col_mean):
            arr.flags.writeable = False
        return cls(
            features=feats,
            response=resp,
            col_min=col_min,
            col_max=col_max,
            col_mean=col_mean,
            response_mean=float(resp.mean()),
            col_names=col_names,
            response_name=str(response_name),
        )


def load_csv(path, response_column: str | None = None) -> Dataset:
    """Load a comma-separated numeric file into a Dataset.

    The file must have a header row; every cell must parse as a finite
    decimal real ('.' decimal point, optional scientific notation).
    `response_column` names the response; the last column is used when
    omitted.  Row order is preserved.
    """
    try:
        with open(path, "r", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise CsvFormatError(f"{path}: empty file") from None
            header = [h.strip() for h in header]
            raw_rows = [row for row in reader if row]
    except OSError as exc:
        raise CsvFormatError(f"cannot read {path}: {exc}") from exc

    if response_column is None:
        resp_idx = len(header) - 1
    else:
        try:
            resp_idx = header.index(response_column)
        except ValueError:
            raise CsvFormatError(
                f"{path}: response column {response_column!r} not in header {header}"
            ) from None
    if len(header) < 2:
        raise CsvFormatError(f"{path}: need at least one feature column and a response")
    if len(raw_rows) < 2:
        raise CsvFormatError(f"{path}: need at least 2 data rows, found {len(raw_rows)}")

    n, width = len(raw_rows), len(header)
    values = np.empty((n, width), dtype=np.float64)
    for i, row in enumerate(raw_rows):
        if len(row) != width:
            raise CsvFormatError(
                f"{path}: row {i + 2} has {len(row)} cells, expected {width}"
            )
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise CsvFormatError(
                    f"{path}: row {i + 2}, column {header[j]!r}: "
                    f"cannot parse {cell!r} as a number"
                ) from None
            if not np.isfinite(v):
                raise CsvFormatError(
                    f"{path}: row {i + 2}, column {header[j]!r}: non-finite value {cell!r}"
                )
            values[i, j] = v

    feat_cols = [j for j in range(width) if j != resp_idx]
    return Dataset.from_arrays(
        values[:, feat_cols],
        values[:, resp_idx],
        col_names=[header[j] for j in feat_cols],
        response_name=header[resp_idx],
    )


def write_csv(ds: Dataset, path) -> None:
    """Write a Dataset back out in the same dialect with 17 significant digits."""
    table = np.column_stack([ds.features, ds.response])
    header = ",".join([*ds.col_names, ds.response_name])
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=header, comments="")


def center(ds: Dataset) -> tuple[Dataset, np.ndarray]:
    """Subtract column means from features and response.

    Returns the centered dataset and the length-(k+1) offset vector
    (feature means followed by the response mean) needed to de-center
    predictions.
    """
    offsets = np.append(ds.col_mean, ds.response_mean)
    centered = Dataset.from_arrays(
        ds.features - ds.col_mean,
        ds.response - ds.response_mean,
        col_names=ds.col_names,
        response_name=ds.response_name,
    )
    return centered, offsets


def subset_view(ds: Dataset, rows: RowIndexSet) -> Dataset:
    """Restrict a dataset to `rows`, recomputing statistics; parent unchanged."""
    idx = rows.indices
    if idx.size == 0:
        raise ValueError("empty index set")
    if idx[-1] >= ds.n:
        raise ValueError(f"row index {idx[-1]} out of range for n={ds.n}")
    return Dataset.from_arrays(
        ds.features[idx],
        ds.response[idx],
        col_names=ds.col_names,
        response_name=ds.response_name,
    )
