"""Immutable observation matrices and CSV ingestion."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, UsageError


@dataclass(frozen=True)
class Dataset:
    """An n x d observation matrix. Rows are observations, columns variables.

    The backing array is made read-only at construction; every downstream
    loss evaluation is a pure read.
    """

    values: np.ndarray
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise DataError(f"expected a 2-d matrix, got shape {vals.shape}")
        n, d = vals.shape
        if n < 2 or d < 2:
            raise DataError(f"need n >= 2 and d >= 2, got n={n}, d={d}")
        if not np.all(np.isfinite(vals)):
            bad = np.argwhere(~np.isfinite(vals))[0]
            raise DataError(f"non-finite entry at row {bad[0]}, column {bad[1]}")
        if self.column_names is not None:
            names = tuple(self.column_names)
            if len(names) != d:
                raise DataError(
                    f"{len(names)} column names for {d} columns"
                )
            object.__setattr__(self, "column_names", names)
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def subset_rows(self, rows) -> "Dataset":
        """New Dataset restricted to the given row indices."""
        return Dataset(self.values[np.asarray(rows)], self.column_names)


def load_csv(path) -> Dataset:
    """Read a header-first numeric CSV into a Dataset.

    Errors name the offending cell by row and column.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = []
        ncol = len(header)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != ncol:
                raise DataError(
                    f"{path}: line {lineno} has {len(row)} cells, expected {ncol}"
                )
            parsed = []
            for col, cell in enumerate(row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric cell {cell!r} at line {lineno}, "
                        f"column {header[col]!r}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: no data rows")
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 data rows, got {len(rows)}")
    return Dataset(np.array(rows, dtype=float), tuple(header))


def save_csv(data: Dataset, path) -> None:
    """Write a Dataset back out in the same header-first CSV format."""
    names = data.column_names or tuple(f"x{j}" for j in range(data.d))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in data.values:
            # repr of a builtin float round-trips exactly
            writer.writerow([repr(float(v)) for v in row])


def standardize(data: Dataset, center: bool = True, scale: bool = False) -> Dataset:
    """Optionally center and/or scale columns.

    Centering is a no-op for every pairwise loss (differences cancel
    constants); scaling changes the problem and is off by default.
    """
    if not center and not scale:
        return data
    vals = np.array(data.values)
    if center:
        vals -= vals.mean(axis=0)
    if scale:
        sd = vals.std(axis=0)
        if np.any(sd == 0):
            raise UsageError("cannot scale a zero-variance column")
        vals /= sd
    return Dataset(vals, data.column_names)
