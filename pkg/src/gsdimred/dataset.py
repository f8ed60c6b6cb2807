"""Tabular data container, CSV ingestion, preprocessing and empirical moments.

Every expectation in the algorithms is replaced by an empirical mean with
divisor ``1/N``; the helpers at the bottom of this module are the single
place where those means are taken.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "Dataset",
    "Preprocessing",
    "DatasetError",
    "CSVParseError",
    "RaggedRowError",
    "NonNumericError",
    "EmptyFileError",
    "PreprocessingError",
    "read_csv_matrix",
    "load_csv",
    "save_csv",
    "center",
    "standardize",
    "drop_tolerance",
    "empirical_mean",
    "empirical_covariance",
    "empirical_variance_vector",
]

RAW = "raw"
CENTERED = "centered"
STANDARDIZED = "standardized"


class DatasetError(ValueError):
    """Base class for invalid input data."""


class CSVParseError(DatasetError):
    """Malformed CSV text; carries the 1-based ``row`` and ``col``."""

    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if col is not None:
            loc.append(f"column {col}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.row = row
        self.col = col


class RaggedRowError(CSVParseError):
    """A row has a different number of fields than the first row."""


class NonNumericError(CSVParseError):
    """A cell could not be parsed as a finite float."""


class EmptyFileError(DatasetError):
    """The file contains no data rows."""


class PreprocessingError(DatasetError):
    """Preprocessing requested in an invalid state."""


@dataclass(frozen=True)
class Preprocessing:
    """Record of the affine map applied to the raw columns.

    Attributes
    ----------
    kind : str
        One of ``"raw"``, ``"centered"`` or ``"standardized"``.
    mean : ndarray or None
        Per-column means that were subtracted.
    scale : ndarray or None
        Per-column divisors (standardized only). Unscaled columns hold 1.
    unscaled : tuple of int
        Columns whose variance fell under the drop tolerance and were left
        centered but not divided.
    """

    kind: str = RAW
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None
    unscaled: tuple[int, ...] = ()

    def apply(self, rows: np.ndarray) -> np.ndarray:
        """Map raw rows into the preprocessed coordinate system."""
        out = np.asarray(rows, dtype=float)
        if self.mean is not None:
            out = out - self.mean
        if self.scale is not None:
            out = out / self.scale
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "mean": None if self.mean is None else self.mean.tolist(),
            "scale": None if self.scale is None else self.scale.tolist(),
            "unscaled": list(self.unscaled),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Preprocessing":
        mean = data.get("mean")
        scale = data.get("scale")
        return cls(
            kind=data["kind"],
            mean=None if mean is None else np.asarray(mean, dtype=float),
            scale=None if scale is None else np.asarray(scale, dtype=float),
            unscaled=tuple(int(i) for i in data.get("unscaled", ())),
        )


@dataclass(frozen=True)
class Dataset:
    """An immutable ``N x d`` sample of finite reals.

    Parameters
    ----------
    values : array_like
        Sample matrix, one row per observation.
    column_names : sequence of str, optional
        Defaults to ``x1..xd``.
    preprocessing : Preprocessing, optional
        How ``values`` relate to the raw input.
    """

    values: np.ndarray
    column_names: tuple[str, ...] = ()
    preprocessing: Preprocessing = field(default_factory=Preprocessing)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise DatasetError(f"values must be 2-D, got shape {values.shape}")
        n, d = values.shape
        if n < 2:
            raise DatasetError(f"need at least 2 samples, got {n}")
        if d < 1:
            raise DatasetError("need at least 1 feature")
        if not np.all(np.isfinite(values)):
            raise DatasetError("values contain NaN or infinite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        names = tuple(self.column_names) or tuple(f"x{i + 1}" for i in range(d))
        if len(names) != d:
            raise DatasetError(f"{len(names)} column names for {d} columns")
        object.__setattr__(self, "column_names", names)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_array(cls, values, column_names: Sequence[str] | None = None) -> "Dataset":
        return cls(np.asarray(values, dtype=float), tuple(column_names or ()))


def _parse_cell(text: str, row: int, col: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise NonNumericError(f"non-numeric cell {text!r}", row, col) from None
    if not math.isfinite(value):
        raise NonNumericError(f"non-finite cell {text!r}", row, col)
    return value


def _is_numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path: str | Path, has_header: bool | None = None) -> Dataset:
    """Read a numeric CSV file into a :class:`Dataset`.

    See :func:`read_csv_matrix` for the format and errors.
    """
    data, names = read_csv_matrix(path, has_header)
    return Dataset(data, names)


def read_csv_matrix(
    path: str | Path, has_header: bool | None = None
) -> tuple[np.ndarray, tuple[str, ...]]:
    """Read a numeric CSV file as a matrix and its column names.

    Unlike :func:`load_csv` a single data row is accepted, which suits
    out-of-sample rows.

    Parameters
    ----------
    path : str or Path
        UTF-8 file with ``,`` separators and ``.`` decimals.
    has_header : bool, optional
        Whether the first row holds column names. ``None`` detects a
        header as a first row containing any non-numeric cell.

    Returns
    -------
    values : ndarray
    names : tuple of str
        Empty when the file has no header.

    Raises
    ------
    EmptyFileError, RaggedRowError, NonNumericError, CSVParseError
        Error messages carry 1-based row and column numbers counted in the
        file, header included.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, strict=True)
        rows: list[tuple[int, list[str]]] = []
        try:
            for fields in reader:
                if not fields or all(not f.strip() for f in fields):
                    continue
                rows.append((reader.line_num, [f.strip() for f in fields]))
        except csv.Error as exc:
            raise CSVParseError(str(exc), reader.line_num) from None
    if not rows:
        raise EmptyFileError(f"{path}: no rows")

    first = rows[0][1]
    if has_header is None:
        has_header = not all(_is_numeric(f) for f in first)
    names: tuple[str, ...] = ()
    if has_header:
        names = tuple(first)
        rows = rows[1:]
        if not rows:
            raise EmptyFileError(f"{path}: header but no data rows")
    width = len(names) if names else len(rows[0][1])

    data = np.empty((len(rows), width))
    for r, (line, fields) in enumerate(rows):
        if len(fields) != width:
            raise RaggedRowError(
                f"expected {width} fields, found {len(fields)}", line
            )
        for c, text in enumerate(fields):
            data[r, c] = _parse_cell(text, line, c + 1)
    return data, names


def save_csv(path: str | Path, values: np.ndarray, column_names: Sequence[str]) -> None:
    """Write a matrix with a one-line header, floats in round-trip precision."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(column_names))
        for row in values:
            writer.writerow([repr(float(v)) for v in row])


def empirical_mean(values: np.ndarray) -> np.ndarray:
    """Column means with divisor ``1/N``."""
    values = np.asarray(values, dtype=float)
    return values.sum(axis=0) / values.shape[0]


def empirical_variance_vector(values: np.ndarray) -> np.ndarray:
    """Per-column second moments ``(1/N) sum x_i**2`` (caller centers first)."""
    values = np.asarray(values, dtype=float)
    return np.einsum("ij,ij->j", values, values) / values.shape[0]


def empirical_covariance(values: np.ndarray) -> np.ndarray:
    """Second-moment matrix ``(1/N) X^T X``, exactly symmetric.

    The diagonal is taken from :func:`empirical_variance_vector` so the two
    agree bit for bit.
    """
    values = np.asarray(values, dtype=float)
    cov = values.T @ values / values.shape[0]
    upper = np.triu(cov, 1)
    cov = upper + upper.T
    cov[np.diag_indices_from(cov)] = empirical_variance_vector(values)
    return cov


def drop_tolerance(centered: np.ndarray) -> float:
    """Zero-variance threshold ``1e-12 * (1 + max column second moment)``."""
    return 1e-12 * (1.0 + float(np.max(empirical_variance_vector(centered))))


def center(ds: Dataset) -> Dataset:
    """Subtract column means; the means are kept for out-of-sample use."""
    if ds.preprocessing.kind != RAW:
        raise PreprocessingError(f"dataset is already {ds.preprocessing.kind}")
    mean = empirical_mean(ds.values)
    return Dataset(
        ds.values - mean,
        ds.column_names,
        Preprocessing(kind=CENTERED, mean=mean),
    )


def standardize(ds: Dataset) -> Dataset:
    """Center (if needed) and scale each column to unit empirical variance.

    Columns whose variance is at most :func:`drop_tolerance` stay centered
    and unscaled; their indices are listed in ``preprocessing.unscaled``.
    """
    if ds.preprocessing.kind == RAW:
        ds = center(ds)
    elif ds.preprocessing.kind != CENTERED:
        raise PreprocessingError(f"dataset is already {ds.preprocessing.kind}")
    var = empirical_variance_vector(ds.values)
    tiny = var <= drop_tolerance(ds.values)
    scale = np.where(tiny, 1.0, np.sqrt(np.where(tiny, 1.0, var)))
    return Dataset(
        ds.values / scale,
        ds.column_names,
        Preprocessing(
            kind=STANDARDIZED,
            mean=ds.preprocessing.mean,
            scale=scale,
            unscaled=tuple(int(i) for i in np.flatnonzero(tiny)),
        ),
    )
