"""Lagged data views and the symmetric cross-covariance kernels.

A series of n+s samples in m features is held as the matrix ``X`` of shape
(n+s, m).  The lag-i view stacks samples i..i+n-1, and the kernels are the
symmetrized products of the newest view with each older one:

    Y_i = (1/2) (X_{s+1}^T X_{s+1-i} + X_{s+1-i}^T X_{s+1}),   i = 1..s.

Everything downstream (solvers, second-order checks) works off these s
symmetric m x m matrices; they are built once and kept dense.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TimeSeriesData:
    """A time-ordered data matrix of shape (n+s, m) together with its lag order.

    Attributes
    ----------
    X : ndarray, shape (n+s, m)
        One row per time sample, one column per feature.
    s : int
        Lag order, 1 <= s < n.
    n : int
        Effective sample count (rows usable as prediction targets).
    column_means : ndarray, shape (m,)
        Means subtracted from each column; all zero unless centering was applied.
    """

    X: np.ndarray
    s: int
    column_means: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"data matrix must be 2-D, got ndim={X.ndim}")
        rows, m = X.shape
        s = int(self.s)
        if s < 1:
            raise ValueError(f"lag order must be >= 1, got {s}")
        if m < 1:
            raise ValueError("data matrix must have at least one feature column")
        n = rows - s
        if n < 1:
            raise ValueError(f"{rows} rows leave no usable samples at lag order {s}")
        if s >= n:
            raise ValueError(
                f"lag order s={s} must be smaller than the effective sample count n={n}")
        if not np.isfinite(X).all():
            raise ValueError("data matrix contains NaN or Inf entries")
        means = self.column_means
        if means is None:
            means = np.zeros(m)
        means = np.asarray(means, dtype=np.float64)
        if means.shape != (m,):
            raise ValueError(f"column_means must have shape ({m},), got {means.shape}")
        object.__setattr__(self, "X", _as_readonly(X))
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "column_means", _as_readonly(means))

    @property
    def n(self) -> int:
        return self.X.shape[0] - self.s

    @property
    def m(self) -> int:
        return self.X.shape[1]

    @classmethod
    def from_array(cls, X, s: int, center: bool = False) -> "TimeSeriesData":
        data = cls(np.asarray(X, dtype=np.float64), s)
        return center_columns(data) if center else data


@dataclass(frozen=True, eq=False)
class KernelSet:
    """The s symmetric m x m lag kernels, stored as one (s, m, m) stack.

    ``n_samples`` records the effective sample count of the data the kernels
    were built from (0 for hand-assembled sets).
    """

    stack: np.ndarray
    n_samples: int = 0

    def __post_init__(self):
        stack = np.ascontiguousarray(self.stack, dtype=np.float64)
        if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
            raise ValueError(f"kernel stack must have shape (s, m, m), got {stack.shape}")
        if stack.shape[0] < 1:
            raise ValueError("kernel stack must contain at least one matrix")
        if not np.isfinite(stack).all():
            raise ValueError("kernels contain NaN or Inf entries")
        # built as (A + A.T)/2, so symmetry must hold exactly
        if not np.array_equal(stack, stack.transpose(0, 2, 1)):
            raise ValueError("every kernel must be exactly symmetric")
        object.__setattr__(self, "stack", _as_readonly(stack))
        object.__setattr__(self, "n_samples", int(self.n_samples))

    @property
    def s(self) -> int:
        return self.stack.shape[0]

    @property
    def m(self) -> int:
        return self.stack.shape[1]

    @property
    def kernels(self) -> tuple:
        return tuple(self.stack[i] for i in range(self.s))

    @classmethod
    def from_matrices(cls, matrices, n_samples: int = 0) -> "KernelSet":
        sym = [0.5 * (np.asarray(M, dtype=np.float64) + np.asarray(M, dtype=np.float64).T)
               for M in matrices]
        return cls(np.stack(sym, axis=0), n_samples=n_samples)


def lag_view(data: TimeSeriesData, i: int) -> np.ndarray:
    """Return the n x m view stacking samples i..i+n-1 (1-based lag index).

    Valid indices run from 1 (oldest window) to s+1 (newest window).
    """
    i = int(i)
    if i < 1 or i > data.s + 1:
        raise IndexError(f"lag view index {i} outside 1..{data.s + 1}")
    return data.X[i - 1:i - 1 + data.n]


def build_kernels(data: TimeSeriesData) -> KernelSet:
    """Build the s symmetric cross-covariance kernels of a data matrix."""
    newest = lag_view(data, data.s + 1)
    stack = np.empty((data.s, data.m, data.m))
    for i in range(1, data.s + 1):
        prod = newest.T @ lag_view(data, data.s + 1 - i)
        stack[i - 1] = 0.5 * (prod + prod.T)
    return KernelSet(stack, n_samples=data.n)


def combine_kernels(kernels: KernelSet, beta) -> np.ndarray:
    """Return the beta-weighted kernel sum, a symmetric m x m matrix."""
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (kernels.s,):
        raise ValueError(f"beta must have length {kernels.s}, got shape {beta.shape}")
    if not np.isfinite(beta).all():
        raise ValueError("beta contains NaN or Inf entries")
    return np.tensordot(beta, kernels.stack, axes=(0, 0))


def center_columns(data: TimeSeriesData) -> TimeSeriesData:
    """Subtract each column's mean; the removed means accumulate in column_means."""
    means = data.X.mean(axis=0)
    return TimeSeriesData(data.X - means, data.s, column_means=data.column_means + means)


def read_data_csv(path: str, has_header: bool = False) -> np.ndarray:
    """Read a numeric CSV (rows = time samples, columns = features) into an array.

    Raises DataFormatError with a 1-based line number on ragged rows or
    unparseable fields.
    """
    rows: list[list[float]] = []
    width = None
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataFormatError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1 and has_header:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError as exc:
                raise DataFormatError(f"{path}: line {lineno}: {exc}") from exc
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected {width} columns, got {len(values)}")
            rows.append(values)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def write_data_csv(path_or_buf, X: np.ndarray) -> str:
    """Serialize a data matrix as CSV text (full float precision); returns the text."""
    from ._util import fmt_float

    lines = [",".join(fmt_float(v) for v in row) for row in np.asarray(X)]
    text = "\n".join(lines) + "\n"
    if path_or_buf is not None:
        from ._util import atomic_write_text

        atomic_write_text(path_or_buf, text)
    return text
