"""Ingestion, transformation and pseudo-normalisation of multivariate series.

A multivariate series is a set of equally long, aligned real-valued columns.
Before any local Gaussian estimation the columns are pseudo-normalised: each
observation is replaced by the standard normal quantile of its rescaled rank,
which gives approximately standard normal marginals while preserving the
serial dependence structure.  Lag-h pair construction turns two columns into
the bivariate observations the local fits operate on.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri


@dataclass(frozen=True)
class MultivariateSeries:
    """Aligned named columns of equal length n >= 2, no missing values."""

    names: tuple[str, ...]
    values: np.ndarray  # shape (n, d), float
    source: str = ""
    transform: str = "raw"

    def __post_init__(self):
        values = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if values.ndim != 2:
            raise ValueError("values must be a 2-d array of shape (n, d)")
        if values.shape[1] != len(self.names):
            raise ValueError(
                f"{len(self.names)} column names but {values.shape[1]} columns"
            )
        if values.shape[0] < 2:
            raise ValueError("series needs at least two observations")
        if not np.all(np.isfinite(values)):
            raise ValueError("series contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def column(self, name_or_index: str | int) -> np.ndarray:
        return self.values[:, self._index(name_or_index)]

    def _index(self, name_or_index: str | int) -> int:
        if isinstance(name_or_index, str):
            try:
                return self.names.index(name_or_index)
            except ValueError:
                raise KeyError(f"unknown column {name_or_index!r}") from None
        return int(name_or_index)


@dataclass(frozen=True)
class PseudoNormalizedSeries:
    """Columns mapped through the normal quantile of their rescaled ranks.

    Every value z satisfies Phi(z) in (0, 1) because the rank rescaling
    divides by n + 1; ties in the source data are broken by time order so
    the transform is deterministic.
    """

    names: tuple[str, ...]
    values: np.ndarray  # shape (n, d)
    source: str = ""
    transform: str = "raw"
    rank_method: str = "rank/(n+1), ties by time order"

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def column(self, name_or_index: str | int) -> np.ndarray:
        if isinstance(name_or_index, str):
            try:
                name_or_index = self.names.index(name_or_index)
            except ValueError:
                raise KeyError(f"unknown column {name_or_index!r}") from None
        return self.values[:, int(name_or_index)]


@dataclass(frozen=True)
class LagPairSet:
    """Bivariate lag-h observations (first[t + h], second[t]), t = 0..n-h-1."""

    pairs: np.ndarray  # shape (n - h, 2)
    h: int
    order: str = "kl"

    def __post_init__(self):
        pairs = np.ascontiguousarray(np.asarray(self.pairs, dtype=float))
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError("pairs must have shape (count, 2)")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return self.pairs.shape[0]


def load_csv(path, columns: list[str] | None = None, delimiter: str = ",") -> MultivariateSeries:
    """Read named numeric columns from a CSV file with a header row.

    Rows containing a non-numeric cell in a selected column are rejected;
    the error names the offending 1-based data row.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if columns is None:
            columns = header
        idx = []
        for name in columns:
            if name not in header:
                raise ValueError(f"{path}: missing column {name!r}")
            idx.append(header.index(name))
        rows = []
        for rownum, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if max(idx) >= len(row):
                raise ValueError(f"{path}: row {rownum} has too few cells")
            parsed = []
            for name, j in zip(columns, idx):
                cell = row[j].strip()
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}: row {rownum}: non-numeric value {cell!r} in column {name!r}"
                    ) from None
            rows.append(parsed)
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least two data rows, found {len(rows)}")
    values = np.array(rows, dtype=float)
    if not np.all(np.isfinite(values)):
        bad = int(np.argwhere(~np.isfinite(values))[0, 0]) + 1
        raise ValueError(f"{path}: row {bad}: non-finite value")
    return MultivariateSeries(names=tuple(columns), values=values, source=str(path))


def log_returns(series: MultivariateSeries) -> MultivariateSeries:
    """Map each column y to ln(y[t+1] / y[t]); the result has length n - 1."""
    if np.any(series.values <= 0):
        t, j = np.argwhere(series.values <= 0)[0]
        raise ValueError(
            f"non-positive value in column {series.names[j]!r} at index {int(t)}; "
            "log-returns need strictly positive levels"
        )
    values = np.diff(np.log(series.values), axis=0)
    return MultivariateSeries(
        names=series.names, values=values, source=series.source, transform="log-return"
    )


def _rank_by_time(column: np.ndarray) -> np.ndarray:
    """1-based ranks with ties broken by time index (stable sort)."""
    order = np.argsort(column, kind="stable")
    ranks = np.empty(len(column), dtype=float)
    ranks[order] = np.arange(1, len(column) + 1)
    return ranks


def pseudo_normalize(series: MultivariateSeries) -> PseudoNormalizedSeries:
    """Per column: rank r in 1..n (ties by time order), G = r/(n+1), z = Phi^-1(G).

    The rescaling by n + 1 keeps every G strictly inside (0, 1), so the
    quantile transform is always finite.  The output is invariant under any
    strictly increasing transform of a column, since ranks are unchanged.
    """
    n = series.n
    out = np.empty_like(series.values)
    for j in range(series.d):
        out[:, j] = ndtri(_rank_by_time(series.values[:, j]) / (n + 1))
    return PseudoNormalizedSeries(
        names=series.names,
        values=out,
        source=series.source,
        transform=series.transform,
    )


def lag_pairs(zk: np.ndarray, zl: np.ndarray, h: int, order: str = "kl") -> LagPairSet:
    """Build the n - h bivariate lag-h pairs (zk[t + h], zl[t]).

    The swapped-and-reflected companion series is obtained by calling with
    the columns exchanged.
    """
    zk = np.asarray(zk, dtype=float)
    zl = np.asarray(zl, dtype=float)
    if zk.shape != zl.shape or zk.ndim != 1:
        raise ValueError("columns must be 1-d arrays of equal length")
    n = len(zk)
    if not 0 <= h < n:
        raise ValueError(f"lag h={h} out of range for n={n}")
    if h == 0:
        pairs = np.column_stack([zk, zl])
    else:
        pairs = np.column_stack([zk[h:], zl[: n - h]])
    return LagPairSet(pairs=pairs, h=h, order=order)
