"""Loading, scaling, normalization, chronological splits, and windowing."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSeriesError,
    EmptyInputError,
    ParseError,
    TooShortError,
)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class RawSeries:
    """A (T, N) matrix of real values, one row per timestep."""

    values: np.ndarray
    variable_names: tuple[str, ...]
    sample_rate: str | None = None

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"expected a 2-d value matrix, got ndim={values.ndim}")
        if values.shape[0] == 0 or values.shape[1] == 0:
            raise EmptyInputError("series has no rows or no columns")
        if len(self.variable_names) != values.shape[1]:
            raise ValueError("variable_names length does not match column count")
        if not np.isfinite(values).all():
            raise ValueError("series contains non-finite values")
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "variable_names", tuple(self.variable_names))

    @property
    def t(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Normalizer:
    """Scalar mean/std pair fitted on the training split only."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")


@dataclass(frozen=True)
class SplitSpec:
    """Chronological train/val/test fractions; must sum to one."""

    train_frac: float
    val_frac: float
    test_frac: float

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(f <= 0 for f in fracs):
            raise ValueError(f"split fractions must be positive, got {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {sum(fracs)}")


@dataclass(frozen=True)
class Instance:
    """One (input, target) window pair.

    ``x`` has shape (P, V, D) with the primary value in feature column 0;
    ``y`` has shape (Q, V). ``origin_index`` is the window's starting row
    in its source split.
    """

    x: np.ndarray
    y: np.ndarray
    origin_index: int = 0

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if x.ndim != 3:
            raise ValueError(f"x must be (P, V, D), got ndim={x.ndim}")
        if y.ndim != 2:
            raise ValueError(f"y must be (Q, V), got ndim={y.ndim}")
        if x.shape[2] < 1:
            raise ValueError("feature dimension D must be at least 1")
        if y.shape[1] != x.shape[1]:
            raise ValueError(
                f"x and y disagree on variable count: {x.shape[1]} vs {y.shape[1]}")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise ValueError("instance contains non-finite values")
        object.__setattr__(self, "x", _readonly(x))
        object.__setattr__(self, "y", _readonly(y))

    @property
    def p(self) -> int:
        return self.x.shape[0]

    @property
    def v(self) -> int:
        return self.x.shape[1]

    @property
    def d(self) -> int:
        return self.x.shape[2]

    @property
    def q(self) -> int:
        return self.y.shape[0]


def load_csv(path, has_header: bool = True) -> RawSeries:
    """Read a wide CSV (rows = timesteps, columns = variables).

    Every cell must parse as a finite real number; the first offending cell
    aborts the load with its 1-based row/column location. Ragged rows are
    rejected the same way.
    """
    names: list[str] | None = None
    rows: list[list[float]] = []
    n_cols: int | None = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for line_no, record in enumerate(reader, start=1):
            if line_no == 1 and has_header:
                names = [cell.strip() for cell in record]
                n_cols = len(names)
                continue
            if n_cols is None:
                n_cols = len(record)
            if len(record) != n_cols:
                bad_col = min(len(record), n_cols) + 1
                raise ParseError(
                    f"row {line_no} has {len(record)} cells, expected {n_cols}",
                    row=line_no, col=bad_col)
            parsed = []
            for j, cell in enumerate(record):
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(
                        f"cell {cell!r} at row {line_no}, col {j + 1} is not a number",
                        row=line_no, col=j + 1) from None
                if not math.isfinite(value):
                    raise ParseError(
                        f"non-finite value at row {line_no}, col {j + 1}",
                        row=line_no, col=j + 1)
                parsed.append(value)
            rows.append(parsed)
    if not rows or n_cols == 0:
        raise EmptyInputError(f"no data in {path}")
    if names is None:
        names = [f"v{j}" for j in range(n_cols)]
    return RawSeries(np.asarray(rows, dtype=np.float64), tuple(names))


def scale_values(series: RawSeries, factor: float) -> RawSeries:
    """Multiply every cell by a positive factor (unit upscaling)."""
    if not (factor > 0 and math.isfinite(factor)):
        raise ValueError(f"scale factor must be positive and finite, got {factor}")
    return RawSeries(series.values * factor, series.variable_names,
                     series.sample_rate)


def split_chronological(series: RawSeries, spec: SplitSpec,
                        p: int | None = None, q: int | None = None,
                        ) -> tuple[RawSeries, RawSeries, RawSeries]:
    """Cut the series into contiguous train/val/test slices, in time order.

    Row counts are floor(frac * T) for train and val; the remainder goes to
    test. When window sizes are given, every split must be able to hold at
    least one (p + q)-row window, since windows never straddle a boundary.
    """
    t = series.t
    n_train = int(spec.train_frac * t)
    n_val = int(spec.val_frac * t)
    n_test = t - n_train - n_val
    if p is not None and q is not None:
        need = p + q
        for name, size in (("train", n_train), ("val", n_val), ("test", n_test)):
            if size < need:
                raise TooShortError(
                    f"{name} split has {size} rows, needs at least {need} "
                    f"for one window")
    parts = []
    offset = 0
    for size in (n_train, n_val, n_test):
        parts.append(RawSeries(series.values[offset:offset + size].copy(),
                               series.variable_names, series.sample_rate))
        offset += size
    return parts[0], parts[1], parts[2]


def fit_normalizer(train: RawSeries) -> Normalizer:
    """Scalar mean and population standard deviation over all cells."""
    mu = float(train.values.mean())
    sigma = float(train.values.std())
    if sigma == 0.0:
        raise DegenerateSeriesError("all values identical, sigma is zero")
    return Normalizer(mu=mu, sigma=sigma)


def apply_normalizer(series: RawSeries, norm: Normalizer,
                     inverse: bool = False) -> RawSeries:
    if inverse:
        values = series.values * norm.sigma + norm.mu
    else:
        values = (series.values - norm.mu) / norm.sigma
    return RawSeries(values, series.variable_names, series.sample_rate)


def make_windows(series: RawSeries, p: int, q: int,
                 stride: int = 1) -> list[Instance]:
    """Slice the series into (P, N, 1) input / (Q, N) target windows.

    Windows start at offsets 0, stride, 2*stride, ... while the full
    p + q rows fit. For stride 1 this yields T - p - q + 1 windows.
    """
    if p < 1 or q < 1:
        raise ValueError(f"window lengths must be >= 1, got p={p}, q={q}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if series.t < p + q:
        raise TooShortError(
            f"series has {series.t} rows, needs at least {p + q}")
    windows = []
    for offset in range(0, series.t - p - q + 1, stride):
        x = series.values[offset:offset + p, :, np.newaxis].copy()
        y = series.values[offset + p:offset + p + q].copy()
        windows.append(Instance(x=x, y=y, origin_index=offset))
    return windows
