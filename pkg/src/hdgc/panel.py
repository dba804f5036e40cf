"""Time-series panel container, transforms, and lagged design construction.

A panel is an immutable T x K block of annual observations with named
columns.  All analysis code consumes panels through the builders here, so
validation happens once at the boundary.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import (
    CellParseError,
    MissingColumnError,
    QueryError,
    SampleSizeError,
    ValidationError,
)

__all__ = [
    "TimeSeriesPanel",
    "LagSpec",
    "DesignMatrices",
    "load_panel",
    "demean",
    "difference",
    "build_design",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TimeSeriesPanel:
    """Named, time-indexed panel of K series over T periods.

    Attributes
    ----------
    values : np.ndarray, shape (T, K)
        One column per series; finite floats only.
    names : tuple of str
        Unique, nonempty series labels.
    time_index : tuple of int
        Strictly increasing, gap-free integer labels (years).
    units : tuple of (str or None), optional
        Per-series measurement units, for display only.
    """

    values: np.ndarray
    names: tuple[str, ...]
    time_index: tuple[int, ...]
    units: tuple[str | None, ...] | None = None

    def __post_init__(self):
        values = _readonly(np.atleast_2d(self.values))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        object.__setattr__(self, "time_index", tuple(int(t) for t in self.time_index))
        T, K = values.shape
        if K != len(self.names):
            raise ValidationError(
                f"{K} columns but {len(self.names)} names supplied"
            )
        if T != len(self.time_index):
            raise ValidationError(
                f"{T} rows but {len(self.time_index)} time labels supplied"
            )
        if T < 2:
            raise ValidationError("panel needs at least 2 observations")
        if len(set(self.names)) != K or any(not n for n in self.names):
            raise ValidationError("series names must be unique and nonempty")
        if not np.isfinite(values).all():
            bad = np.argwhere(~np.isfinite(values))[0]
            raise ValidationError(
                f"non-finite value in series {self.names[bad[1]]!r} "
                f"at time {self.time_index[bad[0]]}"
            )
        steps = np.diff(self.time_index)
        if np.any(steps <= 0):
            raise ValidationError("time index must be strictly increasing")
        if np.any(steps != 1):
            raise ValidationError("time index not contiguous (annual data contract)")
        if self.units is not None and len(self.units) != K:
            raise ValidationError("units length must match number of series")

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_series(self) -> int:
        return self.values.shape[1]

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise MissingColumnError(f"no series named {name!r} in panel") from None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.index_of(name)]

    def subset(self, names: Sequence[str]) -> "TimeSeriesPanel":
        """New panel restricted to the given series, in the given order."""
        idx = [self.index_of(n) for n in names]
        units = None if self.units is None else tuple(self.units[i] for i in idx)
        return TimeSeriesPanel(
            self.values[:, idx], tuple(names), self.time_index, units
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            np.asarray(self.values),
            index=pd.Index(self.time_index, name="time"),
            columns=list(self.names),
        )


@dataclass(frozen=True)
class LagSpec:
    """Lag length p and lag-augmentation order d."""

    p: int
    d: int = 0

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ValidationError(f"lag length p must be a positive integer, got {self.p}")
        if int(self.d) != self.d or self.d < 0:
            raise ValidationError(f"augmentation order d must be >= 0, got {self.d}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "d", int(self.d))


@dataclass(frozen=True)
class DesignMatrices:
    """Aligned regression blocks for one Granger-causality question.

    ``lagged`` holds every series at lags 1..p, series-major then lag
    (column k*p + (l-1) is series k at lag l); the ordering is fixed so
    selected-column indices are reproducible across runs.  ``augmented``
    holds the extra lags p+1..p+d of the causing series only.  Row t of
    every block is aligned: ``lagged[t]`` contains the values dated one
    through p periods before ``response[t]``.
    """

    response: np.ndarray          # (T_eff, N_I)
    lagged: np.ndarray            # (T_eff, K*p)
    augmented: np.ndarray         # (T_eff, d*N_J)
    gc_columns: tuple[int, ...]   # columns of `lagged` holding the tested block
    effective_T: int
    response_names: tuple[str, ...] = field(default=())
    lagged_names: tuple[str, ...] = field(default=())
    augmented_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        for attr in ("response", "lagged", "augmented"):
            object.__setattr__(self, attr, _readonly(getattr(self, attr)))

    @property
    def conditioning_columns(self) -> tuple[int, ...]:
        """Columns of `lagged` outside the tested block."""
        gc = set(self.gc_columns)
        return tuple(m for m in range(self.lagged.shape[1]) if m not in gc)


def load_panel(
    path,
    columns: Sequence[str] | None = None,
    time_column: str = "year",
    trim_common: bool = False,
) -> TimeSeriesPanel:
    """Read a CSV into a validated panel.

    The file must have a header row, one integer time column, and numeric
    data columns (decimal point '.', no thousands separators).  With
    ``trim_common`` the sample is trimmed to the longest span over which
    every selected series is observed; missing cells inside that span are
    still rejected.
    """
    if not os.path.exists(path):
        raise ValidationError(f"data file not found: {path}")
    raw = pd.read_csv(path, dtype=str, skipinitialspace=True)
    raw.columns = [c.strip() for c in raw.columns]
    if time_column not in raw.columns:
        raise MissingColumnError(f"time column {time_column!r} not found in {path}")
    if columns is None:
        columns = [c for c in raw.columns if c != time_column]
    missing = [c for c in columns if c not in raw.columns]
    if missing:
        raise MissingColumnError(f"column(s) {missing} not found in {path}")

    try:
        times = raw[time_column].astype(int).to_numpy()
    except (TypeError, ValueError) as exc:
        raise CellParseError(
            f"time column {time_column!r} is not integer-valued: {exc}"
        ) from None

    order = np.argsort(times, kind="stable")
    times = times[order]
    data = raw.iloc[order]
    if len(np.unique(times)) != len(times):
        dup = int(times[np.where(np.diff(times) == 0)[0][0]])
        raise ValidationError(f"duplicate year {dup} in time column")

    numeric = pd.DataFrame(index=range(len(times)))
    for col in columns:
        numeric[col] = pd.to_numeric(data[col].to_numpy(), errors="coerce")

    if trim_common:
        observed = numeric.notna().all(axis=1).to_numpy()
        if not observed.any():
            raise ValidationError("no row has all selected series observed")
        lo, hi = np.flatnonzero(observed)[[0, -1]]
        numeric = numeric.iloc[lo : hi + 1]
        times = times[lo : hi + 1]

    na = numeric.isna()
    if na.to_numpy().any():
        r, c = np.argwhere(na.to_numpy())[0]
        raise CellParseError(
            f"non-numeric cell in column {numeric.columns[c]!r}, "
            f"year {int(times[r])}"
        )

    return TimeSeriesPanel(numeric.to_numpy(float), tuple(columns), tuple(times))


def demean(panel: TimeSeriesPanel) -> TimeSeriesPanel:
    """Subtract each series' sample mean (intercept-equivalent)."""
    centered = panel.values - panel.values.mean(axis=0, keepdims=True)
    return TimeSeriesPanel(centered, panel.names, panel.time_index, panel.units)


def difference(
    panel: TimeSeriesPanel,
    orders: Sequence[int] | Mapping[str, int],
) -> TimeSeriesPanel:
    """Apply per-series differencing and truncate to the common sample.

    ``orders`` is either one nonnegative integer per series (panel order)
    or a name -> order mapping; unnamed series get order 0.  Series k is
    replaced by its orders[k]-th difference and every series keeps the
    last ``T - max(orders)`` observations, so rows stay aligned.
    """
    if isinstance(orders, Mapping):
        unknown = [n for n in orders if n not in panel.names]
        if unknown:
            raise MissingColumnError(f"difference orders name unknown series {unknown}")
        order_list = [int(orders.get(n, 0)) for n in panel.names]
    else:
        order_list = [int(o) for o in orders]
        if len(order_list) != panel.n_series:
            raise ValidationError(
                f"{len(order_list)} orders for {panel.n_series} series"
            )
    if any(o < 0 for o in order_list):
        raise ValidationError("difference orders must be nonnegative")
    T = panel.n_obs
    if any(o > T - 2 for o in order_list):
        raise ValidationError(f"difference order too large for T={T}")

    max_order = max(order_list)
    keep = T - max_order
    out = np.empty((keep, panel.n_series))
    for k, o in enumerate(order_list):
        col = np.diff(panel.values[:, k], n=o) if o else panel.values[:, k]
        out[:, k] = col[-keep:]
    return TimeSeriesPanel(
        out, panel.names, panel.time_index[max_order:], panel.units
    )


def build_design(
    panel: TimeSeriesPanel,
    caused: Sequence[str],
    causing: Sequence[str],
    spec: LagSpec,
) -> DesignMatrices:
    """Assemble response, lagged-regressor, and augmentation blocks.

    The response holds the caused series at times p+d+1..T.  The lagged
    block holds all K series at lags 1..p; the augmentation block holds
    lags p+1..p+d of the causing series only.  ``gc_columns`` marks the
    p*N_J tested columns inside the lagged block.
    """
    caused = tuple(dict.fromkeys(caused))
    causing = tuple(dict.fromkeys(causing))
    if not caused or not causing:
        raise QueryError("caused and causing sets must both be nonempty")
    overlap = set(caused) & set(causing)
    if overlap:
        raise QueryError(f"caused and causing sets overlap: {sorted(overlap)}")
    caused_idx = [panel.index_of(n) for n in caused]
    causing_idx = [panel.index_of(n) for n in causing]

    p, d = spec.p, spec.d
    T, K = panel.n_obs, panel.n_series
    t_eff = T - p - d
    if t_eff < 1:
        raise SampleSizeError(
            f"T={T} leaves no usable rows after p={p} lags and d={d} augmentation"
        )

    vals = panel.values
    rows = np.arange(p + d, T)
    response = vals[rows[:, None], caused_idx]

    lagged = np.empty((t_eff, K * p))
    lagged_names = []
    for k, name in enumerate(panel.names):
        for lag in range(1, p + 1):
            lagged[:, k * p + (lag - 1)] = vals[rows - lag, k]
            lagged_names.append(f"{name}.L{lag}")

    gc_columns = tuple(
        k * p + (lag - 1) for k in causing_idx for lag in range(1, p + 1)
    )

    augmented = np.empty((t_eff, d * len(causing)))
    aug_names = []
    for j, k in enumerate(causing_idx):
        for extra in range(1, d + 1):
            augmented[:, j * d + (extra - 1)] = vals[rows - (p + extra), k]
            aug_names.append(f"{panel.names[k]}.L{p + extra}")

    return DesignMatrices(
        response=response,
        lagged=lagged,
        augmented=augmented,
        gc_columns=gc_columns,
        effective_T=t_eff,
        response_names=caused,
        lagged_names=tuple(lagged_names),
        augmented_names=tuple(aug_names),
    )
