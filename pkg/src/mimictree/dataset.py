"""Tabular event data: schema, CSV ingestion, lag windows, scaling, splits.

Data is held column-major (a Fortran-ordered ``(n_rows, n_columns)`` float
array) because the split search scans one column over every row of a node.
Categorical features are one-hot encoded on ingestion so that every column
is numeric and every split has the form ``x <= threshold``.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .exceptions import ConfigError, DataError, LevelError, SchemaError

logger = logging.getLogger(__name__)

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"
BINARY = "binary"
FEATURE_KINDS = (CONTINUOUS, CATEGORICAL, BINARY)

# column kinds after encoding
ONEHOT = "onehot"

_TRUE = {"1", "true", "t", "yes", "y"}
_FALSE = {"0", "false", "f", "no", "n"}


@dataclass(frozen=True)
class FeatureSpec:
    """Declaration of one raw input feature.

    ``lag`` is 0 for the current event and ``k`` for the event ``k`` steps
    earlier; raw files only ever carry lag 0, lagged copies are produced by
    :func:`lag_expand`.
    """

    name: str
    kind: str = CONTINUOUS
    levels: tuple[str, ...] = ()
    lag: int = 0

    def __post_init__(self):
        if not self.name:
            raise SchemaError("feature name must be non-empty")
        if self.kind not in FEATURE_KINDS:
            raise SchemaError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        object.__setattr__(self, "levels", tuple(self.levels))
        if self.kind == CATEGORICAL:
            if not self.levels:
                raise SchemaError(f"categorical feature {self.name!r} has no levels")
            if len(set(self.levels)) != len(self.levels):
                raise SchemaError(f"categorical feature {self.name!r} has duplicate levels")
        elif self.levels:
            raise SchemaError(f"feature {self.name!r}: levels only apply to categorical")
        if self.lag < 0:
            raise SchemaError(f"feature {self.name!r}: lag must be >= 0")


@dataclass(frozen=True)
class Column:
    """One encoded numeric column of a :class:`Dataset`."""

    feature: str
    kind: str  # continuous | binary | onehot
    level: str | None = None
    lag: int = 0

    @property
    def name(self) -> str:
        base = self.feature if self.level is None else f"{self.feature}={self.level}"
        return base if self.lag == 0 else f"{base}(t-{self.lag})"

    def label(self, window: int = 1) -> str:
        """Display name; lag-0 columns get a ``(t0)`` tag in lagged data."""
        if window > 1 and self.lag == 0:
            return f"{self.name}(t0)"
        return self.name


@dataclass(frozen=True)
class Schema:
    """Parsed schema sidecar: features plus the roles of special columns."""

    features: tuple[FeatureSpec, ...]
    target: str | None = None
    episode: str | None = None
    action: str | None = None
    window: int = 1
    pad: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate feature names in schema")
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        for f in self.features:
            if f.lag > self.window - 1:
                raise SchemaError(f"feature {f.name!r}: lag {f.lag} exceeds window {self.window}")
        if self.action is not None and self.action not in names:
            raise SchemaError(f"action feature {self.action!r} is not declared")


def parse_feature_flag(text: str) -> FeatureSpec:
    """Parse ``name:kind[:level1,level2,...]`` as given on the command line."""
    parts = text.split(":", 2)
    if len(parts) < 2:
        raise SchemaError(f"feature flag {text!r} must look like name:kind[:levels]")
    name, kind = parts[0].strip(), parts[1].strip()
    levels = tuple(s.strip() for s in parts[2].split(",")) if len(parts) == 3 else ()
    return FeatureSpec(name, kind, levels)


def load_schema(path) -> Schema:
    """Read a ``key = value`` schema file.

    Recognised keys are ``target``, ``episode``, ``action``, ``window``,
    ``pad`` and ``feature.<name>``, whose value is a kind optionally
    followed by ``: level, level, ...``::

        target = q_home
        episode = episode_id
        window = 10
        feature.time_remaining = continuous
        feature.manpower = categorical: even, short, power
    """
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"schema file not found: {path}")
    features: list[FeatureSpec] = []
    opts: dict = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key.startswith("feature."):
            kind, _, levels = value.partition(":")
            lv = tuple(s.strip() for s in levels.split(",") if s.strip())
            features.append(FeatureSpec(key[len("feature."):], kind.strip(), lv))
        elif key in ("target", "episode", "action"):
            opts[key] = value
        elif key == "window":
            opts[key] = int(value)
        elif key == "pad":
            opts[key] = float(value)
        else:
            raise SchemaError(f"{path}:{lineno}: unknown key {key!r}")
    if not features:
        raise SchemaError(f"{path}: no features declared")
    return Schema(tuple(features), **opts)


def _columns_for(spec: FeatureSpec) -> list[Column]:
    if spec.kind == CATEGORICAL:
        return [Column(spec.name, ONEHOT, lv, spec.lag) for lv in spec.levels]
    return [Column(spec.name, spec.kind, None, spec.lag)]


def _readonly(a):
    if a is not None:
        a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable encoded table: feature matrix, columns, optional target.

    Attributes
    ----------
    X : ndarray of shape (n_rows, n_columns)
        Column-major float matrix.
    columns : tuple of Column
        One descriptor per column of ``X``.
    y : ndarray of shape (n_rows,) or None
        Target (soft labels); ``None`` for unlabeled rows.
    episodes : ndarray of int or None
        Episode code per row; contiguous runs of one code form an episode.
    norm_stats : NormStats or None
        Scaling applied to ``X``, if any.
    window : int
        History window used by :func:`lag_expand` (1 when not lagged).
    augmented : ndarray of bool or None
        Marks rows produced by action replacement.
    source_index : ndarray of int or None
        For augmented rows, the index of the row they were copied from.
    """

    X: np.ndarray
    columns: tuple[Column, ...]
    y: np.ndarray | None = None
    episodes: np.ndarray | None = None
    norm_stats: "NormStats | None" = None
    window: int = 1
    augmented: np.ndarray | None = None
    source_index: np.ndarray | None = None

    def __post_init__(self):
        X = np.asfortranarray(np.asarray(self.X, dtype=np.float64))
        if X.ndim != 2:
            raise SchemaError("X must be two-dimensional")
        n = X.shape[0]
        object.__setattr__(self, "columns", tuple(self.columns))
        if X.shape[1] != len(self.columns):
            raise SchemaError(f"X has {X.shape[1]} columns but {len(self.columns)} descriptors")
        object.__setattr__(self, "X", _readonly(X))
        for attr, dtype in (("y", np.float64), ("episodes", np.int64),
                            ("augmented", bool), ("source_index", np.int64)):
            v = getattr(self, attr)
            if v is None:
                continue
            v = np.array(v, dtype=dtype)
            if v.shape != (n,):
                raise SchemaError(f"{attr} has length {v.shape} but X has {n} rows")
            object.__setattr__(self, attr, _readonly(v))

    def __len__(self):
        return self.X.shape[0]

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_columns(self) -> int:
        return self.X.shape[1]

    @property
    def feature_names(self) -> list[str]:
        return [c.label(self.window) for c in self.columns]

    @property
    def fingerprint(self) -> str:
        return schema_fingerprint(self.columns)

    def column(self, name: str) -> np.ndarray:
        for j, c in enumerate(self.columns):
            if name in (c.name, c.label(self.window)):
                return self.X[:, j]
        raise KeyError(name)

    def onehot_group(self, feature: str, lag: int = 0) -> dict[str, int]:
        """Map level -> column index for one categorical feature at one lag."""
        return {c.level: j for j, c in enumerate(self.columns)
                if c.kind == ONEHOT and c.feature == feature and c.lag == lag}

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices)
        pick = lambda a: None if a is None else a[idx]  # noqa: E731
        return replace(self, X=self.X[idx], y=pick(self.y), episodes=pick(self.episodes),
                       augmented=pick(self.augmented), source_index=pick(self.source_index))

    def with_target(self, y) -> "Dataset":
        return replace(self, y=y)


def schema_fingerprint(columns: Iterable[Column]) -> str:
    payload = json.dumps([[c.feature, c.kind, c.level, c.lag] for c in columns])
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def concat(datasets: Sequence[Dataset]) -> Dataset:
    """Stack datasets that share one column layout."""
    first = datasets[0]
    for d in datasets[1:]:
        if d.columns != first.columns:
            raise SchemaError("cannot concatenate datasets with different columns")
    ys = [d.y for d in datasets]
    y = None if any(v is None for v in ys) else np.concatenate(ys)
    aug = np.concatenate([d.augmented if d.augmented is not None
                          else np.zeros(len(d), bool) for d in datasets])
    src = np.concatenate([d.source_index if d.source_index is not None
                          else np.full(len(d), -1) for d in datasets])
    return replace(first, X=np.vstack([d.X for d in datasets]), y=y, episodes=None,
                   augmented=aug, source_index=src)


def _parse_binary(values: np.ndarray, name: str) -> np.ndarray:
    low = np.char.lower(np.char.strip(values.astype(str)))
    out = np.full(len(low), np.nan)
    out[np.isin(low, list(_TRUE))] = 1.0
    out[np.isin(low, list(_FALSE))] = 0.0
    bad = np.flatnonzero(np.isnan(out))
    if bad.size:
        raise LevelError(f"binary column {name!r}: cannot read {values[bad[0]]!r}", row=int(bad[0]))
    return out


def load_csv(path, schema, target_column: str | None = None, episode_column: str | None = None) -> Dataset:
    """Read a comma-separated file with a header row into a :class:`Dataset`.

    ``schema`` is a :class:`Schema` or a list of :class:`FeatureSpec`.
    Categorical columns are expanded into one 0/1 column per level, binary
    columns map true/false style tokens to 1/0. Row indices in errors are
    0-based data rows (header excluded).
    """
    if isinstance(schema, Schema):
        specs = schema.features
        target_column = target_column if target_column is not None else schema.target
        episode_column = episode_column if episode_column is not None else schema.episode
    else:
        specs = tuple(schema)
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"data file not found: {path}")
    header = pd.read_csv(path, nrows=0, encoding="utf-8").columns
    needed = [s.name for s in specs] + [c for c in (target_column, episode_column) if c]
    for name in needed:
        if name not in header:
            raise SchemaError(f"column {name!r} missing from {path}")
    text_cols = {s.name for s in specs if s.kind != CONTINUOUS}
    if episode_column:
        text_cols.add(episode_column)
    frame = pd.read_csv(path, usecols=list(dict.fromkeys(needed)), encoding="utf-8",
                        dtype={c: str for c in text_cols}, keep_default_na=False,
                        na_values={c: [""] for c in header if c not in text_cols})

    def numeric(name):
        col = frame[name]
        vals = pd.to_numeric(col, errors="coerce").to_numpy(dtype=np.float64)
        bad = np.flatnonzero(~np.isfinite(vals))
        if bad.size:
            raise DataError(f"column {name!r}: cannot parse {col.iloc[bad[0]]!r} as a number",
                            row=int(bad[0]))
        return vals

    blocks, columns = [], []
    for spec in specs:
        if spec.kind == CONTINUOUS:
            blocks.append(numeric(spec.name)[:, None])
        elif spec.kind == BINARY:
            blocks.append(_parse_binary(frame[spec.name].to_numpy(), spec.name)[:, None])
        else:
            raw = frame[spec.name].to_numpy().astype(str)
            codes = pd.Categorical(np.char.strip(raw), categories=list(spec.levels)).codes
            bad = np.flatnonzero(codes < 0)
            if bad.size:
                raise LevelError(f"column {spec.name!r}: undeclared level {raw[bad[0]]!r}",
                                 row=int(bad[0]))
            onehot = np.zeros((len(raw), len(spec.levels)))
            onehot[np.arange(len(raw)), codes] = 1.0
            blocks.append(onehot)
        columns.extend(_columns_for(spec))
    n = len(frame)
    X = np.asfortranarray(np.hstack(blocks)) if blocks else np.zeros((n, 0))
    y = numeric(target_column) if target_column else None
    episodes = None
    if episode_column:
        episodes = pd.factorize(frame[episode_column].to_numpy())[0]
    logger.info("loaded %d rows x %d columns from %s", n, X.shape[1], path)
    return Dataset(X, tuple(columns), y=y, episodes=episodes)


def _episode_position(episodes: np.ndarray | None, n: int) -> np.ndarray:
    """Index of each row within its contiguous episode run."""
    if episodes is None or n == 0:
        return np.arange(n)
    starts = np.ones(n, dtype=bool)
    starts[1:] = episodes[1:] != episodes[:-1]
    start_idx = np.maximum.accumulate(np.where(starts, np.arange(n), 0))
    return np.arange(n) - start_idx


def lag_expand(dataset: Dataset, window: int, pad: float = 0.0) -> Dataset:
    """Append lagged copies ``f(t-1) .. f(t-(window-1))`` of every column.

    Rows must be in event order within each episode. Lags that reach back
    past the start of an episode are filled with ``pad``.
    """
    if window < 1:
        raise ConfigError("window must be >= 1")
    if dataset.window != 1:
        raise ConfigError("dataset is already lag-expanded")
    if window == 1:
        return dataset
    n = dataset.n_rows
    pos = _episode_position(dataset.episodes, n)
    X = dataset.X
    blocks, columns = [X], list(dataset.columns)
    for k in range(1, window):
        shifted = np.full_like(X, pad)
        if k < n:
            shifted[k:] = X[:-k]
        shifted[pos < k] = pad
        blocks.append(shifted)
        columns.extend(replace(c, lag=k) for c in dataset.columns)
    return replace(dataset, X=np.hstack(blocks), columns=tuple(columns), window=window)


@dataclass(frozen=True, eq=False)
class NormStats:
    """Per-column standardisation parameters.

    ``scale`` is the population standard deviation. Columns flagged in
    ``exempt`` (one-hot and binary) pass through untouched; columns with
    ``zero_variance`` map to zeros.
    """

    mean: np.ndarray
    scale: np.ndarray
    exempt: np.ndarray
    zero_variance: np.ndarray = field(default=None)

    def __post_init__(self):
        for attr in ("mean", "scale", "exempt", "zero_variance"):
            v = getattr(self, attr)
            if v is None:
                v = np.zeros(len(self.mean), bool)
            object.__setattr__(self, attr, _readonly(np.array(v)))

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("mean", "scale", "exempt", "zero_variance")}

    @classmethod
    def from_dict(cls, d) -> "NormStats":
        return cls(np.array(d["mean"], float), np.array(d["scale"], float),
                   np.array(d["exempt"], bool), np.array(d["zero_variance"], bool))


class Standardizer(TransformerMixin, BaseEstimator):
    """Zero-mean, unit-variance scaling restricted to selected columns.

    Parameters
    ----------
    continuous : array-like of bool, optional
        Mask of columns to scale; ``None`` scales every column.
    """

    def __init__(self, continuous=None):
        self.continuous = continuous

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64)
        mask = (np.ones(X.shape[1], bool) if self.continuous is None
                else np.asarray(self.continuous, bool))
        if mask.shape != (X.shape[1],):
            raise ConfigError("continuous mask does not match the number of columns")
        mean = np.where(mask, X.mean(axis=0), 0.0)
        centred = X - mean
        # std of the column divided by its largest deviation, rescaled: avoids
        # under- and overflow of the squares for extreme magnitudes
        amp = np.abs(centred).max(axis=0) if X.shape[0] else np.zeros(X.shape[1])
        safe = np.where(amp > 0, amp, 1.0)
        scale = np.where(mask, amp * (centred / safe).std(axis=0), 1.0)
        zero = mask & ((np.ptp(X, axis=0) == 0) | (scale == 0)) if X.shape[0] else mask.copy()
        scale[zero] = 0.0
        self.stats_ = NormStats(mean, scale, ~mask, zero)
        return self

    def transform(self, X):
        check_is_fitted(self, "stats_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return _apply_stats(X, self.stats_)


def _apply_stats(X: np.ndarray, stats: NormStats) -> np.ndarray:
    if X.shape[1] != len(stats.mean):
        raise SchemaError("norm stats do not match the number of columns")
    out = np.array(X, dtype=np.float64, order="F")
    for j in np.flatnonzero(~stats.exempt):
        if stats.zero_variance[j]:
            out[:, j] = 0.0
        else:
            out[:, j] = (X[:, j] - stats.mean[j]) / stats.scale[j]
    return out


def normalize(dataset: Dataset) -> tuple[Dataset, NormStats]:
    """Standardise the continuous columns; return the data and the fitted stats."""
    mask = np.array([c.kind == CONTINUOUS for c in dataset.columns], bool)
    stats = Standardizer(continuous=mask).fit(dataset.X).stats_
    return apply_norm(dataset, stats), stats


def apply_norm(dataset: Dataset, stats: NormStats) -> Dataset:
    """Scale ``dataset`` with previously fitted ``stats``."""
    return replace(dataset, X=_apply_stats(dataset.X, stats), norm_stats=stats)


def split_train_test(dataset: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Random disjoint split; row order is preserved inside each part.

    The training part gets ``ceil(N * (1 - f))`` rows, the test part
    ``floor(N * f)``.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n = dataset.n_rows
    if n < 2:
        raise ConfigError("need at least 2 rows to split")
    n_test = int(np.floor(n * test_fraction))
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return dataset.take(train_idx), dataset.take(test_idx)
