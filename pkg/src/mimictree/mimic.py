"""Teacher access, action-replacement augmentation, impact and fidelity.

Two teacher back ends are provided. :class:`AlignedFileOracle` reads a file
with one prediction per line, line ``i`` labelling row ``i``.
:class:`SubprocessOracle` launches a command and talks to it over pipes:

* stdin receives ``n_features=<k>`` followed by one comma-separated line of
  ``k`` decimal numbers per row, then EOF;
* stdout must carry exactly one decimal number per line, in row order.
"""
from __future__ import annotations

import io
import logging
import shlex
import subprocess
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .dataset import Dataset
from .exceptions import AugmentationError, ConfigError, DataError, OracleError, SchemaError

logger = logging.getLogger(__name__)


class OracleDataError(OracleError, DataError):
    """The teacher returned a label that is not a finite number."""


def _matrix(rows) -> np.ndarray:
    X = rows.X if isinstance(rows, Dataset) else rows
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ConfigError("oracle queries need a two-dimensional row block")
    return X


def _parse_labels(lines: Sequence[str], expected: int, source: str) -> np.ndarray:
    lines = [s for s in (ln.strip() for ln in lines) if s]
    if len(lines) != expected:
        raise OracleError(f"{source} returned {len(lines)} labels for {expected} rows",
                          row=min(len(lines), expected))
    out = np.empty(expected)
    for i, text in enumerate(lines):
        try:
            out[i] = float(text)
        except ValueError:
            raise OracleDataError(f"{source} returned unparseable label {text!r}", row=i) from None
        if not np.isfinite(out[i]):
            raise OracleDataError(f"{source} returned non-finite label {text!r}", row=i)
    return out


class OracleClient(Protocol):
    def query(self, rows) -> np.ndarray: ...


@dataclass(frozen=True)
class AlignedFileOracle:
    """Labels read from a newline-delimited file aligned with the dataset."""

    path: Path

    def __post_init__(self):
        object.__setattr__(self, "path", Path(self.path))

    def labels(self, expected: int) -> np.ndarray:
        if not self.path.is_file():
            raise ConfigError(f"labels file not found: {self.path}")
        return _parse_labels(self.path.read_text(encoding="utf-8").splitlines(), expected,
                             f"labels file {self.path}")

    def query(self, rows) -> np.ndarray:
        return self.labels(_matrix(rows).shape[0])


@dataclass(frozen=True)
class SubprocessOracle:
    """Teacher run as an external command speaking the line protocol.

    ``feature_names``, when given, is the column order the teacher expects;
    datasets with a different order are rejected. ``batch_size`` splits a
    large query over several launches of the command.
    """

    command: tuple[str, ...]
    feature_names: tuple[str, ...] | None = None
    timeout: float | None = None
    batch_size: int | None = None

    def __post_init__(self):
        cmd = self.command
        cmd = tuple(shlex.split(cmd)) if isinstance(cmd, str) else tuple(cmd)
        if not cmd:
            raise ConfigError("empty oracle command")
        object.__setattr__(self, "command", cmd)
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")

    def _run(self, X: np.ndarray, offset: int) -> np.ndarray:
        buf = io.StringIO()
        buf.write(f"n_features={X.shape[1]}\n")
        if X.size:
            np.savetxt(buf, X, fmt="%.17g", delimiter=",")
        elif X.shape[0]:
            buf.write("\n" * X.shape[0])
        try:
            proc = subprocess.run(self.command, input=buf.getvalue(), capture_output=True,
                                  text=True, timeout=self.timeout, check=False)
        except FileNotFoundError as exc:
            raise OracleError(f"cannot launch oracle {self.command[0]!r}: {exc}") from None
        except subprocess.TimeoutExpired:
            raise OracleError(f"oracle timed out after {self.timeout}s", row=offset) from None
        if proc.returncode != 0:
            tail = proc.stderr.strip().splitlines()[-1:] or [""]
            raise OracleError(f"oracle exited with status {proc.returncode}: {tail[0]}",
                              row=offset)
        try:
            return _parse_labels(proc.stdout.splitlines(), X.shape[0], "oracle")
        except OracleError as exc:
            row = None if exc.row is None else exc.row + offset
            raise type(exc)(str(exc).rsplit(" (at row", 1)[0], row=row) from None

    def query(self, rows) -> np.ndarray:
        if (self.feature_names is not None and isinstance(rows, Dataset)
                and tuple(rows.feature_names) != self.feature_names):
            raise SchemaError("dataset columns do not match the teacher's feature order")
        X = _matrix(rows)
        step = self.batch_size or max(X.shape[0], 1)
        parts = [self._run(X[i:i + step], i) for i in range(0, X.shape[0], step)]
        return np.concatenate(parts) if parts else np.empty(0)


def query_oracle(client: OracleClient, rows) -> np.ndarray:
    """Soft labels for ``rows`` (a :class:`Dataset` or a 2-D array), in order."""
    labels = np.asarray(client.query(rows), dtype=np.float64)
    n = _matrix(rows).shape[0]
    if labels.shape != (n,):
        raise OracleError(f"oracle returned {labels.size} labels for {n} rows")
    return labels


@dataclass(frozen=True)
class AugmentationPlan:
    """How many counterfactual rows to draw and which action to force.

    ``count`` takes precedence over ``rate``, which is a fraction of the
    source dataset's row count.
    """

    action_feature: str
    target_action: str
    rate: float = 0.1
    count: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.count is not None and self.count < 0:
            raise ConfigError("augmentation count must be >= 0")
        if not self.rate >= 0:
            raise ConfigError("augmentation rate must be >= 0")

    def size(self, n_rows: int) -> int:
        return self.count if self.count is not None else int(round(self.rate * n_rows))


def action_replace(dataset: Dataset, plan: AugmentationPlan) -> Dataset:
    """Copy randomly chosen rows with their current action swapped for the target.

    Only rows whose lag-0 action differs from ``plan.target_action`` are
    eligible. The copies have every column untouched except the lag-0
    action one-hot group, which becomes all zeros apart from the target
    level. Output rows carry no label, are flagged ``augmented`` and record
    their ``source_index``.
    """
    group = dataset.onehot_group(plan.action_feature, lag=0)
    if not group:
        raise AugmentationError(f"no one-hot group for action feature {plan.action_feature!r}")
    if plan.target_action not in group:
        raise AugmentationError(f"action {plan.target_action!r} is not a level of "
                                f"{plan.action_feature!r}; levels are {sorted(group)}")
    n_out = plan.size(dataset.n_rows)
    target_col = group[plan.target_action]
    cols = list(group.values())
    if n_out == 0:
        src = np.empty(0, dtype=np.int64)
    else:
        eligible = np.flatnonzero(dataset.X[:, target_col] < 0.5)
        if eligible.size == 0:
            raise AugmentationError(f"every row already has action {plan.target_action!r}")
        rng = np.random.default_rng(plan.seed)
        src = np.sort(rng.choice(eligible, size=n_out, replace=n_out > eligible.size))
    X = np.array(dataset.X[src], order="F")
    X[:, cols] = 0.0
    X[:, target_col] = 1.0
    return replace(dataset, X=X, y=None, episodes=None, augmented=np.ones(src.size, bool),
                   source_index=src)


def compute_impact(q, episode_ids, baseline: float = 0.0, skip_first: bool = False,
                   timestamps=None) -> np.ndarray:
    """Difference between consecutive action values within each episode.

    The first event of an episode is compared against ``baseline``, or gets
    NaN when ``skip_first`` is set. Episodes must be contiguous and, when
    ``timestamps`` are given, non-decreasing in time.
    """
    q = np.asarray(q, dtype=np.float64).ravel()
    ep = np.asarray(episode_ids).ravel()
    if ep.shape != q.shape:
        raise ConfigError("q and episode_ids differ in length")
    n = q.size
    if n == 0:
        return np.empty(0)
    first = np.ones(n, dtype=bool)
    first[1:] = ep[1:] != ep[:-1]
    seen = set()
    for s in np.flatnonzero(first):
        code = ep[s].item()
        if code in seen:
            raise DataError(f"episode {code!r} is not contiguous", row=int(s))
        seen.add(code)
    if timestamps is not None:
        ts = np.asarray(timestamps, dtype=np.float64).ravel()
        if ts.shape != q.shape:
            raise ConfigError("timestamps and q differ in length")
        back = np.flatnonzero((ts[1:] < ts[:-1]) & ~first[1:])
        if back.size:
            raise DataError("timestamp goes backwards within an episode", row=int(back[0] + 1))
    out = np.empty(n)
    out[1:] = q[1:] - q[:-1]
    out[first] = np.nan if skip_first else q[first] - baseline
    return out


@dataclass(frozen=True)
class FidelityReport:
    """Agreement between mimic predictions and teacher labels on a test set.

    ``pearson_r`` is ``None`` (and ``pearson_defined`` false) when either
    series is constant.
    """

    rmse: float
    pearson_r: float | None
    null_rmse: float
    n_test: int
    pearson_defined: bool = True
    null_mean: float = 0.0
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"rmse": self.rmse, "pearson_r": self.pearson_r,
                "pearson_defined": self.pearson_defined, "null_rmse": self.null_rmse,
                "null_mean": self.null_mean, "n_test": self.n_test, "metadata": self.metadata}


def null_model(train_soft) -> float:
    """Constant prediction used as the fidelity baseline: the training mean."""
    v = np.asarray(train_soft, dtype=np.float64)
    if v.size == 0:
        raise ConfigError("null model needs at least one training label")
    return float(v.mean())


def _rmse(a: np.ndarray, b: np.ndarray) -> float:
    d = a - b
    return float(np.sqrt(np.mean(d * d)))


def pearson(a, b) -> float | None:
    """Pearson correlation, or ``None`` when either series is constant."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return None
    da, db = a - a.mean(), b - b.mean()
    r = float(da @ db / np.sqrt((da @ da) * (db @ db)))
    return min(1.0, max(-1.0, r))


def fidelity(pred, soft, train_soft=None, metadata: dict | None = None) -> FidelityReport:
    """RMSE and correlation of ``pred`` against ``soft``, plus the null baseline.

    The null model predicts the mean of ``train_soft``; without training
    labels the mean of ``soft`` itself is used.
    """
    pred = np.asarray(pred, dtype=np.float64).ravel()
    soft = np.asarray(soft, dtype=np.float64).ravel()
    if pred.shape != soft.shape:
        raise ConfigError(f"prediction and label lengths differ ({pred.size} vs {soft.size})")
    if pred.size < 2:
        raise ConfigError("fidelity needs at least 2 rows")
    if not (np.isfinite(pred).all() and np.isfinite(soft).all()):
        raise DataError("non-finite values in fidelity inputs")
    base = null_model(soft if train_soft is None else train_soft)
    r = pearson(pred, soft)
    return FidelityReport(rmse=_rmse(pred, soft), pearson_r=r,
                          null_rmse=_rmse(np.full_like(soft, base), soft), n_test=int(pred.size),
                          pearson_defined=r is not None, null_mean=base,
                          metadata=dict(metadata or {}))
