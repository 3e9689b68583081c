"""Synthetic teachers with a known piecewise-linear structure.

The planted teacher is itself an 8-leaf linear model tree over five
continuous features in ``[-1, 1]`` and a two-level ``action`` feature
(one-hot ``action=pass`` / ``action=shot``). Its outputs plus Gaussian
noise serve as soft labels when no real black-box model is at hand.

Run ``python -m mimictree.synthetic`` to act as a subprocess teacher that
speaks the oracle wire protocol.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .dataset import CONTINUOUS, ONEHOT, Column, Dataset

CONTINUOUS_NAMES = ("c0", "c1", "c2", "c3", "c4")
ACTION_LEVELS = ("pass", "shot")
SHOT = 6  # column index of action=shot


@dataclass(frozen=True)
class PlantedSplit:
    feature: int
    threshold: float
    left: object
    right: object


@dataclass(frozen=True)
class PlantedLeaf:
    weights: tuple[float, ...]
    intercept: float


def _leaf(intercept, **w):
    weights = [0.0] * 7
    for name, v in w.items():
        weights[CONTINUOUS_NAMES.index(name)] = v
    return PlantedLeaf(tuple(weights), intercept)


def _kink(feature: int, threshold: float, slope_left: float, slope_right: float,
          base: PlantedLeaf) -> PlantedSplit:
    """Split ``base`` on ``feature`` with a change of slope but no jump."""
    wl, wr = list(base.weights), list(base.weights)
    wl[feature], wr[feature] = slope_left, slope_right
    return PlantedSplit(feature, threshold, PlantedLeaf(tuple(wl), base.intercept),
                        PlantedLeaf(tuple(wr), base.intercept + (slope_left - slope_right) * threshold))


def _build_planted() -> PlantedSplit:
    # Root: c0 <= 0.3 with slopes 2 and 2*1.3/0.7 on either side. The output
    # is continuous in c0 on average, and f(0.3) sits mid-range, so both a
    # variance split and a hinge fit place their threshold at 0.3.
    t = 0.3
    a, b = 2.0, 2.0 * (1.0 + t) / (1.0 - t)
    # expected output of the remaining terms at c0 = t (uniform c1..c4,
    # P(shot) = 0.4): left 0.572, right -0.2125
    lift = 0.572 + 0.2125
    left = PlantedSplit(
        SHOT, 0.5,
        _kink(1, -0.2, -0.5, 1.0, _leaf(-a * t, c0=a, c4=0.3)),
        _kink(2, 0.4, 0.8, -1.2, _leaf(0.8 - a * t, c0=a)))
    right = PlantedSplit(
        3, 0.0,
        PlantedSplit(SHOT, 0.5, _leaf(lift - b * t, c0=b, c3=1.0, c4=-0.4),
                     _leaf(1.0 + lift - b * t, c0=b, c3=1.0)),
        _kink(1, 0.5, 0.3, 1.5, _leaf(lift - b * t, c0=b, c3=-0.8)))
    return PlantedSplit(0, t, left, right)


# depth-3 tree with 8 leaves
PLANTED_ROOT = _build_planted()


def planted_columns() -> tuple[Column, ...]:
    cols = [Column(n, CONTINUOUS) for n in CONTINUOUS_NAMES]
    cols += [Column("action", ONEHOT, lv) for lv in ACTION_LEVELS]
    return tuple(cols)


def planted_function(X: np.ndarray, node=PLANTED_ROOT) -> np.ndarray:
    """Noise-free output of the planted tree for each row of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    out = np.empty(X.shape[0])
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        nd, idx = stack.pop()
        if isinstance(nd, PlantedLeaf):
            out[idx] = X[idx] @ np.array(nd.weights) + nd.intercept
            continue
        go_left = X[idx, nd.feature] <= nd.threshold
        stack += [(nd.left, idx[go_left]), (nd.right, idx[~go_left])]
    return out


def planted_features(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    X = np.empty((n, 7))
    X[:, :5] = rng.uniform(-1.0, 1.0, size=(n, 5))
    shot = rng.random(n) < 0.4
    X[:, 5] = ~shot
    X[:, 6] = shot
    return X


def make_planted(n: int, seed: int = 0, noise: float = 0.01) -> Dataset:
    """Rows drawn uniformly, labelled by the planted tree plus ``N(0, noise**2)``.

    Episodes are consecutive blocks of 20 rows.
    """
    X = planted_features(n, seed)
    rng = np.random.default_rng([seed, 1])
    y = planted_function(X) + rng.normal(0.0, noise, n)
    return Dataset(X, planted_columns(), y=y, episodes=np.arange(n) // 20)


def make_wide(n: int, n_features: int = 20, seed: int = 0, noise: float = 0.05) -> Dataset:
    """Wider table for timing: the planted teacher on the first seven
    columns plus ``n_features - 7`` irrelevant continuous columns."""
    if n_features < 7:
        raise ValueError("need at least 7 features")
    rng = np.random.default_rng([seed, 2])
    base = planted_features(n, seed)
    extra = rng.uniform(-1.0, 1.0, size=(n, n_features - 7))
    X = np.hstack([base, extra])
    cols = planted_columns() + tuple(Column(f"z{j}", CONTINUOUS) for j in range(n_features - 7))
    y = planted_function(base) + rng.normal(0.0, noise, n)
    return Dataset(X, cols, y=y, episodes=np.arange(n) // 20)


def write_planted_csv(path, data: Dataset, target: str = "q", with_episode: bool = True) -> None:
    """Write a dataset from this module as a raw event CSV.

    One-hot action columns are folded back into a categorical ``action``
    column so that the file looks like ingested event data.
    """
    frame = {}
    for j, c in enumerate(data.columns):
        if c.kind != ONEHOT:
            frame[c.feature] = data.X[:, j]
    frame["action"] = np.where(data.X[:, SHOT] > 0.5, "shot", "pass")
    if with_episode and data.episodes is not None:
        frame["episode"] = data.episodes
    if data.y is not None:
        frame[target] = data.y
    pd.DataFrame(frame).to_csv(path, index=False, float_format="%.17g")


def schema_text(n_continuous: int = 5, extra: int = 0, target: str = "q") -> str:
    lines = [f"target = {target}", "episode = episode", "action = action"]
    lines += [f"feature.c{j} = continuous" for j in range(n_continuous)]
    lines += [f"feature.z{j} = continuous" for j in range(extra)]
    lines.append("feature.action = categorical: pass, shot")
    return "\n".join(lines) + "\n"


def serve_teacher(stdin=None, stdout=None) -> int:
    """Answer oracle-protocol requests with the noise-free planted tree.

    Expects rows laid out as ``c0..c4, action=pass, action=shot``.
    """
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    header = stdin.readline().strip()
    if not header.startswith("n_features="):
        print("bad header", file=sys.stderr)
        return 2
    k = int(header.split("=", 1)[1])
    rows = [line for line in stdin.read().splitlines() if line.strip()]
    X = np.array([[float(v) for v in r.split(",")] for r in rows]).reshape(-1, k)
    for v in planted_function(X[:, :7]):
        stdout.write(repr(float(v)) + "\n")
    stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(serve_teacher())
