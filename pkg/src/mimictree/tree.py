"""Linear model trees: growth, leaf regression, pruning, prediction, I/O.

A tree is an arena of immutable :class:`Node` records indexed by id, with
the root at id 0. Internal nodes send ``x[feature] <= threshold`` to the
left child; each leaf predicts ``weights @ x + intercept``.
"""
from __future__ import annotations

import json
import logging
import os
import tempfile
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .breakpoint import (GMMConfig, SegmentedConfig, SplitCandidate, best_split_gmm,
                         best_split_segmented, best_split_ttest, best_split_variance)
from .dataset import Dataset
from .exceptions import ConfigError, DataError, SchemaError

logger = logging.getLogger(__name__)

FORMAT_NAME = "mimictree.model-tree"
FORMAT_VERSION = 1
HEURISTIC_NAMES = ("variance", "ttest", "segmented", "gmm")
NORMS = ("l0", "l1", "l2")
L0_EPS = 1e-8


@dataclass(frozen=True, eq=False)
class LeafModel:
    """Linear model ``y = weights @ x + intercept`` with its training SSE."""

    weights: np.ndarray
    intercept: float
    loss: float = 0.0

    def predict(self, X: np.ndarray) -> np.ndarray:
        # column-by-column accumulation: identical rounding for 1 row or many
        out = np.full(X.shape[0], self.intercept, dtype=np.float64)
        for j, w in enumerate(self.weights):
            if w != 0.0:
                out += X[:, j] * w
        return out


@dataclass(frozen=True, eq=False)
class Node:
    id: int
    depth: int
    n: int
    mean_y: float
    feature: int = -1
    threshold: float = float("nan")
    left: int = -1
    right: int = -1
    variance_reduction: float = 0.0
    model: LeafModel | None = None

    @property
    def is_leaf(self) -> bool:
        return self.left < 0


@dataclass(frozen=True)
class GrowthConfig:
    """Tree growth settings.

    ``min_leaf`` is the minimum number of training rows per child,
    ``max_nodes`` an optional cap on the total node count, ``n_jobs`` the
    number of threads used to evaluate features of one node.
    """

    heuristic: str = "variance"
    min_leaf: int = 100
    max_depth: int = 12
    max_nodes: int | None = None
    seed: int = 0
    ridge_eps: float = 1e-8
    n_jobs: int = 1
    segmented: SegmentedConfig = field(default_factory=SegmentedConfig)
    gmm: GMMConfig = field(default_factory=GMMConfig)

    def __post_init__(self):
        if self.heuristic not in HEURISTIC_NAMES:
            raise ConfigError(f"unknown heuristic {self.heuristic!r}; choose from {HEURISTIC_NAMES}")
        if self.min_leaf < 2:
            raise ConfigError("min_leaf must be >= 2")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.max_nodes is not None and self.max_nodes < 1:
            raise ConfigError("max_nodes must be >= 1")
        if self.ridge_eps < 0:
            raise ConfigError("ridge_eps must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GrowthConfig":
        d = dict(d)
        d["segmented"] = SegmentedConfig(**d.get("segmented", {}))
        d["gmm"] = GMMConfig(**d.get("gmm", {}))
        return cls(**d)


@dataclass(frozen=True)
class PruneConfig:
    """Pruning penalty ``lam * R(w)`` with ``R`` the L0, L1 or L2 norm of the
    leaf weights (intercepts are not penalised)."""

    lam: float = 0.0
    norm: str = "l0"

    def __post_init__(self):
        if not self.lam >= 0:
            raise ConfigError("lambda must be >= 0")
        if self.norm not in NORMS:
            raise ConfigError(f"unknown norm {self.norm!r}; choose from {NORMS}")


@dataclass(frozen=True, eq=False)
class ModelTree:
    nodes: tuple[Node, ...]
    feature_names: tuple[str, ...]
    fingerprint: str
    growth_config: GrowthConfig
    prune_config: PruneConfig | None = None
    root: int = 0

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def leaves(self) -> list[Node]:
        return [nd for nd in self.nodes if nd.is_leaf]

    def internal_nodes(self) -> list[Node]:
        return [nd for nd in self.nodes if not nd.is_leaf]

    @property
    def depth(self) -> int:
        return max(nd.depth for nd in self.nodes)

    def _check_X(self, X) -> np.ndarray:
        if isinstance(X, Dataset):
            if X.fingerprint != self.fingerprint:
                raise ConfigError("dataset schema does not match the tree's schema")
            X = X.X
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ConfigError(f"expected rows with {self.n_features} features, got shape {X.shape}")
        if not np.isfinite(X).all():
            bad = int(np.flatnonzero(~np.isfinite(X).all(axis=1))[0])
            raise DataError("non-finite feature value", row=bad)
        return X

    def node_rows(self, X) -> dict[int, np.ndarray]:
        """Row indices of ``X`` reaching every node."""
        X = self._check_X(X)
        rows = {self.root: np.arange(X.shape[0])}
        stack = [self.root]
        while stack:
            nd = self.nodes[stack.pop()]
            if nd.is_leaf:
                continue
            idx = rows[nd.id]
            go_left = X[idx, nd.feature] <= nd.threshold
            rows[nd.left] = idx[go_left]
            rows[nd.right] = idx[~go_left]
            stack += [nd.right, nd.left]
        return rows

    def apply(self, X) -> np.ndarray:
        """Leaf id reached by each row."""
        X = self._check_X(X)
        out = np.empty(X.shape[0], dtype=np.int64)
        for nid, idx in self.node_rows(X).items():
            if self.nodes[nid].is_leaf:
                out[idx] = nid
        return out

    def predict_batch(self, X) -> np.ndarray:
        X = self._check_X(X)
        out = np.empty(X.shape[0], dtype=np.float64)
        for nid, idx in self.node_rows(X).items():
            nd = self.nodes[nid]
            if nd.is_leaf and idx.size:
                out[idx] = nd.model.predict(np.ascontiguousarray(X[idx]))
        return out

    def predict(self, row) -> float:
        row = np.asarray(row, dtype=np.float64).reshape(1, -1)
        return float(self.predict_batch(row)[0])

    def to_dict(self, metadata: dict | None = None) -> dict:
        nodes = []
        for nd in self.nodes:
            rec = {"id": nd.id, "depth": nd.depth, "n": nd.n, "mean_y": nd.mean_y}
            if nd.is_leaf:
                rec.update(weights=[float(w) for w in nd.model.weights],
                           intercept=nd.model.intercept, loss=nd.model.loss)
            else:
                rec.update(feature=nd.feature, threshold=nd.threshold, left=nd.left,
                           right=nd.right, variance_reduction=nd.variance_reduction)
            nodes.append(rec)
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "fingerprint": self.fingerprint,
            "feature_names": list(self.feature_names),
            "growth_config": self.growth_config.to_dict(),
            "prune_config": None if self.prune_config is None else asdict(self.prune_config),
            "root": self.root,
            "nodes": nodes,
            "metadata": metadata or {},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelTree":
        if doc.get("format") != FORMAT_NAME:
            raise SchemaError("not a model tree document")
        if doc.get("version") != FORMAT_VERSION:
            raise SchemaError(f"unsupported tree format version {doc.get('version')!r}")
        nodes = []
        for rec in doc["nodes"]:
            common = dict(id=int(rec["id"]), depth=int(rec["depth"]), n=int(rec["n"]),
                          mean_y=float(rec["mean_y"]))
            if "weights" in rec:
                model = LeafModel(np.array(rec["weights"], dtype=np.float64),
                                  float(rec["intercept"]), float(rec["loss"]))
                nodes.append(Node(**common, model=model))
            else:
                nodes.append(Node(**common, feature=int(rec["feature"]),
                                  threshold=float(rec["threshold"]), left=int(rec["left"]),
                                  right=int(rec["right"]),
                                  variance_reduction=float(rec["variance_reduction"])))
        if [nd.id for nd in nodes] != list(range(len(nodes))):
            raise SchemaError("node ids must be 0..n-1 in order")
        pc = doc.get("prune_config")
        return cls(tuple(nodes), tuple(doc["feature_names"]), doc["fingerprint"],
                   GrowthConfig.from_dict(doc["growth_config"]),
                   None if pc is None else PruneConfig(**pc), int(doc.get("root", 0)))


def save_tree(tree: ModelTree, path, metadata: dict | None = None) -> None:
    """Write ``tree`` as JSON; the file appears atomically or not at all."""
    path = Path(path)
    text = json.dumps(tree.to_dict(metadata), sort_keys=True, indent=1) + "\n"
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=".tree-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def load_tree(path) -> ModelTree:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        return ModelTree.from_dict(doc)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"corrupt tree file {path}: {exc}") from exc


def fit_leaf(X, y, ridge_eps: float = 1e-8) -> LeafModel:
    """Least squares linear model with a tiny ridge term for rank safety.

    Minimises ``sum((y - X @ w - b)**2) + ridge_eps * |w|**2``; the
    intercept is not penalised.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.size == 0:
        raise DataError("cannot fit a leaf model on zero rows")
    p = X.shape[1]
    y_mu = float(y.mean())
    if p == 0:
        w = np.zeros(0)
    else:
        x_mu = X.mean(axis=0)
        Xc = X - x_mu
        G = Xc.T @ Xc
        G[np.diag_indices(p)] += ridge_eps
        try:
            w = np.linalg.solve(G, Xc.T @ (y - y_mu))
        except np.linalg.LinAlgError:
            w = np.linalg.lstsq(G, Xc.T @ (y - y_mu), rcond=None)[0]
    b = y_mu - float(X.mean(axis=0) @ w) if p else y_mu
    model = LeafModel(w, b)
    resid = y - model.predict(X)
    return replace(model, loss=float(resid @ resid))


def penalty(weights: np.ndarray, cfg: PruneConfig) -> float:
    if cfg.norm == "l0":
        r = float(np.count_nonzero(np.abs(weights) > L0_EPS))
    elif cfg.norm == "l1":
        r = float(np.abs(weights).sum())
    else:
        r = float(weights @ weights)
    return cfg.lam * r


def node_loss(X, y, model: LeafModel, cfg: PruneConfig) -> float:
    """Squared residual loss of ``model`` on the rows plus ``lam * R(w)``."""
    resid = np.asarray(y, dtype=np.float64) - model.predict(np.asarray(X, dtype=np.float64))
    return float(resid @ resid) + penalty(model.weights, cfg)


def _proposer(cfg: GrowthConfig):
    m = cfg.min_leaf
    if cfg.heuristic == "variance":
        return lambda x, y, j: best_split_variance(x, y, m, j)
    if cfg.heuristic == "ttest":
        return lambda x, y, j: best_split_ttest(x, y, m, j)
    if cfg.heuristic == "segmented":
        return lambda x, y, j: best_split_segmented(x, y, m, cfg.segmented, j)
    gmm_cfg = replace(cfg.gmm, seed=cfg.seed)
    return lambda x, y, j: best_split_gmm(x, y, m, gmm_cfg, j)


def _best_candidate(X, y, idx, propose, pool) -> SplitCandidate | None:
    yn = y[idx]

    def one(j):
        try:
            return propose(X[idx, j], yn, j)
        except (DataError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            logger.warning("split search failed on feature %d: %s", j, exc)
            return None

    features = range(X.shape[1])
    cands = list(pool.map(one, features)) if pool is not None else [one(j) for j in features]
    best = None
    for c in cands:  # ascending feature order; ties keep the lower index
        if c is not None and (best is None or c.reduction > best.reduction):
            best = c
    return best


def grow_arrays(X, y, cfg: GrowthConfig | None = None, feature_names=None,
                fingerprint: str | None = None) -> ModelTree:
    """Grow a tree on a plain feature matrix and target vector.

    Nodes are expanded breadth first. At each node every feature proposes
    one threshold with the configured heuristic; the proposal with the
    largest weighted variance reduction is applied when it is positive and
    leaves at least ``min_leaf`` rows on each side. Leaves receive least
    squares linear models over all features.
    """
    cfg = cfg or GrowthConfig()
    X = np.asfortranarray(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ConfigError("X must be 2-D with one row per target value")
    if y.size == 0:
        raise ConfigError("cannot grow a tree on an empty dataset")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise DataError("non-finite values in training data")
    if feature_names is None:
        feature_names = [f"x{j}" for j in range(X.shape[1])]
    feature_names = tuple(feature_names)
    if fingerprint is None:
        from .dataset import Column, schema_fingerprint
        fingerprint = schema_fingerprint(Column(n, "continuous") for n in feature_names)
    propose = _proposer(cfg)
    cap = cfg.max_nodes or np.inf
    pool = ThreadPoolExecutor(cfg.n_jobs) if cfg.n_jobs > 1 else None

    records: list[dict] = [dict(id=0, depth=0, idx=np.arange(y.size))]
    queue = deque([0])
    try:
        while queue:
            rec = records[queue.popleft()]
            idx = rec["idx"]
            rec.update(n=int(idx.size), mean_y=float(y[idx].mean()))
            if (rec["depth"] >= cfg.max_depth or idx.size < 2 * cfg.min_leaf
                    or len(records) + 2 > cap):
                continue
            cand = _best_candidate(X, y, idx, propose, pool)
            if cand is None or not cand.reduction > 0:
                continue
            go_left = X[idx, cand.feature_index] <= cand.threshold
            n_left = int(go_left.sum())
            if n_left < cfg.min_leaf or idx.size - n_left < cfg.min_leaf:
                continue
            lid, rid = len(records), len(records) + 1
            records.append(dict(id=lid, depth=rec["depth"] + 1, idx=idx[go_left]))
            records.append(dict(id=rid, depth=rec["depth"] + 1, idx=idx[~go_left]))
            rec.update(feature=cand.feature_index, threshold=cand.threshold, left=lid,
                       right=rid, variance_reduction=cand.reduction)
            queue += [lid, rid]
    finally:
        if pool is not None:
            pool.shutdown()

    nodes = []
    for rec in records:
        idx = rec.pop("idx")
        if "left" not in rec:
            rec["model"] = fit_leaf(X[idx], y[idx], cfg.ridge_eps)
        nodes.append(Node(**rec))
    logger.info("grew tree with %d nodes (%d leaves)", len(nodes),
                sum(nd.is_leaf for nd in nodes))
    return ModelTree(tuple(nodes), feature_names, fingerprint, cfg)


def grow(train: Dataset, cfg: GrowthConfig | None = None) -> ModelTree:
    """Grow a tree on a labelled :class:`Dataset`."""
    if train.y is None:
        raise ConfigError("training dataset has no target column")
    cfg = cfg or GrowthConfig()
    if train.n_rows < 2 * cfg.min_leaf:
        logger.warning("only %d rows for min_leaf=%d; the tree will be a single leaf",
                       train.n_rows, cfg.min_leaf)
    return grow_arrays(train.X, train.y, cfg, train.feature_names, train.fingerprint)


def prune_arrays(tree: ModelTree, X, y, cfg: PruneConfig) -> ModelTree:
    """Collapse splits whose parent model beats its two leaf children.

    For each parent ``v`` of two leaves, a leaf model is fitted on ``v``'s
    rows and the split is removed when ``E_v < E_left + E_right`` with
    ``E = SSE + lam * R(w)``. Children are visited first, so a parent whose
    children both collapse is examined afterwards; one post-order pass
    therefore reaches the fixpoint.
    """
    X = tree._check_X(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != X.shape[0]:
        raise ConfigError("X and y differ in length")
    rows = tree.node_rows(X)
    eps = tree.growth_config.ridge_eps

    def visit(nid):
        nd = tree.nodes[nid]
        idx = rows[nid]
        if nd.is_leaf:
            model = nd.model
            loss = node_loss(X[idx], y[idx], model, cfg) if idx.size else penalty(model.weights, cfg)
            return {"node": nd, "model": model, "loss": loss}
        left, right = visit(nd.left), visit(nd.right)
        if "model" in left and "model" in right and idx.size:
            model = fit_leaf(X[idx], y[idx], eps)
            e_v = node_loss(X[idx], y[idx], model, cfg)
            if e_v < left["loss"] + right["loss"]:
                return {"node": nd, "model": model, "loss": e_v}
        return {"node": nd, "children": (left, right)}

    top = visit(tree.root)
    # renumber breadth first so ids stay compact
    nodes: list[Node] = []
    queue = deque([(top, 0)])
    next_id = 1
    while queue:
        item, new_id = queue.popleft()
        nd = item["node"]
        if "model" in item:
            nodes.append(Node(new_id, nd.depth, nd.n, nd.mean_y, model=item["model"]))
        else:
            lid, next_id = next_id, next_id + 2
            left, right = item["children"]
            nodes.append(Node(new_id, nd.depth, nd.n, nd.mean_y, nd.feature, nd.threshold,
                              lid, lid + 1, nd.variance_reduction))
            queue += [(left, lid), (right, lid + 1)]
    return replace(tree, nodes=tuple(nodes), prune_config=cfg)


def prune(tree: ModelTree, train: Dataset, cfg: PruneConfig) -> ModelTree:
    """Prune with a :class:`Dataset`, whose schema must match the tree's."""
    if train.fingerprint != tree.fingerprint:
        raise ConfigError("dataset schema does not match the tree's schema")
    if train.y is None:
        raise ConfigError("pruning dataset has no target column")
    return prune_arrays(tree, train.X, train.y, cfg)


def predict(tree: ModelTree, row) -> float:
    return tree.predict(row)


def predict_batch(tree: ModelTree, data) -> np.ndarray:
    return tree.predict_batch(data)
