"""Read a trained tree: feature importance, branch rules, graph export."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError
from .tree import L0_EPS, LeafModel, ModelTree

_LAG_TAG = re.compile(r"\((?:t0|t-\d+)\)$")


def _fmt(v: float) -> str:
    return f"{v:.4g}"


@dataclass(frozen=True)
class ImportanceRow:
    feature: str
    importance: float
    frequency: int


@dataclass(frozen=True)
class ImportanceTable:
    """Per-feature sum of split variance reductions and split counts.

    Rows are sorted by importance, largest first; features the tree never
    splits on are omitted. ``total`` is the correctly rounded sum of every
    split's reduction, so it does not depend on summation order.
    """

    rows: tuple[ImportanceRow, ...]
    total: float

    def __len__(self):
        return len(self.rows)

    def as_dict(self) -> dict[str, tuple[float, int]]:
        return {r.feature: (r.importance, r.frequency) for r in self.rows}

    def top(self, k: int | None) -> "ImportanceTable":
        return self if k is None else ImportanceTable(self.rows[:k], self.total)

    def normalized(self) -> "ImportanceTable":
        """Importances divided by the total, so that they sum to one."""
        if self.total == 0:
            return self
        return ImportanceTable(tuple(ImportanceRow(r.feature, r.importance / self.total,
                                                   r.frequency) for r in self.rows), 1.0)

    def aggregate_lags(self) -> "ImportanceTable":
        """Merge the lagged copies ``f(t0)``, ``f(t-1)``, ... of each feature."""
        imp: dict[str, list[float]] = {}
        freq: dict[str, int] = {}
        for r in self.rows:
            base = _LAG_TAG.sub("", r.feature)
            imp.setdefault(base, []).append(r.importance)
            freq[base] = freq.get(base, 0) + r.frequency
        rows = [ImportanceRow(f, math.fsum(v), freq[f]) for f, v in imp.items()]
        rows.sort(key=lambda r: -r.importance)
        return ImportanceTable(tuple(rows), self.total)

    def to_tsv(self) -> str:
        lines = ["feature\timportance\tfrequency"]
        lines += [f"{r.feature}\t{r.importance!r}\t{r.frequency}" for r in self.rows]
        return "\n".join(lines) + "\n"


def feature_importance(tree: ModelTree) -> ImportanceTable:
    """Importance of each feature: summed variance reduction of its splits."""
    parts: dict[int, list[float]] = {}
    for nd in tree.internal_nodes():
        parts.setdefault(nd.feature, []).append(nd.variance_reduction)
    rows = [ImportanceRow(tree.feature_names[j], math.fsum(v), len(v))
            for j, v in sorted(parts.items())]
    rows.sort(key=lambda r: -r.importance)  # stable: ties keep column order
    total = math.fsum(nd.variance_reduction for nd in tree.internal_nodes())
    return ImportanceTable(tuple(rows), total)


@dataclass(frozen=True)
class Condition:
    feature_index: int
    feature: str
    op: str  # "<=" or ">"
    threshold: float

    def holds(self, X: np.ndarray) -> np.ndarray:
        col = X[:, self.feature_index]
        return col <= self.threshold if self.op == "<=" else col > self.threshold

    def __str__(self):
        return f"{self.feature} {self.op} {_fmt(self.threshold)}"


@dataclass(frozen=True, eq=False)
class Rule:
    """Conjunction of conditions leading to one leaf, with that leaf's model."""

    leaf_id: int
    conditions: tuple[Condition, ...]
    n: int
    mean_y: float
    model: LeafModel
    feature_names: tuple[str, ...]

    def matches(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        ok = np.ones(X.shape[0], dtype=bool)
        for c in self.conditions:
            ok &= c.holds(X)
        return ok

    def model_text(self) -> str:
        terms = [_fmt(self.model.intercept)]
        for name, w in zip(self.feature_names, self.model.weights):
            if abs(w) > L0_EPS:
                sign = "-" if w < 0 else "+"
                terms.append(f"{sign} {_fmt(abs(w))}*{name}")
        return " ".join(terms)

    def text(self) -> str:
        cond = " AND ".join(str(c) for c in self.conditions) or "TRUE"
        return (f"leaf {self.leaf_id} (n={self.n}, mean={_fmt(self.mean_y)}): "
                f"IF {cond} THEN y = {self.model_text()}")


def _simplify(path: list[Condition]) -> tuple[Condition, ...]:
    # keep the tightest upper and lower bound per feature, in first-seen order
    upper: dict[int, Condition] = {}
    lower: dict[int, Condition] = {}
    order: list[tuple[int, str]] = []
    for c in path:
        book = upper if c.op == "<=" else lower
        if c.feature_index not in book:
            order.append((c.feature_index, c.op))
            book[c.feature_index] = c
        elif (c.op == "<=" and c.threshold < book[c.feature_index].threshold) or \
                (c.op == ">" and c.threshold > book[c.feature_index].threshold):
            book[c.feature_index] = c
    return tuple((upper if op == "<=" else lower)[j] for j, op in order)


def extract_rules(tree: ModelTree, leaf: int | None = None, min_n: int | None = None) -> list[Rule]:
    """One rule per leaf, in leaf-id order.

    ``leaf`` restricts the output to a single leaf id; ``min_n`` drops
    leaves with fewer training rows.
    """
    if leaf is not None and not (0 <= leaf < tree.node_count and tree.nodes[leaf].is_leaf):
        raise ConfigError(f"node {leaf} is not a leaf of this tree")
    rules = []
    stack: list[tuple[int, list[Condition]]] = [(tree.root, [])]
    while stack:
        nid, path = stack.pop()
        nd = tree.nodes[nid]
        if nd.is_leaf:
            if (leaf is None or nid == leaf) and (min_n is None or nd.n >= min_n):
                rules.append(Rule(nid, _simplify(path), nd.n, nd.mean_y, nd.model,
                                  tree.feature_names))
            continue
        name = tree.feature_names[nd.feature]
        stack.append((nd.right, path + [Condition(nd.feature, name, ">", nd.threshold)]))
        stack.append((nd.left, path + [Condition(nd.feature, name, "<=", nd.threshold)]))
    rules.sort(key=lambda r: r.leaf_id)
    return rules


def route_by_rules(rules: list[Rule], X) -> np.ndarray:
    """Leaf id of the rule each row satisfies; -1 when none does."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    out = np.full(X.shape[0], -1, dtype=np.int64)
    for r in rules:
        hit = r.matches(X)
        if (out[hit] != -1).any():
            raise ConfigError(f"rule for leaf {r.leaf_id} overlaps another rule")
        out[hit] = r.leaf_id
    return out


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def export_graph(tree: ModelTree, depth_limit: int | None = None) -> str:
    """DOT description of the tree.

    Split nodes read ``feature ≤ threshold`` with their row count and mean
    target; the left edge is the true branch. With ``depth_limit`` set,
    internal nodes at that depth are drawn as dashed summary nodes.
    """
    if depth_limit is not None and depth_limit < 0:
        raise ConfigError("depth_limit must be >= 0")
    lines = ["digraph model_tree {",
             f"  graph [comment={_quote('fingerprint=' + tree.fingerprint)}];",
             "  node [shape=box, fontname=\"Helvetica\"];"]
    stack = [tree.root]
    while stack:
        nd = tree.nodes[stack.pop()]
        stats = f"n={nd.n}, mean={_fmt(nd.mean_y)}"
        if nd.is_leaf:
            rule = Rule(nd.id, (), nd.n, nd.mean_y, nd.model, tree.feature_names)
            label = f"leaf {nd.id}\n{stats}\ny = {rule.model_text()}"
            lines.append(f"  n{nd.id} [label={_quote(label)}, shape=ellipse];")
        elif depth_limit is not None and nd.depth >= depth_limit:
            n_leaves = _count_leaves(tree, nd.id)
            label = f"subtree {nd.id}: {n_leaves} leaves\n{stats}"
            lines.append(f"  n{nd.id} [label={_quote(label)}, style=dashed];")
        else:
            label = f"{tree.feature_names[nd.feature]} ≤ {_fmt(nd.threshold)}\n{stats}"
            lines.append(f"  n{nd.id} [label={_quote(label)}];")
            lines.append(f"  n{nd.id} -> n{nd.left} [label=\"true\"];")
            lines.append(f"  n{nd.id} -> n{nd.right} [label=\"false\"];")
            stack += [nd.right, nd.left]
    lines.append("}")
    return "\n".join(lines) + "\n"


def _count_leaves(tree: ModelTree, nid: int) -> int:
    count, stack = 0, [nid]
    while stack:
        nd = tree.nodes[stack.pop()]
        if nd.is_leaf:
            count += 1
        else:
            stack += [nd.left, nd.right]
    return count
