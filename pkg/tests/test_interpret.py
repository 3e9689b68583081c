import math

import numpy as np
import pydot
import pytest

from mimictree.exceptions import ConfigError
from mimictree.interpret import (Condition, Rule, _simplify, export_graph, extract_rules,
                                 feature_importance, route_by_rules)
from mimictree.tree import GrowthConfig, grow_arrays


def _step_tree(n=1000, seed=0, max_depth=1, n_noise=2):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, 1 + n_noise))
    y = np.where(X[:, 0] <= 0.0, 0.0, 1.0)
    return grow_arrays(X, y, GrowthConfig(min_leaf=10, max_depth=max_depth)), X


def _deep_tree(n=4000, seed=1):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (n, 4))
    y = np.sin(3 * X[:, 0]) * np.cos(2 * X[:, 1]) + np.abs(X[:, 2]) + rng.normal(0, 0.05, n)
    return grow_arrays(X, y, GrowthConfig(min_leaf=20)), X


# importance

def test_single_split_importance():
    tree, _ = _step_tree()
    table = feature_importance(tree)
    assert len(table) == 1
    row = table.rows[0]
    assert row.feature == "x0" and row.frequency == 1
    assert row.importance == tree.nodes[0].variance_reduction == table.total


def test_single_leaf_has_empty_table():
    tree = grow_arrays(np.zeros((10, 2)), np.ones(10), GrowthConfig(min_leaf=5))
    table = feature_importance(tree)
    assert len(table) == 0 and table.total == 0.0
    assert table.to_tsv() == "feature\timportance\tfrequency\n"
    assert table.normalized().total == 0.0


def test_dominant_feature_ranks_first():
    rng = np.random.default_rng(2)
    X = rng.uniform(-1, 1, (5000, 10))
    y = 3 * np.sign(X[:, 4]) + 0.1 * rng.normal(size=5000)
    tree = grow_arrays(X, y, GrowthConfig(min_leaf=50))
    table = feature_importance(tree)
    assert table.rows[0].feature == "x4"
    assert table.rows[0].importance > 0.9 * table.total


def test_importance_total_and_normalization():
    tree, _ = _deep_tree()
    table = feature_importance(tree)
    reductions = [nd.variance_reduction for nd in tree.internal_nodes()]
    assert table.total == math.fsum(reductions)
    assert math.fsum(r.importance for r in table.rows) == pytest.approx(table.total, rel=1e-12)
    assert sum(r.frequency for r in table.rows) == len(reductions)
    norm = table.normalized()
    assert math.fsum(r.importance for r in norm.rows) == pytest.approx(1.0, rel=1e-12)
    imps = [r.importance for r in table.rows]
    assert imps == sorted(imps, reverse=True)
    assert len(table.top(2)) == 2 and table.top(None) is table


def test_lag_aggregation():
    from mimictree.interpret import ImportanceRow, ImportanceTable
    t = ImportanceTable((ImportanceRow("a(t0)", 3.0, 2), ImportanceRow("b(t0)", 2.0, 1),
                         ImportanceRow("a(t-1)", 0.5, 1)), 5.5)
    agg = t.aggregate_lags()
    assert agg.as_dict() == {"a": (3.5, 3), "b": (2.0, 1)}


# rules

def test_depth_one_rules():
    tree, _ = _step_tree()
    rules = extract_rules(tree)
    assert len(rules) == 2
    left, right = rules
    assert [str(c.op) for c in left.conditions] == ["<="]
    assert [str(c.op) for c in right.conditions] == [">"]
    assert left.conditions[0].threshold == right.conditions[0].threshold == tree.nodes[0].threshold
    assert left.text().startswith(f"leaf {left.leaf_id} (n={left.n}, ")
    assert " IF x0 <= " in left.text() and " THEN y = " in left.text()


def test_repeated_feature_keeps_tightest_bound():
    conds = [Condition(0, "a", "<=", 5.0), Condition(1, "b", ">", 0.0),
             Condition(0, "a", "<=", 3.0), Condition(0, "a", ">", 1.0),
             Condition(0, "a", ">", 2.0)]
    out = _simplify(conds)
    assert [str(c) for c in out] == ["a <= 3", "b > 0", "a > 2"]


def test_rules_route_like_the_tree():
    tree, X = _deep_tree()
    rng = np.random.default_rng(3)
    Xq = rng.uniform(-1.2, 1.2, (1000, 4))
    rules = extract_rules(tree)
    assert len(rules) == len(tree.leaves())
    assert np.array_equal(route_by_rules(rules, Xq), tree.apply(Xq))


def test_rule_filters_and_bad_leaf():
    tree, _ = _deep_tree()
    leaf = tree.leaves()[0]
    assert [r.leaf_id for r in extract_rules(tree, leaf=leaf.id)] == [leaf.id]
    big = extract_rules(tree, min_n=200)
    assert all(r.n >= 200 for r in big)
    with pytest.raises(ConfigError):
        extract_rules(tree, leaf=0)
    with pytest.raises(ConfigError):
        extract_rules(tree, leaf=10**6)


def test_overlapping_rules_are_reported():
    tree, _ = _step_tree()
    rule = extract_rules(tree)[0]
    clone = Rule(99, rule.conditions, rule.n, rule.mean_y, rule.model, rule.feature_names)
    with pytest.raises(ConfigError, match="overlaps"):
        route_by_rules([rule, clone], np.full((1, 3), -0.5))


# graph export

def _parse(dot):
    graphs = pydot.graph_from_dot_data(dot)
    assert graphs is not None and len(graphs) == 1
    return graphs[0]


def test_graph_is_valid_dot_with_every_node():
    tree, _ = _deep_tree()
    g = _parse(export_graph(tree))
    names = {n.get_name() for n in g.get_nodes()} - {"node", "graph", "edge"}
    assert names == {f"n{nd.id}" for nd in tree.nodes}
    assert len(g.get_edges()) == 2 * len(tree.internal_nodes())
    labels = {e.get_label() for e in g.get_edges()}
    assert labels == {'"true"', '"false"'}
    assert tree.fingerprint in export_graph(tree)


def test_split_label_contents():
    tree, _ = _step_tree()
    dot = export_graph(tree)
    root = tree.nodes[0]
    assert f"x0 ≤ {root.threshold:.4g}\\nn={root.n}, mean=" in dot


def test_depth_limit_summarizes_subtrees():
    tree, _ = _deep_tree()
    g = _parse(export_graph(tree, depth_limit=1))
    names = {n.get_name() for n in g.get_nodes()} - {"node", "graph", "edge"}
    assert names == {"n0", "n1", "n2"}
    assert export_graph(tree, depth_limit=1).count("style=dashed") == sum(
        not tree.nodes[c].is_leaf for c in (1, 2))
    with pytest.raises(ConfigError):
        export_graph(tree, depth_limit=-1)


def test_graph_is_deterministic():
    a, _ = _deep_tree()
    b, _ = _deep_tree()
    assert export_graph(a) == export_graph(b)
