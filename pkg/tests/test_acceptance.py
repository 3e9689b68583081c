"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line through the ``acceptance`` fixture; the
lines are printed in a summary section at the end of the pytest run. Run
this file directly to execute only these checks.
"""
import math
import sys
import time

import numpy as np
import pytest

from mimictree.breakpoint import (GMMConfig, best_split_variance, fit_gmm, fit_segmented,
                                  split_scores)
from mimictree.cli import main as cli_main
from mimictree.dataset import lag_expand
from mimictree.interpret import extract_rules, feature_importance, route_by_rules
from mimictree.mimic import AugmentationPlan, action_replace, compute_impact, fidelity
from mimictree.synthetic import make_planted, make_wide, schema_text, write_planted_csv
from mimictree.tree import GrowthConfig, PruneConfig, grow, load_tree, prune
from oracles import brute_force_variance_split, exact_sweep

HEURISTICS = ("variance", "ttest", "segmented", "gmm")
PLANTED_ROOT_FEATURE, PLANTED_ROOT_THRESHOLD = 0, 0.3
SCALE = 2**30

# every tree built here, with the min_leaf it was grown with and its training rows
TREES: list = []


def _remember(tree, X, m):
    TREES.append((tree, X, m))
    return tree


@pytest.fixture(scope="module")
def planted():
    train = make_planted(100_000, seed=1, noise=0.01)
    test = make_planted(20_000, seed=2, noise=0.01)
    fits = {}
    for h in HEURISTICS:
        t0 = time.perf_counter()
        tree = grow(train, GrowthConfig(heuristic=h, min_leaf=100))
        fits[h] = (_remember(tree, train.X, 100), time.perf_counter() - t0)
    return train, test, fits


@pytest.fixture(scope="module")
def pruning_fixture():
    data = make_planted(20_000, seed=11, noise=0.01)
    tree = grow(data, GrowthConfig(min_leaf=10))
    return data, _remember(tree, data.X, 10)


def test_criterion_01_incremental_statistics(acceptance):
    rng = np.random.default_rng(101)
    worst_red = worst_t = 0.0
    sweep_seconds = 0.0
    for _ in range(100):
        x = rng.normal(size=10_000)
        y_int = rng.integers(-SCALE, SCALE, size=10_000)
        y = y_int / SCALE
        t0 = time.perf_counter()
        # two rows per side: the smallest groups with a defined sample variance
        _, red, k = split_scores(x, y, 2, "variance")
        _, t, _ = split_scores(x, y, 2, "ttest")
        sweep_seconds += time.perf_counter() - t0
        k_ref, red_ref, t_ref = exact_sweep(x, y_int, SCALE, 2)
        assert np.array_equal(k, k_ref)
        worst_red = max(worst_red, float(np.max(np.abs(red - red_ref) / np.abs(red_ref))))
        worst_t = max(worst_t, float(np.max(np.abs(t - t_ref) / np.abs(t_ref))))
    ok = worst_red <= 1e-9 and worst_t <= 1e-9 and sweep_seconds < 60
    acceptance(1, ok, f"max rel err reduction {worst_red:.2e}, t {worst_t:.2e}; "
                      f"sweeps {sweep_seconds:.1f}s")
    assert ok


def test_criterion_02_exhaustive_argmax(acceptance):
    rng = np.random.default_rng(102)
    worst = 0.0
    threshold_mismatch = 0
    for trial in range(60):
        n = int(rng.integers(20, 1001))
        x = np.round(rng.uniform(-5, 5, n), int(rng.integers(1, 4)))
        y = np.where(x > rng.uniform(-3, 3), 1.0, 0.0) * rng.normal() + rng.normal(size=n)
        m = int(rng.integers(1, max(2, n // 10)))
        cand = best_split_variance(x, y, m)
        brute = brute_force_variance_split(x, y, m)
        best_c, best_score = max(brute, key=lambda p: p[1])
        rel = abs(cand.reduction - best_score) / best_score
        worst = max(worst, rel)
        if cand.threshold != best_c:
            # only acceptable when the two thresholds score equally
            scores = dict(brute)
            if abs(scores[cand.threshold] - best_score) > 1e-9 * best_score:
                threshold_mismatch += 1
    ok = worst <= 1e-9 and threshold_mismatch == 0
    acceptance(2, ok, f"60 trials, N<=1000: max rel score gap {worst:.2e}, "
                      f"{threshold_mismatch} threshold mismatches")
    assert ok


def test_criterion_03_segmented_hinge(acceptance):
    rng = np.random.default_rng(103)
    x = rng.uniform(0, 10, 10_000)
    y = np.minimum(x, 5.0)
    results = []
    for c0 in (1.0, 3.0, 5.0, 7.5, 9.0):
        fit = fit_segmented(x, y, c0, tol=1e-4 * np.ptp(x), max_iters=30)
        results.append((c0, abs(fit.breakpoint - 5.0), fit.n_iter, fit.converged))
    ok = all(err <= 1e-3 and it <= 30 and conv for _, err, it, conv in results)
    worst = max(r[1] for r in results)
    acceptance(3, ok, f"starts 1..9: max |c-5| {worst:.2e}, "
                      f"max iterations {max(r[2] for r in results)}")
    assert ok


def test_criterion_04_gmm_symmetry(acceptance):
    errs, deterministic = [], True
    for seed in range(5):
        rng = np.random.default_rng(seed)
        x = np.r_[rng.normal(0, 1, 4000), rng.normal(10, 1, 4000)]
        y = np.r_[rng.normal(-1, 1, 4000), rng.normal(1, 1, 4000)]
        a = fit_gmm(x, y, GMMConfig(seed=7))
        b = fit_gmm(x, y, GMMConfig(seed=7))
        errs.append(abs(a.boundary - 5.0))
        deterministic &= a.boundary == b.boundary
    ok = max(errs) <= 0.1 and deterministic
    acceptance(4, ok, f"5 datasets: max |boundary-5| {max(errs):.3f}, "
                      f"deterministic={deterministic}")
    assert ok


def test_criterion_05_synthetic_teacher_fidelity(acceptance, planted):
    train, test, fits = planted
    parts, ok = [], True
    total = 0.0
    for h, (tree, seconds) in fits.items():
        rep = fidelity(tree.predict_batch(test), test.y, train.y)
        total += seconds
        beats_null = rep.rmse < rep.null_rmse
        ok &= beats_null
        if h in ("variance", "segmented"):
            ok &= rep.pearson_r is not None and rep.pearson_r >= 0.99
        parts.append(f"{h} rmse {rep.rmse:.4f} r {rep.pearson_r:.5f}")
    ok &= total < 600
    acceptance(5, ok, f"null rmse {rep.null_rmse:.4f}; " + ", ".join(parts)
               + f"; growth {total:.0f}s")
    assert ok


def test_criterion_06_threshold_recovery(acceptance, planted):
    train, _, fits = planted
    span = np.ptp(train.X[:, PLANTED_ROOT_FEATURE])
    parts, ok = [], True
    for h in ("variance", "segmented"):
        root = fits[h][0].nodes[0]
        err = abs(root.threshold - PLANTED_ROOT_THRESHOLD)
        ok &= root.feature == PLANTED_ROOT_FEATURE and err <= 0.05 * span
        parts.append(f"{h} c{root.feature} <= {root.threshold:.4f} (err {err:.4f})")
    acceptance(6, ok, f"tolerance {0.05 * span:.4f}: " + ", ".join(parts))
    assert ok


def test_criterion_07_pruning(acceptance, pruning_fixture):
    data, tree = pruning_fixture
    grid = (0.0, 0.1, 1.0, 10.0, 100.0)
    counts = {norm: [prune(tree, data, PruneConfig(lam, norm)).node_count for lam in grid]
              for norm in ("l0", "l1", "l2")}
    shrinks = all(c <= tree.node_count for cs in counts.values() for c in cs)
    monotone = all(cs == sorted(cs, reverse=True) for cs in counts.values())
    l0_smaller = all(a <= b for a, b in zip(counts["l0"], counts["l1"]))
    ok = shrinks and monotone and l0_smaller
    acceptance(7, ok, f"grown {tree.node_count}; L0 {counts['l0']}, L1 {counts['l1']}, "
                      f"L2 {counts['l2']}")
    assert ok


def test_criterion_08_min_leaf(acceptance, planted, pruning_fixture):
    for h in HEURISTICS:
        small = make_planted(5_000, seed=21, noise=0.01)
        _remember(grow(small, GrowthConfig(heuristic=h, min_leaf=10)), small.X, 10)
    data, tree = pruning_fixture
    _remember(prune(tree, data, PruneConfig(1.0, "l0")), data.X, 10)
    smallest, bad = None, 0
    for tr, X, m in TREES:
        rows = tr.node_rows(X)
        for leaf in tr.leaves():
            size = rows[leaf.id].size
            smallest = size if smallest is None else min(smallest, size)
            bad += size < m
    ok = bad == 0
    acceptance(8, ok, f"{len(TREES)} trees (m in {{10, 100}}): "
                      f"{bad} undersized leaves, smallest leaf {smallest}")
    assert ok


def test_criterion_09_impact_telescoping(acceptance):
    rng = np.random.default_rng(109)
    exact_failures = 0
    worst_float = 0.0
    for _ in range(500):
        lengths = rng.integers(1, 40, size=int(rng.integers(1, 10)))
        episodes = np.repeat(np.arange(lengths.size), lengths)
        dyadic = rng.integers(-2**24, 2**24, size=episodes.size) / 2**24
        real = rng.normal(size=episodes.size)
        for q, exact in ((dyadic, True), (real, False)):
            impact = compute_impact(q, episodes)
            for e in range(lengths.size):
                sel = np.flatnonzero(episodes == e)
                if sel.size < 2:
                    continue
                cum = math.fsum(impact[sel[1:]])
                target = q[sel[-1]] - q[sel[0]]
                if exact:
                    exact_failures += cum != target
                else:
                    scale = np.abs(q[sel]).max()
                    worst_float = max(worst_float, abs(cum - target) / scale)
    ok = exact_failures == 0 and worst_float <= 64 * np.finfo(float).eps
    acceptance(9, ok, f"dyadic series: {exact_failures} inexact; "
                      f"real series: max gap {worst_float:.1e} x max|q|")
    assert ok


def test_criterion_10_augmentation_integrity(acceptance):
    data = lag_expand(make_planted(20_000, seed=110), 2)
    out = action_replace(data, AugmentationPlan("action", "shot", count=10_000, seed=5))
    group = data.onehot_group("action", lag=0)
    group_cols = sorted(group.values())
    other = [j for j in range(data.n_columns) if j not in group_cols]
    src = data.X[out.source_index]
    untouched = np.array_equal(out.X[:, other], src[:, other])
    target_set = bool((out.X[:, group["shot"]] == 1).all()
                      and (out.X[:, group_cols].sum(axis=1) == 1).all())
    no_same_source = bool((src[:, group["shot"]] == 0).all())
    lagged_kept = bool(np.array_equal(out.X[:, data.onehot_group("action", lag=1)["shot"]],
                                      src[:, data.onehot_group("action", lag=1)["shot"]]))
    ok = out.n_rows == 10_000 and untouched and target_set and no_same_source and lagged_kept
    acceptance(10, ok, f"{out.n_rows} samples: other columns identical={untouched}, "
                       f"target one-hot={target_set}, no source already shot={no_same_source}")
    assert ok


def test_criterion_11_scalability(acceptance, tmp_path):
    data = make_wide(1_000_000, 20, seed=111)
    csv = tmp_path / "wide.csv"
    write_planted_csv(csv, data)
    (tmp_path / "schema.txt").write_text(schema_text(5, 13))
    del data
    t0 = time.perf_counter()
    code = cli_main(["train", "--data", str(csv), "--schema", str(tmp_path / "schema.txt"),
                     "--out", str(tmp_path / "run"), "--threads", "1"])
    full_seconds = time.perf_counter() - t0
    n_features = load_tree(tmp_path / "run" / "tree.json").n_features if code == 0 else 0

    ratios = {}
    for h in ("variance", "ttest"):
        times = {}
        for n in (100_000, 200_000):
            d = make_wide(n, 20, seed=112)
            best = math.inf
            for _ in range(2):
                t1 = time.perf_counter()
                grow(d, GrowthConfig(heuristic=h, min_leaf=100))
                best = min(best, time.perf_counter() - t1)
            times[n] = best
        ratios[h] = times[200_000] / times[100_000]
    ok = code == 0 and n_features == 20 and full_seconds < 1800 and max(ratios.values()) <= 2.5
    acceptance(11, ok, f"1e6 x {n_features} train {full_seconds:.0f}s (1 thread); "
                       + ", ".join(f"{h} 1e5->2e5 x{r:.2f}" for h, r in ratios.items()))
    assert ok


def test_criterion_12_interpretation_consistency(acceptance, planted):
    _, _, fits = planted
    rng = np.random.default_rng(112)
    X = rng.uniform(-1, 1, (10_000, 7))
    shot = rng.random(10_000) < 0.4
    X[:, 5], X[:, 6] = ~shot, shot
    totals_exact, routed_same = True, True
    for tree, _ in fits.values():
        table = feature_importance(tree)
        totals_exact &= table.total == math.fsum(nd.variance_reduction
                                                 for nd in tree.internal_nodes())
        routed_same &= bool(np.array_equal(route_by_rules(extract_rules(tree), X), tree.apply(X)))
    ok = totals_exact and routed_same
    acceptance(12, ok, f"4 trees: totals exact={totals_exact}, "
                       f"1e4 rows routed identically={routed_same}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
