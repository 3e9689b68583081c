"""Command-line front end: ``mimictree train | explain | bench``."""
from __future__ import annotations

import argparse
import json
import logging
import multiprocessing as mp
import os
import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .dataset import Schema, concat, lag_expand, load_csv, load_schema, normalize, \
    parse_feature_flag, split_train_test
from .exceptions import ConfigError, MimicTreeError
from .interpret import export_graph, extract_rules, feature_importance
from .mimic import AlignedFileOracle, AugmentationPlan, SubprocessOracle, action_replace, \
    fidelity, query_oracle
from .tree import HEURISTIC_NAMES, GrowthConfig, PruneConfig, grow, load_tree, prune, save_tree

logger = logging.getLogger("mimictree")

STAGES = ("split", "augment", "grow")


def stage_seeds(master: int) -> dict[str, int]:
    """Independent per-stage seeds derived from one master seed."""
    children = np.random.SeedSequence(master).spawn(len(STAGES))
    return {name: int(ss.generate_state(1)[0]) for name, ss in zip(STAGES, children)}


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _require_file(path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{what} not found: {p}")
    return p


def _header(meta: dict) -> str:
    return "".join(f"# {k}={json.dumps(v, sort_keys=True)}\n" for k, v in meta.items())


def _build_schema(args) -> Schema:
    if args.schema is None and not args.feature:
        raise ConfigError("give --schema or at least one --feature")
    if args.schema is not None:
        schema = load_schema(_require_file(args.schema, "schema file"))
    else:
        schema = Schema(())
    extra = tuple(parse_feature_flag(f) for f in args.feature or ())
    changes = {"features": schema.features + extra}
    for key, val in (("target", args.target), ("episode", args.episode),
                     ("action", args.action_column), ("window", args.window)):
        if val is not None:
            changes[key] = val
    return replace(schema, **changes)


def cmd_train(args) -> int:
    data_path = _require_file(args.data, "data file")
    schema = _build_schema(args)
    if args.labels_file is not None:
        _require_file(args.labels_file, "labels file")
    if args.labels_file and args.oracle_cmd:
        raise ConfigError("--labels-file and --oracle-cmd are mutually exclusive")
    oracle = None
    if args.oracle_cmd:
        oracle = SubprocessOracle(args.oracle_cmd, timeout=args.oracle_timeout)
    elif args.labels_file:
        oracle = AlignedFileOracle(args.labels_file)
    elif schema.target is None:
        raise ConfigError("no labels: give --target, --labels-file or --oracle-cmd")
    if args.augment_action and not args.oracle_cmd:
        raise ConfigError("--augment-action needs --oracle-cmd to label counterfactual rows")
    if args.augment_action and schema.action is None:
        raise ConfigError("--augment-action needs an action feature (schema 'action' key "
                          "or --action-column)")
    out_dir = Path(args.out)
    seeds = stage_seeds(args.seed)
    t0 = time.perf_counter()

    raw = load_csv(data_path, schema, target_column=schema.target if oracle is None else "")
    data, stats = normalize(raw)
    data = lag_expand(data, schema.window, schema.pad)
    if oracle is not None:
        data = data.with_target(query_oracle(oracle, data))
    train, test = split_train_test(data, args.test_fraction, seeds["split"])
    n_observed = train.n_rows
    train_soft = train.y
    if args.augment_action:
        plan = AugmentationPlan(schema.action, args.augment_action, rate=args.augment_rate,
                                seed=seeds["augment"])
        extra = action_replace(train, plan)
        if extra.n_rows:
            train = concat([train, extra.with_target(query_oracle(oracle, extra))])
    t_ingest = time.perf_counter()

    gcfg = GrowthConfig(heuristic=args.heuristic, min_leaf=args.min_leaf,
                        max_depth=args.max_depth, max_nodes=args.max_nodes,
                        seed=seeds["grow"], n_jobs=args.threads)
    pcfg = PruneConfig(args.lam, args.norm)
    grown = grow(train, gcfg)
    tree = prune(grown, train, pcfg)
    t_fit = time.perf_counter()
    pred = tree.predict_batch(test)
    report = fidelity(pred, test.y, train_soft,
                      metadata={"heuristic": args.heuristic, "nodes_grown": grown.node_count,
                                "nodes_pruned": tree.node_count})

    # output location and verbosity do not affect results; keep reruns byte-identical
    config = {k: v for k, v in sorted(vars(args).items())
              if k not in ("func", "out", "verbose", "threads")}
    meta = {"config": config, "seed": args.seed, "stage_seeds": seeds,
            "fingerprint": tree.fingerprint}
    doc = {**meta,
           "fidelity": report.to_dict(),
           "data": {"n_rows": data.n_rows, "n_train": n_observed,
                    "n_augmented": train.n_rows - n_observed, "n_test": test.n_rows,
                    "features": data.feature_names},
           "tree": {"nodes": tree.node_count, "leaves": len(tree.leaves()), "depth": tree.depth}}
    r = report.pearson_r
    summary = (
        f"heuristic      {args.heuristic}\n"
        f"seed           {args.seed}\n"
        f"fingerprint    {tree.fingerprint}\n"
        f"rows           train {n_observed} (+{train.n_rows - n_observed} augmented), "
        f"test {test.n_rows}\n"
        f"tree           {grown.node_count} nodes grown, {tree.node_count} after pruning, "
        f"{len(tree.leaves())} leaves, depth {tree.depth}\n"
        f"test rmse      {report.rmse:.6g}\n"
        f"null rmse      {report.null_rmse:.6g}\n"
        f"pearson r      {'undefined' if r is None else f'{r:.6f}'}\n")

    out_dir.mkdir(parents=True, exist_ok=True)
    save_tree(tree, out_dir / "tree.json",
              metadata={**meta, "norm_stats": stats.to_dict(), "window": schema.window})
    _atomic_write(out_dir / "report.json", json.dumps(doc, sort_keys=True, indent=1) + "\n")
    _atomic_write(out_dir / "summary.txt", summary)
    logger.info("ingest %.2fs, fit %.2fs, total %.2fs", t_ingest - t0, t_fit - t_ingest,
                time.perf_counter() - t0)
    print(summary, end="")
    return 0


def cmd_explain(args) -> int:
    tree_path = _require_file(args.tree, "tree file")
    tree = load_tree(tree_path)
    out_dir = Path(args.out) if args.out else tree_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = json.loads(tree_path.read_text(encoding="utf-8"))
    saved = doc.get("metadata", {})
    meta = {"tree": str(tree_path), "fingerprint": tree.fingerprint,
            "seed": saved.get("seed"), "config": saved.get("config"),
            "growth_config": tree.growth_config.to_dict()}

    table = feature_importance(tree)
    if args.aggregate_lags:
        table = table.aggregate_lags()
    if args.normalized:
        table = table.normalized()
    table = table.top(args.top)
    rules = extract_rules(tree, min_n=args.min_n)
    rules_text = "".join(r.text() + "\n" for r in rules)
    graph = export_graph(tree, args.depth)

    _atomic_write(out_dir / "importance.tsv", _header(meta) + table.to_tsv())
    _atomic_write(out_dir / "rules.txt", _header(meta) + rules_text)
    dot_header = "".join("// " + ln[2:] + "\n" for ln in _header(meta).splitlines())
    _atomic_write(out_dir / "tree.dot", dot_header + graph)
    print(table.to_tsv(), end="")
    return 0


def _bench_job(heuristic: str, n_rows: int, n_features: int, min_leaf: int, max_depth: int,
               seed: int, queue) -> None:
    from .synthetic import make_wide

    data = make_wide(n_rows, n_features, seed=seed)
    t0 = time.perf_counter()
    tree = grow(data, GrowthConfig(heuristic=heuristic, min_leaf=min_leaf, max_depth=max_depth,
                                   seed=seed))
    queue.put((time.perf_counter() - t0, tree.node_count))


def run_bench(heuristics, sizes, n_features=20, min_leaf=100, max_depth=12, budget=600.0,
              seed=0) -> list[dict]:
    """Time tree growth per heuristic and size, each run in its own process.

    A run still going after ``budget`` seconds is killed and reported with
    ``timeout`` set.
    """
    ctx = mp.get_context("fork" if "fork" in mp.get_all_start_methods() else "spawn")
    rows = []
    for n in sizes:
        for h in heuristics:
            queue = ctx.Queue()
            proc = ctx.Process(target=_bench_job,
                               args=(h, n, n_features, min_leaf, max_depth, seed, queue))
            proc.start()
            proc.join(budget)
            if proc.is_alive():
                proc.terminate()
                proc.join()
                rows.append(dict(heuristic=h, n_rows=n, n_features=n_features,
                                 seconds=float(budget), nodes=-1, timeout=True))
                continue
            if proc.exitcode != 0 or queue.empty():
                raise MimicTreeError(f"bench run {h} at n={n} failed (exit {proc.exitcode})")
            seconds, nodes = queue.get()
            rows.append(dict(heuristic=h, n_rows=n, n_features=n_features, seconds=seconds,
                             nodes=nodes, timeout=False))
            logger.info("bench %s n=%d: %.3fs", h, n, seconds)
    return rows


def bench_tsv(rows: list[dict]) -> str:
    lines = ["heuristic\tn_rows\tn_features\tseconds\tnodes\ttimeout"]
    lines += [f"{r['heuristic']}\t{r['n_rows']}\t{r['n_features']}\t{r['seconds']:.4f}\t"
              f"{r['nodes']}\t{int(r['timeout'])}" for r in rows]
    return "\n".join(lines) + "\n"


def cmd_bench(args) -> int:
    sizes = [int(float(s)) for s in args.sizes.split(",")]
    heuristics = args.heuristics.split(",")
    for h in heuristics:
        if h not in HEURISTIC_NAMES:
            raise ConfigError(f"unknown heuristic {h!r}")
    rows = run_bench(heuristics, sizes, args.features, args.min_leaf, args.max_depth,
                     args.budget, args.seed)
    text = bench_tsv(rows)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(out, _header({"seed": args.seed, "budget": args.budget}) + text)
    print(text, end="")
    if args.strict and any(r["timeout"] for r in rows):
        print("mimictree: error: bench budget exceeded", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mimictree", description="Mimic a black-box regressor "
                                "with a linear model tree.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="ingest, label, grow, prune and evaluate a tree")
    t.add_argument("--data", required=True, help="event CSV with a header row")
    t.add_argument("--schema", help="key = value schema file")
    t.add_argument("--feature", action="append", metavar="NAME:KIND[:LEVELS]",
                   help="declare a feature on the command line (repeatable)")
    t.add_argument("--target", help="column holding soft labels")
    t.add_argument("--episode", help="episode id column")
    t.add_argument("--action-column", help="categorical feature holding the action")
    t.add_argument("--window", type=int, help="history window for lagged features")
    t.add_argument("--heuristic", choices=HEURISTIC_NAMES, default="variance")
    t.add_argument("--min-leaf", type=int, default=100)
    t.add_argument("--max-depth", type=int, default=12)
    t.add_argument("--max-nodes", type=int)
    t.add_argument("--lambda", dest="lam", type=float, default=0.0,
                   help="pruning penalty weight (default 0)")
    t.add_argument("--norm", choices=("l0", "l1", "l2"), default="l0")
    src = t.add_mutually_exclusive_group()
    src.add_argument("--oracle-cmd", help="teacher command speaking the line protocol")
    src.add_argument("--labels-file", help="one label per line, aligned with --data rows")
    t.add_argument("--oracle-timeout", type=float)
    t.add_argument("--augment-action", help="action level to substitute into sampled rows")
    t.add_argument("--augment-rate", type=float, default=0.1,
                   help="augmented rows as a fraction of training rows (default 0.1)")
    t.add_argument("--test-fraction", type=float, default=0.2)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    t.add_argument("--out", required=True, help="output directory")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("explain", help="importance table, rules and graph for a tree")
    e.add_argument("tree", help="tree.json written by train")
    e.add_argument("--top", type=int, help="keep the top K features")
    e.add_argument("--depth", type=int, help="truncate the graph below this depth")
    e.add_argument("--min-n", type=int, help="only list rules for leaves with >= N rows")
    e.add_argument("--normalized", action="store_true", help="importances sum to one")
    e.add_argument("--aggregate-lags", action="store_true",
                   help="merge lagged copies of each feature")
    e.add_argument("--out", help="output directory (default: next to the tree)")
    e.set_defaults(func=cmd_explain)

    b = sub.add_parser("bench", help="time tree growth on synthetic data")
    b.add_argument("--sizes", default="1000,10000,100000")
    b.add_argument("--heuristics", default=",".join(HEURISTIC_NAMES))
    b.add_argument("--features", type=int, default=20)
    b.add_argument("--min-leaf", type=int, default=100)
    b.add_argument("--max-depth", type=int, default=12)
    b.add_argument("--budget", type=float, default=600.0, help="seconds per run")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--strict", action="store_true", help="exit nonzero on any timeout")
    b.add_argument("--out", help="write the TSV here as well")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (MimicTreeError, OSError) as exc:
        print(f"mimictree: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
