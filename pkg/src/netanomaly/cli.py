"""Command-line entry point: ``netanomaly <subcommand>``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import pipeline
from .combine import RegressionForest, SchemaError, write_rank_curve
from .generators import (
    KINDS,
    BoundQuery,
    default_count_range,
    detectability_bound,
    generate_accenture,
    generate_weighted_er,
    plant_anomalies,
    training_grid,
)
from .graph import GraphError, load_edge_list, write_edge_list, write_ground_truth
from .oddball import RELATIONSHIP_NAMES, oddball_scores
from .pipeline import ConfigError, PipelineConfig, StageError

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3
log = logging.getLogger("netanomaly")


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.profile(args.profile)
    if args.config:
        cfg = cfg.updated(PipelineConfig.read_file(args.config))
    overrides = {}
    for item in args.set or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    return cfg.updated(overrides)


def _load_graph(path):
    with open(path) as fh:
        return load_edge_list(fh)


def _write_graph(g, truth, out: Path, cfg_extra: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "graph.csv", "w") as fh:
        write_edge_list(g, fh)
    with open(out / "truth.csv", "w") as fh:
        write_ground_truth(truth, g, fh)
    pipeline.write_manifest(out / "manifest.json", "generate", None, {}, {}, {"parameters": cfg_extra})


def cmd_generate(args) -> None:
    out = Path(args.out)
    if args.model == "er":
        count = tuple(args.count) if args.count else default_count_range(args.n)
        g = generate_weighted_er(args.n, args.p, seed=args.seed)
        g, truth = plant_anomalies(g, args.w, seed=pipeline.unit_seed(args.seed, 1), count_range=count)
        params = {"model": "er", "n": args.n, "p": args.p, "w": args.w, "count_range": list(count), "seed": args.seed}
    else:
        g, truth = generate_accenture(seed=args.seed, n=args.n)
        params = {"model": "accenture", "n": args.n, "seed": args.seed}
    _write_graph(g, truth, out, params)
    print(f"wrote {g.n} nodes, {g.m} edges, {int(truth.labels.sum())} anomalous nodes to {out}")


def cmd_bounds(args) -> None:
    writer = csv.writer(sys.stdout, lineterminator="\n")
    if args.grid:
        writer.writerow(["p", "w"])
        for p, w in training_grid(args.n):
            writer.writerow([p, w])
        return
    writer.writerow(["structure", "size", "n", "bound"])
    for kind in args.kinds or KINDS:
        for k in args.sizes:
            if kind == "tree":
                k = 9
            q = BoundQuery(kind, args.n, k, k1=k // 2 if kind == "star" else 0)
            writer.writerow([kind, k, args.n, repr(detectability_bound(q))])
            if kind == "tree":
                break


def cmd_detect(args) -> None:
    cfg = _config(args)
    res = pipeline.run_detect(args.graph, cfg, args.out, args.model)
    print(f"features for {res.features.n} nodes in {res.timings['total']:.1f}s -> {args.out}")


def cmd_train(args) -> None:
    cfg = _config(args)
    grid = None
    if args.regime:
        grid = [(float(p), float(w)) for p, w in (r.split(",") for r in args.regime)]
    res = pipeline.run_train(cfg, args.out, n=args.n, grid=grid, networks_per_regime=args.networks)
    print(f"trained {res.forest.tree_count} trees on {len(res.selected)} features -> {args.out}")


def cmd_predict(args) -> None:
    labels, m = pipeline.read_features(args.features)
    forest = RegressionForest.load(args.model)
    pipeline.write_ranking(args.out, labels, forest.predict(m))


def cmd_oddball(args) -> None:
    g = _load_graph(args.graph)
    res = oddball_scores(g)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    labels = g.node_labels()
    pipeline.write_ranking(out / "ranking_oddball.csv", labels, res.total)
    with open(out / "oddball_scores.csv", "w") as fh:
        fh.write("node," + ",".join(RELATIONSHIP_NAMES) + "\n")
        for lab, row in zip(labels, res.scores):
            fh.write(f"{lab}," + ",".join(repr(float(v)) for v in row) + "\n")
    for name, count in res.skipped.items():
        if count:
            log.info("%s: %d node(s) scored 0 (non-positive observation or prediction)", name, count)


def cmd_evaluate(args) -> None:
    rows = pipeline.run_evaluate(args.ranking, args.truth, args.graph, args.out)
    ap = [v for name, _, v in rows if name == "average_precision"][0]
    print(f"average precision {ap:.6f} -> {args.out}")


def cmd_rank_curve(args) -> None:
    imps = np.loadtxt(args.importances, delimiter=",", skiprows=1, ndmin=2)
    write_rank_curve(imps, args.out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="netanomaly", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--profile", choices=("full", "desk"), default="full",
                       help="default replica counts (desk = reduced, single-core friendly)")
        p.add_argument("--config", help="flat key = value file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("generate", help="synthetic benchmark network + ground truth")
    p.add_argument("model", choices=("er", "accenture"))
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--p", type=float, default=0.005)
    p.add_argument("--w", type=float, default=0.99)
    p.add_argument("--count", type=int, nargs=2, metavar=("LO", "HI"), help="planted structure count range")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bounds", help="detectability bounds or the training grid, as CSV on stdout")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--kinds", nargs="*", choices=KINDS)
    p.add_argument("--sizes", type=int, nargs="*", default=[5])
    p.add_argument("--grid", action="store_true", help="print the (p, w) training grid instead")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("detect", help="140 features and rankings for one edge list")
    p.add_argument("graph")
    p.add_argument("--out", required=True)
    p.add_argument("--model", help="forest archive from 'train'")
    with_config(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("train", help="simulate the training grid and fit the forest")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--networks", type=int, default=2, help="networks per regime")
    p.add_argument("--regime", action="append", metavar="P,W", help="restrict the grid (repeatable)")
    with_config(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="forest ranking from a features CSV")
    p.add_argument("features")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("oddball", help="Oddball baseline scores")
    p.add_argument("graph")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oddball)

    p = sub.add_parser("evaluate", help="precision/recall@k and AP of a ranking")
    p.add_argument("ranking")
    p.add_argument("--truth", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rank-curve", help="sorted average importance ranks from importances.csv")
    p.add_argument("importances")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank_curve)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        args.func(args)
    except (ConfigError, GraphError, SchemaError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - top-level guard
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    log.info("done in %.1fs", time.perf_counter() - t0)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
