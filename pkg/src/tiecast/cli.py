"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data or domain error, 3 numeric
divergence. Result files never contain timestamps; each carries a metadata
header with the seed and settings that produced it.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import BaselineKind, predict_baseline
from .datasets import read_graph
from .errors import DivergenceError, TiecastError
from .evaluation import inclination_distributions, weight_distribution
from .experiment import (
    DEFAULT_GRID,
    NEW,
    compare_methods,
    dump_json,
    parse_grid,
    parse_method,
    perturbation_curves,
    run_protocol,
    scaling_bench,
    sweep_k,
    write_scaling_csv,
)
from .graph import MergeRule, NormalizeOptions, WeightSpace, format_weight, map_weights, stats
from .model import AUTO, ModelParams, load_model, predict_partition, save_model, train
from .partition import make_partitions, read_manifest, write_manifest

log = logging.getLogger("tiecast")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3
ALL_METHODS = [k.value for k in BaselineKind] + [NEW]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _alpha(text):
    if text == AUTO:
        return AUTO
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number or 'auto', got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("alpha must be positive")
    return value


def _grid(text):
    try:
        return parse_grid(text)
    except (TiecastError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _sizes(text):
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _default_seed():
    value = os.environ.get("TIECAST_SEED")
    if value is None:
        return 0
    try:
        return int(value)
    except ValueError:
        raise UsageError(f"TIECAST_SEED must be an integer, got {value!r}") from None


def build_parser(default_seed: int = 0) -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="tiecast", description="Tie-strength prediction in weighted networks.",
                     formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    graph = _Parser(add_help=False)
    graph.add_argument("graph", help="edge list, KONECT out.* file or GML file")
    graph.add_argument("--format", choices=["auto", "edgelist", "konect", "gml"], default="auto",
                       help="input format")
    graph.add_argument("--merge", choices=[m.value for m in MergeRule], default=MergeRule.SUM.value,
                       help="how repeated or reciprocal edges are combined")
    graph.add_argument("--giant", action="store_true", help="keep only the largest connected component")

    common = _Parser(add_help=False)
    common.add_argument("--out", default="results", help="output directory")
    common.add_argument("--raw-space", action="store_true",
                        help="train and score on raw weights instead of exp(-1/w) mapped weights")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    proto = _Parser(add_help=False)
    proto.add_argument("--fraction", type=float, default=0.1, help="share of edges held out per partition")
    proto.add_argument("--partitions", "-D", type=int, default=10, help="number of partitions")
    proto.add_argument("--seed", type=int, default=default_seed,
                       help="base seed; partition j uses seed+j (env TIECAST_SEED)")
    proto.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    hyper = _Parser(add_help=False)
    hyper.add_argument("--alpha", type=_alpha, default=AUTO,
                       help="learning rate, or 'auto' for 1/L with L the largest Hessian eigenvalue")
    hyper.add_argument("--epsilon", type=float, default=1e-6, help="convergence threshold on |dtheta|")
    hyper.add_argument("--lambda", dest="lam", type=float, default=1.0, help="ridge penalty")
    hyper.add_argument("--max-iters", type=int, default=100_000, help="iteration cap")

    k_one = _Parser(add_help=False)
    k_one.add_argument("--k", type=float, default=1.0, help="Hadamard power of the features")
    k_grid = _Parser(add_help=False)
    k_grid.add_argument("--k-grid", type=_grid, default=DEFAULT_GRID,
                        help="k values as start:stop:step or a comma list (default 0.1:2.0:0.1)")

    p = sub.add_parser("stats", parents=[graph, common], formatter_class=fmt,
                       help="node/edge counts and weight extremes")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", parents=[graph, common, proto], formatter_class=fmt,
                       help="write partition manifests")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", parents=[graph, common, hyper, k_one], formatter_class=fmt,
                       help="train the regression model on one partition manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[graph, common], formatter_class=fmt,
                       help="predict held-out weights of a partition manifest")
    p.add_argument("manifest")
    p.add_argument("--model", help="model JSON written by 'train' (required for NEW)")
    p.add_argument("--method", default=NEW, choices=ALL_METHODS, help="predictor")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", parents=[graph, common, proto, hyper, k_one], formatter_class=fmt,
                       help="average one method over seeded partitions")
    p.add_argument("--method", default=NEW, choices=ALL_METHODS, help="predictor")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", parents=[graph, common, proto, hyper, k_grid], formatter_class=fmt,
                       help="RMSE against k")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", parents=[graph, common, proto, hyper, k_grid], formatter_class=fmt,
                       help="compare methods on shared partitions (NEW uses the best k of --k-grid)")
    p.add_argument("--methods", default=",".join(ALL_METHODS), help="comma-separated methods")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("perturb", parents=[graph, common, proto, hyper, k_grid], formatter_class=fmt,
                       help="w_diff and h_diff against k")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("bench", parents=[common, hyper, k_one], formatter_class=fmt,
                       help="training time against training-set size on synthetic graphs")
    p.add_argument("--sizes", type=_sizes, default=[10_000, 20_000, 40_000], help="edge counts")
    p.add_argument("--mean-degree", type=float, default=10.0, help="mean degree of the synthetic graphs")
    p.add_argument("--partitions", "-D", type=int, default=10, help="partitions per size")
    p.add_argument("--fraction", type=float, default=0.1, help="share of edges held out")
    p.add_argument("--seed", type=int, default=default_seed, help="base seed (env TIECAST_SEED)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("dist", parents=[graph, common], formatter_class=fmt,
                       help="weight and connection-inclination histograms")
    p.add_argument("--bins", type=int, default=50, help="equal-width histogram bins")
    p.set_defaults(func=cmd_dist)
    return parser


# -- helpers ----------------------------------------------------------------

def _space(args) -> WeightSpace:
    return WeightSpace.RAW if args.raw_space else WeightSpace.MAPPED


def _load(args):
    g = read_graph(args.graph, args.format, args.giant, NormalizeOptions(MergeRule(args.merge)))
    log.info("loaded %s: %d nodes, %d edges", args.graph, g.number_of_nodes(), g.number_of_edges())
    return g


def _in_space(g, args):
    return map_weights(g) if not args.raw_space else g


def _params(args, k=None) -> ModelParams:
    return ModelParams(k=args.k if k is None else k, lam=args.lam, alpha=args.alpha, epsilon=args.epsilon,
                       max_iters=args.max_iters, weight_space=_space(args))


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _header(args, **extra) -> dict:
    meta = {"command": args.command, "weight_space": _space(args).value}
    for key in ("graph", "seed", "fraction", "partitions", "k", "alpha", "epsilon", "lam", "max_iters",
                "merge", "giant", "format"):
        if hasattr(args, key):
            value = getattr(args, key)
            meta["lambda" if key == "lam" else key] = os.path.basename(value) if key == "graph" else value
    if hasattr(args, "k_grid"):
        meta["k_grid"] = list(args.k_grid)
    meta.update(extra)
    return meta


def _write_csv(path: Path, meta: dict, writer) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        writer(fh)


def _write_json(path: Path, meta: dict, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        dump_json({"meta": meta, **doc}, fh)


def _fmt(x) -> str:
    return "n/a" if x is None else f"{x:.4g}"


# -- subcommands ------------------------------------------------------------

def cmd_stats(args) -> str:
    g = _load(args)
    raw = stats(g)
    doc = {"raw": raw.__dict__}
    if not args.raw_space:
        doc["mapped"] = stats(map_weights(g)).__dict__
    _write_json(_outdir(args) / "stats.json", _header(args), doc)
    return (f"{raw.node_count} nodes, {raw.edge_count} edges, <w>={raw.mean_weight:.4f}, "
            f"max(w)={raw.max_weight:.4g}, min(w)={raw.min_weight:.4g}")


def cmd_split(args) -> str:
    g = _in_space(_load(args), args)
    out = _outdir(args)
    parts = make_partitions(g, args.fraction, args.partitions, args.seed)
    width = max(2, len(str(len(parts) - 1)))
    for j, part in enumerate(parts):
        with open(out / f"partition_{j:0{width}d}.txt", "w", encoding="utf-8") as fh:
            write_manifest(part, fh)
    return f"wrote {len(parts)} partitions of {len(parts[0].test)} test edges to {out}"


def _partition(args, g):
    with open(args.manifest, "r", encoding="utf-8") as fh:
        return read_manifest(fh, g, name=args.manifest)


def cmd_train(args) -> str:
    g = _in_space(_load(args), args)
    part = _partition(args, g)
    trained, trace = train(part, _params(args))
    out = _outdir(args)
    with open(out / "model.json", "w", encoding="utf-8") as fh:
        save_model(trained, fh, trace, seed=part.seed)
    _write_csv(out / "trace.csv", _header(args, manifest_seed=part.seed), trace.write_csv)
    log.info("training took %.3fs", trace.duration)
    state = "converged" if trace.converged else "hit max_iters"
    t1, t2, t3 = trained.theta
    return f"theta=({t1:.6g}, {t2:.6g}, {t3:.6g}) k={trained.k:g} after {trace.iterations} iterations ({state})"


def cmd_predict(args) -> str:
    g = _in_space(_load(args), args)
    part = _partition(args, g)
    if args.method == NEW:
        if not args.model:
            raise UsageError("predict: --model is required for method NEW")
        with open(args.model, "r", encoding="utf-8") as fh:
            trained = load_model(fh)
        if trained.weight_space is not _space(args):
            raise UsageError(f"model was trained in {trained.weight_space.value} space but the run uses "
                             f"{_space(args).value} space (see --raw-space)")
        values = predict_partition(trained, part)
    else:
        mapped = part if g.weight_space is WeightSpace.MAPPED else part.remap(map_weights(g))
        values = np.array([v for _, v in predict_baseline(mapped, BaselineKind.parse(args.method))])
    out = _outdir(args)
    with open(out / "predictions.txt", "w", encoding="utf-8") as fh:
        fh.write(f"# method: {args.method}\n# seed: {part.seed}\n# weight_space: {_space(args).value}\n")
        for (u, v, _), value in zip(part.test, values):
            fh.write(f"{g.labels[u]} {g.labels[v]} {format_weight(float(value))}\n")
    return f"wrote {len(values)} predictions to {out / 'predictions.txt'}"


def cmd_eval(args) -> str:
    g = _load(args)
    method = parse_method(args.method)
    report = run_protocol(g, method, args.fraction, args.partitions, _params(args), args.seed,
                          _space(args), args.jobs)
    _write_json(_outdir(args) / "report.json", _header(args, method=args.method), report.to_dict())
    return f"{report.method}: RMSE {_fmt(report.mean)} +/- {_fmt(report.std)} over {len(report.rmse_values)} partitions"


def cmd_sweep(args) -> str:
    g = _load(args)
    result = sweep_k(g, args.k_grid, args.fraction, args.partitions, _params(args, k=args.k_grid[0]),
                     args.seed, _space(args), args.jobs)
    out = _outdir(args)
    meta = _header(args)
    _write_csv(out / "fig3_rmse_vs_k.csv", meta, result.write_csv)
    _write_json(out / "sweep.json", meta, result.to_dict())
    best = result.reports[result.best_index]
    return f"best k={result.best_k:g}: RMSE {_fmt(best.mean)} +/- {_fmt(best.std)}"


def cmd_compare(args) -> str:
    g = _load(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    try:
        methods = [parse_method(m) for m in methods]
    except TiecastError as exc:
        raise UsageError(f"compare: {exc}") from None
    table = compare_methods(g, methods, args.fraction, args.partitions, _params(args, k=args.k_grid[0]),
                            args.seed, _space(args), args.jobs,
                            k_grid=args.k_grid if NEW in methods else None)
    out = _outdir(args)
    meta = _header(args, methods=[m if m == NEW else m.value for m in methods])
    _write_csv(out / "comparison.csv", meta, table.write_csv)
    _write_json(out / "comparison.json", meta, table.to_dict())
    best = table.row(table.best)
    return f"best method {table.best}: RMSE {_fmt(best.mean)} +/- {_fmt(best.std)}"


def cmd_perturb(args) -> str:
    g = _load(args)
    result = perturbation_curves(g, args.k_grid, args.fraction, args.partitions, _params(args, k=args.k_grid[0]),
                                 args.seed, _space(args), args.jobs)
    out = _outdir(args)
    meta = _header(args)
    _write_csv(out / "fig8_wdiff_hdiff.csv", meta, result.write_csv)
    _write_json(out / "perturb.json", meta, result.to_dict())
    i = result.grid.index(result.best_k)
    return f"best k={result.best_k:g}: w_diff={_fmt(result.w_diff[i])} h_diff={_fmt(result.h_diff[i])}"


def cmd_bench(args) -> str:
    records = scaling_bench(args.sizes, args.partitions, _params(args), args.mean_degree, args.fraction, args.seed)
    out = _outdir(args)
    meta = _header(args, sizes=args.sizes, mean_degree=args.mean_degree)
    # Timings vary run to run; they go only to the figure CSV. bench.json is reproducible.
    _write_csv(out / "fig5_scaling.csv", meta, lambda fh: write_scaling_csv(records, fh))
    _write_json(out / "bench.json", meta, {"records": [
        {"edges": r.edges, "train_edges": r.train_edges, "iterations": r.iterations} for r in records]})
    ratios = [b.seconds / a.seconds for a, b in zip(records, records[1:]) if a.seconds > 0]
    return "training seconds: " + ", ".join(f"{r.train_edges}:{r.seconds:.3f}" for r in records) + (
        " (ratios " + ", ".join(f"{x:.2f}" for x in ratios) + ")" if ratios else "")


def cmd_dist(args) -> str:
    g = _in_space(_load(args), args)
    weights = weight_distribution(g, args.bins)
    rx, ry = inclination_distributions(g, args.bins)
    out = _outdir(args)
    meta = _header(args, bins=args.bins)
    doc = {}
    for name, summary in (("weights", weights), ("inclination_x", rx), ("inclination_y", ry)):
        _write_csv(out / f"{name}_hist.csv", meta, summary.write_csv)
        doc[name] = {"mean": summary.mean, "small_fraction": summary.small_fraction,
                     "large_fraction": summary.large_fraction, "count": summary.size}
    _write_json(out / "dist.json", meta, doc)
    return (f"weights: small {weights.small_fraction:.3f} / large {weights.large_fraction:.3f}; "
            f"r_x small {rx.small_fraction:.3f}; r_y small {ry.small_fraction:.3f}")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        parser = build_parser(_default_seed())
        args = parser.parse_args(argv)
        if getattr(args, "jobs", 1) < 1:
            raise UsageError("--jobs must be >= 1")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    start = time.perf_counter()
    try:
        summary = args.func(args)
    except UsageError as exc:
        print(f"tiecast: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"tiecast: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (TiecastError, OSError, ValueError) as exc:
        print(f"tiecast: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    log.info("%s finished in %.2fs", args.command, time.perf_counter() - start)
    print(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
