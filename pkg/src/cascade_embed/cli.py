"""Command-line pipeline: ``gen``, ``simulate``, ``train``, ``eval``, ``predict``, ``bench``.

Exit codes: 0 ok, 1 usage or configuration error, 2 data error, 3 numeric or
training failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .cascades import calibrate_window, simulate_batch
from .config import PipelineConfig, load_config, write_resolved
from .errors import (CascadeEmbedError, ConfigError, DataFormatError, InputError, NumericError,
                     TrainingError, TransportError)
from .evaluation import ami, ars, distance_matrix, kmeans
from .graph import generate_sbm, ground_truth_partition
from .parallel import benchmark_iteration, parallel_train
from .trainer import train
from .virality import sweep

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("cascade_embed")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    s = argparse.SUPPRESS
    p.add_argument("--config", default=s, help="key = value configuration file")
    p.add_argument("--seed", type=int, default=s, help="master seed (overrides the config)")
    p.add_argument("--out", default=s, help="output directory (default: current directory)")
    p.add_argument("--workers", type=int, default=s, help="worker count; 1 runs the sequential trainer")
    p.add_argument("--partition", choices=("block", "hash"), default=s, help="entity-to-worker assignment")
    p.add_argument("-v", "--verbose", action="store_true", default=s)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="cascade-embed", parents=[common],
                     description="Latent community embeddings from cascade infection times.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    sub.add_parser("gen", parents=[common], help="sample a planted-partition graph")

    p = sub.add_parser("simulate", parents=[common], help="simulate cascades on a graph")
    p.add_argument("graph")

    p = sub.add_parser("train", parents=[common], help="learn node and cascade embeddings")
    p.add_argument("cascades")
    p.add_argument("--graph", help="graph file; fixes the node count")

    p = sub.add_parser("eval", parents=[common], help="cluster embeddings against ground truth")
    p.add_argument("embeddings")
    p.add_argument("graph")
    p.add_argument("--k", type=int, help="cluster count (default: communities in the graph)")

    p = sub.add_parser("predict", parents=[common], help="viral-cascade F1 over theta and tau grids")
    p.add_argument("cascades")
    p.add_argument("embeddings")

    p = sub.add_parser("bench", parents=[common], help="time one parallel iteration per worker count")
    p.add_argument("cascades")
    p.add_argument("--worker-list", help="comma-separated worker counts (default: bench.workers)")
    return parser


def _config(args) -> PipelineConfig:
    return load_config(getattr(args, "config", None), {
        "seed": getattr(args, "seed", None),
        "parallel.workers": getattr(args, "workers", None),
        "parallel.partition": getattr(args, "partition", None),
    })


def cmd_gen(args, cfg: PipelineConfig, out: Path) -> None:
    g = generate_sbm(cfg.sbm())
    io.write_graph(g, out / "graph.txt")
    intra, inter = g.edge_counts()
    write_resolved(cfg, out)
    log.info("graph: %d nodes, %d intra / %d inter edges", g.node_count, intra, inter)


def cmd_simulate(args, cfg: PipelineConfig, out: Path) -> None:
    g = io.read_graph(args.graph)
    window = cfg["sim.window"]
    if cfg["sim.target_size"] > 0:
        window = calibrate_window(g, cfg.sim(), cfg["sim.target_size"], cfg["sim.calibration_trials"])
    cascades = simulate_batch(g, cfg.sim(window))
    io.write_cascades(cascades, out / "cascades.txt")
    write_resolved(cfg, out, {"sim.window": window})
    log.info("%d cascades, window %.6g, mean size %.3f", len(cascades), window,
             np.mean([c.size for c in cascades]) if cascades else 0.0)


def cmd_train(args, cfg: PipelineConfig, out: Path) -> None:
    cascades = io.read_cascades(args.cascades)
    node_count = io.read_graph(args.graph).node_count if args.graph else None
    tc = cfg.train()
    workers = cfg["parallel.workers"]
    if workers == 1:
        res = train(cascades, tc, node_count=node_count)
    else:
        res = parallel_train(cascades, tc, workers, cfg["parallel.partition"], node_count=node_count,
                             timeout=cfg["parallel.timeout"])
    io.write_embeddings(res.params, out / "embeddings.txt", [c.cascade_id for c in cascades])
    io.write_trace(res.trace, out / "trace.csv")
    write_resolved(cfg, out, {"train.w": res.params.w, "train.T": res.params.T})
    log.info("trained %d iterations in %.2fs, loglik %.6g", res.iterations_run, res.seconds, res.trace[-1])


def cmd_eval(args, cfg: PipelineConfig, out: Path) -> None:
    params, _ = io.read_embeddings(args.embeddings)
    g = io.read_graph(args.graph)
    if g.node_count != len(params.A):
        raise InputError(f"graph has {g.node_count} nodes, embeddings have {len(params.A)} rows")
    k = args.k or cfg["eval.k"] or g.n_communities
    truth = ground_truth_partition(g)
    found = kmeans(params.A, k, cfg.seed)
    metrics = {"k": k, "ami": ami(found, truth), "ars": ars(found, truth)}
    io.write_metrics(metrics, out / "metrics.csv")
    rows = cfg["eval.distance_rows"] or None
    io.write_distance_matrix(distance_matrix(params.A, rows), out / "distances.csv")
    write_resolved(cfg, out)
    log.info("AMI %.4f ARS %.4f", metrics["ami"], metrics["ars"])


def cmd_predict(args, cfg: PipelineConfig, out: Path) -> None:
    cascades = io.read_cascades(args.cascades)
    params, _ = io.read_embeddings(args.embeddings)
    if not cascades:
        raise InputError("no cascades to classify")
    if max(int(c.nodes.max()) for c in cascades if c.size) >= len(params.A):
        raise InputError("cascades mention nodes without an embedding row")
    taus = cfg["virality.taus"]
    if not taus:
        taus = (0.25 * max(float(c.times[-1] - c.times[0]) for c in cascades if c.size),)
    base = cfg.virality(cfg["virality.thetas"][0], taus[0])
    rows = sweep(cascades, params.A, cfg["virality.thetas"], taus, base, cfg.seed)
    io.write_f1_grid(rows, out / "f1_grid.csv")
    write_resolved(cfg, out, {"virality.taus": taus})
    for r in rows:
        log.info("theta %.3f tau %.4g %-8s F1 %.4f", r.theta, r.tau, r.features, r.mean_fold_f1)


def cmd_bench(args, cfg: PipelineConfig, out: Path) -> None:
    cascades = io.read_cascades(args.cascades)
    worker_list = cfg["bench.workers"]
    if args.worker_list:
        try:
            worker_list = tuple(int(x) for x in args.worker_list.split(","))
        except ValueError:
            raise ConfigError(f"bad --worker-list {args.worker_list!r}") from None
    tc = cfg.train()
    reports = [benchmark_iteration(cascades, tc, n, cfg["parallel.partition"], repeats=cfg["bench.repeats"])
               for n in worker_list]
    io.write_benchmark(reports, out / "bench.csv")
    write_resolved(cfg, out)
    for r in reports:
        log.info("%d workers: %.3f ms, %d messages", r.n_workers, r.wall_ms, r.messages)


COMMANDS = {"gen": cmd_gen, "simulate": cmd_simulate, "train": cmd_train, "eval": cmd_eval,
            "predict": cmd_predict, "bench": cmd_bench}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(message)s")
    try:
        cfg = _config(args)
        out = Path(getattr(args, "out", "."))
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, cfg, out)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, InputError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, TrainingError, TransportError) as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except CascadeEmbedError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
