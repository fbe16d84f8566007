"""Command-line entry point: ``regulith <command> [options]``.

Exit codes: 0 success, 1 bad input or arguments, 2 partition halted on a
degenerate refinement (outputs are still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from .clustering import DOMINANT_SETS, SPECTRAL, cluster, two_phase
from .errors import DomainError, ParseError
from .graph import load_edge_list, read_pgm
from .partition import HALT_DEGENERATE, Partition, RunConfig, exact_constants, run_partition
from .reduced import STRICT, WEIGHTED, build_reduced
from .segmentation import Segmentation, pri, segment_image, vi, write_diagnostics_csv

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DEGENERATE = 2

log = logging.getLogger("regulith")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _run_flags(p):
    d = RunConfig()
    p.add_argument("--epsilon", type=float, default=d.epsilon)
    p.add_argument("--min-classes", type=int, default=d.min_classes, help="initial class count b")
    p.add_argument("--subclasses", type=int, default=d.subclasses, help="fan-out l per refinement")
    p.add_argument("--max-iterations", type=int, default=d.max_iterations)
    p.add_argument("--min-class-size", type=int, default=d.min_class_size)
    p.add_argument("--seed", type=int, default=d.rng_seed)
    p.add_argument("--case-three-multiplier", type=float, default=d.case_three_multiplier)
    p.add_argument("--threads", type=int, default=None, help="worker cap (env REGULITH_THREADS)")


def _graph_flags(p):
    p.add_argument("--input", required=True, help="edge list, one 'u v w' per line")
    p.add_argument("--n", type=int, required=True, help="vertex count")


def _config(args) -> RunConfig:
    return RunConfig(
        epsilon=args.epsilon,
        min_classes=args.min_classes,
        subclasses=args.subclasses,
        max_iterations=args.max_iterations,
        min_class_size=args.min_class_size,
        rng_seed=args.seed,
        case_three_multiplier=args.case_three_multiplier,
    )


def _threads(args) -> int:
    if args.threads is not None:
        value = args.threads
    else:
        raw = os.environ.get("REGULITH_THREADS", "1")
        try:
            value = int(raw)
        except ValueError:
            raise DomainError(f"REGULITH_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise DomainError("thread count must be at least 1")
    return value


def _method_params(args):
    params = {"seed": args.seed}
    if args.method == SPECTRAL:
        if args.k is None:
            raise DomainError("--method sc needs --k")
        params["k"] = args.k
    return params


def write_trace(path, p: Partition, subclasses: int):
    """One row per visited partition; k grows by exactly ``subclasses`` per step."""
    steps = len(p.index_history)
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "k", "index", "irregularPairs"])
        for i, (ind, irr) in enumerate(zip(p.index_history, p.irregular_history), start=1):
            k = p.k // subclasses ** (steps - i)
            writer.writerow([i, k, repr(ind), irr])


def cmd_partition(args) -> int:
    cfg = _config(args)
    g = load_edge_list(args.input, args.n)
    p = run_partition(g, cfg, _threads(args))
    out = Path(args.out)
    p.save(out)
    trace = Path(args.trace) if args.trace else out.with_suffix(".trace.csv")
    write_trace(trace, p, cfg.subclasses)
    print(f"k={p.k} classSize={p.class_size} exceptional={p.exceptional.size} halt={p.halt_reason}")
    return EXIT_DEGENERATE if p.halt_reason == HALT_DEGENERATE else EXIT_OK


def cmd_reduce(args) -> int:
    g = load_edge_list(args.input, args.n)
    p = Partition.load(args.partition)
    if p.n != g.n:
        raise DomainError(f"partition covers {p.n} vertices, graph has {g.n}")
    r = build_reduced(
        g, p, epsilon=args.epsilon, d=args.d, mode=args.mode,
        case_three_multiplier=args.case_three_multiplier, threads=_threads(args),
    )
    path, sidecar = r.save(args.out, args.classmap)
    print(f"k={r.k} edges={r.edge_count()} threshold={r.threshold!r} -> {path}, {sidecar}")
    return EXIT_OK


def cmd_cluster(args) -> int:
    g = load_edge_list(args.input, args.n)
    params = _method_params(args)
    if args.direct:
        result = cluster(g, args.method, params)
        code = EXIT_OK
    else:
        outcome = two_phase(g, _config(args), args.method, params, _threads(args))
        result = outcome.result
        code = EXIT_DEGENERATE if outcome.partition.halt_reason == HALT_DEGENERATE else EXIT_OK
    result.save_json(args.out)
    if args.csv:
        result.save_csv(args.csv)
    for flag in result.flags:
        print(f"warning: {flag}", file=sys.stderr)
    print(f"clusters={result.num_clusters} method={result.method}")
    return code


def cmd_segment(args) -> int:
    if not args.sigma > 0:
        raise DomainError(f"--sigma must be positive, got {args.sigma}")
    img = read_pgm(args.image)
    seg, diag, _ = segment_image(
        img, args.sigma, _config(args), args.method, _method_params(args), _threads(args)
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.image).stem
    seg.save_pgm(out / f"{stem}.labels.pgm")
    seg.save_json(out / f"{stem}.labels.json")
    write_diagnostics_csv(out / f"{stem}.diagnostics.csv", [(stem, diag)])
    for flag in diag.flags:
        print(f"warning: {flag}", file=sys.stderr)
    print(
        f"{stem}: n={diag.n} k={diag.k} compression={100 * diag.compression_rate:.2f}% "
        f"segments={diag.num_segments} halt={diag.halt_reason}"
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    s = Segmentation.load(args.seg)
    truths = [Segmentation.load(t) for t in args.truth]
    name = args.name or Path(args.seg).stem
    print(f"{name},{pri(s, truths)!r},{vi(s, truths[0])!r}")
    return EXIT_OK


def cmd_constants(args) -> int:
    c = exact_constants(args.epsilon, args.t)
    print(json.dumps({"epsilon": args.epsilon, "t": args.t, **c.to_dict()}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="regulith", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("partition", help="approximate regular partition of a graph")
    _graph_flags(p)
    _run_flags(p)
    p.add_argument("--out", required=True, help="partition JSON")
    p.add_argument("--trace", help="index trace CSV (default: <out>.trace.csv)")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("reduce", help="reduced graph of a saved partition")
    _graph_flags(p)
    p.add_argument("--partition", required=True)
    p.add_argument("--epsilon", type=float, default=None, help="default: the partition's epsilon")
    p.add_argument("--d", type=float, default=None, help="density threshold (default: mean weight)")
    p.add_argument("--mode", choices=[STRICT, WEIGHTED], default=WEIGHTED)
    p.add_argument("--case-three-multiplier", type=float, default=RunConfig().case_three_multiplier)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", required=True, help="reduced edge list")
    p.add_argument("--classmap", help="class map JSON (default: <out>.classmap.json)")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("cluster", help="two-phase (or direct) clustering of a graph")
    _graph_flags(p)
    _run_flags(p)
    p.add_argument("--method", choices=[DOMINANT_SETS, SPECTRAL], default=DOMINANT_SETS)
    p.add_argument("--k", type=int, default=None, help="cluster count for sc")
    p.add_argument("--direct", action="store_true", help="skip compression")
    p.add_argument("--out", required=True, help="labels JSON")
    p.add_argument("--csv", help="also write vertex,label CSV")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("segment", help="segment a grayscale PGM image")
    p.add_argument("--image", required=True)
    p.add_argument("--sigma", type=float, required=True, help="intensity kernel width")
    _run_flags(p)
    p.add_argument("--method", choices=[DOMINANT_SETS, SPECTRAL], default=DOMINANT_SETS)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("eval", help="PRI and VI of a segmentation")
    p.add_argument("--seg", required=True, help="segmentation (.json or label PGM)")
    p.add_argument("--truth", action="append", required=True,
                   help="ground truth; repeatable (PRI over all, VI against the first)")
    p.add_argument("--name", help="row label (default: segmentation file stem)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("constants", help="constants of the exact algorithm")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--t", type=int, default=1)
    p.set_defaults(func=cmd_constants)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except (DomainError, ParseError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"regulith: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
