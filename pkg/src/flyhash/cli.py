"""Command-line surface: reproducible train/index/query/eval runs driven
by a JSON config, plus diagnostics.

Exit codes: 0 success, 1 runtime or numerical failure, 2 usage or
configuration error. Every subcommand is deterministic given its config
and seed. The default worker-thread count comes from the FLYHASH_THREADS
environment variable (1 if unset).
"""

import argparse
import os
import sys
import time

import numpy as np

from ._fileio import atomic_write_text
from .config import ConfigError, apply_overrides, load_config
from .datasets import load_csv, load_fvecs, load_raw_f32
from .harness import (
    build_trial_hasher,
    prepare_experiment,
    report_to_json_text,
    run_trials,
)
from .hashers import sample_gram_statistics
from .index import SparseHammingIndex, build_index
from .model import hash_batch, load_model, save_model
from .refine import train_decoder


def _default_threads():
    raw = os.environ.get("FLYHASH_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _load_features(path, fmt=None, dim=None, label_column=None):
    if fmt is None:
        ext = os.path.splitext(path)[1].lower()
        fmt = {".fvecs": "fvecs", ".csv": "csv", ".raw": "raw", ".f32": "raw"}.get(ext)
        if fmt is None:
            raise ConfigError(
                f"cannot infer format of {path!r}; pass --format fvecs|csv|raw"
            )
    if fmt == "fvecs":
        return load_fvecs(path)
    if fmt == "csv":
        return load_csv(path, label_column)
    if fmt == "raw":
        if dim is None:
            raise ConfigError("raw files require --dim")
        return load_raw_f32(path, dim)
    raise ConfigError(f"unknown format {fmt!r}")


def _experiment_config(args):
    cfg = load_config(args.config)
    overrides = list(getattr(args, "set", None) or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    if getattr(args, "trials", None) is not None:
        overrides.append(f"trials={args.trials}")
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg


def cmd_train(args):
    cfg = _experiment_config(args)
    data = prepare_experiment(cfg)
    hasher = build_trial_hasher(cfg, cfg["seed"])
    hasher.fit(data.X_train)
    trace = getattr(hasher, "objective_trace_", None)
    if trace:
        print("round objective")
        for rnd, value in enumerate(trace, start=1):
            print(f"{rnd} {value:.6f}")
    else:
        print("no objective trace (scheme has no iterative trainer)")
    save_model(hasher.model_, args.out)
    print(f"model written to {args.out}")
    return 0


def cmd_index(args):
    model = load_model(args.model)
    data = _load_features(args.data, args.format, args.dim)
    if not model.is_sparse:
        raise ConfigError(
            "the index file format stores fixed-popcount sparse codes; "
            f"scheme {model.scheme!r} emits dense codes (evaluate via 'eval')"
        )
    codes = hash_batch(model, data.features, n_threads=args.threads)
    index = SparseHammingIndex(model.n_bits, model.alpha)
    index.add(codes)
    index.save(args.out)
    print(f"indexed {len(index)} vectors into {args.out}")
    return 0


def cmd_query(args):
    model = load_model(args.model)
    index = SparseHammingIndex.load(args.index)
    queries = _load_features(args.queries, args.format, args.dim)
    codes = hash_batch(model, queries.features, n_threads=args.threads)
    decoder = None
    if args.refine == "linear":
        if args.data is None:
            raise ConfigError("--refine linear needs --data (the indexed vectors)")
        targets = _load_features(args.data, args.format, args.dim)
        target_codes = index.codes_for(np.sort(index.ids))
        decoder = train_decoder(
            target_codes, targets.features[np.sort(index.ids)], model.n_bits
        )
    lines = []
    fetch = args.k if decoder is None else int(np.ceil(args.oversample * args.k))
    for qi in range(codes.shape[0]):
        ids, dists = index.query(codes[qi], fetch)
        if decoder is not None and ids.size:
            recon = decoder.decode(index.codes_for(ids))
            rd = np.linalg.norm(recon - queries.features[qi], axis=1)
            order = np.lexsort((ids, rd))[: args.k]
            ids, dists = ids[order], dists[order]
        pairs = " ".join(f"{i}:{d}" for i, d in zip(ids.tolist(), dists.tolist()))
        lines.append(f"{qi} {pairs}")
    text = "\n".join(lines) + "\n"
    if args.out:
        atomic_write_text(args.out, text)
        print(f"rankings written to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_eval(args):
    cfg = _experiment_config(args)
    report = run_trials(cfg, n_threads=args.threads)
    print(report.to_text())
    if args.out:
        atomic_write_text(args.out, report_to_json_text(report))
        print(f"report written to {args.out}")
    return 0


def cmd_bench(args):
    cfg = _experiment_config(args)
    data = prepare_experiment(cfg)
    hasher = build_trial_hasher(cfg, cfg["seed"])
    t0 = time.perf_counter()
    hasher.fit(data.X_train)
    fit_s = time.perf_counter() - t0
    t0 = time.perf_counter()
    codes_t = hasher.transform(data.X_targets, n_threads=args.threads)
    hash_s = time.perf_counter() - t0
    index = build_index(hasher.model_, codes_t)
    codes_q = hasher.transform(data.X_queries, n_threads=args.threads)
    latencies = []
    t_all = time.perf_counter()
    for qi in range(codes_q.shape[0]):
        t0 = time.perf_counter()
        index.query(codes_q[qi], cfg["n"])
        latencies.append(time.perf_counter() - t0)
    total_s = time.perf_counter() - t_all
    lat = np.array(latencies)
    n_q = max(1, len(latencies))
    print(f"dataset            {data.name}")
    print(f"indexed vectors    {len(index)}")
    print(f"queries            {n_q}")
    print(f"fit seconds        {fit_s:.3f}")
    print(
        f"hash throughput    {data.X_targets.shape[0] / max(hash_s, 1e-12):.1f} vectors/s"
    )
    print(f"query throughput   {n_q / max(total_s, 1e-12):.1f} queries/s")
    print(f"latency mean       {lat.mean() * 1e3:.3f} ms")
    print(f"latency p50        {np.percentile(lat, 50) * 1e3:.3f} ms")
    print(f"latency p95        {np.percentile(lat, 95) * 1e3:.3f} ms")
    return 0


def cmd_gramcheck(args):
    stats = sample_gram_statistics(
        args.dim, args.bits, args.p, args.samples, seed=args.seed
    )
    exp = stats["expected"]
    print(f"sampled matrices   {stats['samples']} (D={args.bits}, d={args.dim}, p={args.p})")
    print("statistic       observed    expected    std-error")
    print(
        f"diag mean       {stats['diag_mean']:<11.4f} {exp['diag_mean']:<11.4f} "
        f"{stats['diag_se']:.4f}"
    )
    print(
        f"diag var        {stats['diag_var']:<11.4f} {exp['diag_var']:<11.4f} -"
    )
    print(
        f"offdiag mean    {stats['offdiag_mean']:<11.4f} {exp['offdiag_mean']:<11.4f} "
        f"{stats['offdiag_se']:.4f}"
    )
    print(
        f"offdiag var     {stats['offdiag_var']:<11.4f} {exp['offdiag_var']:<11.4f} -"
    )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="flyhash",
        description="Sparse binary hashing toolkit for similarity search",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="JSON experiment config")
            p.add_argument(
                "--set",
                action="append",
                metavar="KEY=VALUE",
                help="override a config key (dotted path)",
            )
            p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument(
            "--threads",
            type=int,
            default=_default_threads(),
            help="worker threads (default: FLYHASH_THREADS or 1)",
        )

    p = sub.add_parser("train", help="train a model from a config and save it")
    add_common(p)
    p.add_argument("--out", default="model.bin", help="output model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("index", help="hash a dataset with a model and build an index")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="vectors to index")
    p.add_argument("--format", choices=["fvecs", "csv", "raw"])
    p.add_argument("--dim", type=int, help="dimension for raw files")
    p.add_argument("--out", default="index.bin", help="output index file")
    add_common(p, config=False)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", help="rank index entries for each query vector")
    p.add_argument("--model", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--format", choices=["fvecs", "csv", "raw"])
    p.add_argument("--dim", type=int)
    p.add_argument("-k", type=int, default=10, help="results per query")
    p.add_argument(
        "--refine",
        choices=["off", "linear"],
        default="off",
        help="re-rank candidates by decoded distance",
    )
    p.add_argument("--oversample", type=float, default=2.0)
    p.add_argument("--data", help="indexed vectors (needed by --refine linear)")
    p.add_argument("--out", help="write rankings here instead of stdout")
    add_common(p, config=False)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="run the multi-trial evaluation harness")
    add_common(p)
    p.add_argument("--trials", type=int, help="override the trial count")
    p.add_argument("--out", help="also write the report as JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="time hashing and querying for a config")
    add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gramcheck", help="projection Gram-matrix statistics")
    p.add_argument("--bits", type=int, default=1024, help="rows of W (D)")
    p.add_argument("--dim", type=int, default=64, help="columns of W (d)")
    p.add_argument("--p", type=float, default=0.2, help="Bernoulli parameter")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    add_common(p, config=False)
    p.set_defaults(func=cmd_gramcheck)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
