"""Command-line interface: generate datasets, run benchmarks, aggregate, report."""

from __future__ import annotations

import argparse
import json
import sys

from . import bench, data


def _parse_k_list(values):
    return [v if str(v).upper() == "ALL" else int(v) for v in values]


def cmd_generate(args) -> int:
    kwargs = {}
    if args.noise_std is not None:
        kwargs["noise_std"] = args.noise_std
    ds = data.generate(args.dataset, n=args.n, seed=args.seed, **kwargs)
    metadata = {
        "generator": args.dataset,
        "n": ds.n,
        "seed": args.seed,
        "noise_std": args.noise_std,
        "ranges": {
            "tf": data.TF_RANGES, "rcl": data.RCL_RANGES, "wsb": data.WSB_RANGES,
        }[args.dataset.lower()],
    }
    data.save_csv(ds, args.out, metadata=metadata)
    print(f"wrote {ds.n} rows to {args.out}")
    return 0


def _config_from_args(args) -> bench.ExperimentConfig:
    if args.config:
        return bench.ExperimentConfig.from_file(args.config)
    if not args.dataset or not args.methods:
        raise ValueError("either --config or both --dataset and --methods are required")
    if args.dataset.lower() in data.GENERATORS:
        dataset = {"generator": args.dataset.lower(), "seed": args.seed}
    else:
        dataset = {"csv": args.dataset}
    k_list = _parse_k_list(args.k) if args.k else bench.DEFAULT_K_SWEEP
    methods = []
    for name in args.methods:
        name = name.upper()
        spec = {"name": name}
        if name in ("KNN", "NNTNNR_INFER", "NNTNNR_TRAIN_INFER"):
            spec["k_list"] = k_list
        elif name == "TNNR_RANDOM_ANCHORS":
            spec["m_list"] = [k for k in k_list if k != "ALL"]
        elif name == "ANN_ENSEMBLE":
            spec["size"] = args.ensemble_size
        methods.append(spec)
    return bench.ExperimentConfig(
        dataset=dataset, methods=methods,
        n_splits=args.splits, base_seed=args.seed,
    )


def cmd_run(args) -> int:
    config = _config_from_args(args)
    rows = bench.run_experiment(config)
    rows_path = f"{args.out}.rows.csv"
    bench.write_rows(rows, rows_path)
    aggs = bench.aggregate(rows)
    bench.emit_results(aggs, args.out, config=config)
    print(f"wrote {len(rows)} rows to {rows_path} and "
          f"{len(aggs)} aggregates to {args.out}")
    return 0


def cmd_aggregate(args) -> int:
    rows = bench.read_rows(args.rows)
    aggs = bench.aggregate(rows)
    bench.emit_results(aggs, args.out)
    print(f"wrote {len(aggs)} aggregates to {args.out}")
    return 0


def cmd_report(args) -> int:
    aggs = bench.read_aggregates(args.aggregates)
    aggs.sort(key=lambda a: (a.dataset, a.method, str(a.k_or_m)))
    header = f"{'dataset':<10} {'method':<20} {'k':>5} {'rmse':>12} " \
             f"{'sem':>10} {'train_s':>9} {'infer_s':>9} {'gain':>8}"
    print(header)
    print("-" * len(header))
    for a in aggs:
        gain = "" if a.gain_vs_tnnr is None else f"{100 * a.gain_vs_tnnr:7.2f}%"
        print(f"{a.dataset:<10} {a.method:<20} {str(a.k_or_m):>5} "
              f"{a.mean_rmse:>12.6f} {a.sem_rmse:>10.6f} "
              f"{a.mean_train_seconds:>9.2f} {a.mean_inference_seconds:>9.2f} "
              f"{gain:>8}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinreg",
        description="Twin-network difference regression benchmark toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit a synthetic dataset as CSV")
    p.add_argument("--dataset", required=True, choices=sorted(data.GENERATORS))
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-std", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="run an experiment and emit result CSVs")
    p.add_argument("--config", help="JSON experiment config file")
    p.add_argument("--dataset", help="generator name or CSV path")
    p.add_argument("--methods", nargs="+", help="methods to run")
    p.add_argument("--k", nargs="+", help="k sweep (ints or ALL)")
    p.add_argument("--splits", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ensemble-size", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("aggregate", help="aggregate a result-row CSV")
    p.add_argument("--rows", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("report", help="print an aggregate CSV as a table")
    p.add_argument("--aggregates", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # CLI boundary: report and exit nonzero
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
