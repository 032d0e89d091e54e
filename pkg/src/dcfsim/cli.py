"""Command-line entry point: run one experiment or sweep a parameter.

stdout carries only the paths of produced files (machine-readable);
progress goes to stderr.  Exit codes: 0 ok, 2 config/validation error,
3 I/O failure.
"""

import argparse
import json
import multiprocessing
import os
import sys
from random import Random

from .config import SWEEPABLE, apply_param, build_config, load_config
from .metrics import (build_aggregate_summary, build_run_summary, summarize,
                      write_delays_csv, write_intervals_csv, write_summary_json)
from .scenario import generate, validate
from .simulation import run_deployment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

SWEEP_METRICS = ("throughput_bps", "access_delay_s", "loss_pct")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment (n_sim deployments)")
    sweep_p = sub.add_parser("sweep", help="run the experiment once per swept value")
    for p in (run_p, sweep_p):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--jobs", type=int, default=None,
                       help="parallel runs (default: env SIM_JOBS or 1)")
    run_p.add_argument("--dump-deployment", action="store_true",
                       help="write each run's deployment as JSON")
    run_p.add_argument("--trace", action="store_true",
                       help="write each run's event trace (TSV)")
    sweep_p.add_argument("--param", required=True,
                         help="name=lo..hi or name=v1,v2,... "
                              f"(sweepable: {', '.join(sorted(SWEEPABLE))})")
    return parser


def _load(path: str, seed_override):
    if not os.path.exists(path):
        print(f"config file not found: {path}", file=sys.stderr)
        return None, None
    try:
        with open(path) as fh:
            file_dict = json.load(fh)
    except json.JSONDecodeError as exc:
        print(f"config file {path} is not valid JSON: {exc}", file=sys.stderr)
        return None, None
    overrides = {"master_seed": seed_override} if seed_override is not None else None
    cfg, resolved, errors = load_config(file_dict, overrides)
    if errors:
        for err in errors:
            print(err, file=sys.stderr)
        return None, None
    errors = validate(cfg.experiment, cfg)
    if errors:
        for err in errors:
            print(err, file=sys.stderr)
        return None, None
    return cfg, resolved


def _jobs(args) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    return max(1, int(os.environ.get("SIM_JOBS", "1")))


def _execute_run(task):
    """One deployment end to end; returns (files, aggregate piece)."""
    resolved, run_index, out_dir, prefix, dump_deployment, write_trace = task
    cfg = build_config(resolved)
    seed = cfg.master_seed + run_index
    rng = Random(seed)
    deployment = generate(cfg.experiment.kind, rng, cfg.radio, cfg.path_loss,
                          cfg.experiment.n_bss, cfg.policy_name, cfg.policy_params,
                          cfg.per_bss_policies, seed)
    run_id = f"run{run_index}"
    result = run_deployment(deployment, cfg, rng, run_id=run_id,
                            scenario=cfg.experiment.kind)
    base = os.path.join(out_dir, f"{prefix}_{run_id}")
    files = []
    write_intervals_csv(base + "_intervals.csv", result.records)
    files.append(base + "_intervals.csv")
    write_delays_csv(base + "_delays.csv", run_id, cfg.experiment.kind,
                     result.policy_by_bss, result.delays_ns)
    files.append(base + "_delays.csv")
    summary = build_run_summary(run_id, cfg.experiment.kind, seed, resolved,
                                result.records, result.delays_ns, result.counters,
                                result.policy_by_bss, result.diagnostics,
                                result.final_clock_ns)
    write_summary_json(base + "_summary.json", summary)
    files.append(base + "_summary.json")
    if dump_deployment:
        with open(base + "_deployment.json", "w", newline="") as fh:
            json.dump(deployment.to_jsonable(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        files.append(base + "_deployment.json")
    if write_trace:
        with open(base + "_trace.tsv", "w", newline="") as fh:
            for time_ns, bss_id, kind, detail in result.trace:
                fh.write(f"{time_ns}\t{bss_id}\t{kind}\t{detail}\n")
        files.append(base + "_trace.tsv")
    piece = {
        "records": result.records,
        "delays_s": {b: [d / 1e9 for d in ds] for b, ds in result.delays_ns.items()},
        "counters": result.counters,
        "policy_by_bss": result.policy_by_bss,
    }
    return files, piece


def _run_batch(resolved: dict, n_sim: int, out_dir: str, prefix: str, jobs: int,
               dump_deployment: bool = False, write_trace: bool = False):
    tasks = [(resolved, i, out_dir, prefix, dump_deployment, write_trace)
             for i in range(n_sim)]
    if jobs > 1 and n_sim > 1:
        with multiprocessing.Pool(min(jobs, n_sim)) as pool:
            results = pool.map(_execute_run, tasks)
    else:
        results = []
        for i, task in enumerate(tasks):
            results.append(_execute_run(task))
            print(f"{prefix}: run {i + 1}/{n_sim} done", file=sys.stderr)
    return results


def cmd_run(args) -> int:
    cfg, resolved = _load(args.config, args.seed)
    if cfg is None:
        return EXIT_CONFIG
    try:
        os.makedirs(args.out, exist_ok=True)
        results = _run_batch(resolved, cfg.experiment.n_sim, args.out,
                             cfg.output_prefix, _jobs(args),
                             args.dump_deployment, args.trace)
        for files, _ in results:
            for path in files:
                print(path)
        aggregate = build_aggregate_summary(cfg.experiment.kind, resolved,
                                            [piece for _, piece in results])
        agg_path = os.path.join(args.out, f"{cfg.output_prefix}_aggregate_summary.json")
        write_summary_json(agg_path, aggregate)
        print(agg_path)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def parse_param(text: str):
    name, sep, spec = text.partition("=")
    if not sep or name not in SWEEPABLE:
        return None, None
    _, typ = SWEEPABLE[name]
    try:
        if ".." in spec:
            lo, hi = spec.split("..", 1)
            if typ is not int:
                return None, None
            values = list(range(int(lo), int(hi) + 1))
        else:
            values = [typ(v) for v in spec.split(",") if v != ""]
    except ValueError:
        return None, None
    return (name, values) if values else (None, None)


def cmd_sweep(args) -> int:
    cfg, resolved = _load(args.config, args.seed)
    if cfg is None:
        return EXIT_CONFIG
    name, values = parse_param(args.param)
    if name is None:
        print(f"unknown or malformed sweep parameter: {args.param}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        os.makedirs(args.out, exist_ok=True)
        sweep_rows = []
        for value in values:
            point = apply_param(resolved, name, value)
            point_cfg, _, errors = load_config(point)
            if not errors:
                errors = validate(point_cfg.experiment, point_cfg)
            if errors:
                for err in errors:
                    print(f"{name}={value}: {err}", file=sys.stderr)
                return EXIT_CONFIG
            prefix = f"{point_cfg.output_prefix}_{name}_{value}"
            results = _run_batch(point, point_cfg.experiment.n_sim, args.out,
                                 prefix, _jobs(args))
            for files, _ in results:
                for path in files:
                    print(path)
            aggregate = build_aggregate_summary(point_cfg.experiment.kind, point,
                                                [piece for _, piece in results])
            agg_path = os.path.join(args.out, f"{prefix}_aggregate_summary.json")
            write_summary_json(agg_path, aggregate)
            print(agg_path)
            sweep_rows.extend(_sweep_rows(name, value, aggregate))
        sweep_path = os.path.join(args.out, f"{cfg.output_prefix}_sweep.csv")
        _write_sweep_csv(sweep_path, sweep_rows)
        print(sweep_path)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _sweep_rows(param: str, value, aggregate: dict):
    rows = []
    for policy, stats in sorted(aggregate["per_policy"].items()):
        for metric in SWEEP_METRICS:
            if metric == "loss_pct":
                entry = stats["loss_pct_runs"]
            else:
                entry = stats[metric]
            if entry is None:
                continue
            rows.append([param, value, policy, metric, entry["mean"], entry["min"],
                         entry["max"], entry["median"], entry["q1"], entry["q3"]])
    return rows


def _write_sweep_csv(path, rows) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["param", "value", "policy", "metric", "mean", "min",
                         "max", "median", "q1", "q3"])
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_sweep(args)


if __name__ == "__main__":
    sys.exit(main())
