"""Command-line entry point.

    afdmtt run <config-file | preset:NAME> [--scenario S] [--snr a:b:step]
               [--trials T] [--seed S] [--out FILE]
    afdmtt presets

Exit status is 0 on success, 1 when the experiment fails and 2 for
configuration errors. ``AFDMTT_THREADS`` sets the number of worker
processes used for trials.
"""
import argparse
import csv
import io
import math
import os
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional

import numpy as np

from .config import PRESETS, ExperimentSpec, parse_config, parse_snr
from .errors import ConfigError
from .sweep import Scenario, TrialRecord, run_trial

CSV_HEADER = ["scenario", "snr_db", "trial", "metric", "value", "runtime_s", "seed"]


def fmt(x: float) -> str:
    """Fixed float formatting so reruns produce identical bytes."""
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.10e}"


def record_rows(scenario: str, rec: TrialRecord) -> List[List[str]]:
    base = [scenario, fmt(rec.snr_db), str(rec.trial)]
    if rec.failed:
        return [base + ["failed", fmt(1.0), "", str(rec.seed)]]
    rows = [base + [k, fmt(float(v)), "", str(rec.seed)]
            for k, v in sorted(rec.metrics.items())]
    if scenario == "runtime":
        # wall-clock values are only written where they are the point
        rows += [base + [f"runtime_{k}", fmt(v), fmt(v), str(rec.seed)]
                 for k, v in sorted(rec.runtime.items())]
    return rows


def summarize(records: List[TrialRecord], scenario: str) -> str:
    table = defaultdict(lambda: defaultdict(list))
    for rec in records:
        if rec.failed:
            continue
        for k, v in rec.metrics.items():
            table[k][rec.snr_db].append(v)
        if scenario == "runtime":
            for k, v in rec.runtime.items():
                table[f"runtime_{k}"][rec.snr_db].append(v)
    snrs = sorted({r.snr_db for r in records})
    out = io.StringIO()
    out.write("median per SNR\n")
    out.write(f"{'metric':<18}" + "".join(f"{s:>12g}" for s in snrs) + "\n")
    for k in sorted(table):
        vals = [np.median(table[k][s]) if table[k][s] else float("nan") for s in snrs]
        out.write(f"{k:<18}" + "".join(f"{v:>12.4g}" for v in vals) + "\n")
    n_failed = sum(r.failed for r in records)
    if n_failed:
        out.write(f"{n_failed} failed trial cells\n")
    return out.getvalue()


def _iter_trials(scenario, spec: ExperimentSpec):
    jobs = [(scenario, t, spec.snr_grid, spec.master_seed) for t in range(spec.trials)]
    if spec.workers > 1 and spec.trials > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            yield from pool.map(_call, jobs)
    else:
        for job in jobs:
            yield run_trial(*job)


def _call(job):
    return run_trial(*job)


def run(spec: ExperimentSpec, stdout=None) -> int:
    """Run an experiment, write the CSV and print the per-SNR medians."""
    stdout = stdout or sys.stdout
    scenario = Scenario.named(spec.scenario, spec.cfg, als_max_iter=spec.als_max_iter,
                              als_tol=spec.als_tol, lobe_model=spec.lobe_model)
    fh = open(spec.output, "w", newline="") if spec.output else None
    writer = csv.writer(fh if fh else stdout, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    records: List[TrialRecord] = []
    try:
        for chunk in _iter_trials(scenario, spec):
            for rec in chunk:
                writer.writerows(record_rows(spec.scenario, rec))
                records.append(rec)
            if fh:
                fh.flush()
    except Exception as exc:  # noqa: BLE001 - reported through the exit status
        (fh or stdout).write(f"# incomplete: {type(exc).__name__}: {exc}\n")
        if fh:
            fh.close()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if fh:
        fh.close()
        stdout.write(summarize(records, spec.scenario))
    if records and all(r.failed for r in records):
        print("error: every trial failed; first error: " + records[0].error,
              file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="afdmtt", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment")
    r.add_argument("config", help="key=value file, or preset:NAME")
    r.add_argument("--scenario")
    r.add_argument("--snr", help="a:b:step (inclusive) or comma list, dB")
    r.add_argument("--trials", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    sub.add_parser("presets", help="list built-in presets")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        for name, (scenario, overrides) in PRESETS.items():
            extra = " ".join(f"{k}={v}" for k, v in overrides.items())
            print(f"{name:<18} scenario={scenario} {extra}".rstrip())
        return 0
    try:
        spec = parse_config(args.config)
        changes = {}
        if args.scenario is not None:
            changes["scenario"] = args.scenario
        if args.snr is not None:
            changes["snr_grid"] = parse_snr(args.snr)
        if args.trials is not None:
            changes["trials"] = args.trials
        if args.seed is not None:
            changes["master_seed"] = args.seed
        if args.out is not None:
            changes["output"] = args.out
        threads = os.environ.get("AFDMTT_THREADS")
        if threads:
            try:
                changes["workers"] = int(threads)
            except ValueError as exc:
                raise ConfigError("AFDMTT_THREADS", str(exc)) from exc
        if changes:
            spec = spec.with_changes(**changes)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(spec)


if __name__ == "__main__":
    sys.exit(main())
