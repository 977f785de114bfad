"""Batch front-end: run experiment configs, replay traces, summarize cost
scaling.  Exit status is 0 iff every audit in every sweep point passed."""

from __future__ import annotations

import argparse
import math
import os
import sys

from .config import expand_sweeps, parse_config
from .generators import read_trace
from .reports import read_summary_csv, write_all
from .simulator import RunConfig, run_simulation
from .window import WindowConfig


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    seed_env = os.environ.get("SLIDEMON_SEED")
    if seed_env is not None:
        cfg.seed = int(seed_env)
    violations = 0
    for tag, run in expand_sweeps(cfg):
        report = run_simulation(run)
        outdir = os.path.join(cfg.out_dir, tag)
        write_all(report, outdir, tag=tag)
        violations += report.violations
        print(
            f"{tag}: events={sum(report.n_events)} messages={len(report.messages)} "
            f"max_window_words={report.max_window_words()} "
            f"violations={report.violations}"
        )
    return 0 if violations == 0 else 1


def _cmd_replay(args) -> int:
    traces = [read_trace(p) for p in args.traces]
    run = RunConfig(
        window=WindowConfig(args.window, args.tau),
        protocol=args.protocol,
        epsilon=args.epsilon,
        traces=traces,
        backend=args.backend,
        phis=tuple(float(s) for s in args.phis.split(",")),
        audit_every=args.audit_every,
    )
    report = run_simulation(run)
    write_all(report, args.out, tag="replay")
    print(
        f"replay: events={sum(report.n_events)} messages={len(report.messages)} "
        f"max_window_words={report.max_window_words()} "
        f"violations={report.violations}"
    )
    return 0 if report.violations == 0 else 1


def _cmd_report(args) -> int:
    rows = []
    for entry in sorted(os.listdir(args.dir)):
        path = os.path.join(args.dir, entry, "summary.csv")
        if os.path.isfile(path):
            rows.append(read_summary_csv(path))
    if not rows:
        print(f"no summary.csv files under {args.dir}", file=sys.stderr)
        return 2
    # least squares through the origin: words ~ C * (1/eps) * log2(n)
    xs, ys = [], []
    for row in rows:
        eps = float(row["epsilon"])
        n = max(int(row["n_events"]), 2)
        xs.append((1.0 / eps) * math.log2(n))
        ys.append(float(row["max_window_words"]))
    sxx = sum(x * x for x in xs)
    c_fit = sum(x * y for x, y in zip(xs, ys)) / sxx if sxx > 0 else 0.0
    out_path = os.path.join(args.dir, "scaling_summary.csv")
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            "tag,epsilon,n_events,max_churn,max_window_words,"
            "predictor,fitted,residual\n"
        )
        for row, x, y in zip(rows, xs, ys):
            fh.write(
                f"{row['tag']},{row['epsilon']},{row['n_events']},"
                f"{row['max_churn']},{row['max_window_words']},"
                f"{x:.9g},{c_fit * x:.9g},{y - c_fit * x:.9g}\n"
            )
    print(f"fitted constant: {c_fit:.6g} over {len(rows)} runs -> {out_path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="slidemon",
        description="sliding-window distributed monitoring experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config")

    p_rep = sub.add_parser("replay", help="replay trace files")
    p_rep.add_argument("traces", nargs="+")
    p_rep.add_argument("--protocol", required=True)
    p_rep.add_argument("--epsilon", type=float, required=True)
    p_rep.add_argument("--window", type=int, required=True)
    p_rep.add_argument("--tau", type=int, default=0)
    p_rep.add_argument("--backend", default="exact")
    p_rep.add_argument("--phis", default="0.25,0.5,0.75")
    p_rep.add_argument("--audit-every", type=int, default=0)
    p_rep.add_argument("--out", default="replay_out")

    p_sum = sub.add_parser("report", help="summarize cost scaling of runs")
    p_sum.add_argument("dir")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "replay":
            return _cmd_replay(args)
        return _cmd_report(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
