"""Command line front end.

Subcommands: gen-schedules, run-session, experiment1, experiment2, landscape,
analyze.  Every command is a deterministic function of the config file and
the master seed, regardless of --jobs.  Exit codes: 0 ok, 1 bad config or
arguments, 2 runtime cell failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

from . import oracle, schedules, session, stats
from .traders import ALL_KINDS, CORE_KINDS, TraderPopulation


@dataclass
class RunConfig:
    master_seed: int = 1
    scheduler: schedules.SchedulerParams = field(
        default_factory=schedules.SchedulerParams)
    strategies: tuple = CORE_KINDS
    strategy_params: dict = field(default_factory=dict)
    n_per_side: int = 12
    p_grid: list = field(default_factory=lambda: [0.0])
    K: int = 1
    n_schedules: int = 1
    out_dir: str = "out"

    @classmethod
    def from_file(cls, path):
        with open(path) as f:
            raw = json.load(f)
        cfg = cls()
        cfg.master_seed = int(raw.get("master_seed", cfg.master_seed))
        sched = raw.get("scheduler", {})
        cfg.scheduler = schedules.SchedulerParams(**sched)
        cfg.strategies = tuple(sorted(raw.get("strategies", CORE_KINDS)))
        cfg.strategy_params = raw.get("strategy_params", {})
        cfg.n_per_side = int(raw.get("n_per_side", cfg.n_per_side))
        cfg.p_grid = [float(p) for p in raw.get("p_grid", cfg.p_grid)]
        cfg.K = int(raw.get("K", cfg.K))
        cfg.n_schedules = int(raw.get("n_schedules", cfg.n_schedules))
        cfg.out_dir = raw.get("out_dir", cfg.out_dir)
        cfg.validate()
        return cfg

    def validate(self):
        self.scheduler.validate()
        for kind in self.strategies:
            if kind not in ALL_KINDS:
                raise ValueError("unknown strategy %r" % (kind,))
        for kind in self.strategy_params:
            if kind not in ALL_KINDS:
                raise ValueError("parameter override for unknown strategy %r" % (kind,))
        pmax = oracle.p_max(self.strategies)
        for p in self.p_grid:
            if not (0.0 <= p <= pmax + 1e-12):
                raise ValueError("p=%r outside [0, %.4f]" % (p, pmax))
        if self.n_per_side < len(self.strategies):
            raise ValueError("n_per_side smaller than the strategy count")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.n_schedules < 0:
            raise ValueError("n_schedules must be >= 0")
        return self


SCHEDULE_DIR = "schedules"
MANIFEST = "manifest.json"


def _schedule_paths(out_dir):
    return os.path.join(out_dir, SCHEDULE_DIR), \
        os.path.join(out_dir, SCHEDULE_DIR, MANIFEST)


def cmd_gen_schedules(cfg):
    sched_dir, manifest_path = _schedule_paths(cfg.out_dir)
    os.makedirs(sched_dir, exist_ok=True)
    entries = []
    for i in range(cfg.n_schedules):
        rng_seed = oracle.derive_seed(cfg.master_seed, (900, i))
        import numpy as np
        rng = np.random.default_rng(rng_seed)
        sched = schedules.generate_schedule(cfg.scheduler, rng)
        fname = "schedule_%03d.json" % i
        schedules.schedule_to_json(sched, os.path.join(sched_dir, fname))
        entries.append({"id": i, "file": fname})
    manifest = {"master_seed": cfg.master_seed,
                "params": vars(cfg.scheduler),
                "schedules": entries}
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
        f.write("\n")
    print("wrote %d schedules under %s" % (cfg.n_schedules, sched_dir))
    return 0


def _load_schedules(cfg, limit=None):
    sched_dir, manifest_path = _schedule_paths(cfg.out_dir)
    if not os.path.exists(manifest_path):
        raise FileNotFoundError(
            "no schedule manifest at %s; run gen-schedules first" % manifest_path)
    with open(manifest_path) as f:
        manifest = json.load(f)
    entries = manifest["schedules"]
    if limit is not None:
        entries = entries[:limit]
    return [schedules.schedule_from_json(os.path.join(sched_dir, e["file"]))
            for e in entries]


def _experiment(cfg, which, jobs):
    scheds = _load_schedules(cfg, cfg.n_schedules)
    if not scheds:
        raise ValueError("no schedules available")
    pops = oracle.enumerate_populations(cfg.n_per_side, cfg.strategies)
    if not pops:
        raise ValueError("no valid populations for %d traders per side"
                         % cfg.n_per_side)
    duration = cfg.scheduler.duration
    if which == "experiment1":
        records = oracle.experiment1(scheds, pops, cfg.master_seed, K=cfg.K,
                                     duration=duration,
                                     strategy_params=cfg.strategy_params,
                                     jobs=jobs)
        out_name = "exp1_records.csv"
    else:
        records = oracle.experiment2(scheds, pops, cfg.p_grid, cfg.K,
                                     cfg.master_seed, duration=duration,
                                     strategy_params=cfg.strategy_params,
                                     jobs=jobs)
        out_name = "exp2_records.csv"
    os.makedirs(cfg.out_dir, exist_ok=True)
    records_path = os.path.join(cfg.out_dir, out_name)
    oracle.write_records_csv(records, records_path, cfg.strategies)
    rows = oracle.read_records_csv(records_path)
    analysis = stats.analyze_records(rows)
    stats.write_analysis_csvs(analysis, os.path.join(cfg.out_dir, "analysis"))
    print("wrote %d records to %s" % (len(records), records_path))
    return 0


def cmd_landscape(cfg, jobs, resolution):
    scheds = _load_schedules(cfg, 1)
    if len(cfg.strategies) != 3:
        raise ValueError("landscape needs exactly 3 strategies, got %r"
                         % (cfg.strategies,))
    grid = oracle.dominance_landscape(
        scheds[0], resolution, cfg.K, cfg.master_seed, kinds=cfg.strategies,
        n_per_side=cfg.n_per_side, duration=cfg.scheduler.duration,
        strategy_params=cfg.strategy_params, jobs=jobs)
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "landscape.csv")
    oracle.write_landscape_csv(grid, path, cfg.strategies)
    print("wrote %d grid points to %s" % (len(grid), path))
    return 0


def cmd_run_session(cfg, schedule_path, population_spec, duration):
    sched = schedules.schedule_from_json(schedule_path)
    counts = {}
    for part in population_spec.split(","):
        kind, _, num = part.partition("=")
        counts[kind.strip()] = int(num)
    pop = TraderPopulation(counts)
    dur = duration if duration else sched.duration
    result = session.run_session(sched, pop, dur, cfg.master_seed,
                                 record_tape=True,
                                 strategy_params=cfg.strategy_params)
    os.makedirs(cfg.out_dir, exist_ok=True)
    tape_path = os.path.join(cfg.out_dir, "session_tape.csv")
    from .exchange import write_tape_csv
    write_tape_csv(result.tape, tape_path)
    print("trades: %d  market avg profit: %.3f" % (result.n_trades, result.market_avg))
    for kind, avg in sorted(result.per_kind_avg.items()):
        print("  %-4s avg profit %.3f" % (kind, avg))
    if result.efficiency is not None:
        print("allocative efficiency: %.3f" % result.efficiency)
    print("tape written to %s" % tape_path)
    return 0


def cmd_analyze(records_path, out_dir):
    rows = oracle.read_records_csv(records_path)
    analysis = stats.analyze_records(rows)
    paths = stats.write_analysis_csvs(analysis, out_dir)
    for name in sorted(paths):
        print("wrote %s" % paths[name])
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="oraclesim",
        description="Double auction simulator and strategy-knowledge experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="path to the run configuration JSON")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config master seed")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel worker processes")
        p.add_argument("--out", default=None, help="override the output directory")

    common(sub.add_parser("gen-schedules", help="generate random order schedules"))
    p_run = sub.add_parser("run-session", help="run one market session")
    common(p_run)
    p_run.add_argument("--schedule", required=True, help="schedule JSON file")
    p_run.add_argument("--population", required=True,
                       help="per-side counts, e.g. 'ZIP=4,GDX=4,AA=4'")
    p_run.add_argument("--duration", type=int, default=None)
    common(sub.add_parser("experiment1", help="perfect-knowledge experiment"))
    common(sub.add_parser("experiment2", help="noisy-knowledge experiment"))
    p_land = sub.add_parser("landscape", help="dominance map over the 3-strategy simplex")
    common(p_land)
    p_land.add_argument("--resolution", type=int, default=6)
    p_an = sub.add_parser("analyze", help="summarise an experiment records CSV")
    p_an.add_argument("--records", required=True)
    p_an.add_argument("--out", default=None)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "analyze":
        out_dir = args.out or os.path.join(os.path.dirname(args.records) or ".",
                                           "analysis")
        try:
            return cmd_analyze(args.records, out_dir)
        except (OSError, ValueError) as e:
            print("error: %s" % e, file=sys.stderr)
            return 1

    try:
        cfg = RunConfig.from_file(args.config)
        if args.seed is not None:
            cfg.master_seed = args.seed
        if args.out is not None:
            cfg.out_dir = args.out
    except (OSError, ValueError, TypeError, KeyError) as e:
        print("config error: %s" % e, file=sys.stderr)
        return 1

    try:
        if args.command == "gen-schedules":
            return cmd_gen_schedules(cfg)
        if args.command == "run-session":
            return cmd_run_session(cfg, args.schedule, args.population, args.duration)
        if args.command in ("experiment1", "experiment2"):
            return _experiment(cfg, args.command, args.jobs)
        if args.command == "landscape":
            return cmd_landscape(cfg, args.jobs, args.resolution)
    except (FileNotFoundError, ValueError) as e:
        print("error: %s" % e, file=sys.stderr)
        return 1
    except RuntimeError as e:
        print("runtime failure: %s" % e, file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
