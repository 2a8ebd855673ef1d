"""Experiment harness: who wins where, and how noisy knowledge erodes the edge.

The pipeline enumerates every trader-ratio point, optionally distorts each
trader's reported strategy with probability p, predicts the dominant strategy
from K simulated sessions on the (possibly distorted) population, then
measures real profits after adding one buyer and one seller of the predicted
kind to the true population.  Every cell ((schedule, population, p)) is an
independent, reproducible unit of work.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .session import run_session
from .traders import TraderPopulation

log = logging.getLogger(__name__)

# phase codes inside a cell's seed key
_PHASE_NOISE = 0
_PHASE_PREDICT = 1
_PHASE_REAL = 2


def p_max(strategy_set):
    """Largest meaningful noise probability, 1 - 1/|S|: beyond it a trader
    would be reported as some strategy uniformly at random."""
    n = len(strategy_set)
    if n < 1:
        raise ValueError("strategy set is empty")
    return 1.0 - 1.0 / n


@dataclass(frozen=True)
class NoiseSpec:
    """Distortion level p over a strategy set.

    p is any probability in [0, 1]; experiment grids are additionally checked
    against p_max so that sweeps stay in the meaningful range.
    """

    p: float
    kinds: tuple

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValueError("noise probability %r outside [0, 1]" % (self.p,))
        if len(self.kinds) < 1:
            raise ValueError("strategy set is empty")

    @property
    def p_max(self):
        return p_max(self.kinds)


def apply_noise(trader_kinds, noise, rng):
    """Independently misreport each trader's kind with probability p, drawing
    the mistaken kind uniformly from the other kinds in the set."""
    for k in trader_kinds:
        if k not in noise.kinds:
            raise ValueError("kind %r not in the noise strategy set" % (k,))
    if noise.p == 0.0 or len(noise.kinds) == 1:
        return list(trader_kinds)
    out = []
    kinds = noise.kinds
    p = noise.p
    for k in trader_kinds:
        if rng.random() < p:
            others = [o for o in kinds if o != k]
            out.append(others[int(rng.integers(len(others)))])
        else:
            out.append(k)
    return out


def enumerate_populations(n_per_side, strategy_set):
    """All ways to split n traders per side over the strategies, at least one
    of each, mirrored on both sides: C(n-1, k-1) populations."""
    kinds = tuple(sorted(strategy_set))
    k = len(kinds)
    if n_per_side < k:
        log.warning("cannot place %d kinds in %d traders per side", k, n_per_side)
        return []
    pops = []
    for cuts in itertools.combinations(range(1, n_per_side), k - 1):
        bounds = (0,) + cuts + (n_per_side,)
        counts = {kinds[i]: bounds[i + 1] - bounds[i] for i in range(k)}
        pops.append(TraderPopulation(counts))
    return pops


def derive_seed(master_seed, key):
    """Stable 64-bit seed for one unit of work, independent of execution order."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(v) for v in key))
    return int(ss.generate_state(2, np.uint64)[0])


def _pool_sessions(results):
    """Pool per-kind balances over sessions: totals divided by trader-slots."""
    profit = {}
    slots = {}
    for res in results:
        for kind, total in res.per_kind_profit.items():
            profit[kind] = profit.get(kind, 0) + total
            slots[kind] = slots.get(kind, 0) + res.per_kind_traders[kind]
    return {k: profit[k] / slots[k] for k in sorted(profit)}


def predict_dominant(schedule, population, K, seed, *, duration=240,
                     strategy_params=None):
    """Predict the dominant strategy from K sessions on one population.

    All K sessions share the population; each uses its own derived seed.
    Buyer and seller balances are pooled per kind over every session and the
    kind with the highest pooled average wins.  Exact ties (certain when no
    trades happen at all) resolve to the lexicographically first kind and the
    result is flagged.

    Returns (kind, pooled averages per kind, all_zero flag).
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    results = []
    for k in range(K):
        sub_seed = derive_seed(seed, (_PHASE_PREDICT, k))
        results.append(run_session(schedule, population, duration, sub_seed,
                                   strategy_params=strategy_params))
    avgs = _pool_sessions(results)
    top = max(avgs.values())
    best = min(k for k, v in avgs.items() if v == top)   # lexicographic tie-break
    all_zero = all(v == 0 for v in avgs.values())
    return best, avgs, all_zero


@dataclass
class ExperimentRecord:
    """One ((schedule, population, p)) cell of an experiment."""

    schedule_id: int
    kinds: tuple
    population: tuple          # per-side counts in sorted kind order
    p: float
    p_index: int
    predicted_kind: str
    pred_avg: dict
    real_avg: dict
    market_avg: float
    multiplier: float
    correct: bool
    pred_zero: bool
    zero_trade: bool
    K: int
    seed: int

    def sort_key(self):
        return (self.schedule_id, self.population, self.p_index)

    @property
    def population_label(self):
        return "-".join(str(c) for c in self.population)


def run_experiment_cell(schedule, schedule_id, population, p, p_index, K,
                        master_seed, *, duration, kinds, strategy_params=None):
    """One prediction/real pair: distort, predict, inject, measure."""
    kinds = tuple(sorted(kinds))
    cell_key = (schedule_id,) + population.key_ints(kinds) + (p_index,)
    cell_seed = derive_seed(master_seed, cell_key)

    if p > 0:
        noise = NoiseSpec(p, kinds)
        noise_rng = np.random.default_rng(derive_seed(cell_seed, (_PHASE_NOISE,)))
        buyer_list = [k for k in kinds for _ in range(population.buyers.get(k, 0))]
        seller_list = [k for k in kinds for _ in range(population.sellers.get(k, 0))]
        distorted_buyers = apply_noise(buyer_list, noise, noise_rng)
        distorted_sellers = apply_noise(seller_list, noise, noise_rng)
        viewed = TraderPopulation(
            buyers={k: distorted_buyers.count(k) for k in kinds},
            sellers={k: distorted_sellers.count(k) for k in kinds})
    else:
        viewed = population

    predicted, pred_avg, pred_zero = predict_dominant(
        schedule, viewed, K, cell_seed, duration=duration,
        strategy_params=strategy_params)

    real_pop = population.with_extra_pair(predicted)
    real_results = []
    for k in range(K):
        sub_seed = derive_seed(cell_seed, (_PHASE_REAL, k))
        real_results.append(run_session(schedule, real_pop, duration, sub_seed,
                                        strategy_params=strategy_params))
    real_avg = _pool_sessions(real_results)
    total = sum(r.market_total for r in real_results)
    traders = sum(r.n_traders for r in real_results)
    market_avg = total / traders
    zero_trade = all(r.zero_trade for r in real_results)
    multiplier = real_avg[predicted] / market_avg if market_avg > 0 else math.nan
    top = max(real_avg.values())
    correct = real_avg[predicted] == top

    return ExperimentRecord(
        schedule_id=schedule_id,
        kinds=kinds,
        population=tuple(population.buyers.get(k, 0) for k in kinds),
        p=p, p_index=p_index,
        predicted_kind=predicted,
        pred_avg=pred_avg, real_avg=real_avg,
        market_avg=market_avg, multiplier=multiplier,
        correct=correct, pred_zero=pred_zero, zero_trade=zero_trade,
        K=K, seed=master_seed)


def _cell_worker(args):
    from .schedules import OrderSchedule
    (sched_dict, schedule_id, pop_key, p, p_index, K, master_seed, duration,
     kinds, strategy_params) = args
    schedule = OrderSchedule.from_dict(sched_dict)
    buyers, sellers = pop_key
    population = TraderPopulation(buyers=dict(buyers), sellers=dict(sellers))
    return run_experiment_cell(schedule, schedule_id, population, p, p_index, K,
                               master_seed, duration=duration, kinds=kinds,
                               strategy_params=strategy_params)


def _run_cells(cells, jobs):
    if jobs and jobs > 1:
        import multiprocessing
        with multiprocessing.Pool(jobs) as pool:
            records = list(pool.imap_unordered(_cell_worker, cells, chunksize=4))
    else:
        records = [_cell_worker(c) for c in cells]
    records.sort(key=lambda r: r.sort_key())
    return records


def discard_untradeable_schedules(records, threshold=0.5):
    """Drop every record of a schedule whose cells mostly produced no trades."""
    by_schedule = {}
    for r in records:
        by_schedule.setdefault(r.schedule_id, []).append(r)
    kept = []
    discarded = []
    for sid in sorted(by_schedule):
        rs = by_schedule[sid]
        zero = sum(1 for r in rs if r.zero_trade)
        if zero > threshold * len(rs):
            discarded.append(sid)
            log.warning("schedule %d discarded: %d/%d cells without trades",
                        sid, zero, len(rs))
        else:
            kept.extend(rs)
    kept.sort(key=lambda r: r.sort_key())
    return kept, discarded


def experiment2(schedules, populations, p_grid, K, seed, *, duration=330,
                strategy_params=None, jobs=1, discard_threshold=0.5):
    """Noisy-knowledge experiment over (schedule x population x p) cells.

    The noise draw happens once per cell and is shared by all K prediction
    sessions; the real phase runs K sessions on the true population plus one
    extra buyer and seller of the predicted kind.  Schedules whose cells
    mostly fail to trade are discarded.
    """
    if not populations:
        raise ValueError("no populations supplied")
    kinds = populations[0].kinds
    pmax = p_max(kinds)
    for p in p_grid:
        if not (0.0 <= p <= pmax + 1e-12):
            raise ValueError("noise level %r outside [0, %.4f]" % (p, pmax))
    cells = []
    for schedule_id, schedule in enumerate(schedules):
        sched_dict = schedule.to_dict()
        for pop in populations:
            for p_index, p in enumerate(p_grid):
                cells.append((sched_dict, schedule_id, pop.key(), float(p), p_index,
                              K, seed, duration, kinds, strategy_params))
    records = _run_cells(cells, jobs)
    records, _ = discard_untradeable_schedules(records, discard_threshold)
    return records


def experiment1(schedules, populations, seed, *, K=1, duration=240,
                strategy_params=None, jobs=1):
    """Perfect-knowledge experiment: predict on the true ratios, then remeasure
    with the predicted kind reinforced.  Identical to experiment2 at p = 0."""
    return experiment2(schedules, populations, [0.0], K, seed, duration=duration,
                       strategy_params=strategy_params, jobs=jobs)


def simplex_grid(resolution):
    """All integer weight triples (a, b, c) with a + b + c = resolution."""
    pts = []
    for a in range(resolution + 1):
        for b in range(resolution + 1 - a):
            pts.append((a, b, resolution - a - b))
    return pts


def _apportion(weights, total):
    """Largest-remainder rounding of total * w/sum(w) to integers."""
    s = sum(weights)
    raw = [total * w / s for w in weights]
    counts = [int(math.floor(x)) for x in raw]
    short = total - sum(counts)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:short]:
        counts[i] += 1
    return counts


def dominance_landscape(schedule, grid_resolution, K, seed, *,
                        kinds, n_per_side=12, duration=330,
                        strategy_params=None, jobs=1):
    """Dominant kind at each ratio point of the 3-strategy simplex.

    Grid weights map to the nearest integer populations of ``n_per_side``
    traders per side; points where a positively-weighted kind rounds down to
    zero traders are skipped.  Returns a list of
    (weights, per-side counts, dominant kind) suitable for ternary plots.
    """
    kinds = tuple(sorted(kinds))
    if len(kinds) != 3:
        raise ValueError("the landscape is defined over exactly 3 strategies")
    tasks = {}
    points = []
    for weights in simplex_grid(grid_resolution):
        counts = _apportion(weights, n_per_side)
        if any(w > 0 and c == 0 for w, c in zip(weights, counts)):
            continue
        pop = TraderPopulation({k: c for k, c in zip(kinds, counts) if c > 0})
        points.append((weights, tuple(counts), pop))
        tasks.setdefault(tuple(counts), pop)

    sched_dict = schedule.to_dict()
    cells = [(sched_dict, 0, pop.key(), 0.0, 0, K, seed, duration, kinds,
              strategy_params) for counts, pop in sorted(tasks.items())]
    records = _run_cells(cells, jobs)
    by_counts = {r.population: r.predicted_kind for r in records}
    return [(weights, counts, by_counts[counts]) for weights, counts, _ in points]


# -- CSV interfaces ---------------------------------------------------------

def record_columns(kinds):
    cols = ["schedule_id", "population", "p", "predicted_kind"]
    for k in kinds:
        cols.append("pred_avg_%s" % k)
    for k in kinds:
        cols.append("real_avg_%s" % k)
    cols += ["market_avg", "multiplier", "correct", "pred_zero", "zero_trade",
             "K", "seed"]
    return cols


def _fmt(x):
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x)
    return str(x)


def write_records_csv(records, path, kinds=None):
    """Records CSV with a stable schema and row order; see the README."""
    if kinds is None:
        kinds = records[0].kinds if records else ()
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(record_columns(kinds))
        for r in sorted(records, key=lambda r: r.sort_key()):
            row = [r.schedule_id, r.population_label, _fmt(r.p), r.predicted_kind]
            row += [_fmt(r.pred_avg.get(k, 0.0)) for k in kinds]
            row += [_fmt(r.real_avg.get(k, 0.0)) for k in kinds]
            row += [_fmt(r.market_avg), _fmt(r.multiplier),
                    int(r.correct), int(r.pred_zero), int(r.zero_trade),
                    r.K, r.seed]
            w.writerow(row)


def read_records_csv(path):
    """Load an experiment records CSV into plain dicts, with schema checking."""
    required = {"schedule_id", "population", "p", "predicted_kind", "market_avg",
                "multiplier", "correct", "zero_trade", "K", "seed"}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        cols = set(reader.fieldnames or ())
        missing = sorted(required - cols)
        if missing:
            raise ValueError("records file %s lacks columns: %s"
                             % (path, ", ".join(missing)))
        rows = []
        for raw in reader:
            rows.append({
                "schedule_id": int(raw["schedule_id"]),
                "population": raw["population"],
                "p": float(raw["p"]),
                "predicted_kind": raw["predicted_kind"],
                "market_avg": float(raw["market_avg"]),
                "multiplier": float(raw["multiplier"]),
                "correct": raw["correct"] in ("1", "True", "true"),
                "zero_trade": raw["zero_trade"] in ("1", "True", "true"),
                "K": int(raw["K"]),
                "seed": int(raw["seed"]),
            })
    return rows


def write_landscape_csv(landscape, path, kinds):
    kinds = tuple(sorted(kinds))
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        header = ["w_%s" % k for k in kinds] + ["n_%s" % k for k in kinds] \
            + ["dominant"]
        w.writerow(header)
        for weights, counts, kind in landscape:
            w.writerow(list(weights) + list(counts) + [kind])
