"""Randomised supply/demand order schedules and their competitive equilibrium.

A session's order flow is described by an :class:`OrderSchedule`: a timing
mode shared by both sides plus per-side lists of :class:`SubSchedule` price
ranges that tile the session duration.  Schedules are drawn from a
multi-dimensional random space (count, durations, per-side volatility and
midprice shift, step mode) and serialise losslessly to JSON.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .exchange import PRICE_MAX, PRICE_MIN

STEP_MODES = ("fixed", "jittered", "random")
TIME_MODES = ("periodic", "drip_fixed", "drip_jittered", "drip_poisson")


@dataclass
class SubSchedule:
    t_start: int
    t_end: int
    price_low: int
    price_high: int
    stepmode: str

    def validate(self, interval):
        if self.t_start >= self.t_end:
            raise ValueError("empty sub-schedule [%d, %d)" % (self.t_start, self.t_end))
        if (self.t_end - self.t_start) % interval != 0:
            raise ValueError("sub-schedule length not a multiple of the interval")
        if not (PRICE_MIN <= self.price_low <= self.price_high <= PRICE_MAX):
            raise ValueError("bad price range [%d, %d]" % (self.price_low, self.price_high))
        if self.stepmode not in STEP_MODES:
            raise ValueError("unknown stepmode %r" % (self.stepmode,))


@dataclass
class OrderSchedule:
    timemode: str
    interval: int
    supply: list = field(default_factory=list)
    demand: list = field(default_factory=list)

    @property
    def duration(self):
        return self.supply[-1].t_end if self.supply else 0

    def validate(self):
        if self.timemode not in TIME_MODES:
            raise ValueError("unknown timemode %r" % (self.timemode,))
        if len(self.supply) != len(self.demand):
            raise ValueError("supply and demand sub-schedule counts differ")
        t = 0
        for sup, dem in zip(self.supply, self.demand):
            if (sup.t_start, sup.t_end) != (dem.t_start, dem.t_end):
                raise ValueError("supply/demand boundaries not aligned")
            if sup.t_start != t:
                raise ValueError("sub-schedules do not tile the duration")
            sup.validate(self.interval)
            dem.validate(self.interval)
            t = sup.t_end
        return self

    def side_list(self, side_is_supply):
        return self.supply if side_is_supply else self.demand

    def covering(self, side_is_supply, t):
        for sub in self.side_list(side_is_supply):
            if sub.t_start <= t < sub.t_end:
                return sub
        raise ValueError("time %d outside schedule" % t)

    def to_dict(self):
        def enc(subs):
            return [{"from": s.t_start, "to": s.t_end, "low": s.price_low,
                     "high": s.price_high, "stepmode": s.stepmode} for s in subs]
        return {"timemode": self.timemode, "interval": self.interval,
                "supply": enc(self.supply), "demand": enc(self.demand)}

    @classmethod
    def from_dict(cls, d):
        def dec(subs):
            return [SubSchedule(s["from"], s["to"], s["low"], s["high"], s["stepmode"])
                    for s in subs]
        return cls(d["timemode"], d["interval"], dec(d["supply"]), dec(d["demand"])).validate()


def schedule_to_json(schedule, path):
    with open(path, "w") as f:
        json.dump(schedule.to_dict(), f, indent=1, sort_keys=True)
        f.write("\n")


def schedule_from_json(path):
    with open(path) as f:
        return OrderSchedule.from_dict(json.load(f))


@dataclass
class SchedulerParams:
    duration: int = 240
    interval: int = 30
    max_schedules: int = 8
    midprice: int = 100
    max_volatility: int = 60
    max_change: int = 40

    @property
    def num_intervals(self):
        return self.duration // self.interval

    def validate(self):
        if self.duration <= 0 or self.interval <= 0:
            raise ValueError("duration and interval must be positive")
        if self.duration % self.interval != 0:
            raise ValueError("duration must be a whole number of intervals")
        if not (1 <= self.max_schedules <= self.num_intervals):
            raise ValueError("max_schedules must be in [1, num_intervals]")
        if self.max_volatility < 0 or self.max_change < 0:
            raise ValueError("volatility and midprice change bounds must be >= 0")
        return self


def _clamp_price(p):
    return max(PRICE_MIN, min(PRICE_MAX, p))


def generate_schedule(params, rng):
    """Draw one random order schedule.

    The timing mode and the sub-schedule count are uniform draws; leftover
    intervals are handed out by repeatedly extending a uniformly chosen
    sub-schedule.  Each sub-schedule then draws, independently per side, a
    volatility in {0..max_volatility}, a midprice change in
    {-max_change..+max_change} and a step mode, giving the price range
    [midprice + change - volatility, midprice + change + volatility] clamped
    to the global tick domain.
    """
    params.validate()
    timemode = TIME_MODES[int(rng.integers(len(TIME_MODES)))]
    n_subs = int(rng.integers(1, params.max_schedules + 1))
    lengths = [1] * n_subs
    for _ in range(params.num_intervals - n_subs):
        lengths[int(rng.integers(n_subs))] += 1

    supply = []
    demand = []
    t = 0
    for length in lengths:
        t_end = t + length * params.interval
        for side in (supply, demand):
            vol = int(rng.integers(0, params.max_volatility + 1))
            change = int(rng.integers(-params.max_change, params.max_change + 1))
            stepmode = STEP_MODES[int(rng.integers(len(STEP_MODES)))]
            low = _clamp_price(params.midprice + change - vol)
            high = _clamp_price(params.midprice + change + vol)
            side.append(SubSchedule(t, t_end, low, high, stepmode))
        t = t_end
    return OrderSchedule(timemode, params.interval, supply, demand).validate()


def simple_symmetric_schedule(duration=240, interval=30, low=50, high=150):
    """A deterministic base-case schedule: one fixed-step range on both sides,
    orders resupplied periodically."""
    sup = [SubSchedule(0, duration, low, high, "fixed")]
    dem = [SubSchedule(0, duration, low, high, "fixed")]
    return OrderSchedule("periodic", interval, sup, dem).validate()


def order_prices(sub, n_orders, side, rng):
    """Limit prices for one replenishment cycle on one side.

    fixed: evenly spaced across [low, high] inclusive; jittered: evenly
    spaced then perturbed within half a step, clamped to the range; random:
    i.i.d. uniform.  ``side`` does not change the values, only their later
    assignment to traders (which the caller shuffles).
    """
    if n_orders < 1:
        raise ValueError("need at least one order")
    low, high = sub.price_low, sub.price_high
    if sub.stepmode == "random":
        return [int(v) for v in rng.integers(low, high + 1, size=n_orders)]
    if n_orders == 1:
        return [int(round((low + high) / 2.0))]
    step = (high - low) / (n_orders - 1)
    prices = [int(round(low + i * step)) for i in range(n_orders)]
    if sub.stepmode == "fixed":
        return prices
    half = int(round(step / 2.0))
    out = []
    for p in prices:
        q = p + int(rng.integers(-half, half + 1)) if half > 0 else p
        out.append(min(max(q, low), high))
    return out


def deployment_times(timemode, interval_start, interval, n_traders, rng):
    """Arrival timestep of each trader's customer order within one interval."""
    if n_traders < 1:
        raise ValueError("need at least one trader")
    last = interval_start + interval - 1
    if timemode == "periodic":
        return [interval_start] * n_traders
    step = interval / n_traders
    if timemode == "drip_fixed":
        return [interval_start + int(i * step) for i in range(n_traders)]
    if timemode == "drip_jittered":
        half = step / 2.0
        out = []
        for i in range(n_traders):
            t = interval_start + int(round(i * step + rng.uniform(-half, half)))
            out.append(min(max(t, interval_start), last))
        return out
    if timemode == "drip_poisson":
        out = []
        at = 0.0
        for _ in range(n_traders):
            at += rng.exponential(interval / n_traders)
            out.append(min(interval_start + int(at), last))
        return out
    raise ValueError("unknown timemode %r" % (timemode,))


class EquilibriumResult(NamedTuple):
    price_low: Optional[int]
    price_high: Optional[int]
    quantity: int


def equilibrium(supply_prices, demand_prices):
    """Competitive equilibrium of step supply and demand built from unit limit
    prices: the largest quantity at which demand meets supply, and the price
    interval that clears exactly that quantity.  With no crossing the
    quantity is zero and the price range undefined."""
    if not supply_prices or not demand_prices:
        raise ValueError("both price lists must be nonempty")
    sup = sorted(supply_prices)
    dem = sorted(demand_prices, reverse=True)
    q0 = 0
    for s, d in zip(sup, dem):
        if d >= s:
            q0 += 1
        else:
            break
    if q0 == 0:
        return EquilibriumResult(None, None, 0)
    lo = sup[q0 - 1]
    hi = dem[q0 - 1]
    if q0 < len(dem):
        lo = max(lo, dem[q0])
    if q0 < len(sup):
        hi = min(hi, sup[q0])
    return EquilibriumResult(lo, hi, q0)


def max_surplus(supply_prices, demand_prices):
    """Total surplus available at competitive equilibrium."""
    sup = sorted(supply_prices)
    dem = sorted(demand_prices, reverse=True)
    total = 0
    for s, d in zip(sup, dem):
        if d >= s:
            total += d - s
        else:
            break
    return total
