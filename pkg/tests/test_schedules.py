"""Schedule generation, price/timing layout and the equilibrium oracle."""

import numpy as np
import pytest

from oraclesim import (OrderSchedule, SchedulerParams, SubSchedule,
                       deployment_times, equilibrium, generate_schedule,
                       max_surplus, order_prices)
from oraclesim.schedules import (STEP_MODES, TIME_MODES, schedule_from_json,
                                 schedule_to_json, simple_symmetric_schedule)


def paper_params():
    return SchedulerParams(duration=240, interval=30, max_schedules=8,
                           midprice=100, max_volatility=60, max_change=40)


def test_generated_schedule_tiles_duration():
    rng = np.random.default_rng(1)
    params = paper_params()
    sched = generate_schedule(params, rng)
    assert sched.duration == 240
    assert 1 <= len(sched.supply) <= 8
    total = sum(s.t_end - s.t_start for s in sched.supply)
    assert total == 240


def test_tiling_and_alignment_over_many_draws():
    rng = np.random.default_rng(7)
    params = paper_params()
    counts = {}
    for _ in range(10_000):
        sched = generate_schedule(params, rng)
        t = 0
        for sup, dem in zip(sched.supply, sched.demand):
            assert sup.t_start == t == dem.t_start
            assert sup.t_end == dem.t_end
            assert (sup.t_end - sup.t_start) % 30 == 0
            for sub in (sup, dem):
                assert 1 <= sub.price_low <= sub.price_high <= 1000
                assert sub.stepmode in STEP_MODES
            t = sup.t_end
        assert t == 240
        assert sched.timemode in TIME_MODES
        n = len(sched.supply)
        counts[n] = counts.get(n, 0) + 1

    # sub-schedule count should be uniform on {1..8}
    expected = 10_000 / 8
    chi2 = sum((counts.get(n, 0) - expected) ** 2 / expected for n in range(1, 9))
    assert chi2 < 30.0        # 7 dof; p ~ 1e-4 would be ~24.3


class ScriptedRNG:
    """Returns a scripted sequence of integers() draws."""

    def __init__(self, values):
        self.values = list(values)

    def integers(self, lo, hi=None):
        return self.values.pop(0)


def test_bound_formula_from_drawn_volatility_and_change():
    # one sub-schedule; volatility 60, midprice change +40 -> range [80, 200]
    params = paper_params()
    script = [0,    # timemode index
              1,    # number of sub-schedules
              0, 0, 0, 0, 0, 0, 0,   # 7 duration extensions, all to sub 0
              60, 40, 0,             # supply: vol, change, stepmode
              60, 40, 0]             # demand: vol, change, stepmode
    sched = generate_schedule(params, ScriptedRNG(script))
    assert sched.supply[0].price_low == 80
    assert sched.supply[0].price_high == 200
    assert sched.demand[0].price_low == 80
    assert sched.demand[0].price_high == 200


def test_degenerate_draws_give_flat_range():
    params = SchedulerParams(240, 30, 8, 100, 0, 0)
    rng = np.random.default_rng(3)
    sched = generate_schedule(params, rng)
    for sub in sched.supply + sched.demand:
        assert (sub.price_low, sub.price_high) == (100, 100)


def test_params_validation():
    with pytest.raises(ValueError):
        SchedulerParams(duration=240, interval=50).validate()   # not divisible
    with pytest.raises(ValueError):
        SchedulerParams(duration=240, interval=30, max_schedules=9).validate()


# -- order_prices -------------------------------------------------------------

def sub(low, high, stepmode):
    return SubSchedule(0, 240, low, high, stepmode)


def test_fixed_prices_two_orders_hit_endpoints():
    rng = np.random.default_rng(0)
    assert order_prices(sub(50, 150, "fixed"), 2, "bid", rng) == [50, 150]


def test_fixed_prices_even_spacing():
    rng = np.random.default_rng(0)
    assert order_prices(sub(60, 140, "fixed"), 5, "bid", rng) == [60, 80, 100, 120, 140]


def test_random_prices_degenerate_range():
    rng = np.random.default_rng(0)
    assert order_prices(sub(100, 100, "random"), 7, "ask", rng) == [100] * 7


def test_all_stepmodes_stay_in_range():
    rng = np.random.default_rng(5)
    for stepmode in STEP_MODES:
        for n in (1, 2, 3, 9, 16):
            for _ in range(50):
                prices = order_prices(sub(70, 130, stepmode), n, "bid", rng)
                assert len(prices) == n
                assert all(70 <= p <= 130 for p in prices)


# -- deployment_times ---------------------------------------------------------

def test_periodic_times():
    rng = np.random.default_rng(0)
    assert deployment_times("periodic", 30, 30, 4, rng) == [30, 30, 30, 30]


def test_drip_fixed_even_spacing():
    rng = np.random.default_rng(0)
    assert deployment_times("drip_fixed", 0, 30, 3, rng) == [0, 10, 20]


def test_drip_modes_stay_in_interval():
    rng = np.random.default_rng(11)
    for mode in TIME_MODES:
        for n in (1, 3, 16):
            for _ in range(100):
                times = deployment_times(mode, 60, 30, n, rng)
                assert len(times) == n
                assert all(60 <= t < 90 for t in times)


# -- equilibrium --------------------------------------------------------------

def scan_quantity(supply, demand):
    """Independent oracle for the clearing quantity: scan every integer price
    for the short side's size and keep the maximum."""
    best_q = 0
    prices = []
    for p in range(1, 1001):
        q = min(sum(1 for s in supply if s <= p), sum(1 for d in demand if d >= p))
        if q > best_q:
            best_q = q
            prices = [p]
        elif q == best_q and best_q > 0:
            prices.append(p)
    return best_q, set(prices)


def matching_surplus(supply, demand):
    """Independent oracle for the available surplus: best one-to-one matching
    of buyers to sellers, counting only pairs where value covers cost."""
    import itertools

    best = 0
    k = min(len(supply), len(demand))
    for chosen_d in itertools.permutations(demand, k):
        total = sum(d - s for s, d in zip(sorted(supply)[:k], chosen_d) if d >= s)
        best = max(best, total)
    return best


def test_equilibrium_symmetric_contains_midpoint():
    supply = [50, 75, 100, 125, 150]
    demand = [150, 125, 100, 75, 50]
    lo, hi, q = equilibrium(supply, demand)
    assert lo <= 100 <= hi
    assert q == 3


def test_equilibrium_no_trade():
    assert equilibrium([100], [90]) == (None, None, 0)


def test_equilibrium_hand_example():
    assert equilibrium([10, 20, 30], [35, 25, 15]) == (20, 25, 2)


def test_equilibrium_matches_oracles():
    rng = np.random.default_rng(99)
    for _ in range(200):
        ns = int(rng.integers(1, 7))
        nd = int(rng.integers(1, 7))
        supply = [int(v) for v in rng.integers(1, 200, size=ns)]
        demand = [int(v) for v in rng.integers(1, 200, size=nd)]
        lo, hi, q = equilibrium(supply, demand)
        sq, price_set = scan_quantity(supply, demand)
        assert q == sq
        if q > 0:
            assert lo <= hi
            assert set(range(lo, hi + 1)) <= price_set
        assert max_surplus(supply, demand) == matching_surplus(supply, demand)


def test_max_surplus_matches_equilibrium_sum():
    supply = [10, 20, 30]
    demand = [35, 25, 15]
    assert max_surplus(supply, demand) == (35 - 10) + (25 - 20)


# -- serialisation ------------------------------------------------------------

def test_schedule_json_roundtrip(tmp_path):
    rng = np.random.default_rng(21)
    sched = generate_schedule(paper_params(), rng)
    path = tmp_path / "sched.json"
    schedule_to_json(sched, path)
    loaded = schedule_from_json(path)
    assert loaded.to_dict() == sched.to_dict()


def test_simple_schedule_is_valid():
    sched = simple_symmetric_schedule(240, 30, 50, 150)
    assert sched.duration == 240
    assert sched.timemode == "periodic"
    assert sched.supply[0].stepmode == "fixed"


def test_schedule_validation_rejects_misaligned_sides():
    sup = [SubSchedule(0, 120, 50, 150, "fixed"), SubSchedule(120, 240, 50, 150, "fixed")]
    dem = [SubSchedule(0, 90, 50, 150, "fixed"), SubSchedule(90, 240, 50, 150, "fixed")]
    with pytest.raises(ValueError):
        OrderSchedule("periodic", 30, sup, dem).validate()
