"""One market session: per-timestep polling of traders against a shared book.

A session is a deterministic single-threaded state machine over integer
timesteps.  Each replenishment interval assigns fresh customer orders to
every trader; each timestep delivers due orders, then polls every trader
holding an order exactly once in a fresh random permutation.  Every book
change (quote, cancel, trade) is published to all learning traders before
the next trader is polled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exchange import (ASK, BID, EV_CANCEL, EV_QUOTE, EV_TRADE, EXECUTED,
                       RESTED, LimitOrderBook, MarketEvent, TapeEvent)
from .schedules import deployment_times, max_surplus, order_prices
from .traders import CustomerOrder, make_trader


@dataclass
class SessionResult:
    """Outcome of one session, with enough raw totals to pool across sessions."""

    balances: dict
    trader_kinds: dict
    per_kind_profit: dict
    per_kind_traders: dict
    n_trades: int
    theoretical_surplus: int
    duration: int
    seed_entropy: object = None
    tape: Optional[list] = None

    @property
    def market_total(self):
        return sum(self.balances.values())

    @property
    def n_traders(self):
        return len(self.balances)

    @property
    def market_avg(self):
        return self.market_total / self.n_traders

    @property
    def per_kind_avg(self):
        return {k: self.per_kind_profit[k] / self.per_kind_traders[k]
                for k in self.per_kind_profit}

    @property
    def zero_trade(self):
        return self.n_trades == 0

    @property
    def efficiency(self):
        """Realised surplus over the equilibrium surplus of the orders issued."""
        if self.theoretical_surplus <= 0:
            return None
        return self.market_total / self.theoretical_surplus


class MarketSession:
    def __init__(self, schedule, population, duration, seed, *,
                 record_tape=False, strategy_params=None):
        schedule.validate()
        if duration % schedule.interval != 0:
            raise ValueError("duration must be a whole number of intervals")
        if schedule.duration < duration:
            raise ValueError("schedule covers [0, %d) but session runs %d steps"
                             % (schedule.duration, duration))
        if population.total_buyers == 0 or population.total_sellers == 0:
            raise ValueError("population must include buyers and sellers")
        self.schedule = schedule
        self.population = population
        self.duration = duration
        self.rng = np.random.default_rng(seed)
        self.book = LimitOrderBook()
        self.tape = [] if record_tape else None
        self.n_trades = 0
        self.n_cycles = 0
        self.theoretical_surplus = 0
        overrides = strategy_params or {}

        self.traders = {}
        self.buyers = []
        self.sellers = []
        for side, counts, prefix, out in (
                (BID, population.buyers, "B", self.buyers),
                (ASK, population.sellers, "S", self.sellers)):
            i = 0
            for kind in sorted(counts):
                for _ in range(counts[kind]):
                    tid = "%s%02d" % (prefix, i)
                    tr = make_trader(kind, tid, side, self.rng, overrides.get(kind))
                    self.traders[tid] = tr
                    out.append(tr)
                    i += 1
        self.all_traders = self.buyers + self.sellers
        self._event_sinks = [tr.on_market_event for tr in self.all_traders if tr.responds]
        self._deliveries = {}   # timestep -> list of (trader, CustomerOrder)

    # -- internal plumbing --------------------------------------------------

    def _dispatch(self, event):
        for sink in self._event_sinks:
            sink(event)

    def _tape_add(self, t, etype, price, buyer_id, seller_id):
        if self.tape is not None:
            self.tape.append(TapeEvent(t, etype, price, buyer_id, seller_id))

    def _replenish(self, t):
        """Draw one cycle of customer orders for both sides and queue arrivals."""
        self.n_cycles += 1
        interval = self.schedule.interval
        cycle_prices = {}
        for side_is_supply, traders, side in ((True, self.sellers, ASK),
                                              (False, self.buyers, BID)):
            sub = self.schedule.covering(side_is_supply, t)
            n = len(traders)
            prices = order_prices(sub, n, side, self.rng)
            cycle_prices[side] = list(prices)
            times = deployment_times(self.schedule.timemode, t, interval, n, self.rng)
            self.rng.shuffle(prices)
            for trader, price, when in zip(traders, prices, times):
                self._deliveries.setdefault(when, []).append(
                    (trader, CustomerOrder(side, price, when)))
        self.theoretical_surplus += max_surplus(cycle_prices[ASK], cycle_prices[BID])

    def _deliver_due(self, t):
        due = self._deliveries.pop(t, None)
        if not due:
            return
        for trader, order in due:
            live = self.book.quote_of(trader.tid)
            if live is not None:
                self.book.cancel(trader.tid)
                if live.side == BID:
                    self._tape_add(t, EV_CANCEL, live.price, trader.tid, "")
                else:
                    self._tape_add(t, EV_CANCEL, live.price, "", trader.tid)
                self._dispatch(MarketEvent(EV_CANCEL, live.side, live.price, None, None,
                                           self.book.best_bid, self.book.best_ask, t))
            trader.assign_order(order)

    def submit_quote(self, trader, side, price, t):
        """Validated quote admission: book update, tape, event fan-out, fills."""
        if trader.pending is None:
            raise RuntimeError("trader %s quoted with no pending order" % trader.tid)
        limit = trader.pending.limit
        if side == BID and price > limit:
            raise RuntimeError("bad bid: %s above limit %d" % (price, limit))
        if side == ASK and price < limit:
            raise RuntimeError("bad ask: %s below limit %d" % (price, limit))
        status, payload = self.book.submit(trader.tid, side, price, t)
        if status == EXECUTED:
            trade = payload
            if side == BID:
                standing_side, bid_price, ask_price = ASK, price, trade.price
            else:
                standing_side, bid_price, ask_price = BID, trade.price, price
            self._tape_add(t, EV_TRADE, trade.price, trade.buyer_id, trade.seller_id)
            self.n_trades += 1
            self.traders[trade.buyer_id].record_fill(trade.price, t)
            self.traders[trade.seller_id].record_fill(trade.price, t)
            self._dispatch(MarketEvent(EV_TRADE, standing_side, trade.price,
                                       bid_price, ask_price,
                                       self.book.best_bid, self.book.best_ask, t))
        elif status == RESTED:
            q = payload
            if side == BID:
                self._tape_add(t, EV_QUOTE, q.price, trader.tid, "")
            else:
                self._tape_add(t, EV_QUOTE, q.price, "", trader.tid)
            self._dispatch(MarketEvent(EV_QUOTE, side, q.price, None, None,
                                       self.book.best_bid, self.book.best_ask, t))
        else:
            raise RuntimeError("quote rejected: %s" % (payload,))
        return status, payload

    # -- public stepping ----------------------------------------------------

    def step(self, t):
        """Advance the session by one timestep."""
        if t % self.schedule.interval == 0:
            self._replenish(t)
        self._deliver_due(t)

        pending = [tr for tr in self.all_traders if tr.pending is not None]
        if not pending:
            return
        order = self.rng.permutation(len(pending)).tolist()
        book = self.book
        for i in order:
            trader = pending[i]
            if trader.pending is None:     # filled earlier this step
                continue
            price = trader.get_quote(book.snapshot(), t, self.duration, self.rng)
            if price is None:
                continue
            live = book.quote_of(trader.tid)
            if live is not None and live.price == price:
                continue                    # identical re-quote changes nothing
            self.submit_quote(trader, trader.side, price, t)

    def run(self):
        for t in range(self.duration):
            self.step(t)
        per_kind_profit = {}
        per_kind_traders = {}
        balances = {}
        kinds = {}
        for tid in sorted(self.traders):
            tr = self.traders[tid]
            balances[tid] = tr.balance
            kinds[tid] = tr.kind
            per_kind_profit[tr.kind] = per_kind_profit.get(tr.kind, 0) + tr.balance
            per_kind_traders[tr.kind] = per_kind_traders.get(tr.kind, 0) + 1
        return SessionResult(balances, kinds, per_kind_profit, per_kind_traders,
                             self.n_trades, self.theoretical_surplus,
                             self.duration, tape=self.tape)


def run_session(schedule, population, duration, seed, *,
                record_tape=False, strategy_params=None):
    """Run one complete session; deterministic in (schedule, population,
    duration, seed)."""
    return MarketSession(schedule, population, duration, seed,
                         record_tape=record_tape,
                         strategy_params=strategy_params).run()
