"""Trading strategies for the double auction: ZIC, ZIP, SNPR, GDX and AA.

Each trader works at most one single-unit customer order at a time and is
polled once per timestep; it may quote or decline.  Quotes are always
limit-constrained: a buyer never bids above its limit price, a seller never
asks below.  Strategy internals follow the published descriptions of each
algorithm; every tunable default lives in the ``*_DEFAULTS`` tables below and
can be overridden per run.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Optional

import numpy as np

from .exchange import ASK, BID, EV_QUOTE, EV_TRADE, PRICE_MAX, PRICE_MIN

ZIC = "ZIC"
ZIP = "ZIP"
SNPR = "SNPR"
GDX = "GDX"
AA = "AA"

# canonical (sorted) ordering used everywhere a deterministic kind order matters
ALL_KINDS = (AA, GDX, SNPR, ZIC, ZIP)

# roster used by the noisy-information experiments once the sniper is dropped
CORE_KINDS = (AA, GDX, ZIP)


class CustomerOrder(NamedTuple):
    side: str
    limit: int
    issued: int


class SideMismatchError(ValueError):
    """A customer order was routed to a trader working the other side."""


class LossMakingTradeError(RuntimeError):
    """A strategy produced a quote that would trade through its limit."""


def strategy_profit_per_trade(limit, exec_price, side):
    """Surplus of one unit trade: buyer pays below limit, seller sells above.

    Raises LossMakingTradeError on negative surplus, which can only happen if
    a strategy violated its limit constraint.
    """
    surplus = limit - exec_price if side == BID else exec_price - limit
    if surplus < 0:
        raise LossMakingTradeError(
            "negative surplus: side=%s limit=%d price=%d" % (side, limit, exec_price))
    return surplus


class Trader:
    """Base trader: identity, side, pending order, balance and blotter."""

    kind = "BASE"
    responds = False    # True for strategies that learn from market events

    def __init__(self, tid, side, rng, params=None):
        self.tid = tid
        self.side = side
        self.pending: Optional[CustomerOrder] = None
        self.balance = 0
        self.blotter = []

    def assign_order(self, order):
        """Accept a new customer order, replacing any unfilled one."""
        if order.side != self.side:
            raise SideMismatchError(
                "%s trader %s given %s order" % (self.side, self.tid, order.side))
        self.pending = order

    def record_fill(self, price, timestep):
        surplus = strategy_profit_per_trade(self.pending.limit, price, self.side)
        self.balance += surplus
        self.blotter.append((timestep, price, surplus))
        self.pending = None
        return surplus

    def get_quote(self, snapshot, timestep, duration, rng):
        raise NotImplementedError

    def on_market_event(self, event):
        pass


class TraderZIC(Trader):
    """Zero-Intelligence-Constrained: uniform random quotes bounded by the limit."""

    kind = ZIC

    def get_quote(self, snapshot, timestep, duration, rng):
        limit = self.pending.limit
        if self.side == BID:
            return int(rng.integers(PRICE_MIN, limit + 1))
        return int(rng.integers(limit, PRICE_MAX + 1))


ZIP_DEFAULTS = {
    "beta_lo": 0.1, "beta_hi": 0.5,          # Widrow-Hoff learning rate draw
    "momentum_lo": 0.0, "momentum_hi": 0.1,
    "margin_lo": 0.05, "margin_hi": 0.35,    # initial profit margin magnitude
    "ca_lo": 0.01, "ca_hi": 0.05,            # absolute target perturbation
    "cr_lo": 0.01, "cr_hi": 0.05,            # relative target perturbation
}


class TraderZIP(Trader):
    """Zero-Intelligence-Plus: adapts a profit margin with a Widrow-Hoff rule.

    The margin mu maps a limit price to a quote via
    ``price = round(limit * (1 + mu))``; buyers keep mu <= 0, sellers mu >= 0.
    Observed deals and improved quotes move the quote price toward a noisy
    target, and the margin follows.
    """

    kind = ZIP
    responds = True

    def __init__(self, tid, side, rng, params=None):
        super().__init__(tid, side, rng)
        p = dict(ZIP_DEFAULTS)
        if params:
            p.update(params)
        self.beta = p["beta_lo"] + (p["beta_hi"] - p["beta_lo"]) * rng.random()
        self.momentum = p["momentum_lo"] + (p["momentum_hi"] - p["momentum_lo"]) * rng.random()
        self.ca = p["ca_lo"] + (p["ca_hi"] - p["ca_lo"]) * rng.random()
        self.cr = p["cr_lo"] + (p["cr_hi"] - p["cr_lo"]) * rng.random()
        m = p["margin_lo"] + (p["margin_hi"] - p["margin_lo"]) * rng.random()
        self.margin = -m if side == BID else m
        self.limit = None
        self.price = None          # last quoted price
        self.prev_change = 0.0
        self.prev_best_bid = None
        self.prev_best_ask = None
        self._rng = rng

    def get_quote(self, snapshot, timestep, duration, rng):
        self.limit = self.pending.limit
        price = int(round(self.limit * (1.0 + self.margin)))
        if price < PRICE_MIN:
            price = PRICE_MIN
        elif price > PRICE_MAX:
            price = PRICE_MAX
        self.price = price
        return price

    def _adjust(self, target):
        # one Widrow-Hoff step of the quote price toward target, with momentum
        change = (1.0 - self.momentum) * (self.beta * (target - self.price)) \
            + self.momentum * self.prev_change
        self.prev_change = change
        new_margin = ((self.price + change) / self.limit) - 1.0
        if self.side == BID:
            if new_margin < 0.0:
                self.margin = new_margin
        else:
            if new_margin > 0.0:
                self.margin = new_margin
        price = int(round(self.limit * (1.0 + self.margin)))
        if price < PRICE_MIN:
            price = PRICE_MIN
        elif price > PRICE_MAX:
            price = PRICE_MAX
        self.price = price

    def _target_up(self, price):
        rng = self._rng
        return int(round(price * (1.0 + self.cr * rng.random()) + self.ca * rng.random()))

    def _target_down(self, price):
        rng = self._rng
        return int(round(price * (1.0 - self.cr * rng.random()) - self.ca * rng.random()))

    def on_market_event(self, event):
        best_bid = event.best_bid
        best_ask = event.best_ask
        if self.price is None:
            # never quoted yet: just track the book
            self.prev_best_bid = best_bid
            self.prev_best_ask = best_ask
            return
        active = self.pending is not None

        if self.side == ASK:
            if event.kind == EV_TRADE:
                tp = event.price
                if self.price <= tp:
                    self._adjust(self._target_up(tp))
                elif event.side == ASK and active and self.price > tp:
                    # an ask this trader would not have matched got lifted
                    self._adjust(self._target_down(tp))
            elif event.kind == EV_QUOTE and event.side == ASK:
                improved = (self.prev_best_ask is not None and best_ask is not None
                            and best_ask < self.prev_best_ask)
                if improved and self.price > best_ask:
                    if best_bid is not None:
                        self._adjust(self._target_up(best_bid))
                    else:
                        self._adjust(PRICE_MAX)
        else:
            if event.kind == EV_TRADE:
                tp = event.price
                if self.price >= tp:
                    self._adjust(self._target_down(tp))
                elif event.side == BID and active and self.price < tp:
                    self._adjust(self._target_up(tp))
            elif event.kind == EV_QUOTE and event.side == BID:
                improved = (self.prev_best_bid is not None and best_bid is not None
                            and best_bid > self.prev_best_bid)
                if improved and self.price < best_bid:
                    if best_ask is not None:
                        self._adjust(self._target_down(best_ask))
                    else:
                        self._adjust(PRICE_MIN)

        self.prev_best_bid = best_bid
        self.prev_best_ask = best_ask


SNPR_DEFAULTS = {
    "lurk_threshold": 0.2,   # fraction of session left before the sniper wakes
    "shave_growth": 3.0,
}


class TraderSNPR(Trader):
    """Kaplan-style sniper: lurks silently, then steals deals late in the session.

    While more than ``lurk_threshold`` of the session remains it never quotes.
    Once awake it shaves an increasing amount off the best same-side price,
    clamped at its limit.
    """

    kind = SNPR

    def __init__(self, tid, side, rng, params=None):
        super().__init__(tid, side, rng)
        p = dict(SNPR_DEFAULTS)
        if params:
            p.update(params)
        self.lurk_threshold = p["lurk_threshold"]
        self.shave_growth = p["shave_growth"]

    def get_quote(self, snapshot, timestep, duration, rng):
        countdown = (duration - timestep) / duration
        if countdown > self.lurk_threshold:
            return None
        shave = int(1.0 / (0.01 + countdown / (self.shave_growth * self.lurk_threshold)))
        limit = self.pending.limit
        if self.side == BID:
            if snapshot.best_bid is not None:
                price = snapshot.best_bid + shave
                if price > limit:
                    price = limit
            else:
                price = PRICE_MIN
        else:
            if snapshot.best_ask is not None:
                price = snapshot.best_ask - shave
                if price < limit:
                    price = limit
            else:
                price = PRICE_MAX
        return price


GDX_DEFAULTS = {
    "history_max": 50,   # most recent quote records kept for belief estimation
    "horizon": 10,       # dynamic-programming lookahead (quoting opportunities)
    "discount": 0.9,     # per-opportunity discount on future surplus
}


class TraderGDX(Trader):
    """Belief-based trader with a dynamic-programming quote choice.

    Acceptance beliefs are frequency estimates over recent market history.
    For a buyer considering a bid at p the belief is

        q(p) = (TBL(p) + AL(p)) / (TBL(p) + AL(p) + RBG(p))

    with TBL = accepted bids at or below p, AL = asks at or below p and
    RBG = unaccepted bids at or above p; sellers mirror the formula.  Where
    the history is silent the belief falls back to a book-anchored prior:
    certain acceptance at prices crossing the opposite best, zero elsewhere.
    The quote maximises expected surplus over the remaining quoting
    opportunities n:  V(n) = max_p [ q(p) s(p) + (1 - q(p)) g V(n-1) ].
    Exact ties resolve toward the lowest price for buyers and the highest
    for sellers.
    """

    kind = GDX
    responds = True

    def __init__(self, tid, side, rng, params=None):
        super().__init__(tid, side, rng)
        p = dict(GDX_DEFAULTS)
        if params:
            p.update(params)
        self.history_max = int(p["history_max"])
        self.horizon = int(p["horizon"])
        self.discount = float(p["discount"])
        # one record per observed quote: [side, price, accepted]
        self._records = []
        # incremental per-price counters over the tick domain
        n = PRICE_MAX + 1
        self._bid_taken = np.zeros(n, dtype=np.int64)
        self._bid_open = np.zeros(n, dtype=np.int64)
        self._ask_taken = np.zeros(n, dtype=np.int64)
        self._ask_open = np.zeros(n, dtype=np.int64)
        self._version = 0
        self._cache_key = None
        self._cache_price = None
        self._tables_version = -1

    def _add_record(self, side, price, accepted):
        rec = [side, price, accepted]
        self._records.append(rec)
        if side == BID:
            (self._bid_taken if accepted else self._bid_open)[price] += 1
        else:
            (self._ask_taken if accepted else self._ask_open)[price] += 1
        if len(self._records) > self.history_max:
            old_side, old_price, old_acc = self._records.pop(0)
            if old_side == BID:
                (self._bid_taken if old_acc else self._bid_open)[old_price] -= 1
            else:
                (self._ask_taken if old_acc else self._ask_open)[old_price] -= 1
        self._version += 1

    def _mark_accepted(self, side, price):
        for rec in reversed(self._records):
            if rec[0] == side and rec[1] == price and not rec[2]:
                rec[2] = True
                if side == BID:
                    self._bid_open[price] -= 1
                    self._bid_taken[price] += 1
                else:
                    self._ask_open[price] -= 1
                    self._ask_taken[price] += 1
                self._version += 1
                return
        # quote fell off the window (or matched instantly): count it as accepted
        self._add_record(side, price, True)

    def on_market_event(self, event):
        if event.kind == EV_QUOTE:
            self._add_record(event.side, event.price, False)
        elif event.kind == EV_TRADE:
            # the standing quote sits in history; the aggressor side never rested
            if event.side == BID:
                self._mark_accepted(BID, event.bid_price)
                self._add_record(ASK, event.ask_price, True)
            else:
                self._mark_accepted(ASK, event.ask_price)
                self._add_record(BID, event.bid_price, True)

    def get_quote(self, snapshot, timestep, duration, rng):
        limit = self.pending.limit
        steps_left = duration - timestep
        n_opp = self.horizon if steps_left > self.horizon else steps_left
        if n_opp < 1:
            n_opp = 1
        key = (self._version, snapshot.best_bid, snapshot.best_ask, limit, n_opp)
        if key == self._cache_key:
            return self._cache_price
        price = self._choose_price(snapshot, limit, n_opp)
        self._cache_key = key
        self._cache_price = price
        return price

    def _tables(self):
        # cumulative per-price counts, refreshed only when the history changes
        if self._tables_version != self._version:
            self._cs_bid_taken = self._bid_taken.cumsum()
            self._cs_bid_open = self._bid_open.cumsum()
            self._cs_ask_taken = self._ask_taken.cumsum()
            self._cs_ask_open = self._ask_open.cumsum()
            if self._records:
                self._h_lo = min(r[1] for r in self._records)
                self._h_hi = max(r[1] for r in self._records)
            else:
                self._h_lo = None
                self._h_hi = None
            self._tables_version = self._version

    def _candidates(self, snapshot, limit):
        # prices outside the observed data carry belief exactly zero, and all
        # zero-belief prices share one expected value; a single stub candidate
        # at the domain edge stands in for the whole tail
        if self._h_lo is not None:
            h_lo, h_hi = self._h_lo, self._h_hi
        else:
            h_lo, h_hi = limit, limit
        if self.side == BID:
            lo = min(h_lo, limit)
            if snapshot.best_ask is not None:
                lo = min(lo, snapshot.best_ask)
            lo = max(lo, PRICE_MIN)
            prices = np.arange(lo, limit + 1)
            if lo > PRICE_MIN:
                prices = np.concatenate(([PRICE_MIN], prices))
            return prices
        hi = max(h_hi, limit)
        if snapshot.best_bid is not None:
            hi = max(hi, snapshot.best_bid)
        hi = min(hi, PRICE_MAX)
        prices = np.arange(limit, hi + 1)
        if hi < PRICE_MAX:
            prices = np.concatenate((prices, [PRICE_MAX]))
        return prices

    def _choose_price(self, snapshot, limit, n_opp):
        self._tables()
        prices = self._candidates(snapshot, limit)
        if self.side == BID:
            num = self._cs_bid_taken[prices] + self._cs_ask_taken[prices] \
                + self._cs_ask_open[prices]
            rbg = self._cs_bid_open[-1] - self._cs_bid_open[prices - 1]
            denom = num + rbg
            belief = np.divide(num, denom, out=np.zeros(len(prices)), where=denom > 0)
            if snapshot.best_ask is not None:
                belief[prices >= snapshot.best_ask] = 1.0
            surplus = (limit - prices).astype(np.float64)
        else:
            ask_taken_ge = self._cs_ask_taken[-1] - self._cs_ask_taken[prices - 1]
            bid_ge = (self._cs_bid_taken[-1] + self._cs_bid_open[-1]) \
                - (self._cs_bid_taken[prices - 1] + self._cs_bid_open[prices - 1])
            ral = self._cs_ask_open[prices]
            num = ask_taken_ge + bid_ge
            denom = num + ral
            belief = np.divide(num, denom, out=np.zeros(len(prices)), where=denom > 0)
            if snapshot.best_bid is not None:
                belief[prices <= snapshot.best_bid] = 1.0
            surplus = (prices - limit).astype(np.float64)

        value = 0.0
        qs = belief * surplus
        keep = (1.0 - belief) * self.discount
        expected = qs
        for _ in range(n_opp):
            expected = qs + keep * value
            new_value = expected.max()
            if new_value == value:      # fixed point: further stages are identical
                break
            value = new_value
        if self.side == BID:
            idx = int(np.argmax(expected))
        else:
            rev = int(np.argmax(expected[::-1]))
            idx = len(expected) - 1 - rev
        return int(prices[idx])


AA_DEFAULTS = {
    "window": 5,              # transaction prices kept for the equilibrium estimate
    "decay": 0.9,             # weight decay, newest price heaviest
    "theta_init": -2.0,
    "theta_min": -8.0,
    "theta_max": 2.0,
    "gamma": 2.0,             # shapes the volatility -> theta response
    "eta": 3.0,               # fraction of the gap to target closed per quote
    "lambda_rel": 0.05,       # relative aggressiveness step
    "lambda_abs": 0.05,       # absolute aggressiveness step
    "beta1_lo": 0.1, "beta1_hi": 0.5,   # short-term (aggressiveness) learning rate
    "beta2_lo": 0.1, "beta2_hi": 0.5,   # long-term (theta) learning rate
    "r_init_lo": -0.3, "r_init_hi": 0.0,
    "spinup_margin": 0.15,    # cold-start margin before any trades are seen
}


class TraderAA(Trader):
    """Adaptive-Aggressive trader.

    Tracks a weighted moving estimate of the equilibrium price, adapts a
    long-term price-sensitivity parameter theta to observed volatility and a
    short-term aggressiveness r to trades and improved quotes, then bids or
    asks part of the way from the current best toward its target price.
    Before any transaction exists the equilibrium estimate is undefined and
    the trader quotes at its limit shaded by a fixed spin-up margin.
    """

    kind = AA
    responds = True

    def __init__(self, tid, side, rng, params=None):
        super().__init__(tid, side, rng)
        p = dict(AA_DEFAULTS)
        if params:
            p.update(params)
        self.p = p
        self.eq = None
        self.theta = p["theta_init"]
        self.r = p["r_init_lo"] + (p["r_init_hi"] - p["r_init_lo"]) * rng.random()
        self.beta1 = p["beta1_lo"] + (p["beta1_hi"] - p["beta1_lo"]) * rng.random()
        self.beta2 = p["beta2_lo"] + (p["beta2_hi"] - p["beta2_lo"]) * rng.random()
        self._trades = []
        self._weights = [p["decay"] ** i for i in range(p["window"])]
        self._alpha_min = None
        self._alpha_max = None
        self.limit = None
        self.prev_best_bid = None
        self.prev_best_ask = None

    # -- market statistics ------------------------------------------------

    def _update_market_stats(self, price):
        self._trades.append(price)
        if len(self._trades) > self.p["window"]:
            self._trades.pop(0)
        recent = self._trades[::-1]     # newest first, matching the weights
        wsum = 0.0
        total = 0.0
        for w, q in zip(self._weights, recent):
            wsum += w * q
            total += w
        self.eq = wsum / total
        dev = 0.0
        for q in self._trades:
            dev += (q - self.eq) ** 2
        alpha = math.sqrt(dev / len(self._trades)) / self.eq
        if self._alpha_min is None or alpha < self._alpha_min:
            self._alpha_min = alpha
        if self._alpha_max is None or alpha > self._alpha_max:
            self._alpha_max = alpha
        if self._alpha_max > self._alpha_min:
            a_bar = (alpha - self._alpha_min) / (self._alpha_max - self._alpha_min)
        else:
            a_bar = 0.0
        p = self.p
        desired = p["theta_min"] + (p["theta_max"] - p["theta_min"]) \
            * (1.0 - a_bar * math.exp(p["gamma"] * (a_bar - 1.0)))
        self.theta = self.theta + self.beta2 * (desired - self.theta)

    # -- target price and its inverse --------------------------------------

    def _expfrac(self, r):
        # (e^(r*theta) - 1) / (e^theta - 1), linear in r as theta -> 0
        theta = self.theta
        d = math.exp(theta) - 1.0
        if abs(d) < 1e-9:
            return r
        return (math.exp(r * theta) - 1.0) / d

    def _target(self, r, limit):
        eq = self.eq
        if self.side == BID:
            if limit >= eq:
                if r >= 0.0:
                    tau = eq + (limit - eq) * self._expfrac(r)
                else:
                    tau = eq * (1.0 - self._expfrac(-r))
            else:
                if r >= 0.0:
                    tau = float(limit)
                else:
                    tau = limit * (1.0 - self._expfrac(-r))
            return min(max(tau, PRICE_MIN), float(limit))
        else:
            if limit <= eq:
                if r >= 0.0:
                    tau = limit + (eq - limit) * (1.0 - self._expfrac(r))
                else:
                    tau = eq + (PRICE_MAX - eq) * self._expfrac(-r)
            else:
                if r >= 0.0:
                    tau = float(limit)
                else:
                    tau = limit + (PRICE_MAX - limit) * self._expfrac(-r)
            return min(max(tau, float(limit)), PRICE_MAX)

    def _inv_expfrac(self, frac):
        # inverse of _expfrac, clamped to keep log arguments positive
        theta = self.theta
        d = math.exp(theta) - 1.0
        if abs(d) < 1e-9:
            return frac
        arg = 1.0 + frac * d
        if arg <= 1e-12:
            arg = 1e-12
        return math.log(arg) / theta

    def _r_for_price(self, price, limit):
        """Aggressiveness whose target equals the given price."""
        eq = self.eq
        if self.side == BID:
            if limit >= eq:
                if price >= eq:
                    span = limit - eq
                    frac = (price - eq) / span if span > 0 else 1.0
                    r = self._inv_expfrac(min(max(frac, 0.0), 1.0))
                else:
                    frac = 1.0 - price / eq
                    r = -self._inv_expfrac(min(max(frac, 0.0), 1.0))
            else:
                if price >= limit:
                    r = 0.0
                else:
                    frac = 1.0 - price / limit
                    r = -self._inv_expfrac(min(max(frac, 0.0), 1.0))
        else:
            if limit <= eq:
                if price <= eq:
                    span = eq - limit
                    frac = (price - limit) / span if span > 0 else 0.0
                    r = self._inv_expfrac(min(max(1.0 - frac, 0.0), 1.0))
                else:
                    frac = (price - eq) / (PRICE_MAX - eq) if PRICE_MAX > eq else 1.0
                    r = -self._inv_expfrac(min(max(frac, 0.0), 1.0))
            else:
                if price <= limit:
                    r = 0.0
                else:
                    span = PRICE_MAX - limit
                    frac = (price - limit) / span if span > 0 else 1.0
                    r = -self._inv_expfrac(min(max(frac, 0.0), 1.0))
        return min(max(r, -1.0), 1.0)

    def _nudge_r(self, anchor_price, more_aggressive):
        if self.limit is None:
            return
        r_shout = self._r_for_price(anchor_price, self.limit)
        lam_r = self.p["lambda_rel"]
        lam_a = self.p["lambda_abs"]
        if more_aggressive:
            delta = (1.0 + lam_r) * r_shout + lam_a
        else:
            delta = (1.0 - lam_r) * r_shout - lam_a
        self.r = self.r + self.beta1 * (delta - self.r)
        if self.r > 1.0:
            self.r = 1.0
        elif self.r < -1.0:
            self.r = -1.0

    # -- event handling -----------------------------------------------------

    def on_market_event(self, event):
        best_bid = event.best_bid
        best_ask = event.best_ask
        if event.kind == EV_TRADE:
            tp = event.price
            self._update_market_stats(tp)
            if self.limit is not None:
                tau = self._target(self.r, self.limit)
                if self.side == BID:
                    # target below the going rate means the buyer was too passive
                    self._nudge_r(tp, more_aggressive=tau < tp)
                else:
                    self._nudge_r(tp, more_aggressive=tau > tp)
        elif event.kind == EV_QUOTE and self.eq is not None and self.limit is not None:
            if self.side == BID and event.side == BID:
                improved = (self.prev_best_bid is not None and best_bid is not None
                            and best_bid > self.prev_best_bid)
                if improved:
                    tau = self._target(self.r, self.limit)
                    if tau <= best_bid:
                        self._nudge_r(best_bid, more_aggressive=True)
            elif self.side == ASK and event.side == ASK:
                improved = (self.prev_best_ask is not None and best_ask is not None
                            and best_ask < self.prev_best_ask)
                if improved:
                    tau = self._target(self.r, self.limit)
                    if tau >= best_ask:
                        self._nudge_r(best_ask, more_aggressive=True)
        self.prev_best_bid = best_bid
        self.prev_best_ask = best_ask

    # -- quoting ------------------------------------------------------------

    def get_quote(self, snapshot, timestep, duration, rng):
        limit = self.pending.limit
        self.limit = limit
        if self.eq is None:
            margin = self.p["spinup_margin"]
            if self.side == BID:
                price = int(round(limit * (1.0 - margin)))
                return max(price, PRICE_MIN)
            price = int(round(limit * (1.0 + margin)))
            return min(price, PRICE_MAX)

        tau = self._target(self.r, limit)
        eta = self.p["eta"]
        if self.side == BID:
            if snapshot.best_ask is not None and snapshot.best_ask <= tau:
                price = snapshot.best_ask
            else:
                base = snapshot.best_bid if snapshot.best_bid is not None else PRICE_MIN
                price = int(round(base + (tau - base) / eta))
            if price > limit:
                price = limit
            if price < PRICE_MIN:
                price = PRICE_MIN
        else:
            if snapshot.best_bid is not None and snapshot.best_bid >= tau:
                price = snapshot.best_bid
            else:
                base = snapshot.best_ask if snapshot.best_ask is not None else PRICE_MAX
                price = int(round(base - (base - tau) / eta))
            if price < limit:
                price = limit
            if price > PRICE_MAX:
                price = PRICE_MAX
        return price


_TRADER_CLASSES = {
    ZIC: TraderZIC,
    ZIP: TraderZIP,
    SNPR: TraderSNPR,
    GDX: TraderGDX,
    AA: TraderAA,
}


def make_trader(kind, tid, side, rng, params=None):
    try:
        cls = _TRADER_CLASSES[kind]
    except KeyError:
        raise ValueError("unknown strategy kind %r" % (kind,)) from None
    return cls(tid, side, rng, params)


class TraderPopulation:
    """Per-kind buyer and seller counts: the ratio point of every experiment.

    Experiment-grade populations are symmetric (same count on both sides per
    kind); noise-distorted views used for prediction sessions may not be.
    """

    def __init__(self, counts=None, *, buyers=None, sellers=None):
        if counts is not None:
            buyers = dict(counts)
            sellers = dict(counts)
        self.buyers = {k: int(v) for k, v in (buyers or {}).items() if v}
        self.sellers = {k: int(v) for k, v in (sellers or {}).items() if v}
        for d in (self.buyers, self.sellers):
            for k, v in d.items():
                if k not in _TRADER_CLASSES:
                    raise ValueError("unknown strategy kind %r" % (k,))
                if v < 0:
                    raise ValueError("negative trader count for %s" % k)

    @property
    def kinds(self):
        return tuple(sorted(set(self.buyers) | set(self.sellers)))

    @property
    def total_buyers(self):
        return sum(self.buyers.values())

    @property
    def total_sellers(self):
        return sum(self.sellers.values())

    def is_symmetric(self):
        return self.buyers == self.sellers

    def count_of(self, kind):
        return self.buyers.get(kind, 0) + self.sellers.get(kind, 0)

    def key(self):
        """Canonical hashable form, stable under dict ordering."""
        b = tuple((k, self.buyers[k]) for k in sorted(self.buyers))
        s = tuple((k, self.sellers[k]) for k in sorted(self.sellers))
        return (b, s)

    def key_ints(self, kinds):
        """Flat count vector (buyers then sellers) over an explicit kind order."""
        return tuple(self.buyers.get(k, 0) for k in kinds) \
            + tuple(self.sellers.get(k, 0) for k in kinds)

    def label(self, kinds=None):
        """Dash-joined per-side counts in sorted kind order, e.g. '4-4-4'."""
        kinds = kinds if kinds is not None else self.kinds
        return "-".join(str(self.buyers.get(k, 0)) for k in kinds)

    def with_extra_pair(self, kind):
        buyers = dict(self.buyers)
        sellers = dict(self.sellers)
        buyers[kind] = buyers.get(kind, 0) + 1
        sellers[kind] = sellers.get(kind, 0) + 1
        return TraderPopulation(buyers=buyers, sellers=sellers)

    def __eq__(self, other):
        return isinstance(other, TraderPopulation) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return "TraderPopulation(buyers=%r, sellers=%r)" % (self.buyers, self.sellers)
