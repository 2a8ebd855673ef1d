"""Continuous double auction exchange core.

A single-instrument limit order book in the classic experimental-economics
style: every trader has at most one live quote, all quantities are one unit,
and an incoming quote that crosses the opposite best executes immediately at
the standing (earlier-posted) quote's price.  Prices are integer ticks.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

PRICE_MIN = 1
PRICE_MAX = 1000

BID = "bid"
ASK = "ask"

# submit_quote outcomes
REJECTED = "rejected"
RESTED = "rested"
EXECUTED = "executed"

# tape / market event kinds
EV_QUOTE = "quote"
EV_CANCEL = "cancel"
EV_TRADE = "trade"


class Quote:
    """A live quote resting on (or arriving at) the book."""

    __slots__ = ("trader_id", "side", "price", "timestep", "seq")

    def __init__(self, trader_id, side, price, timestep, seq):
        self.trader_id = trader_id
        self.side = side
        self.price = price
        self.timestep = timestep
        self.seq = seq

    def __repr__(self):
        return "Quote(%s %s %d t=%d)" % (self.trader_id, self.side, self.price, self.timestep)


class Trade(NamedTuple):
    timestep: int
    price: int
    buyer_id: str
    seller_id: str
    qty: int = 1


class TapeEvent(NamedTuple):
    """One persistent tape entry.

    For quote/cancel events the posting trader's id sits in ``buyer_id`` for
    bids and ``seller_id`` for asks; the other column is empty.
    """

    timestep: int
    event_type: str
    price: int
    buyer_id: str
    seller_id: str


class LOBSnapshot(NamedTuple):
    """Anonymised public view of the book: best prices and depth counts only."""

    best_bid: Optional[int]
    best_ask: Optional[int]
    bid_depth: int
    ask_depth: int


class MarketEvent:
    """What traders are shown after the book changes.

    ``kind`` is one of quote/cancel/trade.  ``side`` is the side of the posted
    or cancelled quote; for trades it names the standing side that was hit or
    lifted.  Trades also carry the prices of both matched quotes so observers
    can attribute acceptance without seeing trader identities.  ``best_bid``
    and ``best_ask`` reflect the book after the event settled.
    """

    __slots__ = ("kind", "side", "price", "bid_price", "ask_price",
                 "best_bid", "best_ask", "timestep")

    def __init__(self, kind, side, price, bid_price, ask_price,
                 best_bid, best_ask, timestep):
        self.kind = kind
        self.side = side
        self.price = price
        self.bid_price = bid_price
        self.ask_price = ask_price
        self.best_bid = best_bid
        self.best_ask = best_ask
        self.timestep = timestep

    def __repr__(self):
        return "MarketEvent(%s %s %s t=%d)" % (self.kind, self.side, self.price, self.timestep)


class LimitOrderBook:
    """Price/time priority book with one live quote per trader.

    Resting quotes never cross: ``submit`` either matches an incoming quote
    against the opposite best or rests it, replacing any earlier quote from
    the same trader.
    """

    def __init__(self):
        self._bids = {}
        self._asks = {}
        self._best_bid = None   # cached Quote or None
        self._best_ask = None
        self._seq = 0

    @property
    def best_bid(self):
        return self._best_bid.price if self._best_bid is not None else None

    @property
    def best_ask(self):
        return self._best_ask.price if self._best_ask is not None else None

    @property
    def bid_depth(self):
        return len(self._bids)

    @property
    def ask_depth(self):
        return len(self._asks)

    def quote_of(self, trader_id):
        q = self._bids.get(trader_id)
        if q is None:
            q = self._asks.get(trader_id)
        return q

    def snapshot(self):
        return LOBSnapshot(self.best_bid, self.best_ask, len(self._bids), len(self._asks))

    def _rescan_best(self, side):
        if side == BID:
            book = self._bids
            best = None
            for q in book.values():
                if best is None or q.price > best.price or (q.price == best.price and q.seq < best.seq):
                    best = q
            self._best_bid = best
        else:
            book = self._asks
            best = None
            for q in book.values():
                if best is None or q.price < best.price or (q.price == best.price and q.seq < best.seq):
                    best = q
            self._best_ask = best

    def _remove(self, trader_id, side):
        book = self._bids if side == BID else self._asks
        q = book.pop(trader_id, None)
        if q is None:
            return None
        if side == BID:
            if self._best_bid is q:
                self._rescan_best(BID)
        else:
            if self._best_ask is q:
                self._rescan_best(ASK)
        return q

    def cancel(self, trader_id):
        """Remove a trader's live quote, if any. Returns the removed Quote."""
        q = self._remove(trader_id, BID)
        if q is None:
            q = self._remove(trader_id, ASK)
        return q

    def submit(self, trader_id, side, price, timestep):
        """Admit one quote; match or rest it.

        Returns ``(REJECTED, reason)``, ``(EXECUTED, Trade)`` or
        ``(RESTED, Quote)``.  A new quote from a trader replaces that
        trader's earlier quote before matching is attempted.
        """
        if side != BID and side != ASK:
            return REJECTED, "bad side %r" % (side,)
        if not isinstance(price, int) or price < PRICE_MIN or price > PRICE_MAX:
            return REJECTED, "price %r outside [%d, %d]" % (price, PRICE_MIN, PRICE_MAX)

        self.cancel(trader_id)

        if side == BID:
            standing = self._best_ask
            if standing is not None and price >= standing.price:
                self._remove(standing.trader_id, ASK)
                trade = Trade(timestep, standing.price, trader_id, standing.trader_id)
                return EXECUTED, trade
            self._seq += 1
            q = Quote(trader_id, BID, price, timestep, self._seq)
            self._bids[trader_id] = q
            b = self._best_bid
            if b is None or price > b.price:
                self._best_bid = q
            return RESTED, q
        else:
            standing = self._best_bid
            if standing is not None and price <= standing.price:
                self._remove(standing.trader_id, BID)
                trade = Trade(timestep, standing.price, standing.trader_id, trader_id)
                return EXECUTED, trade
            self._seq += 1
            q = Quote(trader_id, ASK, price, timestep, self._seq)
            self._asks[trader_id] = q
            a = self._best_ask
            if a is None or price < a.price:
                self._best_ask = q
            return RESTED, q


def submit_quote(book, trader_id, side, price, timestep):
    """Functional wrapper around :meth:`LimitOrderBook.submit`."""
    return book.submit(trader_id, side, price, timestep)


def lob_anonymized(book):
    """Anonymised published snapshot: best bid/ask and depth counts."""
    return book.snapshot()


def tape_event_for_quote(quote_or_cancel, q, timestep):
    if q.side == BID:
        return TapeEvent(timestep, quote_or_cancel, q.price, q.trader_id, "")
    return TapeEvent(timestep, quote_or_cancel, q.price, "", q.trader_id)


def write_tape_csv(tape, path):
    """Export a tape as CSV with columns (timestep, event_type, price, buyer_id, seller_id)."""
    import csv

    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["timestep", "event_type", "price", "buyer_id", "seller_id"])
        for ev in tape:
            w.writerow([ev.timestep, ev.event_type, ev.price, ev.buyer_id, ev.seller_id])
