"""Continuous double auction simulator and strategy-knowledge experiments.

The package turns the question "how much is knowing everyone's trading
strategy worth?" into a reproducible pipeline: a limit-order-book market,
five trading strategies, randomised supply/demand schedules, and an
experiment harness that predicts the dominant strategy (from perfect or
noise-distorted knowledge) and measures the profit edge it buys.
"""

from .exchange import (ASK, BID, PRICE_MAX, PRICE_MIN, LimitOrderBook,
                       LOBSnapshot, MarketEvent, Quote, TapeEvent, Trade,
                       lob_anonymized, submit_quote, write_tape_csv)
from .oracle import (ExperimentRecord, NoiseSpec, apply_noise, derive_seed,
                     dominance_landscape, enumerate_populations, experiment1,
                     experiment2, p_max, predict_dominant, read_records_csv,
                     write_records_csv)
from .schedules import (OrderSchedule, SchedulerParams, SubSchedule,
                        deployment_times, equilibrium, generate_schedule,
                        max_surplus, order_prices, schedule_from_json,
                        schedule_to_json, simple_symmetric_schedule)
from .session import MarketSession, SessionResult, run_session
from .stats import (FitResult, RankTestResult, accuracy_curve, analyze_records,
                    fit_line, rank_sum_test, remove_outliers)
from .traders import (AA, ALL_KINDS, CORE_KINDS, GDX, SNPR, ZIC, ZIP,
                      CustomerOrder, Trader, TraderPopulation,
                      make_trader, strategy_profit_per_trade)

__version__ = "0.1.0"

__all__ = [
    "ASK", "BID", "PRICE_MAX", "PRICE_MIN", "LimitOrderBook", "LOBSnapshot",
    "MarketEvent", "Quote", "TapeEvent", "Trade", "lob_anonymized",
    "submit_quote", "write_tape_csv",
    "ExperimentRecord", "NoiseSpec", "apply_noise", "derive_seed",
    "dominance_landscape", "enumerate_populations", "experiment1",
    "experiment2", "p_max", "predict_dominant", "read_records_csv",
    "write_records_csv",
    "OrderSchedule", "SchedulerParams", "SubSchedule", "deployment_times",
    "equilibrium", "generate_schedule", "max_surplus", "order_prices",
    "schedule_from_json", "schedule_to_json", "simple_symmetric_schedule",
    "MarketSession", "SessionResult", "run_session",
    "FitResult", "RankTestResult", "accuracy_curve", "analyze_records",
    "fit_line", "rank_sum_test", "remove_outliers",
    "AA", "ALL_KINDS", "CORE_KINDS", "GDX", "SNPR", "ZIC", "ZIP",
    "CustomerOrder", "Trader", "TraderPopulation", "make_trader",
    "strategy_profit_per_trade",
]
