"""Analysis layer: least-squares fits, interdecile outlier filter, rank tests.

Everything here is a pure function of its inputs.  The rank-sum test is
self-contained: exact enumeration for small pooled samples, a tie-corrected
normal approximation beyond that.
"""

from __future__ import annotations

import itertools
import math
from typing import NamedTuple

import numpy as np


class FitResult(NamedTuple):
    slope: float
    intercept: float
    residual_sum: float


class RankTestResult(NamedTuple):
    statistic: float
    p_value: float
    n1: int
    n2: int


def fit_line(points):
    """Ordinary least squares through the normal equations.

    ``points`` is an iterable of (x, y).  Needs at least two points and some
    variance in x.
    """
    pts = [(float(x), float(y)) for x, y in points]
    n = len(pts)
    if n < 2:
        raise ValueError("need at least two points")
    mx = sum(x for x, _ in pts) / n
    my = sum(y for _, y in pts) / n
    sxx = sum((x - mx) ** 2 for x, _ in pts)
    if sxx == 0.0:
        raise ValueError("all x values equal; slope undefined")
    sxy = sum((x - mx) * (y - my) for x, y in pts)
    slope = sxy / sxx
    intercept = my - slope * mx
    rss = sum((y - (slope * x + intercept)) ** 2 for x, y in pts)
    return FitResult(slope, intercept, rss)


def remove_outliers(values, low_q=0.10, high_q=0.90, multiplier=1.0):
    """Keep values within ``multiplier`` central ranges of the central band.

    The band runs from the low to the high quantile (interdecile by default,
    linearly interpolated); anything beyond band +/- multiplier * width goes.
    Order is preserved and the input is never mutated.
    """
    vals = list(values)
    if not vals:
        raise ValueError("empty input")
    lo = float(np.quantile(vals, low_q, method="linear"))
    hi = float(np.quantile(vals, high_q, method="linear"))
    width = hi - lo
    lower = lo - multiplier * width
    upper = hi + multiplier * width
    return [v for v in vals if lower <= v <= upper]


def _midranks(pooled):
    """Fractional ranks with ties sharing the mean rank, doubled to stay
    in exact integer arithmetic (rank 1.5 is stored as 3)."""
    order = sorted(range(len(pooled)), key=lambda i: pooled[i])
    ranks2 = [0] * len(pooled)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        # ranks i+1..j+1 tie; doubled mean rank = (i+1) + (j+1)
        r2 = (i + 1) + (j + 1)
        for k in range(i, j + 1):
            ranks2[order[k]] = r2
        i = j + 1
    return ranks2


def _norm_sf(z):
    return 0.5 * math.erfc(z / math.sqrt(2.0))


EXACT_LIMIT = 12    # pooled size at or below which the exact distribution is used


def rank_sum_test(sample_a, sample_b):
    """Two-sided Wilcoxon rank-sum (Mann-Whitney) test with midrank ties.

    For pooled sizes up to EXACT_LIMIT the p-value enumerates every split of
    the pooled sample; otherwise it uses the normal approximation with tie
    correction and a 0.5 continuity correction.  The statistic reported is
    the Mann-Whitney U of the first sample.
    """
    a = list(sample_a)
    b = list(sample_b)
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be nonempty")
    n = n1 + n2
    ranks2 = _midranks(a + b)
    w2 = sum(ranks2[:n1])                      # doubled rank sum of sample a
    u1 = (w2 - n1 * (n1 + 1)) / 2.0            # = W - n1(n1+1)/2
    mu2 = n1 * (n + 1)                         # doubled expected rank sum

    if n <= EXACT_LIMIT:
        d_obs = abs(w2 - mu2)
        count = 0
        total = 0
        for combo in itertools.combinations(range(n), n1):
            ws2 = sum(ranks2[i] for i in combo)
            total += 1
            if abs(ws2 - mu2) >= d_obs:
                count += 1
        p = count / total
        return RankTestResult(u1, p, n1, n2)

    # normal approximation with tie correction
    tie_term = 0.0
    for _, group in itertools.groupby(sorted(ranks2)):
        t = len(list(group))
        tie_term += t ** 3 - t
    var_u = (n1 * n2 / 12.0) * ((n + 1) - tie_term / (n * (n - 1)))
    if var_u <= 0:
        return RankTestResult(u1, 1.0, n1, n2)
    mu_u = n1 * n2 / 2.0
    u_big = max(u1, n1 * n2 - u1)
    z = (u_big - mu_u - 0.5) / math.sqrt(var_u)
    p = min(1.0, 2.0 * _norm_sf(z))
    return RankTestResult(u1, p, n1, n2)


def accuracy_curve(outcomes):
    """Wrong-prediction counts per noise level.

    ``outcomes`` is an iterable of (p, prediction_correct) pairs.  Returns
    (curve, fit) where curve is a p-sorted list of (p, wrong_count) and fit is
    the least-squares trend over the curve, or None when it is undefined.
    """
    wrong = {}
    for p, correct in outcomes:
        p = float(p)
        wrong.setdefault(p, 0)
        if not correct:
            wrong[p] += 1
    curve = sorted(wrong.items())
    fit = None
    if len(curve) >= 2:
        fit = fit_line(curve)
    return curve, fit


# -- record-level analysis ----------------------------------------------------

def analyze_records(rows):
    """Summarise experiment records grouped by noise level.

    Zero-trade cells are excluded throughout.  Multiplier means use the
    interdecile outlier filter within each noise level; rank tests compare
    each level's unfiltered multiplier distribution against the p = 0 level.
    Returns a dict with ``summary``, ``plotdata`` and ``fits`` tables, each a
    (header, rows) pair ready for CSV.
    """
    usable = [r for r in rows if not r["zero_trade"] and not math.isnan(r["multiplier"])]
    by_p = {}
    for r in usable:
        by_p.setdefault(r["p"], []).append(r)
    p_levels = sorted(by_p)
    base = by_p.get(0.0)

    summary_rows = []
    plot_rows = []
    for p in p_levels:
        rs = by_p[p]
        mults = [r["multiplier"] for r in rs]
        kept = remove_outliers(mults)
        kept_set = _multiset(kept)
        mean_mult = sum(kept) / len(kept) if kept else math.nan
        market_mean = sum(r["market_avg"] for r in rs) / len(rs)
        wrong = sum(1 for r in rs if not r["correct"])
        above = sum(1 for m in mults if m >= 1.0)
        if base is not None and p != 0.0:
            test = rank_sum_test(mults, [r["multiplier"] for r in base])
            p_vs_base = test.p_value
        elif base is not None:
            p_vs_base = 1.0
        else:
            p_vs_base = math.nan
        summary_rows.append([p, len(rs), mean_mult, market_mean, wrong,
                             above / len(mults), p_vs_base])
        for r in rs:
            m = r["multiplier"]
            keep = _take(kept_set, m)
            plot_rows.append([r["schedule_id"], r["population"], p, m,
                              r["market_avg"], int(r["correct"]), int(keep)])

    fits_rows = []
    filtered_pts = [(row[2], row[3]) for row in plot_rows if row[6]]
    market_pts = [(row[2], row[4]) for row in plot_rows]
    wrong_pts = [(row[0], row[4]) for row in summary_rows]
    for name, pts in (("multiplier", filtered_pts), ("market_avg", market_pts),
                      ("wrong_count", wrong_pts)):
        xs = {x for x, _ in pts}
        if len(xs) >= 2:
            fit = fit_line(pts)
            fits_rows.append([name, fit.slope, fit.intercept, fit.residual_sum])

    return {
        "summary": (["p", "n", "multiplier_mean", "market_mean", "wrong_count",
                     "frac_above_breakeven", "ranksum_p_vs_p0"], summary_rows),
        "plotdata": (["schedule_id", "population", "p", "multiplier",
                      "market_avg", "correct", "kept"], plot_rows),
        "fits": (["series", "slope", "intercept", "residual_sum"], fits_rows),
    }


def _multiset(values):
    ms = {}
    for v in values:
        ms[v] = ms.get(v, 0) + 1
    return ms


def _take(ms, v):
    if ms.get(v, 0) > 0:
        ms[v] -= 1
        return True
    return False


def write_analysis_csvs(analysis, out_dir):
    """Write summary.csv, plotdata.csv and fits.csv under out_dir."""
    import csv
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    for name in ("summary", "plotdata", "fits"):
        header, rows = analysis[name]
        path = os.path.join(out_dir, "%s.csv" % name)
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(header)
            w.writerows(rows)
        paths[name] = path
    return paths
