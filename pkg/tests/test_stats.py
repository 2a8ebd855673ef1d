"""Statistics layer: fits, outlier filter, rank-sum test, accuracy curves."""

import itertools
import math

import numpy as np
import pytest

from oraclesim import (accuracy_curve, analyze_records, fit_line,
                       rank_sum_test, remove_outliers)


# -- fit_line -----------------------------------------------------------------

def test_fit_collinear_points():
    fit = fit_line([(0, 1), (1, 2), (2, 3)])
    assert fit.slope == pytest.approx(1.0)
    assert fit.intercept == pytest.approx(1.0)
    assert fit.residual_sum == pytest.approx(0.0, abs=1e-12)


def test_fit_hand_solved_normal_equations():
    fit = fit_line([(0, 0), (1, 1), (2, 0)])
    assert fit.slope == pytest.approx(0.0, abs=1e-12)
    assert fit.intercept == pytest.approx(1.0 / 3.0)


def test_fit_scales_linearly_in_y():
    pts = [(0.0, 1.0), (1.0, 3.0), (2.0, 2.0), (4.0, 5.0)]
    base = fit_line(pts)
    scaled = fit_line([(x, 10.0 * y) for x, y in pts])
    assert scaled.slope == pytest.approx(10.0 * base.slope)
    assert scaled.intercept == pytest.approx(10.0 * base.intercept)


def test_fit_matches_polyfit_on_random_inputs():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(2, 30))
        x = rng.normal(0, 10, size=n)
        if np.ptp(x) == 0:
            continue
        y = rng.normal(0, 10, size=n)
        fit = fit_line(zip(x, y))
        slope, intercept = np.polyfit(x, y, 1)
        assert fit.slope == pytest.approx(slope, rel=1e-9, abs=1e-9)
        assert fit.intercept == pytest.approx(intercept, rel=1e-9, abs=1e-9)


def test_fit_degenerate_inputs():
    with pytest.raises(ValueError):
        fit_line([(1, 1)])
    with pytest.raises(ValueError):
        fit_line([(2, 1), (2, 5), (2, 9)])


# -- remove_outliers ----------------------------------------------------------

def test_outliers_constant_list_unchanged():
    assert remove_outliers([5, 5, 5, 5]) == [5, 5, 5, 5]


def test_outliers_hand_computed_decile_bounds():
    # sorted input 1..10 plus 100: D10 = 2.0, D90 = 10.0, width 8
    # acceptance band [-6, 18] at multiplier 1 -> only 100 is dropped
    values = list(range(1, 11)) + [100]
    assert remove_outliers(values) == list(range(1, 11))


def test_outliers_preserve_order_and_multiset():
    values = [9, 1, 9, 500, 2, 7]
    out = remove_outliers(values)
    assert out == [v for v in values if v in out]
    for v in out:
        assert out.count(v) <= values.count(v)


def test_outliers_respect_multiplier_parameter():
    values = list(range(1, 11)) + [100]
    wide = remove_outliers(values, multiplier=12.0)   # band [2-96, 10+96]
    assert wide == values


# -- rank_sum_test ------------------------------------------------------------

def exact_pairwise_oracle(a, b):
    """Enumerate every split of the pooled sample; the test statistic is the
    Mann-Whitney U computed by direct pairwise comparison (no ranks)."""
    pooled = list(a) + list(b)
    n1 = len(a)

    def u_of(sample_a, sample_b):
        u = 0.0
        for x in sample_a:
            for y in sample_b:
                if x > y:
                    u += 1.0
                elif x == y:
                    u += 0.5
        return u

    mu = n1 * (len(pooled) - n1) / 2.0
    d_obs = abs(u_of(a, b) - mu)
    count = 0
    total = 0
    for idx in itertools.combinations(range(len(pooled)), n1):
        sa = [pooled[i] for i in idx]
        sb = [pooled[i] for i in range(len(pooled)) if i not in set(idx)]
        total += 1
        if abs(u_of(sa, sb) - mu) >= d_obs - 1e-12:
            count += 1
    return count / total


def test_rank_sum_identical_singletons():
    res = rank_sum_test([5], [5])
    assert res.p_value == 1.0


def test_rank_sum_extreme_separation():
    res = rank_sum_test([1, 2, 3], [10, 11, 12])
    assert res.p_value == pytest.approx(0.1)
    assert res.n1 == 3 and res.n2 == 3


def test_rank_sum_symmetry():
    rng = np.random.default_rng(1)
    for _ in range(30):
        a = [float(v) for v in rng.integers(0, 8, size=int(rng.integers(1, 7)))]
        b = [float(v) for v in rng.integers(0, 8, size=int(rng.integers(1, 7)))]
        assert rank_sum_test(a, b).p_value == pytest.approx(
            rank_sum_test(b, a).p_value)


def test_rank_sum_exact_equals_permutation_oracle_all_small_sizes():
    rng = np.random.default_rng(2)
    for n1 in range(1, 7):
        for n2 in range(1, 7):
            for rep in range(4):
                # small value range forces plenty of ties
                a = [float(v) for v in rng.integers(0, 5, size=n1)]
                b = [float(v) for v in rng.integers(0, 5, size=n2)]
                got = rank_sum_test(a, b).p_value
                want = exact_pairwise_oracle(a, b)
                assert got == pytest.approx(want, abs=1e-12), (a, b)


def test_rank_sum_large_sample_approximation_sane():
    rng = np.random.default_rng(3)
    same = rank_sum_test(list(rng.normal(0, 1, 50)), list(rng.normal(0, 1, 50)))
    shifted = rank_sum_test(list(rng.normal(0, 1, 50)),
                            list(rng.normal(3, 1, 50)))
    assert 0.0 <= shifted.p_value < 1e-6
    assert same.p_value > 0.05


def test_rank_sum_rejects_empty():
    with pytest.raises(ValueError):
        rank_sum_test([], [1.0])


# -- accuracy curve -----------------------------------------------------------

def test_accuracy_curve_all_correct():
    curve, fit = accuracy_curve([(0.0, True), (0.5, True)])
    assert curve == [(0.0, 0), (0.5, 0)]
    assert fit.slope == pytest.approx(0.0)


def test_accuracy_curve_hand_built():
    outcomes = [(0.1, False), (0.1, True), (0.1, True),
                (0.2, False), (0.2, False), (0.2, True)]
    curve, _ = accuracy_curve(outcomes)
    assert curve == [(0.1, 1), (0.2, 2)]


def test_accuracy_curve_totals_partition():
    rng = np.random.default_rng(4)
    outcomes = [(float(rng.integers(0, 4)) / 10, bool(rng.integers(2)))
                for _ in range(200)]
    curve, _ = accuracy_curve(outcomes)
    assert sum(c for _, c in curve) == sum(1 for _, ok in outcomes if not ok)
    shuffled = list(outcomes)
    rng.shuffle(shuffled)
    curve2, _ = accuracy_curve(shuffled)
    assert curve == curve2


# -- analyze_records ----------------------------------------------------------

def fake_row(schedule_id, population, p, mult, market, correct, zero=False):
    return {"schedule_id": schedule_id, "population": population, "p": p,
            "predicted_kind": "ZIP", "market_avg": market, "multiplier": mult,
            "correct": correct, "zero_trade": zero, "K": 1, "seed": 0}


def test_analyze_records_summary_and_fits():
    rows = []
    for i in range(12):
        rows.append(fake_row(0, "1-1-1", 0.0, 1.2 + 0.01 * i, 10.0, True))
        rows.append(fake_row(0, "1-1-1", 0.5, 1.0 + 0.01 * i, 10.0, i % 2 == 0))
    rows.append(fake_row(0, "1-1-1", 0.5, 99.0, 10.0, True))   # wild outlier
    rows.append(fake_row(0, "1-1-1", 0.0, 1.0, 10.0, True, zero=True))

    analysis = analyze_records(rows)
    header, summary = analysis["summary"]
    assert header[0] == "p"
    by_p = {row[0]: row for row in summary}
    assert by_p[0.0][1] == 12            # zero-trade row excluded
    assert by_p[0.5][1] == 13
    assert by_p[0.5][4] == 6             # wrong predictions at p=0.5
    mean_05 = by_p[0.5][2]
    assert mean_05 < 2.0                 # the outlier was filtered out
    assert 0.0 <= by_p[0.5][6] <= 1.0    # rank test p-value

    _, plot = analysis["plotdata"]
    assert len(plot) == 25
    kept_flags = [r[6] for r in plot if r[2] == 0.5]
    assert sum(kept_flags) == 12         # 13 rows minus the filtered outlier

    _, fits = analysis["fits"]
    names = {r[0] for r in fits}
    assert names == {"multiplier", "market_avg", "wrong_count"}


def test_analyze_records_empty():
    analysis = analyze_records([])
    assert analyze_records([])["summary"][1] == []
    assert analysis["plotdata"][1] == []
    assert analysis["fits"][1] == []
