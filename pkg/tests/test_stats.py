from __future__ import annotations

import io
import math
import random
import statistics
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cocite.errors import ConfigError, DataError
from cocite.kinetics import DetectionRecord, KineticsSummary, Verdict
from cocite.stats import (
    FrequencyHistogram,
    describe,
    ecdf,
    histogram,
    percentiles,
    summarize_cohort,
    write_ecdf,
)

import oracles

values_st = st.lists(st.integers(1, 10_000), min_size=1, max_size=200)


def test_small_histogram():
    hist = histogram([1, 1, 2, 3, 9])
    nonzero = {(lo, up): c for lo, up, c, _ in hist.buckets if c}
    assert nonzero == {(1, 2): 3, (2, 4): 1, (8, 16): 1}
    assert hist.total == 5


# Co-citation frequency class counts of a 940,357,633-pair corpus and the
# rounded percentages quoted for them (same row order as the buckets).
REFERENCE_COUNTS = [
    790_189_114, 82_022_893, 41_772_728, 17_749_436, 6_429_234, 1_704_908,
    385_923, 81_164, 17_150, 3_777, 948, 358,
]  # fmt: skip
REFERENCE_PCT = ["84.03", "8.72", "4.44", "1.89", "0.68", "0.18", "0.041", "0.0086", "0.0018", "0.00040", "0.00010", "0.000038"]


def test_reference_distribution_percentages():
    hist = FrequencyHistogram(counts=list(REFERENCE_COUNTS))
    assert hist.total == 940_357_633
    for (_, _, _, pct), printed in zip(hist.buckets, REFERENCE_PCT):
        decimals = len(printed.split(".")[1])
        assert f"{pct:.{decimals}f}" == printed


def test_bucket_bounds_cover_range():
    rows = histogram([1]).buckets
    assert rows[0][:2] == (1, 2)
    for (_, up, _, _), (lo, _, _, _) in zip(rows, rows[1:]):
        assert up == lo
    assert rows[-1][:2] == (2048, math.inf)


@pytest.mark.parametrize("f, idx", [(1, 0), (2, 0), (3, 1), (4, 1), (5, 2), (2048, 10), (2049, 11), (10**9, 11)])
def test_bucket_edges(f, idx):
    assert FrequencyHistogram().bucket_of(f) == idx


def test_histogram_rejects_zero():
    with pytest.raises(DataError):
        histogram([1, 0])


@given(values_st)
def test_histogram_matches_rule_oracle(values):
    hist = histogram(values)
    assert hist.counts == oracles.bucket_counts_by_rule(values)
    assert sum(p for *_, p in hist.buckets) == pytest.approx(100.0)


@given(values_st, values_st)
def test_histogram_merge(x, y):
    assert histogram(x).merge(histogram(y)).counts == histogram(x + y).counts


def test_ecdf_three_values():
    assert ecdf([1, 1, 2]) == [(1, 2 / 3), (2, 1.0)]


def test_ecdf_empty():
    with pytest.raises(DataError):
        ecdf([])


@given(values_st)
def test_ecdf_properties(values):
    points = ecdf(values)
    assert points[-1][1] == 1.0
    assert all(a[1] <= b[1] for a, b in zip(points, points[1:]))
    assert [v for v, _ in points] == sorted(set(values))


def test_ecdf_ten_thousand_values_rank_oracle():
    rng = random.Random(8)
    values = [int(rng.paretovariate(1.2)) for _ in range(10_000)]
    got = ecdf(values)
    want = oracles.rank_ecdf(values)
    assert [v for v, _ in got] == [v for v, _ in want]
    for (_, g), (_, w) in zip(got, want):
        assert abs(g - float(w)) <= 1e-12


def test_ecdf_csv():
    buf = io.StringIO()
    write_ecdf(ecdf([1, 1, 2]), buf)
    assert buf.getvalue().splitlines()[0] == "frequency,cumulative_fraction"


def test_percentile_uniform():
    assert percentiles(range(1, 101), [90]) == {90: 90}
    assert percentiles(range(1, 101), [0.5, 1, 99.5, 100]) == {0.5: 1, 1: 1, 99.5: 100, 100: 100}


def test_percentile_rounding_is_exact():
    # 90% of 10 is 9, not a float just above 9
    assert percentiles(range(1, 11), [90]) == {90: 9}
    assert percentiles(range(1, 1001), [99.9]) == {99.9: 999}


@pytest.mark.parametrize("p", [0, -1, 100.5])
def test_percentile_out_of_range(p):
    with pytest.raises(ConfigError):
        percentiles([1, 2], [p])


def test_percentile_empty():
    with pytest.raises(DataError):
        percentiles([], [50])


@given(values_st, st.lists(st.floats(0.01, 100), min_size=1, max_size=6))
def test_percentiles_monotone_and_permutation_invariant(values, ps):
    got = percentiles(values, sorted(ps))
    ordered = [got[p] for p in sorted(ps)]
    assert ordered == sorted(ordered)
    shuffled = values[:]
    random.Random(0).shuffle(shuffled)
    assert percentiles(shuffled, ps) == got
    assert histogram(shuffled).counts == histogram(values).counts
    assert ecdf(shuffled) == ecdf(values)


def record(total, sleep, slope, beauty, peak):
    summary = KineticsSummary(
        total=total, peak_year=2000, peak_count=peak, awakening_year=1995,
        sleep_duration=sleep, sleep_avg=Fraction(1, 2), sleep_max=2,
        slope=None if slope is None else Fraction(slope), beauty=beauty, start_year=1995 - sleep,
    )  # fmt: skip
    return DetectionRecord("a", "b", summary, Verdict.DELAYED)


def test_singleton_cohort():
    table = summarize_cohort([record(120, 12, Fraction(5, 2), 33.5, 25)])
    assert table.columns["total"] == dict.fromkeys(table.columns["total"], 120.0)
    assert table.columns["slope"]["q1"] == 2.5
    assert table.columns["beauty"]["max"] == 33.5


def test_empty_cohort():
    with pytest.raises(DataError):
        summarize_cohort([])


def test_cohort_matches_statistics_module():
    rng = random.Random(99)
    records = [
        record(rng.randint(100, 300), rng.randint(10, 38),
               None if rng.random() < 0.05 else Fraction(rng.randint(0, 380), 10),
               rng.uniform(-5, 400), rng.randint(20, 60))  # fmt: skip
        for _ in range(1000)
    ]
    table = summarize_cohort(records)
    columns = {
        "total": [r.summary.total for r in records],
        "sleep_duration": [r.summary.sleep_duration for r in records],
        "slope": [float(r.summary.slope) for r in records if r.summary.slope is not None],
        "beauty": [r.summary.beauty for r in records],
        "peak": [r.summary.peak_count for r in records],
    }
    for name, values in columns.items():
        q1, med, q3 = statistics.quantiles(values, n=4, method="inclusive")
        want = {"min": min(values), "q1": q1, "median": statistics.median(values),
                "mean": statistics.fmean(values), "q3": q3, "max": max(values)}  # fmt: skip
        assert med == pytest.approx(want["median"], abs=1e-9)
        for stat, value in want.items():
            assert table.columns[name][stat] == pytest.approx(value, abs=1e-9), (name, stat)
    assert table.slope_na == sum(1 for r in records if r.summary.slope is None)
    assert table.sizes["slope"] == 1000 - table.slope_na


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
def test_describe_ordering(values):
    d = describe(values)
    assert d["min"] <= d["q1"] <= d["median"] <= d["q3"] <= d["max"]
