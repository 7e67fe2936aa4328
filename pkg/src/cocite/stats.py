"""Frequency distribution tables, ECDF, percentiles and cohort summaries."""

from __future__ import annotations

import csv
import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TextIO

from cocite.errors import ConfigError, DataError
from cocite.kinetics import DetectionRecord


@dataclass
class FrequencyHistogram:
    """Doubling classes ``f <= 2``, ``(2, 4]``, ..., ``(top/2, top]`` and an
    open-ended ``(top, inf)``. Streaming: feed values with :meth:`add`."""

    top: int = 2048
    counts: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.top < 2 or self.top & (self.top - 1):
            raise ConfigError(f"top bucket bound must be a power of two >= 2, got {self.top}")
        self._last = self.top.bit_length() - 1  # index of the open bucket
        if not self.counts:
            self.counts = [0] * (self._last + 1)

    def bucket_of(self, f: int) -> int:
        if f <= 2:
            return 0
        return min((f - 1).bit_length() - 1, self._last)

    def add(self, f: int) -> None:
        if f < 1:
            raise DataError(f"co-citation frequency must be >= 1, got {f}")
        self.counts[self.bucket_of(f)] += 1

    def merge(self, other: FrequencyHistogram) -> FrequencyHistogram:
        if other.top != self.top:
            raise ConfigError("cannot merge histograms with different top bounds")
        return FrequencyHistogram(self.top, [x + y for x, y in zip(self.counts, other.counts)])

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def buckets(self) -> list[tuple[int, float, int, float]]:
        """``(lower, upper, count, percentage)``; the first bucket includes
        its lower bound 1, every later one excludes its lower bound."""
        total = self.total
        rows = []
        for i, count in enumerate(self.counts):
            lower = 1 if i == 0 else 2**i
            upper = math.inf if i == self._last else 2 ** (i + 1)
            pct = 100.0 * count / total if total else 0.0
            rows.append((lower, upper, count, pct))
        return rows

    def write_csv(self, out: TextIO) -> None:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(("lower", "upper", "count", "percentage"))
        for lower, upper, count, pct in self.buckets:
            writer.writerow((lower, "inf" if upper == math.inf else upper, count, f"{pct:.6f}"))


def histogram(frequencies: Iterable[int], top: int = 2048) -> FrequencyHistogram:
    hist = FrequencyHistogram(top)
    for f in frequencies:
        hist.add(f)
    return hist


def ecdf(frequencies: Iterable[int]) -> list[tuple[int, float]]:
    tally = Counter(frequencies)
    n = sum(tally.values())
    if n == 0:
        raise DataError("ECDF of an empty sample")
    points = []
    running = 0
    for value in sorted(tally):
        running += tally[value]
        points.append((value, running / n))
    return points


def write_ecdf(points: Iterable[tuple[int, float]], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("frequency", "cumulative_fraction"))
    for value, frac in points:
        writer.writerow((value, repr(frac)))


def percentiles(values: Iterable[int], requested: Sequence[float]) -> dict[float, int]:
    """Nearest-rank percentiles: the value at 1-based rank ceil(p/100 * n)."""
    ordered = sorted(values)
    if not ordered:
        raise DataError("percentiles of an empty sample")
    n = len(ordered)
    out = {}
    for p in requested:
        if not 0 < p <= 100:
            raise ConfigError(f"percentile must be in (0, 100], got {p}")
        rank = math.ceil(Fraction(str(p)) * n / 100)
        out[p] = ordered[max(rank, 1) - 1]
    return out


def quantile(sorted_values: Sequence[float], q: float) -> float:
    """Linear interpolation between closest ranks (h = (n-1)q)."""
    n = len(sorted_values)
    h = (n - 1) * q
    lo = math.floor(h)
    hi = min(lo + 1, n - 1)
    return sorted_values[lo] + (h - lo) * (sorted_values[hi] - sorted_values[lo])


STATISTICS = ("min", "q1", "median", "mean", "q3", "max")
COLUMNS = ("total", "sleep_duration", "slope", "beauty", "peak")


def describe(values: Sequence[float]) -> dict[str, float]:
    s = sorted(values)
    if not s:
        return dict.fromkeys(STATISTICS, math.nan)
    return {
        "min": float(s[0]),
        "q1": float(quantile(s, 0.25)),
        "median": float(quantile(s, 0.5)),
        "mean": math.fsum(s) / len(s),
        "q3": float(quantile(s, 0.75)),
        "max": float(s[-1]),
    }


@dataclass
class SummaryTable:
    columns: dict[str, dict[str, float]]
    sizes: dict[str, int]

    @property
    def slope_na(self) -> int:
        return self.sizes["total"] - self.sizes["slope"]

    def write_csv(self, out: TextIO) -> None:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(("statistic",) + COLUMNS)
        for stat in STATISTICS:
            writer.writerow([stat] + [f"{self.columns[c][stat]:.6f}" for c in COLUMNS])
        writer.writerow(["n"] + [self.sizes[c] for c in COLUMNS])


def summarize_cohort(records: Iterable[DetectionRecord]) -> SummaryTable:
    """Table of min/q1/median/mean/q3/max per column. Undefined slopes are
    left out of the slope column; ``SummaryTable.slope_na`` counts them."""
    records = list(records)
    if not records:
        raise DataError("cannot summarise an empty cohort")
    values = {
        "total": [r.summary.total for r in records],
        "sleep_duration": [r.summary.sleep_duration for r in records],
        "slope": [float(r.summary.slope) for r in records if r.summary.slope is not None],
        "beauty": [r.summary.beauty for r in records],
        "peak": [r.summary.peak_count for r in records],
    }
    return SummaryTable(
        {name: describe(v) for name, v in values.items()},
        {name: len(v) for name, v in values.items()},
    )


def write_percentiles(rows: Iterable[tuple[str, float, int]], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("population", "percentile", "value"))
    for population, p, value in rows:
        writer.writerow((population, f"{p:g}", value))
