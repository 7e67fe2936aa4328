"""Per-series kinetics: peak, awakening, sleep statistics, slope, Beauty
Coefficient, and the delayed co-citation / van Raan / flash-in-the-pan
detectors."""

from __future__ import annotations

import csv
import enum
from collections.abc import Iterable, Mapping
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import TextIO

from cocite.errors import ConfigError, ContractError


def exact(value: int | float | str | Fraction) -> Fraction:
    """Decimal-faithful rational: ``exact(0.7) == Fraction(7, 10)``."""
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class YearSeries:
    start_year: int
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.counts:
            raise ContractError("YearSeries needs at least one year")
        if any(c < 0 for c in self.counts):
            raise ContractError("YearSeries counts must be non-negative")
        if not isinstance(self.counts, tuple):
            object.__setattr__(self, "counts", tuple(self.counts))

    @property
    def end_year(self) -> int:
        return self.start_year + len(self.counts) - 1

    @property
    def years(self) -> range:
        return range(self.start_year, self.end_year + 1)

    def count_at(self, year: int) -> int:
        return self.counts[year - self.start_year]

    def __len__(self) -> int:
        return len(self.counts)


@dataclass(frozen=True)
class KineticsSummary:
    total: int
    peak_year: int
    peak_count: int
    awakening_year: int | None
    sleep_duration: int | None
    sleep_avg: Fraction | None
    sleep_max: int | None
    slope: Fraction | None
    beauty: float
    start_year: int
    awakening_count: int | None = None


class Verdict(str, enum.Enum):
    DELAYED = "delayed"
    SLEEPING_BEAUTY = "sleeping_beauty"
    FLASH_IN_PAN = "flash_in_pan"
    INCONCLUSIVE = "inconclusive"
    NONE = "none"


@dataclass(frozen=True)
class DetectionCriteria:
    min_total: int = 100
    min_peak: int = 20
    min_member_year: int = 1970
    min_sleep_years: int = 10
    sleep_max_per_year: int = 2
    sleep_avg_max: float = 1.0

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if value <= 0:
                raise ConfigError(f"{name}: must be positive, got {value}")
        if exact(self.sleep_avg_max) > self.sleep_max_per_year:
            raise ConfigError(
                f"sleep_avg_max: {self.sleep_avg_max} exceeds "
                f"sleep_max_per_year {self.sleep_max_per_year}"
            )


@dataclass(frozen=True)
class VanRaanCriteria:
    min_sleep_years: int = 10
    sleep_avg_max: float = 1.0
    awakening_window: int = 5
    min_awakening_intensity: float = 5.0
    # awakening = first year above this count, as for co-citation series
    awakening_threshold: int = 2

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if value <= 0:
                raise ConfigError(f"{name}: must be positive, got {value}")


@dataclass(frozen=True)
class DetectionRecord:
    a: str
    b: str | None
    summary: KineticsSummary
    verdict: Verdict
    criteria: DetectionCriteria | VanRaanCriteria | FlashCriteria | None = None
    intensity: Fraction | None = None


def slope(
    awakening_year: int, awakening_count: int, peak_year: int, peak_count: int
) -> Fraction | None:
    """Co-citations per year from the awakening year to the peak year;
    ``None`` (NA) when both fall in the same year."""
    if peak_year == awakening_year:
        return None
    return Fraction(peak_count - awakening_count, peak_year - awakening_year)


def _peak_offset(counts: tuple[int, ...]) -> int:
    # earliest year attaining the maximum
    return max(range(len(counts)), key=lambda t: (counts[t], -t))


def beauty_coefficient(series: YearSeries) -> float:
    """Beauty Coefficient with the series start as the reference year.

    Sums, up to the earliest peak, the gap between the straight line from
    the first-year count to the peak count and the observed count, each
    gap divided by ``max(1, count)``. Zero when the peak is the first year.
    """
    counts = series.counts
    tm = _peak_offset(counts)
    if tm == 0:
        return 0.0
    c0, cm = counts[0], counts[tm]
    rise = Fraction(cm - c0, tm)
    total = Fraction(0)
    for t in range(tm + 1):
        ct = counts[t]
        total += (rise * t + c0 - ct) / max(1, ct)
    return float(total)


def summarize(series: YearSeries, sleep_threshold: int = 2) -> KineticsSummary:
    counts = series.counts
    start = series.start_year
    tm = _peak_offset(counts)
    peak_count = counts[tm]
    wake = next((t for t, c in enumerate(counts) if c > sleep_threshold), None)

    awakening_year = sleep_duration = sleep_max = awakening_count = None
    sleep_avg = slope_value = None
    if wake is not None:
        awakening_year = start + wake
        awakening_count = counts[wake]
        sleep_duration = wake
        if wake > 0:
            asleep = counts[:wake]
            sleep_avg = Fraction(sum(asleep), wake)
            sleep_max = max(asleep)
        slope_value = slope(awakening_year, awakening_count, start + tm, peak_count)

    return KineticsSummary(
        total=sum(counts),
        peak_year=start + tm,
        peak_count=peak_count,
        awakening_year=awakening_year,
        sleep_duration=sleep_duration,
        sleep_avg=sleep_avg,
        sleep_max=sleep_max,
        slope=slope_value,
        beauty=beauty_coefficient(series),
        start_year=start,
        awakening_count=awakening_count,
    )


def passes_sleep(
    summary: KineticsSummary, min_years: int, max_per_year: int | None, avg_max: float
) -> bool:
    if summary.awakening_year is None or summary.sleep_duration is None:
        return False
    if summary.sleep_duration < min_years or summary.sleep_avg is None:
        return False
    if max_per_year is not None and summary.sleep_max > max_per_year:
        return False
    return summary.sleep_avg <= exact(avg_max)


def is_delayed(
    summary: KineticsSummary, member_years: tuple[int, int], criteria: DetectionCriteria
) -> bool:
    """Pure re-evaluation of the delayed co-citation criteria."""
    return (
        min(member_years) >= criteria.min_member_year
        and summary.total >= criteria.min_total
        and summary.peak_count >= criteria.min_peak
        and passes_sleep(
            summary,
            criteria.min_sleep_years,
            criteria.sleep_max_per_year,
            criteria.sleep_avg_max,
        )
    )


def detect_delayed(
    pair: tuple[str, str],
    series: YearSeries,
    member_years: tuple[int | None, int | None],
    criteria: DetectionCriteria = DetectionCriteria(),
) -> DetectionRecord | None:
    if member_years[0] is None or member_years[1] is None:
        raise ContractError(f"pair {pair[0]},{pair[1]} has a member without a year")
    summary = summarize(series, criteria.sleep_max_per_year)
    if not is_delayed(summary, (member_years[0], member_years[1]), criteria):
        return None
    return DetectionRecord(pair[0], pair[1], summary, Verdict.DELAYED, criteria)


def detect_vanraan(
    series: YearSeries,
    criteria: VanRaanCriteria = VanRaanCriteria(),
    pub_id: str = "",
) -> DetectionRecord | None:
    """Sleeping Beauty test for a single publication's citation series.

    Returns a ``SLEEPING_BEAUTY`` record on acceptance, ``None`` on
    rejection, and an ``INCONCLUSIVE`` record when the series ends before
    the awakening window is complete.
    """
    summary = summarize(series, criteria.awakening_threshold)
    if not passes_sleep(summary, criteria.min_sleep_years, None, criteria.sleep_avg_max):
        return None
    wake = summary.awakening_year - series.start_year
    window = series.counts[wake : wake + criteria.awakening_window]
    if len(window) < criteria.awakening_window:
        return DetectionRecord(pub_id, None, summary, Verdict.INCONCLUSIVE, criteria)
    intensity = Fraction(sum(window), criteria.awakening_window)
    if intensity < exact(criteria.min_awakening_intensity):
        return None
    return DetectionRecord(
        pub_id, None, summary, Verdict.SLEEPING_BEAUTY, criteria, intensity
    )


@dataclass(frozen=True)
class FlashCriteria:
    band: tuple[int, int] = (20, 100)
    min_span: int = 10
    burst: int = 20


@dataclass
class FlashScreen:
    removed_short_span: list[tuple[str, str]] = field(default_factory=list)
    removed_negative_beauty: list[tuple[str, str]] = field(default_factory=list)
    removed_no_burst: list[tuple[str, str]] = field(default_factory=list)
    survivors: list[tuple[str, str]] = field(default_factory=list)
    flash: list[DetectionRecord] = field(default_factory=list)

    @property
    def flash_pairs(self) -> set[tuple[str, str]]:
        return {(r.a, r.b) for r in self.flash}

    def outcome(self) -> dict[tuple[str, str], str]:
        out = {}
        for label, keys in (
            ("short_span", self.removed_short_span),
            ("negative_beauty", self.removed_negative_beauty),
            ("no_burst", self.removed_no_burst),
        ):
            out.update(dict.fromkeys(keys, label))
        flash = self.flash_pairs
        for key in self.survivors:
            out[key] = "flash_in_pan" if key in flash else "multi_peak"
        return out


def screen_flash_in_pan(
    items: Iterable[tuple[tuple[str, str], YearSeries]],
    criteria: FlashCriteria = FlashCriteria(),
) -> FlashScreen:
    """Screen pairs with totals in ``criteria.band`` (half-open).

    A pair is removed when its peak comes fewer than ``min_span`` years
    after the start, when its Beauty Coefficient is negative, or when no
    year reaches ``burst``. Survivors with exactly one year at or above
    ``burst`` are flagged as flash-in-the-pan.
    """
    low, high = criteria.band
    screen = FlashScreen()
    for key, series in items:
        total = sum(series.counts)
        if not low <= total < high:
            raise ContractError(f"pair {key} total {total} outside band [{low},{high})")
        tm = _peak_offset(series.counts)
        if tm < criteria.min_span:
            screen.removed_short_span.append(key)
            continue
        if beauty_coefficient(series) < 0:
            screen.removed_negative_beauty.append(key)
            continue
        bursts = sum(1 for c in series.counts if c >= criteria.burst)
        if bursts == 0:
            screen.removed_no_burst.append(key)
            continue
        screen.survivors.append(key)
        if bursts == 1:
            screen.flash.append(
                DetectionRecord(
                    key[0], key[1], summarize(series), Verdict.FLASH_IN_PAN, criteria
                )
            )
    return screen


DETECTION_HEADER = (
    "a", "b", "total", "peak_year", "peak_count", "awakening_year",
    "sleep_duration", "sleep_avg", "sleep_max", "slope", "beauty", "verdict",
)  # fmt: skip


def fmt_num(value: Fraction | float | int | None) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return f"{float(value):.6f}"


def detection_row(record: DetectionRecord) -> list[str]:
    s = record.summary
    return [
        record.a,
        record.b or "",
        str(s.total),
        str(s.peak_year),
        str(s.peak_count),
        fmt_num(s.awakening_year),
        fmt_num(s.sleep_duration),
        fmt_num(s.sleep_avg),
        fmt_num(s.sleep_max),
        "NA" if s.awakening_year is not None and s.slope is None else fmt_num(s.slope),
        fmt_num(s.beauty),
        record.verdict.value,
    ]


def write_detections(records: Iterable[DetectionRecord], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(DETECTION_HEADER)
    for record in records:
        writer.writerow(detection_row(record))


def read_detections(stream: TextIO) -> list[DetectionRecord]:
    """Load records written by :func:`write_detections`. Numbers come back
    at the six-decimal precision of the file; no criteria are attached."""

    def opt_int(text: str) -> int | None:
        return int(text) if text else None

    def opt_frac(text: str) -> Fraction | None:
        return Fraction(text) if text and text != "NA" else None

    records = []
    for row in csv.DictReader(stream):
        summary = KineticsSummary(
            total=int(row["total"]),
            peak_year=int(row["peak_year"]),
            peak_count=int(row["peak_count"]),
            awakening_year=opt_int(row["awakening_year"]),
            sleep_duration=opt_int(row["sleep_duration"]),
            sleep_avg=opt_frac(row["sleep_avg"]),
            sleep_max=opt_int(row["sleep_max"]),
            slope=opt_frac(row["slope"]),
            beauty=float(row["beauty"]),
            # not stored in the file; exact whenever an awakening was found
            start_year=(
                int(row["awakening_year"]) - int(row["sleep_duration"])
                if row["awakening_year"]
                else int(row["peak_year"])
            ),
        )
        records.append(DetectionRecord(row["a"], row["b"] or None, summary, Verdict(row["verdict"])))
    return records


def group_series(rows: Iterable[tuple[str, str, int, int]]) -> Mapping[tuple[str, str], YearSeries]:
    """Rebuild series from long-format ``(a, b, year, count)`` rows.

    Rows of one pair must be contiguous and in year order, as written by
    the counting stage.
    """
    result: dict[tuple[str, str], YearSeries] = {}
    key = None
    start = 0
    counts: list[int] = []
    for a, b, year, count in rows:
        if (a, b) != key:
            if (a, b) in result:
                raise ContractError(f"kinetics rows for pair {a},{b} are not contiguous")
            if key is not None:
                result[key] = YearSeries(start, tuple(counts))
            key, start, counts = (a, b), year, []
        elif year != start + len(counts):
            raise ContractError(f"gap in kinetics rows for pair {a},{b} at {year}")
        counts.append(count)
    if key is not None:
        result[key] = YearSeries(start, tuple(counts))
    return result

