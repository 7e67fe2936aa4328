"""Co-cited pair enumeration, external-memory deduplication and counting."""

from __future__ import annotations

import csv
import errno
import heapq
import itertools
import logging
import multiprocessing
import os
import tempfile
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from typing import NamedTuple, TextIO

from cocite.errors import BatchFailed, ConfigError, ContractError, ResourceError
from cocite.ingest import CitationGraph, Publication
from cocite.kinetics import YearSeries

logger = logging.getLogger(__name__)

KEY_SEP = "\x1f"


class CoCitedPair(NamedTuple):
    a: str
    b: str
    first_possible_year: int

    def key(self) -> bytes:
        return f"{self.a}{KEY_SEP}{self.b}{KEY_SEP}{self.first_possible_year}".encode()

    @classmethod
    def from_key(cls, key: bytes) -> CoCitedPair:
        a, b, year = key.decode().split(KEY_SEP)
        return cls(a, b, int(year))


class PairFrequency(NamedTuple):
    pair: CoCitedPair
    total: int


def make_pair(x: str, y: str, catalog: Mapping[str, Publication]) -> CoCitedPair:
    if x == y:
        raise ContractError(f"a publication cannot be paired with itself: {x!r}")
    if y < x:
        x, y = y, x
    year_x, year_y = catalog[x].year, catalog[y].year
    if year_x is None or year_y is None:
        raise ContractError(f"pair member without a year: {x!r}, {y!r}")
    return CoCitedPair(x, y, max(year_x, year_y))


def enumerate_pairs(
    article_id: str, refs: Iterable[str], catalog: Mapping[str, Publication]
) -> Iterator[CoCitedPair]:
    """All n·(n−1)/2 canonical pairs of one article's references."""
    ordered = sorted(set(refs))
    if len(ordered) < 2:
        raise ContractError(f"article {article_id!r} has fewer than 2 references")
    years = [catalog[r].year for r in ordered]
    if None in years:
        raise ContractError(f"article {article_id!r} cites a publication without a year")
    for i, j in itertools.combinations(range(len(ordered)), 2):
        yield CoCitedPair(ordered[i], ordered[j], max(years[i], years[j]))


def generate_pairs(graph: CitationGraph, sources: Iterable[str]) -> Iterator[CoCitedPair]:
    for article in sorted(sources):
        yield from enumerate_pairs(article, graph.refs(article), graph.catalog)


class PairDeduper:
    """Sort-unique a pair stream, spilling sorted runs to disk once more
    than ``budget`` records are buffered.

    Iterate the instance to get the merged output. ``spill_runs`` tells
    how many runs were written.
    """

    def __init__(
        self, pairs: Iterable[CoCitedPair], budget: int, spill_dir: str | None = None
    ) -> None:
        if budget <= 0:
            raise ConfigError(f"memory budget must be positive, got {budget}")
        self.pairs = pairs
        self.budget = budget
        self.spill_dir = spill_dir
        self.spill_runs = 0
        self.input_records = 0

    def _spill(self, run: list[bytes]) -> tempfile._TemporaryFileWrapper:
        try:
            fh = tempfile.TemporaryFile(dir=self.spill_dir)
            fh.write(b"\n".join(run))
            fh.write(b"\n")
            fh.flush()
            fh.seek(0)
        except OSError as exc:
            if exc.errno in (errno.ENOSPC, errno.EDQUOT):
                raise ResourceError(f"no space left for spill run: {exc}") from exc
            raise
        self.spill_runs += 1
        return fh

    @staticmethod
    def _read_run(fh) -> Iterator[bytes]:
        for line in fh:
            yield line[:-1]

    def __iter__(self) -> Iterator[CoCitedPair]:
        runs = []
        buf: set[bytes] = set()
        try:
            for pair in self.pairs:
                self.input_records += 1
                buf.add(pair.key())
                if len(buf) >= self.budget:
                    runs.append(self._spill(sorted(buf)))
                    buf.clear()
            if not runs:
                merged: Iterable[bytes] = sorted(buf)
            else:
                if buf:
                    runs.append(self._spill(sorted(buf)))
                    buf.clear()
                logger.info("merging %d spill runs", len(runs))
                merged = heapq.merge(*(self._read_run(fh) for fh in runs))
            last = None
            for key in merged:
                if key != last:
                    yield CoCitedPair.from_key(key)
                    last = key
        finally:
            for fh in runs:
                fh.close()


def dedup_pairs(
    pairs: Iterable[CoCitedPair], budget: int, spill_dir: str | None = None
) -> PairDeduper:
    return PairDeduper(pairs, budget, spill_dir)


@dataclass
class CitingIndex:
    """Integer-coded in-neighbour sets, built once per graph."""

    ids: list[str]
    position: dict[str, int]
    years: list[int]
    cited_by: list[frozenset[int]]

    @classmethod
    def from_graph(cls, graph: CitationGraph) -> CitingIndex:
        ids = sorted(graph.catalog)
        position = {pub_id: i for i, pub_id in enumerate(ids)}
        years = [graph.catalog[i].year or 0 for i in ids]
        incoming: list[list[int]] = [[] for _ in ids]
        for citing, refs in graph.out_edges.items():
            ci = position[citing]
            for cited in refs:
                incoming[position[cited]].append(ci)
        return cls(ids, position, years, [frozenset(x) for x in incoming])

    def lookup(self, pub_id: str) -> int:
        try:
            return self.position[pub_id]
        except KeyError:
            raise ContractError(f"publication {pub_id!r} is not in the graph") from None

    def co_citing(self, a: int, b: int) -> frozenset[int]:
        sa, sb = self.cited_by[a], self.cited_by[b]
        if len(sb) < len(sa):
            sa, sb = sb, sa
        return sa & sb

    def yearly(self, citing: Iterable[int], start: int, end: int) -> tuple[int, ...]:
        counts = [0] * (end - start + 1)
        years = self.years
        for c in citing:
            y = years[c]
            if y <= end:
                counts[y - start] += 1
        return tuple(counts)


def _index_for(graph: CitationGraph) -> CitingIndex:
    # cached on the graph instance so repeated calls share one index
    index = graph.__dict__.get("_citing_index")
    if index is None:
        index = CitingIndex.from_graph(graph)
        graph.__dict__["_citing_index"] = index
    return index


def count_total(pairs: Iterable[CoCitedPair], graph: CitationGraph) -> Iterator[PairFrequency]:
    index = _index_for(graph)
    for pair in pairs:
        common = index.co_citing(index.lookup(pair.a), index.lookup(pair.b))
        yield PairFrequency(pair, len(common))


def count_yearly(pair: CoCitedPair, graph: CitationGraph, end_year: int) -> YearSeries:
    if end_year < pair.first_possible_year:
        raise ConfigError(
            f"end_year {end_year} precedes first possible year "
            f"{pair.first_possible_year} of pair {pair.a},{pair.b}"
        )
    index = _index_for(graph)
    common = index.co_citing(index.lookup(pair.a), index.lookup(pair.b))
    return YearSeries(
        pair.first_possible_year, index.yearly(common, pair.first_possible_year, end_year)
    )


def citation_series(pub_id: str, graph: CitationGraph, end_year: int) -> YearSeries:
    """Yearly citation counts of one publication from its publication year."""
    index = _index_for(graph)
    i = index.lookup(pub_id)
    start = graph.catalog[pub_id].year
    if start is None or start > end_year:
        raise ContractError(f"publication {pub_id!r} has no year within the horizon")
    return YearSeries(start, index.yearly(index.cited_by[i], start, end_year))


# Worker state. Set in the parent right before the pool forks so children
# inherit the index and the encoded pair window without pickling them.
_WORKER_STATE: tuple | None = None


def _count_range(
    index: CitingIndex,
    a_idx: Sequence[int],
    b_idx: Sequence[int],
    starts: Sequence[int],
    lo: int,
    hi: int,
    end_year: int,
    series_min_total: int,
) -> list[tuple[int, tuple[int, ...] | None]]:
    out = []
    for k in range(lo, hi):
        common = index.co_citing(a_idx[k], b_idx[k])
        total = len(common)
        if total >= series_min_total:
            out.append((total, index.yearly(common, starts[k], end_year)))
        else:
            out.append((total, None))
    return out


def _worker(task: tuple[int, int, int]) -> list[tuple[int, tuple[int, ...] | None]]:
    batch_no, lo, hi = task
    try:
        index, a_idx, b_idx, starts, end_year, min_total = _WORKER_STATE
        return _count_range(index, a_idx, b_idx, starts, lo, hi, end_year, min_total)
    except Exception as exc:
        raise BatchFailed(batch_no, f"{type(exc).__name__}: {exc}") from None


def count_parallel(
    pairs: Iterable[CoCitedPair],
    graph: CitationGraph,
    end_year: int,
    partitions: int = 1,
    batch: int = 1000,
    series_min_total: int = 0,
    window: int = 1 << 20,
) -> Iterator[tuple[PairFrequency, YearSeries | None]]:
    """Count totals and yearly series for a sorted pair stream.

    Pairs are cut into batches of ``batch``; with ``partitions > 1`` the
    batches are handed to that many forked worker processes and the
    results are merged back in input order, so output never depends on the
    partitioning. Series are built only for pairs whose total reaches
    ``series_min_total`` (``None`` otherwise).
    """
    global _WORKER_STATE
    if partitions < 1:
        raise ConfigError(f"partitions must be at least 1, got {partitions}")
    if batch < 1:
        raise ConfigError(f"batch must be at least 1, got {batch}")
    index = _index_for(graph)
    window = max(window, partitions * batch)
    it = iter(pairs)
    batch_base = 0
    while True:
        chunk = list(itertools.islice(it, window))
        if not chunk:
            return
        for p in chunk:
            if end_year < p.first_possible_year:
                raise ConfigError(
                    f"end_year {end_year} precedes first possible year of {p.a},{p.b}"
                )
        a_idx = [index.lookup(p.a) for p in chunk]
        b_idx = [index.lookup(p.b) for p in chunk]
        starts = [p.first_possible_year for p in chunk]
        tasks = [
            (batch_base + n, lo, min(lo + batch, len(chunk)))
            for n, lo in enumerate(range(0, len(chunk), batch))
        ]
        batch_base += len(tasks)
        if partitions == 1:
            state = (index, a_idx, b_idx, starts, end_year, series_min_total)
            results = (_run_serial(state, task) for task in tasks)
            yield from _emit(chunk, results)
            continue
        _WORKER_STATE = (index, a_idx, b_idx, starts, end_year, series_min_total)
        try:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(partitions) as pool:
                yield from _emit(chunk, pool.imap(_worker, tasks))
        finally:
            _WORKER_STATE = None


def _run_serial(state: tuple, task: tuple[int, int, int]):
    batch_no, lo, hi = task
    try:
        return _count_range(state[0], state[1], state[2], state[3], lo, hi, state[4], state[5])
    except Exception as exc:
        raise BatchFailed(batch_no, f"{type(exc).__name__}: {exc}") from exc


def _emit(chunk: list[CoCitedPair], results: Iterable[list]) -> Iterator[tuple[PairFrequency, YearSeries | None]]:
    pos = 0
    for part in results:
        for total, counts in part:
            pair = chunk[pos]
            pos += 1
            series = None if counts is None else YearSeries(pair.first_possible_year, counts)
            yield PairFrequency(pair, total), series


# -- file formats -------------------------------------------------------------


def write_pairs(pairs: Iterable[CoCitedPair], out: TextIO) -> int:
    out.write("a,b,first_possible_year\n")
    n = 0
    writer = csv.writer(out, lineterminator="\n")
    for pair in pairs:
        writer.writerow(pair)
        n += 1
    return n


def read_pairs(stream: TextIO) -> Iterator[CoCitedPair]:
    reader = csv.reader(stream)
    next(reader, None)
    for a, b, year in reader:
        yield CoCitedPair(a, b, int(year))


class CountWriter:
    """Writes the frequencies file and the long-format kinetics file."""

    def __init__(self, freq_out: TextIO, kinetics_out: TextIO | None = None) -> None:
        self.freq = csv.writer(freq_out, lineterminator="\n")
        self.freq.writerow(("a", "b", "total"))
        self.kin = None
        if kinetics_out is not None:
            self.kin = csv.writer(kinetics_out, lineterminator="\n")
            self.kin.writerow(("a", "b", "year", "count"))
        self.pairs = 0
        self.series = 0

    def add(self, freq: PairFrequency, series: YearSeries | None) -> None:
        a, b = freq.pair.a, freq.pair.b
        self.freq.writerow((a, b, freq.total))
        self.pairs += 1
        if series is not None and self.kin is not None:
            self.kin.writerows((a, b, y, c) for y, c in zip(series.years, series.counts))
            self.series += 1


def write_wide_kinetics(
    items: Iterable[tuple[CoCitedPair, YearSeries]], out: TextIO
) -> None:
    """One row per pair: ``a,b,start_year,c0 c1 ...`` (space-joined counts)."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("a", "b", "start_year", "counts"))
    for pair, series in items:
        writer.writerow((pair.a, pair.b, series.start_year, " ".join(map(str, series.counts))))


def read_kinetics(stream: TextIO) -> Iterator[tuple[str, str, int, int]]:
    reader = csv.reader(stream)
    next(reader, None)
    for a, b, year, count in reader:
        yield a, b, int(year), int(count)


def read_frequencies(stream: TextIO) -> Iterator[tuple[str, str, int]]:
    reader = csv.reader(stream)
    next(reader, None)
    for a, b, total in reader:
        yield a, b, int(total)


def use_cpu_count() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1
