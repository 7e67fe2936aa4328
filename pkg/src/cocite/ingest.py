"""Nodelist/edgelist parsing, reference curation and source-article selection."""

from __future__ import annotations

import csv
import logging
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, TextIO

from cocite.errors import ConfigError, IntegrityError, ParseError

logger = logging.getLogger(__name__)

NODELIST_HEADER = ("id", "year", "type", "subjects")
EDGELIST_HEADER = ("citing_id", "cited_id")
SUBJECT_SEP = "|"


@dataclass(frozen=True)
class Publication:
    id: str
    year: int | None
    pub_type: str
    subject_codes: frozenset[str] = frozenset()


class RawEdge(NamedTuple):
    citing: str
    cited: str
    resolved: bool = True


@dataclass
class CurationReport:
    dropped_unresolved_refs: int = 0
    dropped_self_citations: int = 0
    dropped_missing_year: int = 0
    dropped_future_refs: int = 0
    dropped_duplicates: int = 0
    retained_edges: int = 0

    @property
    def input_edges(self) -> int:
        return (
            self.dropped_unresolved_refs
            + self.dropped_self_citations
            + self.dropped_missing_year
            + self.dropped_future_refs
            + self.dropped_duplicates
            + self.retained_edges
        )

    def rows(self) -> list[tuple[str, int]]:
        return [
            ("input_edges", self.input_edges),
            ("dropped_unresolved_refs", self.dropped_unresolved_refs),
            ("dropped_self_citations", self.dropped_self_citations),
            ("dropped_missing_year", self.dropped_missing_year),
            ("dropped_future_refs", self.dropped_future_refs),
            ("dropped_duplicates", self.dropped_duplicates),
            ("retained_edges", self.retained_edges),
        ]

    def write_csv(self, out: TextIO) -> None:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(("metric", "count"))
        writer.writerows(self.rows())


@dataclass(frozen=True)
class CitationGraph:
    """Curated citation graph. Treat as immutable once built."""

    catalog: Mapping[str, Publication]
    out_edges: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def refs(self, pub_id: str) -> frozenset[str]:
        return self.out_edges.get(pub_id, frozenset())

    def edges(self) -> Iterator[RawEdge]:
        for citing in sorted(self.out_edges):
            for cited in sorted(self.out_edges[citing]):
                yield RawEdge(citing, cited)

    @property
    def edge_count(self) -> int:
        return sum(len(refs) for refs in self.out_edges.values())

    @cached_property
    def cited_by(self) -> dict[str, frozenset[str]]:
        incoming: dict[str, set[str]] = {}
        for citing, refs in self.out_edges.items():
            for cited in refs:
                incoming.setdefault(cited, set()).add(citing)
        return {k: frozenset(v) for k, v in incoming.items()}

    def citation_count(self, pub_id: str) -> int:
        return len(self.cited_by.get(pub_id, ()))


def _check_id(value: str, line: int) -> str:
    if not value:
        raise ParseError("empty publication id", line)
    if any(ord(ch) < 0x20 for ch in value):
        raise ParseError(f"control character in id {value!r}", line)
    return value


def _check_header(row: list[str] | None, expected: tuple[str, ...]) -> None:
    if row is None:
        raise ParseError(f"missing header, expected {','.join(expected)}", 1)
    got = tuple(col.strip() for col in row)
    if got != expected:
        raise ParseError(
            f"bad header {','.join(got)!r}, expected {','.join(expected)!r}", 1
        )


def parse_subjects(text: str) -> frozenset[str]:
    return frozenset(code.strip() for code in text.split(SUBJECT_SEP) if code.strip())


def parse_nodelist(stream: TextIO) -> dict[str, Publication]:
    """Read an ``id,year,type,subjects`` file into a catalog keyed by id.

    An empty ``year`` field means the year is unknown. Publications with
    unknown years stay in the catalog; curation drops the edges that touch
    them.
    """
    reader = csv.reader(stream)
    _check_header(next(reader, None), NODELIST_HEADER)
    catalog: dict[str, Publication] = {}
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(NODELIST_HEADER):
            raise ParseError(f"expected 4 columns, got {len(row)}", line)
        pub_id, year_text, pub_type, subjects = row
        pub_id = _check_id(pub_id, line)
        year_text = year_text.strip()
        year: int | None = None
        if year_text:
            try:
                year = int(year_text)
            except ValueError:
                raise ParseError(f"non-integer year {year_text!r}", line) from None
            if year <= 0:
                raise ParseError(f"year must be positive, got {year}", line)
        if pub_id in catalog:
            raise IntegrityError(f"duplicate publication id {pub_id!r} (line {line})")
        catalog[pub_id] = Publication(pub_id, year, pub_type.strip(), parse_subjects(subjects))
    logger.info("parsed %d publications", len(catalog))
    return catalog


def parse_edgelist(stream: TextIO, catalog: Mapping[str, Publication]) -> list[RawEdge]:
    """Read a ``citing_id,cited_id`` file, keeping input order.

    Edges whose endpoints are missing from ``catalog`` are kept with
    ``resolved=False`` so :func:`curate` can count them.
    """
    reader = csv.reader(stream)
    _check_header(next(reader, None), EDGELIST_HEADER)
    edges: list[RawEdge] = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 columns, got {len(row)}", line)
        citing = _check_id(row[0], line)
        cited = _check_id(row[1], line)
        # share the catalog's string objects; large edgelists repeat ids a lot
        pub_a = catalog.get(citing)
        pub_b = catalog.get(cited)
        if pub_a is not None:
            citing = pub_a.id
        if pub_b is not None:
            cited = pub_b.id
        edges.append(RawEdge(citing, cited, pub_a is not None and pub_b is not None))
    logger.info("parsed %d raw edges", len(edges))
    return edges


def curate(
    raw_edges: Iterable[RawEdge | tuple[str, str]], catalog: Mapping[str, Publication]
) -> tuple[CitationGraph, CurationReport]:
    """Filter raw edges into a :class:`CitationGraph`.

    Each edge lands in exactly one bucket, checked in this order:
    unresolved endpoint, self-citation, missing year on either side, cited
    year later than citing year, repeat of an already retained edge.
    """
    report = CurationReport()
    out: dict[str, set[str]] = {}
    for edge in raw_edges:
        citing, cited = edge[0], edge[1]
        src = catalog.get(citing)
        dst = catalog.get(cited)
        if src is None or dst is None:
            report.dropped_unresolved_refs += 1
        elif citing == cited:
            report.dropped_self_citations += 1
        elif src.year is None or dst.year is None:
            report.dropped_missing_year += 1
        elif dst.year > src.year:
            report.dropped_future_refs += 1
        else:
            refs = out.setdefault(src.id, set())
            if dst.id in refs:
                report.dropped_duplicates += 1
            else:
                refs.add(dst.id)
                report.retained_edges += 1
    graph = CitationGraph(dict(catalog), {k: frozenset(v) for k, v in out.items()})
    logger.info(
        "curation kept %d of %d edges", report.retained_edges, report.input_edges
    )
    return graph, report


def select_source_articles(
    graph: CitationGraph,
    window: tuple[int, int] = (1985, 1995),
    min_refs: int = 5,
    pub_type: str = "article",
) -> set[str]:
    """Ids of publications of ``pub_type`` inside ``window`` (inclusive)
    with at least ``min_refs`` curated references."""
    start, end = window
    if start > end:
        raise ConfigError(f"empty selection window {start}-{end}")
    if min_refs < 2:
        raise ConfigError(f"min_refs must be at least 2, got {min_refs}")
    selected = set()
    for pub_id, refs in graph.out_edges.items():
        if len(refs) < min_refs:
            continue
        pub = graph.catalog[pub_id]
        if pub.pub_type == pub_type and pub.year is not None and start <= pub.year <= end:
            selected.add(pub_id)
    return selected


def load_graph(nodelist: str, edgelist: str) -> tuple[CitationGraph, CurationReport]:
    with open(nodelist, newline="", encoding="utf-8") as fh:
        catalog = parse_nodelist(fh)
    with open(edgelist, newline="", encoding="utf-8") as fh:
        raw = parse_edgelist(fh, catalog)
    return curate(raw, catalog)
