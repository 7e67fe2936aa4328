from __future__ import annotations

import io
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cocite import synth
from cocite.errors import ConfigError, IntegrityError, ParseError
from cocite.ingest import (
    CitationGraph,
    Publication,
    RawEdge,
    curate,
    parse_edgelist,
    parse_nodelist,
    select_source_articles,
)

from conftest import random_graph

HEADER = "id,year,type,subjects\n"


def nodes(text: str):
    return parse_nodelist(io.StringIO(HEADER + text))


def test_three_rows():
    catalog = nodes("A,1990,article,BGMB|MED\nB,1991,review,\nC,,article,PHY\n")
    assert len(catalog) == 3
    assert catalog["A"].subject_codes == {"BGMB", "MED"}
    assert catalog["B"].subject_codes == frozenset()
    assert catalog["C"].year is None


def test_duplicate_id_names_the_id():
    with pytest.raises(IntegrityError, match="'A'"):
        nodes("A,1990,article,\nA,1991,article,\n")


@pytest.mark.parametrize(
    "body, line",
    [
        ("A,1990,article\n", 2),
        ("A,1990,article,,extra\n", 2),
        ("A,1990,article,\nB,19x0,article,\n", 3),
        ("A,1990,article,\nB,-5,article,\n", 3),
    ],
)
def test_malformed_node_rows_report_line(body, line):
    with pytest.raises(ParseError) as err:
        nodes(body)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_bad_header():
    with pytest.raises(ParseError):
        parse_nodelist(io.StringIO("id,year,kind,subjects\n"))


def test_per_year_counts_match_line_recount():
    rng = random.Random(3)
    lines = [f"N{i},{rng.randint(1950, 2018)},article,MED" for i in range(1000)]
    text = HEADER + "\n".join(lines) + "\n"
    catalog = parse_nodelist(io.StringIO(text))
    recount = Counter(line.split(",")[1] for line in text.splitlines()[1:])
    got = Counter(str(p.year) for p in catalog.values())
    assert got == recount


def test_empty_edge_file():
    assert parse_edgelist(io.StringIO("citing_id,cited_id\n"), {}) == []


def test_ten_edges():
    catalog = nodes("".join(f"P{i},1990,article,\n" for i in range(11)))
    body = "".join(f"P{i},P{i + 1}\n" for i in range(10))
    edges = parse_edgelist(io.StringIO("citing_id,cited_id\n" + body), catalog)
    assert len(edges) == 10
    assert all(e.resolved for e in edges)


def test_malformed_edge_row():
    with pytest.raises(ParseError) as err:
        parse_edgelist(io.StringIO("citing_id,cited_id\nA,B\nA,B,C\n"), {})
    assert err.value.line == 3


def test_ten_thousand_edges_match_sorted_body():
    rng = random.Random(11)
    catalog = nodes("".join(f"P{i},1990,article,\n" for i in range(300)))
    body = [f"P{rng.randrange(320)},P{rng.randrange(320)}" for _ in range(10_000)]
    text = "citing_id,cited_id\n" + "\n".join(body) + "\n"
    edges = parse_edgelist(io.StringIO(text), catalog)
    assert sorted(f"{e.citing},{e.cited}" for e in edges) == sorted(text.splitlines()[1:])
    unresolved = sum(1 for line in body if any(int(x[1:]) >= 300 for x in line.split(",")))
    assert sum(1 for e in edges if not e.resolved) == unresolved


def catalog_of(**years):
    return {k: Publication(k, v, "article") for k, v in years.items()}


def test_self_citation():
    graph, report = curate([RawEdge("X", "X")], catalog_of(X=1990))
    assert report.dropped_self_citations == 1
    assert report.retained_edges == 0
    assert graph.edge_count == 0


def test_future_reference():
    _, report = curate([RawEdge("A", "B")], catalog_of(A=1990, B=1995))
    assert report.dropped_future_refs == 1


def test_missing_year_either_side():
    catalog = catalog_of(A=1990, B=None, C=1980)
    _, report = curate([RawEdge("A", "B"), RawEdge("B", "C"), RawEdge("A", "C")], catalog)
    assert report.dropped_missing_year == 2
    assert report.retained_edges == 1


def test_unresolved_takes_precedence():
    _, report = curate([RawEdge("A", "Q", False), RawEdge("Q", "Q", False)], catalog_of(A=1990))
    assert report.dropped_unresolved_refs == 2
    assert report.dropped_self_citations == 0


def test_duplicates_collapse():
    graph, report = curate([RawEdge("A", "B")] * 3, catalog_of(A=1990, B=1980))
    assert report.dropped_duplicates == 2
    assert graph.refs("A") == {"B"}


def test_planted_violations_match_generator(tmp_path):
    cfg = synth.GenConfig(seed=5, delayed=3, flash=3, ordinary=10, background_pubs=400, violations=50)
    corpus = synth.generate(cfg)
    paths = synth.write_corpus(corpus, cfg, tmp_path)
    with open(paths["nodelist"], newline="") as fh:
        catalog = parse_nodelist(fh)
    with open(paths["edgelist"], newline="") as fh:
        raw = parse_edgelist(fh, catalog)
    _, report = curate(raw, catalog)
    assert sum(corpus.violations.values()) == 50
    assert report.dropped_unresolved_refs == corpus.violations["unresolved"]
    assert report.dropped_self_citations == corpus.violations["self"]
    assert report.dropped_missing_year == corpus.violations["missing_year"]
    assert report.dropped_future_refs == corpus.violations["future"]
    assert report.dropped_duplicates == corpus.violations["duplicate"]
    assert report.input_edges == len(raw)


@pytest.mark.parametrize("seed", range(6))
def test_report_sums_and_retained_edges_are_clean(seed):
    catalog, raw = random_graph(seed, 400, 3000, violations=True)
    graph, report = curate(raw, catalog)
    assert report.input_edges == len(raw) == sum(count for _, count in report.rows()[1:])
    for citing, cited, _ in graph.edges():
        assert citing != cited
        assert graph.catalog[cited].year <= graph.catalog[citing].year


@pytest.mark.parametrize("seed", range(3))
def test_curate_is_idempotent(seed):
    catalog, raw = random_graph(seed, 300, 2000, violations=True)
    graph, _ = curate(raw, catalog)
    again, report = curate(list(graph.edges()), graph.catalog)
    assert again == graph
    assert report.retained_edges == report.input_edges


def source_graph():
    catalog = catalog_of(S=1990, OLD=1984, R=1991, **{f"r{i}": 1970 + i for i in range(50)})
    catalog["R"] = Publication("R", 1991, "review")
    out = {
        "S": frozenset(f"r{i}" for i in range(5)),
        "OLD": frozenset(f"r{i}" for i in range(50) if 1970 + i <= 1984),
        "R": frozenset(f"r{i}" for i in range(10)),
    }
    return CitationGraph(catalog, out)


def test_selection_boundaries():
    graph = source_graph()
    assert select_source_articles(graph, (1985, 1995), 5) == {"S"}
    assert select_source_articles(graph, (1985, 1995), 6) == set()
    assert "OLD" in select_source_articles(graph, (1984, 1995), 5)
    assert "R" in select_source_articles(graph, (1985, 1995), 5, "review")


def test_selection_config_errors():
    graph = source_graph()
    with pytest.raises(ConfigError):
        select_source_articles(graph, (1996, 1995), 5)
    with pytest.raises(ConfigError):
        select_source_articles(graph, (1985, 1995), 1)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 50),
    k1=st.integers(2, 12),
    k2=st.integers(2, 12),
    lo=st.integers(1975, 2000),
    width=st.integers(0, 10),
    grow=st.integers(0, 5),
)
def test_selection_monotone(seed, k1, k2, lo, width, grow):
    catalog, raw = random_graph(seed, 150, 900)
    graph, _ = curate(raw, catalog)
    k1, k2 = sorted((k1, k2))
    window = (lo, lo + width)
    assert select_source_articles(graph, window, k2) <= select_source_articles(graph, window, k1)
    wider = (lo - grow, lo + width + grow)
    assert select_source_articles(graph, window, k1) <= select_source_articles(graph, wider, k1)
