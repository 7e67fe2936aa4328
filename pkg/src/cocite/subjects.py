"""Subject-area co-occurrence graph of a detected pair cohort."""

from __future__ import annotations

import csv
import io
import xml.etree.ElementTree as ET
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from itertools import product
from typing import TextIO

from cocite.errors import ConfigError, ContractError, ParseError
from cocite.ingest import Publication, parse_subjects

UNKNOWN = "UNK"


@dataclass
class SubjectGraph:
    nodes: Counter = field(default_factory=Counter)
    edges: Counter = field(default_factory=Counter)  # key: (x, y) with x <= y
    unknown_articles: int = 0


def subject_map(
    catalog: Mapping[str, Publication], overrides: Mapping[str, frozenset[str]] | None = None
) -> dict[str, frozenset[str]]:
    codes = {pub_id: pub.subject_codes for pub_id, pub in catalog.items()}
    if overrides:
        codes.update(overrides)
    return codes


def read_subject_overrides(stream: TextIO) -> dict[str, frozenset[str]]:
    """Parse an ``id,subjects`` file (subjects pipe-separated)."""
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["id", "subjects"]:
        raise ParseError("subject override file needs header id,subjects", 1)
    out = {}
    for row in reader:
        if not row:
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 columns, got {len(row)}", reader.line_num)
        out[row[0]] = parse_subjects(row[1])
    return out


def build_subject_graph(
    pairs: Iterable[tuple[str, str]], codes: Mapping[str, frozenset[str]]
) -> SubjectGraph:
    """Node weight: distinct cohort articles with the code. Edge weight:
    one increment per pair per (code of a, code of b) combination."""
    graph = SubjectGraph()
    articles: set[str] = set()
    for a, b in pairs:
        member_codes = []
        for member in (a, b):
            if member not in codes:
                raise ContractError(f"pair member {member!r} is not in the catalog")
            member_codes.append(sorted(codes[member]) or [UNKNOWN])
            if member not in articles:
                articles.add(member)
                if not codes[member]:
                    graph.unknown_articles += 1
                graph.nodes.update(member_codes[-1])
        for x, y in product(*member_codes):
            graph.edges[(x, y) if x <= y else (y, x)] += 1
    return graph


def _dot_id(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(graph: SubjectGraph) -> str:
    lines = ["graph subjects {"]
    for code in sorted(graph.nodes):
        lines.append(f"  {_dot_id(code)} [weight={graph.nodes[code]}];")
    for x, y in sorted(graph.edges):
        lines.append(f"  {_dot_id(x)} -- {_dot_id(y)} [weight={graph.edges[(x, y)]}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"


def to_graphml(graph: SubjectGraph) -> str:
    ET.register_namespace("", GRAPHML_NS)
    root = ET.Element(f"{{{GRAPHML_NS}}}graphml")
    for key_id, target in (("nw", "node"), ("ew", "edge")):
        ET.SubElement(
            root,
            f"{{{GRAPHML_NS}}}key",
            {"id": key_id, "for": target, "attr.name": "weight", "attr.type": "int"},
        )
    g = ET.SubElement(root, f"{{{GRAPHML_NS}}}graph", {"id": "subjects", "edgedefault": "undirected"})
    for code in sorted(graph.nodes):
        node = ET.SubElement(g, f"{{{GRAPHML_NS}}}node", {"id": code})
        ET.SubElement(node, f"{{{GRAPHML_NS}}}data", {"key": "nw"}).text = str(graph.nodes[code])
    for n, (x, y) in enumerate(sorted(graph.edges)):
        edge = ET.SubElement(
            g, f"{{{GRAPHML_NS}}}edge", {"id": f"e{n}", "source": x, "target": y}
        )
        ET.SubElement(edge, f"{{{GRAPHML_NS}}}data", {"key": "ew"}).text = str(graph.edges[(x, y)])
    ET.indent(root)
    buf = io.StringIO()
    ET.ElementTree(root).write(buf, encoding="unicode", xml_declaration=True)
    return buf.getvalue() + "\n"


def export_graph(graph: SubjectGraph, fmt: str) -> str:
    if not graph.nodes:
        raise ContractError("cannot export an empty subject graph")
    if fmt == "dot":
        return to_dot(graph)
    if fmt == "graphml":
        return to_graphml(graph)
    raise ConfigError(f"unsupported graph format {fmt!r} (expected dot or graphml)")
