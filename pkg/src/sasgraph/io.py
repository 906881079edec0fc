"""Graph documents (JSON) and DOT export."""

from __future__ import annotations

import json

from .errors import ParseError
from .graph import Graph

FORMAT = "bipartite/1"


def graph_to_document(g: Graph, name: str | None = None, provenance: str | None = None) -> dict:
    doc = {
        "format": FORMAT,
        "left": g.left_size,
        "right": [list(lab) for lab in g.right_labels],
        "edges": [[x, u] for x, u in sorted(g.edges())],
    }
    if name is not None:
        doc["name"] = name
    if provenance is not None:
        doc["provenance"] = provenance
    return doc


def serialize_graph(g: Graph, name: str | None = None, provenance: str | None = None) -> str:
    return json.dumps(graph_to_document(g, name, provenance), sort_keys=True)


def _nat(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ParseError(f"expected a natural number, got {value!r}", where)
    return value


def document_to_graph(doc) -> Graph:
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object", "$")
    if doc.get("format") != FORMAT:
        raise ParseError(f"format must be {FORMAT!r}", "$.format")
    for key in ("left", "right", "edges"):
        if key not in doc:
            raise ParseError(f"missing field {key!r}", "$")
    left = _nat(doc["left"], "$.left")
    if left == 0:
        raise ParseError("left side is empty", "$.left")
    right = doc["right"]
    if not isinstance(right, list) or not right:
        raise ParseError("right must be a non-empty list of labels", "$.right")
    labels = []
    for i, lab in enumerate(right):
        if not isinstance(lab, list):
            raise ParseError("label must be a list of naturals", f"$.right[{i}]")
        labels.append(tuple(_nat(v, f"$.right[{i}]") for v in lab))
    if len(set(labels)) != len(labels):
        raise ParseError("duplicate right label", "$.right")
    edges = doc["edges"]
    if not isinstance(edges, list):
        raise ParseError("edges must be a list", "$.edges")
    adj = [0] * len(labels)
    for i, e in enumerate(edges):
        where = f"$.edges[{i}]"
        if not isinstance(e, list) or len(e) != 2:
            raise ParseError("edge must be a pair [x, rIndex]", where)
        x, u = _nat(e[0], where), _nat(e[1], where)
        if x >= left or u >= len(labels):
            raise ParseError(f"edge [{x}, {u}] out of range", where)
        if adj[u] >> x & 1:
            raise ParseError(f"duplicate edge [{x}, {u}]", where)
        adj[u] |= 1 << x
    return Graph(left, tuple(labels), tuple(adj))


def parse_graph(text: str) -> Graph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    return document_to_graph(doc)


def _label_name(lab) -> str:
    return "R" + "_".join(map(str, lab)) if lab else "R"


def export_dot(g: Graph) -> str:
    """Undirected DOT text: left nodes ``L0..``, right nodes named by labels."""
    lines = ["graph G {", "  rankdir=LR;"]
    lines += [f'  "L{x}" [shape=circle];' for x in range(g.left_size)]
    lines += [f'  "{_label_name(lab)}" [shape=box];' for lab in g.right_labels]
    for x, u in sorted(g.edges()):
        lines.append(f'  "L{x}" -- "{_label_name(g.right_labels[u])}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
