"""Readers for the public network datasets used in tie-strength benchmarks.

The files are not redistributed; fetch them from the listed sources and
point the CLI (or :func:`read_graph`) at the downloaded file.
"""
from __future__ import annotations

import io
import os
from collections import deque
from dataclasses import dataclass

from .errors import DomainError, ParseError
from .graph import NormalizeOptions, WeightedGraph, load_edge_list, read_edge_list

__all__ = ["DatasetInfo", "DATASETS", "read_graph", "read_konect", "read_gml", "largest_component", "find_dataset"]


@dataclass(frozen=True)
class DatasetInfo:
    name: str
    url: str
    fmt: str
    giant_component: bool
    note: str


DATASETS = {
    "netscience": DatasetInfo(
        "netscience", "http://www-personal.umich.edu/~mejn/netdata/netscience.zip", "gml", True,
        "Coauthorship network of network scientists; edge 'value' is the collaboration weight. "
        "Use the largest component (575 nodes, 1028 edges).",
    ),
    "ucsocial": DatasetInfo(
        "ucsocial", "http://konect.cc/networks/opsahl-ucsocial/", "konect", False,
        "UC Irvine online community messages; directed, one row per message.",
    ),
    "celegans-metabolic": DatasetInfo(
        "celegans-metabolic", "https://toreopsahl.com/datasets/#celegans", "edgelist", False,
        "Metabolic network of C. elegans; weights count interactions.",
    ),
    "polblogs": DatasetInfo(
        "polblogs", "http://www-personal.umich.edu/~mejn/netdata/polblogs.zip", "gml", False,
        "Political blogs hyperlink network; repeated hyperlinks give the weight.",
    ),
    "celegans-neural": DatasetInfo(
        "celegans-neural", "http://www-personal.umich.edu/~mejn/netdata/celegansneural.zip", "gml", False,
        "Neural network of C. elegans; directed and weighted.",
    ),
    "wiki-talk-de": DatasetInfo(
        "wiki-talk-de", "http://konect.cc/networks/wiki_talk_de/", "konect", False,
        "German Wikipedia discussion replies; directed, one row per reply.",
    ),
}


def read_konect(path, options: NormalizeOptions | None = None) -> WeightedGraph:
    """KONECT ``out.*`` files: ``%`` comments, then ``src dst [weight [time]]``.

    Columns beyond the weight are ignored.
    """
    buf = io.StringIO()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith(("%", "#")):
                buf.write("\n")
                continue
            fields = s.split()
            if len(fields) < 2:
                raise ParseError(f"expected at least 2 fields, got {len(fields)}", lineno, str(path))
            buf.write(" ".join(fields[:3]) + "\n")
    buf.seek(0)
    return load_edge_list(buf, options, name=str(path))


def read_gml(path, weight_attr: str = "value", options: NormalizeOptions | None = None) -> WeightedGraph:
    """GML file with an optional numeric edge attribute used as weight."""
    import networkx as nx

    try:
        nxg = nx.read_gml(path, label="id")
    except nx.NetworkXError as exc:
        # Some distributions repeat edges without declaring a multigraph.
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
            nxg = nx.parse_gml(text.replace("graph\n[", "graph\n[\n  multigraph 1", 1), label="id")
        except Exception:
            raise ParseError(str(exc), None, str(path)) from None
    lines = []
    for u, v, data in nxg.edges(data=True):
        w = data.get(weight_attr, 1.0)
        lines.append(f"{u} {v} {float(w)!r}")
    return load_edge_list(lines, options, name=str(path))


def largest_component(g: WeightedGraph) -> WeightedGraph:
    """Induced subgraph on the largest connected component (ties: the one
    containing the lowest node index)."""
    n = g.number_of_nodes()
    seen = [False] * n
    best: list[int] = []
    for start in range(n):
        if seen[start]:
            continue
        comp = [start]
        seen[start] = True
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for y in g.incident(x):
                if not seen[y]:
                    seen[y] = True
                    comp.append(y)
                    queue.append(y)
        if len(comp) > len(best):
            best = comp
    keep = sorted(best)
    remap = {old: new for new, old in enumerate(keep)}
    edges = [(remap[u], remap[v], w) for u, v, w in g.edges() if u in remap]
    return WeightedGraph([g.labels[i] for i in keep], edges, g.weight_space)


def read_graph(path, fmt: str = "auto", giant_component: bool = False,
               options: NormalizeOptions | None = None) -> WeightedGraph:
    """Load a graph file; ``fmt`` is ``edgelist``, ``konect``, ``gml`` or ``auto``
    (decided by file name)."""
    path = os.fspath(path)
    if fmt == "auto":
        base = os.path.basename(path).lower()
        if base.endswith(".gml"):
            fmt = "gml"
        elif base.startswith("out."):
            fmt = "konect"
        else:
            fmt = "edgelist"
    if fmt == "gml":
        g = read_gml(path, options=options)
    elif fmt == "konect":
        g = read_konect(path, options)
    elif fmt == "edgelist":
        g = read_edge_list(path, options)
    else:
        raise DomainError(f"unknown graph format {fmt!r}")
    return largest_component(g) if giant_component else g


def find_dataset(name: str, data_dir=None):
    """Path to a locally downloaded dataset file, or ``None``.

    Looks in ``data_dir`` (default ``$TIECAST_DATA``) for a file or directory
    named after the dataset.
    """
    data_dir = data_dir or os.environ.get("TIECAST_DATA")
    if not data_dir or not os.path.isdir(data_dir):
        return None
    for entry in sorted(os.listdir(data_dir)):
        stem = entry.lower()
        if stem.startswith(name.lower()) or stem == f"out.{name.lower()}":
            full = os.path.join(data_dir, entry)
            if os.path.isdir(full):
                for inner in sorted(os.listdir(full)):
                    if inner.endswith(".gml") or inner.startswith("out.") or inner.endswith((".txt", ".edges", ".tsv")):
                        return os.path.join(full, inner)
                continue
            return full
    return None
