"""Weighted undirected graph model, edge-list ingestion and local primitives.

Nodes carry opaque string labels and are re-indexed densely in order of first
appearance. Edges are stored once per unordered pair. An edge may be present
as topology while its weight is unknown; this is how a training view hides
held-out weights (see :mod:`tiecast.partition`).
"""
from __future__ import annotations

import enum
import io
import math
import operator
from dataclasses import dataclass
from types import MappingProxyType
from typing import IO, Iterable, Iterator, Mapping, Sequence

from .errors import DomainError, ParseError

__all__ = [
    "WeightSpace",
    "MergeRule",
    "NormalizeOptions",
    "WeightedGraph",
    "GraphStats",
    "HiddenWeightError",
    "load_edge_list",
    "read_edge_list",
    "write_edge_list",
    "map_weights",
    "neighbors",
    "common_neighbors",
    "strength",
    "stats",
]

COMMENT_PREFIXES = ("#", "%")


class WeightSpace(str, enum.Enum):
    RAW = "raw"
    MAPPED = "mapped"


class MergeRule(str, enum.Enum):
    SUM = "sum"
    MAX = "max"


@dataclass(frozen=True)
class NormalizeOptions:
    """How repeated node pairs are combined while loading."""

    merge: MergeRule = MergeRule.SUM


class HiddenWeightError(DomainError, LookupError):
    """Raised when reading the weight of an edge whose weight is withheld."""


class WeightedGraph:
    """Immutable undirected graph with strictly positive edge weights.

    Parameters
    ----------
    labels : sequence of str
        Node labels; position ``i`` is the label of node ``i``.
    edges : iterable of (u, v, w)
        Observed edges as dense indices with their weight.
    weight_space : WeightSpace
        Whether ``w`` is a raw weight or has been passed through
        :func:`map_weights`.
    hidden : iterable of (u, v)
        Edges that exist topologically but whose weight is unknown.
    """

    __slots__ = ("_labels", "_index", "_adj", "_space", "_strength", "_n_edges", "_n_hidden")

    def __init__(
        self,
        labels: Sequence[str],
        edges: Iterable[tuple[int, int, float]],
        weight_space: WeightSpace = WeightSpace.RAW,
        hidden: Iterable[tuple[int, int]] = (),
    ):
        self._labels = tuple(str(lab) for lab in labels)
        self._index = {lab: i for i, lab in enumerate(self._labels)}
        if len(self._index) != len(self._labels):
            raise DomainError("node labels must be unique")
        self._space = WeightSpace(weight_space)
        n = len(self._labels)
        adj: list[dict[int, float | None]] = [{} for _ in range(n)]
        n_edges = 0
        for u, v, w in edges:
            u, v, w = int(u), int(v), float(w)
            self._check_pair(u, v, n, adj)
            if not (w > 0 and math.isfinite(w)):
                raise DomainError(f"edge ({self._labels[u]}, {self._labels[v]}) has non-positive weight {w!r}")
            if self._space is WeightSpace.MAPPED and not w < 1:
                raise DomainError(f"mapped weight {w!r} outside (0, 1)")
            adj[u][v] = w
            adj[v][u] = w
            n_edges += 1
        n_hidden = 0
        for u, v in hidden:
            u, v = int(u), int(v)
            self._check_pair(u, v, n, adj)
            adj[u][v] = None
            adj[v][u] = None
            n_hidden += 1
        self._adj = tuple(adj)
        self._strength = tuple(math.fsum(w for w in nbrs.values() if w is not None) for nbrs in adj)
        self._n_edges = n_edges + n_hidden
        self._n_hidden = n_hidden

    @staticmethod
    def _check_pair(u, v, n, adj):
        if not (0 <= u < n and 0 <= v < n):
            raise DomainError(f"edge ({u}, {v}) references an unknown node index")
        if u == v:
            raise DomainError(f"self-loop on node index {u}")
        if v in adj[u]:
            raise DomainError(f"duplicate edge ({u}, {v})")

    # -- identity -------------------------------------------------------
    @property
    def weight_space(self) -> WeightSpace:
        return self._space

    @property
    def labels(self) -> tuple[str, ...]:
        return self._labels

    def label(self, i: int) -> str:
        self.check_node(i)
        return self._labels[i]

    def index_of(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise DomainError(f"unknown node label {label!r}") from None

    def number_of_nodes(self) -> int:
        return len(self._labels)

    def number_of_edges(self) -> int:
        """Topological edge count, including edges with hidden weight."""
        return self._n_edges

    def number_of_hidden(self) -> int:
        return self._n_hidden

    def check_node(self, x: int) -> None:
        try:
            i = operator.index(x)
        except TypeError:
            raise DomainError(f"node index must be an integer, got {x!r}") from None
        if not 0 <= i < len(self._labels):
            raise DomainError(f"unknown node index {x!r}")

    # -- edges ------------------------------------------------------------
    def edges(self) -> list[tuple[int, int, float]]:
        """Observed edges ``(u, v, w)`` with ``u < v``, sorted by index."""
        return [
            (u, v, w)
            for u, nbrs in enumerate(self._adj)
            for v, w in sorted(nbrs.items())
            if u < v and w is not None
        ]

    def hidden_edges(self) -> list[tuple[int, int]]:
        return [
            (u, v)
            for u, nbrs in enumerate(self._adj)
            for v, w in sorted(nbrs.items())
            if u < v and w is None
        ]

    def pairs(self) -> list[tuple[int, int]]:
        """Every topological edge ``(u, v)`` with ``u < v``, sorted."""
        return [(u, v) for u, nbrs in enumerate(self._adj) for v in sorted(nbrs) if u < v]

    def has_edge(self, u: int, v: int) -> bool:
        self.check_node(u)
        self.check_node(v)
        return v in self._adj[u]

    def is_hidden(self, u: int, v: int) -> bool:
        return self.has_edge(u, v) and self._adj[u][v] is None

    def weight(self, u: int, v: int) -> float:
        if not self.has_edge(u, v):
            raise DomainError(f"no edge between {u} and {v}")
        w = self._adj[u][v]
        if w is None:
            raise HiddenWeightError(f"weight of edge ({u}, {v}) is withheld")
        return w

    def incident(self, x: int) -> Mapping[int, float | None]:
        """Read-only ``neighbor -> weight`` map; ``None`` marks a withheld weight."""
        self.check_node(x)
        return MappingProxyType(self._adj[x])

    def neighbors(self, x: int) -> frozenset[int]:
        self.check_node(x)
        return frozenset(self._adj[x])

    def strength(self, z: int) -> float:
        """Sum of observed incident weights."""
        self.check_node(z)
        return self._strength[z]

    def __repr__(self):
        return (
            f"WeightedGraph(nodes={self.number_of_nodes()}, edges={self.number_of_edges()}, "
            f"hidden={self._n_hidden}, space={self._space.value})"
        )


@dataclass(frozen=True)
class GraphStats:
    node_count: int
    edge_count: int
    mean_weight: float
    max_weight: float
    min_weight: float


def neighbors(g: WeightedGraph, x: int) -> frozenset[int]:
    return g.neighbors(x)


def common_neighbors(g: WeightedGraph, x: int, y: int) -> frozenset[int]:
    """Nodes adjacent to both ``x`` and ``y`` (never ``x`` or ``y`` themselves)."""
    a, b = g.incident(x), g.incident(y)
    if len(a) > len(b):
        a, b = b, a
    return frozenset(z for z in a if z in b and z != x and z != y)


def strength(g: WeightedGraph, z: int) -> float:
    return g.strength(z)


def stats(g: WeightedGraph) -> GraphStats:
    weights = [w for _, _, w in g.edges()]
    if not weights:
        raise DomainError("graph has no observed weights")
    lo, hi = min(weights), max(weights)
    mean = min(max(math.fsum(weights) / len(weights), lo), hi)
    return GraphStats(g.number_of_nodes(), g.number_of_edges(), mean, hi, lo)


def map_weights(g: WeightedGraph) -> WeightedGraph:
    """Send every weight ``w`` to ``exp(-1/w)``, a monotone map onto (0, 1)."""
    if g.weight_space is WeightSpace.MAPPED:
        raise DomainError("weights are already mapped")
    mapped = []
    for u, v, w in g.edges():
        m = math.exp(-1.0 / w)
        if not 0.0 < m < 1.0:
            raise DomainError(
                f"weight {w!r} on ({g.labels[u]}, {g.labels[v]}) leaves (0, 1) after mapping in double precision"
            )
        mapped.append((u, v, m))
    return WeightedGraph(g.labels, mapped, WeightSpace.MAPPED, hidden=g.hidden_edges())


# -- text I/O ---------------------------------------------------------------

def _iter_lines(source) -> Iterator[str]:
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    if isinstance(source, str):
        source = io.StringIO(source)
    for line in source:
        if isinstance(line, (bytes, bytearray)):
            line = line.decode("utf-8")
        yield line


def load_edge_list(source: IO | Iterable[str] | bytes | str, options: NormalizeOptions | None = None,
                   name: str | None = None) -> WeightedGraph:
    """Parse a whitespace-separated edge list into a normalized raw-weight graph.

    Each non-comment line is ``src dst [weight]``; the weight defaults to 1.
    Repeated pairs, in either orientation, are merged by ``options.merge``.
    Self-loops are dropped.
    """
    options = options or NormalizeOptions()
    merge = MergeRule(options.merge)
    index: dict[str, int] = {}
    labels: list[str] = []
    acc: dict[tuple[int, int], float] = {}

    def node(label):
        i = index.get(label)
        if i is None:
            i = index[label] = len(labels)
            labels.append(label)
        return i

    for lineno, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith(COMMENT_PREFIXES):
            continue
        fields = line.split()
        if len(fields) not in (2, 3):
            raise ParseError(f"expected 2 or 3 fields, got {len(fields)}", lineno, name)
        if len(fields) == 3:
            try:
                w = float(fields[2])
            except ValueError:
                raise ParseError(f"non-numeric weight {fields[2]!r}", lineno, name) from None
            if math.isnan(w) or math.isinf(w):
                raise ParseError(f"non-finite weight {fields[2]!r}", lineno, name)
        else:
            w = 1.0
        if w <= 0:
            raise DomainError(f"{name + ':' if name else ''}{lineno}: weight must be positive, got {w!r}")
        a, b = fields[0], fields[1]
        u, v = node(a), node(b)
        if u == v:
            continue
        key = (u, v) if u < v else (v, u)
        if key in acc:
            acc[key] = acc[key] + w if merge is MergeRule.SUM else max(acc[key], w)
        else:
            acc[key] = w

    if not acc:
        raise DomainError(f"{name or 'edge list'} contains no edges")
    # Nodes that only appeared on self-loops have no edges; keep them out of the graph.
    used = sorted({i for pair in acc for i in pair})
    if len(used) != len(labels):
        remap = {old: new for new, old in enumerate(used)}
        labels = [labels[i] for i in used]
        acc = {(remap[u], remap[v]): w for (u, v), w in acc.items()}
    return WeightedGraph(labels, ((u, v, w) for (u, v), w in sorted(acc.items())), WeightSpace.RAW)


def read_edge_list(path, options: NormalizeOptions | None = None) -> WeightedGraph:
    with open(path, "rb") as fh:
        return load_edge_list(fh, options, name=str(path))


def format_weight(w: float) -> str:
    return format(w, ".17g")


def write_edge_list(g: WeightedGraph, dest: IO[str]) -> None:
    """Canonical serialization: one ``label_u label_v weight`` line per observed
    edge, endpoints in label order, lines sorted by label pair."""
    rows = []
    for u, v, w in g.edges():
        a, b = g.labels[u], g.labels[v]
        if b < a:
            a, b = b, a
        rows.append((a, b, w))
    rows.sort(key=lambda r: (r[0], r[1]))
    for a, b, w in rows:
        dest.write(f"{a} {b} {format_weight(w)}\n")
