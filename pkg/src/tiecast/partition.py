"""Seeded leave-p%-out partitions that withhold weights but keep topology."""
from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .errors import DomainError, ParseError
from .graph import WeightedGraph, WeightSpace, format_weight

__all__ = [
    "Partition",
    "split",
    "make_partitions",
    "held_out_count",
    "write_manifest",
    "read_manifest",
]

# numpy's PCG64 bit generator; fixed here so partitions reproduce across platforms.
RNG_ALGORITHM = "numpy.random.PCG64"


@dataclass(frozen=True)
class Partition:
    """A training view plus the held-out ``(u, v, true_weight)`` records.

    ``train`` contains every edge of the source graph, but the test edges are
    present only as topology: reading their weight raises
    :class:`~tiecast.graph.HiddenWeightError`.
    """

    train: WeightedGraph
    test: tuple[tuple[int, int, float], ...]
    seed: int
    fraction: float

    @property
    def test_pairs(self) -> list[tuple[int, int]]:
        return [(u, v) for u, v, _ in self.test]

    @property
    def test_weights(self) -> np.ndarray:
        return np.array([w for _, _, w in self.test], dtype=float)

    @property
    def weight_space(self) -> WeightSpace:
        return self.train.weight_space

    def restore(self) -> WeightedGraph:
        """Put the held-out weights back; the result equals the source graph."""
        return WeightedGraph(
            self.train.labels, self.train.edges() + list(self.test), self.train.weight_space
        )

    def remap(self, graph: WeightedGraph) -> "Partition":
        """The same held-out edge set over ``graph`` (e.g. its mapped twin)."""
        return _build(graph, self.test_pairs, self.seed, self.fraction)


def held_out_count(n_edges: int, fraction: float) -> int:
    # Round half away from zero rather than Python's banker's rounding.
    return int(np.floor(fraction * n_edges + 0.5))


def _build(g: WeightedGraph, pairs, seed, fraction) -> Partition:
    held = set(pairs)
    kept, test = [], []
    for u, v, w in g.edges():
        if (u, v) in held:
            test.append((u, v, w))
        else:
            kept.append((u, v, w))
    if len(test) != len(held):
        raise DomainError("held-out pairs must be observed edges of the graph")
    train = WeightedGraph(g.labels, kept, g.weight_space, hidden=[(u, v) for u, v, _ in test])
    return Partition(train, tuple(test), int(seed), float(fraction))


def split(g: WeightedGraph, fraction: float, seed: int) -> Partition:
    """Hold out ``round(fraction * |E|)`` uniformly sampled edges."""
    if not 0.0 < fraction < 1.0:
        raise DomainError(f"fraction must lie in (0, 1), got {fraction!r}")
    if g.number_of_hidden():
        raise DomainError("cannot split a graph that already withholds weights")
    edges = g.edges()
    if len(edges) < 2:
        raise DomainError("need at least two edges to split")
    n_test = held_out_count(len(edges), fraction)
    if n_test == 0 or n_test == len(edges):
        raise DomainError(
            f"fraction {fraction} of {len(edges)} edges leaves {'no test' if n_test == 0 else 'no training'} edges"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    chosen = np.sort(rng.choice(len(edges), size=n_test, replace=False))
    return _build(g, [(edges[i][0], edges[i][1]) for i in chosen], seed, fraction)


def make_partitions(g: WeightedGraph, fraction: float, count: int, base_seed: int = 0) -> list[Partition]:
    """``count`` partitions seeded ``base_seed, base_seed + 1, ...``."""
    if count < 1:
        raise DomainError(f"partition count must be >= 1, got {count}")
    return [split(g, fraction, base_seed + j) for j in range(count)]


# -- manifest files ---------------------------------------------------------

def write_manifest(p: Partition, dest: IO[str]) -> None:
    """Header with seed/fraction, then one ``label_u label_v weight`` line per
    test edge in index order."""
    g = p.train
    dest.write(f"# seed: {p.seed}\n")
    dest.write(f"# fraction: {format_weight(p.fraction)}\n")
    dest.write(f"# rng: {RNG_ALGORITHM}\n")
    dest.write(f"# weight_space: {g.weight_space.value}\n")
    dest.write(f"# test_edges: {len(p.test)}\n")
    for u, v, w in p.test:
        dest.write(f"{g.labels[u]} {g.labels[v]} {format_weight(w)}\n")


def read_manifest(source: IO[str], g: WeightedGraph, name: str | None = None) -> Partition:
    """Rebuild a partition of ``g`` from a manifest. Weights are taken from
    ``g`` (whatever its space); the manifest only selects the edges."""
    header: dict[str, str] = {}
    pairs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep:
                header[key.strip()] = value.strip()
            continue
        fields = line.split()
        if len(fields) != 3:
            raise ParseError(f"expected 'u v w', got {len(fields)} fields", lineno, name)
        try:
            u, v = g.index_of(fields[0]), g.index_of(fields[1])
        except DomainError as exc:
            raise ParseError(str(exc), lineno, name) from None
        if not g.has_edge(u, v):
            raise ParseError(f"({fields[0]}, {fields[1]}) is not an edge of the graph", lineno, name)
        pairs.append((u, v) if u < v else (v, u))
    try:
        seed = int(header["seed"])
        fraction = float(header["fraction"])
    except (KeyError, ValueError):
        raise ParseError("manifest header must define 'seed' and 'fraction'", None, name) from None
    return _build(g, pairs, seed, fraction)
