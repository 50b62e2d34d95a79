import io

import numpy as np
import pytest

from tiecast.errors import DomainError
from tiecast.graph import HiddenWeightError, WeightedGraph, WeightSpace
from tiecast.partition import (
    held_out_count,
    make_partitions,
    read_manifest,
    split,
    write_manifest,
)

from conftest import random_graph


def path_graph(m, space=WeightSpace.RAW):
    return WeightedGraph([str(i) for i in range(m + 1)], [(i, i + 1, 1.0 + i) for i in range(m)], space)


def test_ten_edges_hold_out_one():
    p = split(path_graph(10), 0.1, seed=3)
    assert len(p.test) == 1
    assert len(p.train.edges()) == 9
    assert p.train.number_of_edges() == 10


def test_rounding_is_half_up():
    assert held_out_count(25, 0.1) == 3
    assert held_out_count(15, 0.1) == 2
    assert held_out_count(14, 0.1) == 1


def test_same_seed_same_partition(rng):
    g = random_graph(rng, n=25, p=0.4)
    a, b = split(g, 0.1, 7), split(g, 0.1, 7)
    assert a.test == b.test
    assert a.train.edges() == b.train.edges()


def test_degenerate_fractions_rejected():
    with pytest.raises(DomainError):
        split(path_graph(4), 0.1, 0)  # rounds to zero test edges
    with pytest.raises(DomainError):
        split(path_graph(2), 0.9, 0)  # rounds to all edges
    with pytest.raises(DomainError):
        split(path_graph(10), 1.5, 0)


def test_topology_retained_weights_hidden(rng):
    g = random_graph(rng, n=20, p=0.4)
    p = split(g, 0.2, 11)
    assert p.train.pairs() == g.pairs()
    for u, v, w in p.test:
        assert p.train.has_edge(u, v) and p.train.is_hidden(u, v)
        assert g.weight(u, v) == w
        with pytest.raises(HiddenWeightError):
            p.train.weight(u, v)
        with pytest.raises(HiddenWeightError):
            p.train.weight(v, u)


def test_train_and_test_partition_the_edges(rng):
    g = random_graph(rng, n=20, p=0.4)
    p = split(g, 0.1, 5)
    train = {(u, v) for u, v, _ in p.train.edges()}
    test = set(p.test_pairs)
    assert not train & test
    assert train | test == {(u, v) for u, v, _ in g.edges()}
    assert p.restore().edges() == g.edges()


def test_resplitting_a_view_is_rejected(rng):
    p = split(random_graph(rng, n=20, p=0.4), 0.1, 0)
    with pytest.raises(DomainError):
        split(p.train, 0.1, 1)


def test_uniform_holdout_frequency():
    g = path_graph(20)
    counts = np.zeros(20)
    for seed in range(1000):
        for u, _ in split(g, 0.1, seed).test_pairs:
            counts[u] += 1
    freq = counts / 1000
    assert np.all(np.abs(freq - 0.1) <= 0.03)


def test_make_partitions_count_and_seeds(rng):
    g = random_graph(rng, n=30, p=0.4)
    parts = make_partitions(g, 0.1, 10, base_seed=100)
    assert [p.seed for p in parts] == list(range(100, 110))
    assert all(len(p.test) == held_out_count(len(g.edges()), 0.1) for p in parts)


def test_single_partition_equals_split(rng):
    g = random_graph(rng, n=20, p=0.4)
    (only,) = make_partitions(g, 0.1, 1, base_seed=9)
    assert only.test == split(g, 0.1, 9).test


def test_different_seeds_differ():
    g = WeightedGraph([str(i) for i in range(30)],
                      [(u, v, 1.0) for u in range(30) for v in range(u + 1, 30)][:200])
    a, b = make_partitions(g, 0.1, 2)
    assert a.test_pairs != b.test_pairs


def test_manifest_round_trip(rng):
    g = random_graph(rng, n=20, p=0.4)
    p = split(g, 0.2, 42)
    buf = io.StringIO()
    write_manifest(p, buf)
    text = buf.getvalue()
    assert "# seed: 42" in text and "# rng: numpy.random.PCG64" in text
    q = read_manifest(io.StringIO(text), g)
    assert q.test == p.test and q.seed == 42 and q.fraction == 0.2


def test_remap_keeps_edge_set(rng):
    from tiecast.graph import map_weights

    g = random_graph(rng, n=20, p=0.4, space=WeightSpace.RAW, lo=0.5, hi=5)
    p = split(g, 0.1, 1)
    q = p.remap(map_weights(g))
    assert q.test_pairs == p.test_pairs
    assert q.weight_space is WeightSpace.MAPPED
