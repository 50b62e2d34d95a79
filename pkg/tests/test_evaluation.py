import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tiecast.errors import DomainError
from tiecast.evaluation import (
    EvalReport,
    categorical_entropy,
    h_diff,
    inclination_distributions,
    pcc,
    rmse,
    summarize,
    w_diff,
    weight_distribution,
)
from tiecast.graph import WeightedGraph, WeightSpace

from oracles import two_pass_pearson, two_pass_rmse


def test_rmse_examples():
    assert rmse([0.3, 0.4], [0.3, 0.4]) == 0
    assert rmse([0, 2], [1, 1]) == 1
    with pytest.raises(DomainError):
        rmse([1, 2], [1])
    with pytest.raises(DomainError):
        rmse([], [])


finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=50))
def test_rmse_matches_oracle(pairs):
    a, p = zip(*pairs)
    assert rmse(a, p) == pytest.approx(two_pass_rmse(a, p), rel=1e-12, abs=1e-12)


def test_pcc_examples(rng):
    a = rng.uniform(0, 1, 40)
    assert pcc(a, a) == pytest.approx(1, abs=1e-15)
    assert pcc(a, 3 - a) == pytest.approx(-1, abs=1e-15)
    p = a + rng.normal(0, 0.3, 40)
    assert pcc(a, p) == pytest.approx(two_pass_pearson(list(a), list(p)), abs=1e-12)
    with pytest.raises(DomainError):
        pcc(a, np.full(40, 0.2))


def test_w_diff_examples(rng):
    assert w_diff([([1, 2, 3], [1, 2, 3])]) == 0
    assert w_diff([([1, 3], [1, 2])]) == 0.5
    parts = [(rng.uniform(0, 1, 7), rng.uniform(0, 1, 7)) for _ in range(3)]
    brute = sum(sum(a) / len(a) - sum(p) / len(p) for a, p in parts) / 3
    assert w_diff(parts) == pytest.approx(brute, abs=1e-15)
    with pytest.raises(DomainError):
        w_diff([([], [])])
    with pytest.raises(DomainError):
        w_diff([])


def test_entropy_convention():
    assert categorical_entropy([1.0]) == 0
    assert categorical_entropy([0.5, 0.5]) == pytest.approx(-math.log(2), abs=1e-15)
    assert categorical_entropy([0.5, 0.5, 0.0]) == categorical_entropy([0.5, 0.5])


def test_h_diff_zero_cases(rng):
    a = rng.integers(1, 5, 30).astype(float)
    assert h_diff([(a, a)]) == 0
    assert h_diff([([0.2] * 5, [0.1, 0.3, 0.9, 0.2, 0.25])]) == 0


def test_h_diff_two_categories():
    actual = [1.0, 1.0, 2.0, 2.0]
    predicted = [0.7, 1.2, 1.4, 2.5]  # -> categories 1, 1, 1, 2
    expected = 2 * 0.5 * math.log(0.5) - (0.75 * math.log(0.75) + 0.25 * math.log(0.25))
    assert h_diff([(actual, predicted)]) == pytest.approx(expected, abs=1e-12)


def test_h_diff_ties_go_to_smaller_category():
    # 1.5 is equidistant from 1 and 2; assigning it to 1 gives counts (2, 0).
    got = h_diff([([1.0, 2.0], [1.5, 1.5])])
    assert got == pytest.approx(-math.log(2) - 0.0, abs=1e-15)


def test_h_diff_averages_partitions():
    one = ([1.0, 1.0, 2.0, 2.0], [0.7, 1.2, 1.4, 2.5])
    two = ([3.0, 4.0], [3.0, 4.0])
    assert h_diff([one, two]) == pytest.approx(h_diff([one]) / 2, abs=1e-15)


def test_summary_constant_weights():
    s = summarize([0.3] * 9)
    assert s.small_fraction == 0 and s.large_fraction == 1
    assert s.size == 9


def test_summary_fractions():
    s = summarize([1, 1, 1, 5])
    assert s.mean == 2
    assert (s.small_fraction, s.large_fraction) == (0.75, 0.25)
    buf = io.StringIO()
    s.write_csv(buf)
    assert buf.getvalue().startswith("bin_left,bin_right,count\n")


def test_graph_distributions(toy_mapped):
    w = weight_distribution(toy_mapped, bins=4)
    assert w.size == 5
    rx, ry = inclination_distributions(toy_mapped, bins=4)
    assert rx.size == ry.size == 5


def test_report_json():
    r = EvalReport("NEW", [0.1, 0.3], WeightSpace.MAPPED, w_diff=0.0, h_diff=0.0)
    assert r.mean == pytest.approx(0.2)
    assert r.std == pytest.approx(math.sqrt(0.02))
    assert EvalReport("NEW", [0.1], WeightSpace.MAPPED).std is None
    buf = io.StringIO()
    r.to_json(buf)
    doc = json.loads(buf.getvalue())
    assert doc["weight_space"] == "mapped" and "h_diff (sum p log p convention)" in doc
