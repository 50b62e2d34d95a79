"""Weighted local similarity indices used directly as tie-strength estimates.

All six indices sum a per-common-neighbor term. The plain variants add the
two incident weights, the reliable-route ("r") variants multiply them, and
the AA/RA variants divide by ``log(1 + s(z))`` or ``s(z)`` respectively,
where ``s(z)`` is the observed strength of the common neighbor.
"""
from __future__ import annotations

import enum
import math

from .errors import DomainError
from .graph import WeightedGraph, WeightSpace
from .partition import Partition

__all__ = ["BaselineKind", "score", "predict_baseline"]


class BaselineKind(str, enum.Enum):
    WCN = "WCN"
    WAA = "WAA"
    WRA = "WRA"
    rWCN = "rWCN"
    rWAA = "rWAA"
    rWRA = "rWRA"

    @classmethod
    def parse(cls, name: str) -> "BaselineKind":
        for kind in cls:
            if kind.value.lower() == name.lower():
                return kind
        raise DomainError(f"unknown baseline {name!r}; expected one of {[k.value for k in cls]}")


def _term(kind: BaselineKind, a: float, b: float, s: float) -> float:
    if kind in (BaselineKind.WCN, BaselineKind.WAA, BaselineKind.WRA):
        num = a + b
    else:
        num = a * b
    if kind in (BaselineKind.WCN, BaselineKind.rWCN):
        return num
    if kind in (BaselineKind.WAA, BaselineKind.rWAA):
        return num / math.log1p(s)
    return num / s


def score(g: WeightedGraph, kind: BaselineKind, x: int, y: int) -> float:
    """Similarity of ``x`` and ``y``; 0 when they share no usable neighbor.

    Common neighbors reached through an edge with a withheld weight are
    skipped entirely.
    """
    if g.weight_space is not WeightSpace.MAPPED:
        raise DomainError("similarity baselines require mapped weights; call map_weights first")
    kind = BaselineKind(kind)
    nx_, ny_ = g.incident(x), g.incident(y)
    if x == y:
        raise DomainError("score needs two distinct nodes")
    if len(nx_) > len(ny_):
        nx_, ny_ = ny_, nx_
    total = 0.0
    for z, a in nx_.items():
        if z == x or z == y:
            continue
        b = ny_.get(z, False)
        if b is False or a is None or b is None:
            continue
        total += _term(kind, a, b, g.strength(z))
    return total


def predict_baseline(partition: Partition, kind: BaselineKind) -> list[tuple[tuple[int, int], float]]:
    """Score every held-out pair on the training view."""
    g = partition.train
    return [((u, v), score(g, kind, u, v)) for u, v, _ in partition.test]
