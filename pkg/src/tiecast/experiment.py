"""Evaluation protocols: repeated leave-p%-out runs, k sweeps, method
comparison, perturbation curves, synthetic graphs and the scaling benchmark.

Every protocol derives partition ``j`` from seed ``base_seed + j`` so methods
and k values are always compared on identical held-out edges. Work is split
into per-partition cells that may run in a process pool; results are reduced
in cell order, never completion order.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import IO, Sequence, Union

import numpy as np

from .baselines import BaselineKind, score
from .errors import DomainError, TiecastError
from .evaluation import EvalReport, h_diff, pcc, rmse, w_diff
from .graph import WeightedGraph, WeightSpace, map_weights
from .model import ModelParams, build_feature_matrix, fit_rows, predict, train
from .partition import split

__all__ = [
    "NEW",
    "DEFAULT_GRID",
    "SweepResult",
    "PerturbationResult",
    "ComparisonTable",
    "ScalingRecord",
    "UniformMapped",
    "FromModel",
    "run_protocol",
    "sweep_k",
    "compare_methods",
    "perturbation_curves",
    "gen_synthetic",
    "scaling_bench",
    "parse_grid",
]

NEW = "NEW"
DEFAULT_GRID = tuple(round(0.1 * i, 1) for i in range(1, 21))

Method = Union[str, BaselineKind]


def parse_method(name: Method) -> Union[str, BaselineKind]:
    if isinstance(name, BaselineKind):
        return name
    if str(name).upper() == NEW:
        return NEW
    return BaselineKind.parse(str(name))


def parse_grid(spec: str) -> tuple[float, ...]:
    """``"0.1:2.0:0.1"`` (start:stop:step, inclusive) or ``"0.3,1,2"``."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise DomainError(f"grid range must be start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise DomainError(f"empty grid {spec!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [round(start + i * step, 10) for i in range(n)]
    else:
        values = [float(p) for p in spec.split(",") if p.strip()]
    return check_grid(values)


def check_grid(grid: Sequence[float]) -> tuple[float, ...]:
    grid = tuple(float(k) for k in grid)
    if not grid:
        raise DomainError("k grid is empty")
    if any(not 0 < k <= 2 for k in grid):
        raise DomainError("k grid values must lie in (0, 2]")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("k grid must be strictly increasing")
    return grid


# -- per-partition cells ----------------------------------------------------

def _spaces(g: WeightedGraph, weight_space: WeightSpace) -> tuple[WeightedGraph, WeightedGraph]:
    """(graph holding the target weights, mapped graph for the baselines)."""
    weight_space = WeightSpace(weight_space)
    mapped = g if g.weight_space is WeightSpace.MAPPED else map_weights(g)
    if weight_space is WeightSpace.MAPPED:
        return mapped, mapped
    return g, mapped


@dataclass
class _Cell:
    """Everything computed for one partition."""

    index: int
    actual: np.ndarray
    predictions: dict  # key -> np.ndarray
    iterations: dict = field(default_factory=dict)
    converged: dict = field(default_factory=dict)


def _cell(args) -> _Cell:
    index, target, mapped, fraction, seed, methods, params, ks = args
    try:
        part = split(target, fraction, seed)
    except TiecastError as exc:
        raise type(exc)(f"partition {index} (seed {seed}): {exc}") from exc
    actual = part.test_weights
    cell = _Cell(index, actual, {})
    feats = None
    for method in methods:
        if method == NEW:
            if feats is None:
                edges = part.train.edges()
                if not edges:
                    raise DomainError(f"partition {index}: training view has no observed weights")
                train_rows = build_feature_matrix(part.train, [(u, v) for u, v, _ in edges])
                train_w = np.array([w for _, _, w in edges])
                test_rows = build_feature_matrix(part.train, part.test_pairs)
                feats = (train_rows, train_w, test_rows)
            train_rows, train_w, test_rows = feats
            for k in ks:
                try:
                    fitted, trace = fit_rows(train_rows, train_w, replace(params, k=k))
                except TiecastError as exc:
                    raise type(exc)(f"partition {index} (seed {seed}), k={k}: {exc}") from exc
                cell.predictions[(NEW, k)] = predict(fitted, test_rows)
                cell.iterations[(NEW, k)] = trace.iterations
                cell.converged[(NEW, k)] = trace.converged
        else:
            view = part.train if mapped is target else part.remap(mapped).train
            cell.predictions[(method, None)] = np.array([score(view, method, u, v) for u, v in part.test_pairs])
    return cell


def _run_cells(target, mapped, fraction, D, base_seed, methods, params, ks, jobs) -> list[_Cell]:
    if D < 1:
        raise DomainError(f"partition count must be >= 1, got {D}")
    tasks = [(j, target, mapped, fraction, base_seed + j, methods, params, ks) for j in range(D)]
    if jobs is None or jobs <= 1 or D == 1:
        cells = [_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(_cell, tasks))
    return sorted(cells, key=lambda c: c.index)


def _safe_pcc(a, p):
    try:
        return pcc(a, p)
    except DomainError:
        return None


def _report(name, key, cells, weight_space, extra) -> EvalReport:
    pairs = [(c.actual, c.predictions[key]) for c in cells]
    report = EvalReport(
        method=name,
        rmse_values=[rmse(a, p) for a, p in pairs],
        weight_space=WeightSpace(weight_space),
        w_diff=w_diff(pairs),
        h_diff=h_diff(pairs),
        pcc_values=[_safe_pcc(a, p) for a, p in pairs],
        extra=dict(extra),
    )
    if key[0] == NEW:
        report.extra["iterations"] = [c.iterations[key] for c in cells]
        report.extra["converged"] = [c.converged[key] for c in cells]
    return report


def _meta(fraction, D, base_seed, params: ModelParams | None, weight_space, k=None):
    doc = {"fraction": fraction, "partitions": D, "base_seed": base_seed,
           "weight_space": WeightSpace(weight_space).value}
    if params is not None:
        doc.update({"k": k, "lambda": params.lam, "alpha": params.alpha,
                    "epsilon": params.epsilon, "max_iters": params.max_iters})
    return doc


# -- protocols --------------------------------------------------------------

def run_protocol(g: WeightedGraph, method: Method, fraction: float = 0.1, D: int = 10,
                 params: ModelParams | None = None, base_seed: int = 0,
                 weight_space: WeightSpace = WeightSpace.MAPPED, jobs: int = 1) -> EvalReport:
    """Average one method over ``D`` seeded partitions.

    Baselines always score on mapped weights; in raw mode their scores are
    compared against raw held-out weights.
    """
    params = params or ModelParams()
    method = parse_method(method)
    target, mapped = _spaces(g, weight_space)
    cells = _run_cells(target, mapped, fraction, D, base_seed, [method], params, [params.k], jobs)
    key = (NEW, params.k) if method == NEW else (method, None)
    name = NEW if method == NEW else method.value
    extra = _meta(fraction, D, base_seed, params if method == NEW else None, weight_space,
                  params.k if method == NEW else None)
    return _report(name, key, cells, weight_space, extra)


@dataclass
class SweepResult:
    grid: tuple[float, ...]
    reports: list[EvalReport]
    best_k: float

    @property
    def means(self) -> list[float]:
        return [r.mean for r in self.reports]

    @property
    def stds(self) -> list[float | None]:
        return [r.std for r in self.reports]

    @property
    def best_index(self) -> int:
        return self.grid.index(self.best_k)

    def write_csv(self, dest: IO[str]) -> None:
        writer = csv.writer(dest, lineterminator="\n")
        writer.writerow(["k", "rmse_mean", "rmse_std", "w_diff", "h_diff", "is_best"])
        for k, r in zip(self.grid, self.reports):
            writer.writerow([repr(k), repr(r.mean), "" if r.std is None else repr(r.std),
                             repr(r.w_diff), repr(r.h_diff), int(k == self.best_k)])

    def to_dict(self) -> dict:
        return {"grid": list(self.grid), "best_k": self.best_k,
                "reports": [r.to_dict() for r in self.reports]}


def _argmin_k(grid, means) -> float:
    # Ties go to the smaller k because the grid is increasing.
    best = min(range(len(grid)), key=lambda i: (means[i], i))
    return grid[best]


def _sweep(g, grid, fraction, D, params, base_seed, weight_space, jobs) -> SweepResult:
    params = params or ModelParams()
    grid = check_grid(grid)
    target, mapped = _spaces(g, weight_space)
    cells = _run_cells(target, mapped, fraction, D, base_seed, [NEW], params, grid, jobs)
    reports = [_report(NEW, (NEW, k), cells, weight_space,
                       _meta(fraction, D, base_seed, params, weight_space, k)) for k in grid]
    return SweepResult(grid, reports, _argmin_k(grid, [r.mean for r in reports]))


def sweep_k(g: WeightedGraph, grid: Sequence[float] = DEFAULT_GRID, fraction: float = 0.1, D: int = 10,
            params: ModelParams | None = None, base_seed: int = 0,
            weight_space: WeightSpace = WeightSpace.MAPPED, jobs: int = 1) -> SweepResult:
    """Run the protocol for each k on identical partitions; pick the k with
    the lowest mean RMSE."""
    return _sweep(g, grid, fraction, D, params, base_seed, weight_space, jobs)


@dataclass
class PerturbationResult:
    grid: tuple[float, ...]
    w_diff: list[float]
    h_diff: list[float]
    best_k: float

    def write_csv(self, dest: IO[str]) -> None:
        writer = csv.writer(dest, lineterminator="\n")
        writer.writerow(["k", "w_diff", "h_diff", "is_best"])
        for k, wd, hd in zip(self.grid, self.w_diff, self.h_diff):
            writer.writerow([repr(k), repr(wd), repr(hd), int(k == self.best_k)])

    def to_dict(self) -> dict:
        return {"grid": list(self.grid), "w_diff": self.w_diff, "h_diff": self.h_diff, "best_k": self.best_k}


def perturbation_curves(g: WeightedGraph, grid: Sequence[float] = DEFAULT_GRID, fraction: float = 0.1,
                        D: int = 10, params: ModelParams | None = None, base_seed: int = 0,
                        weight_space: WeightSpace = WeightSpace.MAPPED, jobs: int = 1) -> PerturbationResult:
    """w_diff and h_diff of the trained model at every k of the grid."""
    sweep = _sweep(g, grid, fraction, D, params, base_seed, weight_space, jobs)
    return PerturbationResult(sweep.grid, [r.w_diff for r in sweep.reports],
                              [r.h_diff for r in sweep.reports], sweep.best_k)


@dataclass
class ComparisonTable:
    reports: list[EvalReport]
    sweep: SweepResult | None = None

    @property
    def best(self) -> str:
        return min(self.reports, key=lambda r: r.mean).method

    def row(self, method: str) -> EvalReport:
        for r in self.reports:
            if r.method == method:
                return r
        raise KeyError(method)

    def write_csv(self, dest: IO[str]) -> None:
        writer = csv.writer(dest, lineterminator="\n")
        writer.writerow(["method", "rmse_mean", "rmse_std", "w_diff", "h_diff", "is_best"])
        best = self.best
        for r in self.reports:
            writer.writerow([r.method, repr(r.mean), "" if r.std is None else repr(r.std),
                             repr(r.w_diff), repr(r.h_diff), int(r.method == best)])

    def to_dict(self) -> dict:
        doc = {"best": self.best, "reports": [r.to_dict() for r in self.reports]}
        if self.sweep is not None:
            doc["k_sweep"] = {"grid": list(self.sweep.grid), "rmse_mean": self.sweep.means,
                              "best_k": self.sweep.best_k}
        return doc


def compare_methods(g: WeightedGraph, methods: Sequence[Method], fraction: float = 0.1, D: int = 10,
                    params: ModelParams | None = None, base_seed: int = 0,
                    weight_space: WeightSpace = WeightSpace.MAPPED, jobs: int = 1,
                    k_grid: Sequence[float] | None = None) -> ComparisonTable:
    """One report per method on shared partitions.

    With ``k_grid`` the NEW row uses the best k of a sweep over that grid;
    otherwise it uses ``params.k``.
    """
    if not methods:
        raise DomainError("need at least one method")
    params = params or ModelParams()
    parsed = [parse_method(m) for m in methods]
    if len(set(parsed)) != len(parsed):
        raise DomainError("duplicate method in comparison")
    ks = list(check_grid(k_grid)) if k_grid is not None else [params.k]
    target, mapped = _spaces(g, weight_space)
    cells = _run_cells(target, mapped, fraction, D, base_seed, parsed, params, ks, jobs)
    sweep = None
    reports = []
    for m in parsed:
        if m == NEW:
            per_k = [_report(NEW, (NEW, k), cells, weight_space,
                             _meta(fraction, D, base_seed, params, weight_space, k)) for k in ks]
            best_k = _argmin_k(ks, [r.mean for r in per_k])
            if k_grid is not None:
                sweep = SweepResult(tuple(ks), per_k, best_k)
            reports.append(per_k[ks.index(best_k)])
        else:
            reports.append(_report(m.value, (m, None), cells, weight_space,
                                   _meta(fraction, D, base_seed, None, weight_space)))
    return ComparisonTable(reports, sweep)


# -- synthetic graphs -------------------------------------------------------

@dataclass(frozen=True)
class UniformMapped:
    """Weights drawn i.i.d. uniformly from (0, 1)."""


@dataclass(frozen=True)
class FromModel:
    """Weights that the regression model reproduces exactly (up to noise).

    Starting from uniform weights, every edge weight is repeatedly replaced
    by ``theta . (r_x**k, r_y**k, 1)`` of its own inclination features plus a
    fixed per-edge Gaussian noise draw, clamped into (0, 1), until the
    weights stop changing. At the fixed point the weights are consistent
    with the features they induce.
    """

    theta: tuple[float, float, float]
    k: float = 1.0
    noise_sigma: float = 0.0
    max_rounds: int = 500
    tol: float = 1e-13


# Clamp bounds for generated weights: strictly inside (0, 1).
_LO, _HI = 1e-9, 1.0 - 1e-9


def _pair_from_index(idx: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    # Row-major enumeration of the strict upper triangle.
    idx = idx.astype(np.int64)
    row_start = lambda u: u * (2 * n - u - 1) // 2  # noqa: E731
    u = np.floor((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * idx.astype(float))) / 2).astype(np.int64)
    u = np.clip(u, 0, n - 2)
    # Repair floating-point misplacement at row boundaries.
    while True:
        over = row_start(u) > idx
        under = row_start(u + 1) <= idx
        if not (over.any() or under.any()):
            break
        u = u - over + under
    v = idx - row_start(u) + u + 1
    return u, v


def gen_synthetic(n: int, m: int, weight_model=UniformMapped(), seed: int = 0) -> WeightedGraph:
    """Uniform random simple graph with ``m`` edges on ``n`` nodes, weights in
    mapped space."""
    n, m = int(n), int(m)
    if n < 2:
        raise DomainError("need at least two nodes")
    total = n * (n - 1) // 2
    if not 1 <= m <= total:
        raise DomainError(f"cannot place {m} edges on {n} nodes (max {total})")
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = np.sort(rng.choice(total, size=m, replace=False))
    us, vs = _pair_from_index(idx, n)
    pairs = list(zip(us.tolist(), vs.tolist()))
    labels = [str(i) for i in range(n)]
    w = np.clip(rng.random(m), _LO, _HI)
    if isinstance(weight_model, UniformMapped):
        return WeightedGraph(labels, ((u, v, x) for (u, v), x in zip(pairs, w)), WeightSpace.MAPPED)
    if not isinstance(weight_model, FromModel):
        raise DomainError(f"unknown weight model {weight_model!r}")
    noise = rng.normal(0.0, weight_model.noise_sigma, m) if weight_model.noise_sigma > 0 else np.zeros(m)
    theta = np.asarray(weight_model.theta, dtype=float)
    for _ in range(weight_model.max_rounds):
        g = WeightedGraph(labels, ((u, v, x) for (u, v), x in zip(pairs, w)), WeightSpace.MAPPED)
        rows = build_feature_matrix(g, pairs)
        new = np.clip(np.power(rows, weight_model.k) @ theta + noise, _LO, _HI)
        done = float(np.max(np.abs(new - w))) <= weight_model.tol
        w = new
        if done:
            break
    return WeightedGraph(labels, ((u, v, x) for (u, v), x in zip(pairs, w)), WeightSpace.MAPPED)


# -- scaling ----------------------------------------------------------------

@dataclass(frozen=True)
class ScalingRecord:
    edges: int
    train_edges: int
    seconds: float
    iterations: int


def scaling_bench(sizes: Sequence[int], D: int = 10, params: ModelParams | None = None,
                  mean_degree: float = 10.0, fraction: float = 0.1, seed: int = 0) -> list[ScalingRecord]:
    """Accumulated training time over ``D`` partitions per graph size.

    Timing covers feature construction and the descent loop of each
    training run; graph generation and splitting are excluded.
    """
    params = params or ModelParams()
    sizes = [int(s) for s in sizes]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise DomainError("sizes must be strictly increasing")
    records = []
    warmed = False
    for m in sizes:
        n = max(2, int(round(2 * m / mean_degree)))
        g = gen_synthetic(n, m, UniformMapped(), seed=seed + m)
        total = 0.0
        iters = 0
        train_edges = 0
        for j in range(D):
            part = split(g, fraction, seed + j)
            if not warmed:
                # First call pays one-off import and allocation costs; keep it out of the timings.
                train(part, params)
                warmed = True
            _, trace = train(part, params)
            total += trace.duration
            iters += trace.iterations
            train_edges = part.train.number_of_edges() - part.train.number_of_hidden()
        records.append(ScalingRecord(m, train_edges, total, iters))
    return sorted(records, key=lambda r: r.train_edges)


def write_scaling_csv(records: Sequence[ScalingRecord], dest: IO[str]) -> None:
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(["edges", "train_edges", "seconds", "iterations"])
    for r in records:
        writer.writerow([r.edges, r.train_edges, repr(r.seconds), r.iterations])


def dump_json(doc, dest: IO[str]) -> None:
    json.dump(doc, dest, indent=2, sort_keys=True)
    dest.write("\n")
