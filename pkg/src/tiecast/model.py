"""Connection-inclination features and the parameterized regression model.

For an edge ``(x, y)`` the connection inclination of ``x`` is the share of
each common neighbor's weight mass that sits on the ``x`` side::

    r_x = sum_z w_xz / (w_xz + w_yz)

and ``r_y`` is its complement per neighbor. The tie strength is fitted as
``theta1 * r_x**k + theta2 * r_y**k + theta3`` by full-batch gradient descent
on a ridge-penalized squared loss.
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, replace
from typing import IO, NamedTuple, Sequence, Union

import numpy as np

from .errors import DivergenceError, DomainError
from .graph import WeightedGraph, WeightSpace
from .partition import Partition

__all__ = [
    "FeatureRow",
    "ModelParams",
    "TrainingTrace",
    "connection_inclination",
    "build_feature_matrix",
    "fit_value",
    "loss",
    "gradient",
    "ridge_oracle",
    "train",
    "predict",
    "predict_partition",
    "training_rows",
    "save_model",
    "load_model",
]

AUTO = "auto"


class FeatureRow(NamedTuple):
    r_x: float
    r_y: float
    bias: float = 1.0


@dataclass(frozen=True)
class ModelParams:
    """Learned coefficients plus the hyperparameters that produced them.

    ``alpha="auto"`` picks ``1 / L`` where ``L`` is the largest eigenvalue of
    the loss Hessian, the largest step for which the iteration is guaranteed
    to decrease the loss monotonically.
    """

    theta: tuple[float, float, float] = (0.0, 0.0, 0.0)
    k: float = 1.0
    lam: float = 1.0
    alpha: Union[float, str] = AUTO
    epsilon: float = 1e-6
    max_iters: int = 100_000
    batch_size: int | None = None
    batch_seed: int = 0
    weight_space: WeightSpace = WeightSpace.MAPPED

    def __post_init__(self):
        if not (self.k > 0 and math.isfinite(self.k)):
            raise DomainError(f"k must be positive, got {self.k!r}")
        if not self.lam >= 0:
            raise DomainError(f"lambda must be >= 0, got {self.lam!r}")
        if self.alpha != AUTO and not (isinstance(self.alpha, (int, float)) and self.alpha > 0):
            raise DomainError(f"alpha must be positive or 'auto', got {self.alpha!r}")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon!r}")
        if int(self.max_iters) < 1:
            raise DomainError(f"max_iters must be >= 1, got {self.max_iters!r}")
        if self.batch_size is not None and int(self.batch_size) < 1:
            raise DomainError(f"batch_size must be >= 1, got {self.batch_size!r}")
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        object.__setattr__(self, "weight_space", WeightSpace(self.weight_space))


@dataclass
class TrainingTrace:
    """Per-iteration record of gradient descent.

    Row ``i`` holds the parameters after update ``i + 1``, the loss at those
    parameters and the norm of the gradient that produced the update.
    """

    theta: np.ndarray
    loss: np.ndarray
    grad_norm: np.ndarray
    converged: bool
    alpha: float
    duration: float = 0.0
    feature_seconds: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.loss)

    @property
    def final_loss(self) -> float:
        return float(self.loss[-1])

    def write_csv(self, dest: IO[str]) -> None:
        writer = csv.writer(dest, lineterminator="\n")
        writer.writerow(["iteration", "theta1", "theta2", "theta3", "loss"])
        for i, (t, l) in enumerate(zip(self.theta, self.loss), start=1):
            writer.writerow([i, *(repr(float(x)) for x in t), repr(float(l))])


# -- features ---------------------------------------------------------------

def connection_inclination(train: WeightedGraph, x: int, y: int) -> tuple[float, float]:
    """``(r_x, r_y)`` over common neighbors whose two incident weights are
    both observed; ``(0, 0)`` when there is no such neighbor."""
    if x == y:
        raise DomainError("connection inclination needs two distinct nodes")
    ax, ay = train.incident(x), train.incident(y)
    swap = len(ax) > len(ay)
    if swap:
        ax, ay = ay, ax
    rx = ry = 0.0
    for z, a in ax.items():
        if a is None or z == x or z == y:
            continue
        b = ay.get(z)
        if b is None:
            continue
        s = a + b
        rx += a / s
        ry += b / s
    return (ry, rx) if swap else (rx, ry)


def build_feature_matrix(train: WeightedGraph, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Rows ``(r_x, r_y, 1)``, one per pair, in input order."""
    out = np.ones((len(pairs), 3), dtype=float)
    for i, (x, y) in enumerate(pairs):
        out[i, 0], out[i, 1] = connection_inclination(train, x, y)
    return out


def _as_rows(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise DomainError(f"feature rows must have shape (M, 3), got {arr.shape}")
    return arr


def _powered(rows: np.ndarray, k: float) -> np.ndarray:
    # 0**k is 0 for k > 0, so featureless pairs fall back to the bias term.
    return np.power(rows, k)


# -- objective --------------------------------------------------------------

def fit_value(row, theta, k: float) -> float:
    r_x, r_y, bias = row
    t1, t2, t3 = theta
    return t1 * r_x ** k + t2 * r_y ** k + t3 * bias ** k


def _check_lengths(weights, rows):
    w = np.asarray(weights, dtype=float).ravel()
    x = _as_rows(rows)
    if len(w) != len(x):
        raise DomainError(f"{len(w)} weights but {len(x)} feature rows")
    if len(w) == 0:
        raise DomainError("need at least one training row")
    return w, x


def loss(weights, rows, theta, k: float, lam: float) -> float:
    """Half the residual sum of squares plus ``lam / 2 * |theta|^2``."""
    w, x = _check_lengths(weights, rows)
    theta = np.asarray(theta, dtype=float)
    resid = w - _powered(x, k) @ theta
    return 0.5 * float(resid @ resid) + 0.5 * lam * float(theta @ theta)


def gradient(weights, rows, theta, k: float, lam: float) -> np.ndarray:
    w, x = _check_lengths(weights, rows)
    theta = np.asarray(theta, dtype=float)
    p = _powered(x, k)
    resid = w - p @ theta
    return -(p.T @ resid) + lam * theta


def ridge_oracle(weights, rows, k: float, lam: float, pseudo: bool = False) -> np.ndarray:
    """Closed-form minimizer via the 3x3 normal equations.

    With ``lam == 0`` the system may be singular; that raises unless
    ``pseudo`` is set, in which case the minimum-norm solution is returned.
    """
    w, x = _check_lengths(weights, rows)
    p = _powered(x, k)
    a = p.T @ p + lam * np.eye(3)
    b = p.T @ w
    if pseudo:
        return np.linalg.lstsq(a, b, rcond=None)[0]
    try:
        cond = np.linalg.cond(a)
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > 1e14:
        raise np.linalg.LinAlgError("normal equations are singular; use lam > 0 or pseudo=True")
    return np.linalg.solve(a, b)


# -- training ---------------------------------------------------------------

def training_rows(partition: Partition) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix and targets for every observed edge of the training view."""
    edges = partition.train.edges()
    if not edges:
        raise DomainError("training view has no observed weights")
    rows = build_feature_matrix(partition.train, [(u, v) for u, v, _ in edges])
    weights = np.fromiter((w for _, _, w in edges), dtype=float, count=len(edges))
    return rows, weights


def step_size(rows: np.ndarray, k: float, lam: float) -> float:
    """Inverse of the largest Hessian eigenvalue of the penalized loss."""
    p = _powered(rows, k)
    top = float(np.linalg.eigvalsh(p.T @ p + lam * np.eye(3))[-1])
    return 1.0 / top


def train(partition: Partition, params: ModelParams) -> tuple[ModelParams, TrainingTrace]:
    """Fit theta on the observed edges of ``partition.train``.

    The incoming ``params.theta`` is ignored: iteration always starts from
    ``theta_old = (0, 0, 0)``, ``theta_new = (1, 1, 1)`` and stops once
    ``|theta_new - theta_old| <= epsilon`` or after ``max_iters`` updates.
    """
    t0 = time.perf_counter()
    rows, weights = training_rows(partition)
    t1 = time.perf_counter()
    fitted, trace = fit_rows(rows, weights, params)
    trace.feature_seconds = t1 - t0
    trace.duration = time.perf_counter() - t0
    return replace(fitted, weight_space=partition.weight_space), trace


def fit_rows(rows, weights, params: ModelParams) -> tuple[ModelParams, TrainingTrace]:
    """Gradient descent on an explicit feature matrix."""
    w, x = _check_lengths(weights, rows)
    start = time.perf_counter()
    alpha = step_size(x, params.k, params.lam) if params.alpha == AUTO else float(params.alpha)
    if params.batch_size is None or params.batch_size >= len(w):
        theta, losses, norms, converged = _descend_full(x, w, params, alpha)
    else:
        theta, losses, norms, converged = _descend_minibatch(x, w, params, alpha)
    trace = TrainingTrace(theta, losses, norms, converged, alpha, time.perf_counter() - start)
    return replace(params, theta=tuple(float(t) for t in theta[-1])), trace


def _descend_full(x, w, params: ModelParams, alpha: float):
    # The full-batch gradient is G @ theta - b + lam * theta with G = P^T P and
    # b = P^T w, so each update costs O(1) once G and b are accumulated.
    p = _powered(x, params.k)
    g = p.T @ p
    b = p.T @ w
    c = float(w @ w)
    lam = float(params.lam)
    g00, g01, g02 = (float(v) for v in g[0])
    g11, g12 = float(g[1, 1]), float(g[1, 2])
    g22 = float(g[2, 2])
    b0, b1, b2 = (float(v) for v in b)
    eps2 = params.epsilon * params.epsilon
    max_iters = int(params.max_iters)

    t0 = t1 = t2 = 1.0
    thetas: list[tuple[float, float, float]] = []
    losses: list[float] = []
    norms: list[float] = []
    converged = False
    for it in range(1, max_iters + 1):
        d0 = g00 * t0 + g01 * t1 + g02 * t2 - b0 + lam * t0
        d1 = g01 * t0 + g11 * t1 + g12 * t2 - b1 + lam * t1
        d2 = g02 * t0 + g12 * t1 + g22 * t2 - b2 + lam * t2
        n0, n1, n2 = t0 - alpha * d0, t1 - alpha * d1, t2 - alpha * d2
        q = (
            g00 * n0 * n0 + g11 * n1 * n1 + g22 * n2 * n2
            + 2.0 * (g01 * n0 * n1 + g02 * n0 * n2 + g12 * n1 * n2)
        )
        cur = 0.5 * (c - 2.0 * (b0 * n0 + b1 * n1 + b2 * n2) + q) + 0.5 * lam * (n0 * n0 + n1 * n1 + n2 * n2)
        gn = math.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
        if not (math.isfinite(cur) and math.isfinite(gn)):
            raise DivergenceError(
                f"gradient descent diverged at iteration {it} (alpha={alpha:g}); lower the learning rate",
                iteration=it,
            )
        thetas.append((n0, n1, n2))
        losses.append(cur)
        norms.append(gn)
        step2 = (n0 - t0) ** 2 + (n1 - t1) ** 2 + (n2 - t2) ** 2
        t0, t1, t2 = n0, n1, n2
        if step2 <= eps2:
            converged = True
            break
    # Replace the last algebraic loss with a direct residual evaluation.
    losses[-1] = loss(w, x, thetas[-1], params.k, lam)
    return np.array(thetas), np.array(losses), np.array(norms), converged


def _descend_minibatch(x, w, params: ModelParams, alpha: float):
    p = _powered(x, params.k)
    lam = float(params.lam)
    rng = np.random.Generator(np.random.PCG64(params.batch_seed))
    size = int(params.batch_size)
    order = rng.permutation(len(w))
    pos = 0
    theta = np.ones(3)
    thetas, losses, norms = [], [], []
    converged = False
    for it in range(1, int(params.max_iters) + 1):
        if pos + size > len(w):
            order = rng.permutation(len(w))
            pos = 0
        idx = order[pos:pos + size]
        pos += size
        pb = p[idx]
        grad = -(pb.T @ (w[idx] - pb @ theta)) + lam * theta
        new = theta - alpha * grad
        resid = w - p @ new
        cur = 0.5 * float(resid @ resid) + 0.5 * lam * float(new @ new)
        gn = float(np.linalg.norm(grad))
        if not (math.isfinite(cur) and math.isfinite(gn)):
            raise DivergenceError(f"gradient descent diverged at iteration {it} (alpha={alpha:g})", iteration=it)
        thetas.append(new)
        losses.append(cur)
        norms.append(gn)
        done = float(np.linalg.norm(new - theta)) <= params.epsilon
        theta = new
        if done:
            converged = True
            break
    return np.array(thetas), np.array(losses), np.array(norms), converged


# -- prediction -------------------------------------------------------------

def predict(trained: ModelParams, rows) -> np.ndarray:
    x = _as_rows(rows) if len(rows) else np.zeros((0, 3))
    return _powered(x, trained.k) @ np.asarray(trained.theta, dtype=float)


def predict_partition(trained: ModelParams, partition: Partition) -> np.ndarray:
    rows = build_feature_matrix(partition.train, partition.test_pairs)
    return predict(trained, rows)


# -- model files ------------------------------------------------------------

def save_model(trained: ModelParams, dest: IO[str], trace: TrainingTrace | None = None,
               seed: int | None = None) -> None:
    doc = {
        "theta": list(trained.theta),
        "k": trained.k,
        "lambda": trained.lam,
        "weight_space": trained.weight_space.value,
        "alpha": trained.alpha if trace is None else trace.alpha,
        "epsilon": trained.epsilon,
        "max_iters": trained.max_iters,
    }
    if trace is not None:
        doc["training"] = {
            "seed": seed,
            "iterations": trace.iterations,
            "final_loss": trace.final_loss,
            "converged": trace.converged,
        }
    json.dump(doc, dest, indent=2, sort_keys=True)
    dest.write("\n")


def load_model(source: IO[str]) -> ModelParams:
    doc = json.load(source)
    try:
        return ModelParams(
            theta=tuple(doc["theta"]),
            k=float(doc["k"]),
            lam=float(doc["lambda"]),
            alpha=doc.get("alpha", AUTO),
            epsilon=float(doc.get("epsilon", 1e-6)),
            max_iters=int(doc.get("max_iters", 100_000)),
            weight_space=WeightSpace(doc.get("weight_space", "mapped")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"invalid model file: {exc}") from None
