"""Estimators with standard errors and replica-parallel execution."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from ..errors import InsufficientReplicas
from ..noise import SeedLineage


def run_blocks(task: Callable[[np.random.Generator, int, int], np.ndarray],
               lineage: SeedLineage, replicas: int, block_size: int,
               threads: int = 1) -> np.ndarray:
    """Run ``task(rng, block_index, count)`` over fixed replica blocks.

    Block ``b`` draws from ``lineage.child(b)`` and results are concatenated
    in block order, so the output does not depend on ``threads``.
    """
    if replicas < 1:
        raise InsufficientReplicas("at least one replica is required")
    n_blocks = -(-replicas // block_size)
    counts = [min(block_size, replicas - b * block_size) for b in range(n_blocks)]

    def one(b):
        return np.asarray(task(lineage.child(b).generator(), b, counts[b]))

    if threads <= 1 or n_blocks == 1:
        parts = [one(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, range(n_blocks)))
    return np.concatenate(parts, axis=0)


def mean_se(x) -> tuple[float, float]:
    """Sample mean and its standard error."""
    x = np.asarray(x, dtype=float)
    _need(x, 2)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def second_moment_se(x) -> tuple[float, float]:
    """``E|x|^2`` for a centred variable and its standard error."""
    x2 = np.abs(np.asarray(x)) ** 2
    return mean_se(x2)


def fourth_moment_ratio(x) -> tuple[float, float]:
    """``m4 / (3 m2^2)`` with a delta-method standard error on ``(m2, m4)``."""
    x = np.asarray(x, dtype=float)
    _need(x, 4)
    x2 = x * x
    x4 = x2 * x2
    m2, m4 = x2.mean(), x4.mean()
    r = m4 / (3.0 * m2 * m2)
    grad = np.array([-2.0 * m4 / (3.0 * m2 ** 3), 1.0 / (3.0 * m2 * m2)])
    cov = np.cov(np.vstack([x2, x4])) / x.size
    return float(r), float(math.sqrt(max(grad @ cov @ grad, 0.0)))


def quantile_se(x, p: float) -> tuple[float, float]:
    """Empirical ``p``-quantile and a distribution-free standard error.

    The error is a quarter of the width of the order-statistic interval
    with binomial coverage of about 95%.
    """
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    _need(x, 2)
    q = float(np.quantile(x, p))
    half = 1.959963984540054 * math.sqrt(n * p * (1.0 - p))
    lo = int(max(math.floor(n * p - half), 0))
    hi = int(min(math.ceil(n * p + half), n - 1))
    return q, float((x[hi] - x[lo]) / 3.919927969080108)


def regress(X: np.ndarray, y: np.ndarray, w: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Weighted least squares; returns coefficients and their standard errors."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float)
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    resid = (y - X @ coef) * sw
    dof = max(len(y) - X.shape[1], 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.pinv((X * w[:, None]).T @ X)
    return coef, np.sqrt(np.diag(cov))


def _need(x: np.ndarray, n: int) -> None:
    if x.size < n:
        raise InsufficientReplicas(f"need at least {n} replicas, got {x.size}")


def check_precision(se: float, target: float, rel_tol: float | None, what: str) -> None:
    """Raise when the standard error exceeds half the requested relative tolerance."""
    if rel_tol is None:
        return
    if se > 0.5 * rel_tol * abs(target):
        raise InsufficientReplicas(
            f"{what}: standard error {se:.3e} above half the tolerance {rel_tol} x {abs(target):.3e}")

