"""Block statistics and the median-of-blocks amplification."""

from __future__ import annotations

from typing import Callable

import numpy as np


def _as_block(values) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        x = x.ravel()
    if x.size == 0:
        raise ValueError("empty sample block")
    return x


def _pow_abs(r: np.ndarray, p: float) -> np.ndarray:
    a = np.abs(r)
    if p == 1:
        return a
    if p == 2:
        return a * a
    out = np.zeros_like(a)
    nz = a > 0
    out[nz] = np.exp(p * np.log(a[nz]))
    return out


def empirical_mean(block) -> float:
    # numpy sums 1-d float arrays pairwise
    x = _as_block(block)
    return float(np.sum(x) / x.size)


def empirical_central_p_moment(block, p: float = 1.0) -> float:
    """``(1/m) sum |Y_i - M_m|^p`` with ``M_m`` the block mean."""
    if p < 1:
        raise ValueError("p must be >= 1")
    x = _as_block(block)
    r = x - np.sum(x) / x.size
    return float(np.sum(_pow_abs(r, p)) / x.size)


def unbiased_variance(block) -> float:
    x = _as_block(block)
    if x.size < 2:
        raise ValueError("unbiased variance needs at least 2 values")
    r = x - np.sum(x) / x.size
    return float(np.sum(r * r) / (x.size - 1))


def median(values) -> float:
    """Middle order statistic of an odd-length collection."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0 or x.size % 2 == 0:
        raise ValueError(f"median needs an odd number of values, got {x.size}")
    mid = x.size // 2
    return float(np.partition(x, mid)[mid])


# Row-wise versions over a (k, m) array of consecutive blocks.

def _rows_mean(b: np.ndarray) -> np.ndarray:
    return np.sum(b, axis=1) / b.shape[1]


def _rows_central(p: float) -> Callable[[np.ndarray], np.ndarray]:
    def stat(b):
        r = b - _rows_mean(b)[:, None]
        return np.sum(_pow_abs(r, p), axis=1) / b.shape[1]

    return stat


def _rows_variance(b: np.ndarray) -> np.ndarray:
    if b.shape[1] < 2:
        raise ValueError("unbiased variance needs block size m >= 2")
    r = b - _rows_mean(b)[:, None]
    return np.sum(r * r, axis=1) / (b.shape[1] - 1)


def block_statistic(statistic: str, p: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorised per-row statistic: ``"mean"``, ``"central_moment"`` or ``"variance"``."""
    if statistic == "mean":
        return _rows_mean
    if statistic == "central_moment":
        if p < 1:
            raise ValueError("p must be >= 1")
        return _rows_central(p)
    if statistic == "variance":
        return _rows_variance
    raise ValueError(f"unknown statistic {statistic!r}")


def block_values(samples, k: int, m: int, statistic: str = "mean", p: float = 1.0) -> np.ndarray:
    """Statistic of each of the ``k`` consecutive blocks of length ``m``."""
    x = np.asarray(samples, dtype=float).ravel()
    if k < 1 or m < 1:
        raise ValueError("k and m must be positive")
    if x.size != k * m:
        raise ValueError(f"expected k*m = {k * m} samples, got {x.size}")
    return block_statistic(statistic, p)(x.reshape(k, m))


def median_of_block_statistic(samples, k: int, m: int, statistic: str = "mean", p: float = 1.0) -> float:
    """Median over ``k`` consecutive disjoint blocks of ``statistic``.

    Block ``l`` covers ``samples[l*m:(l+1)*m]``. ``k`` must be odd.
    """
    if k % 2 == 0:
        raise ValueError("k must be odd")
    return median(block_values(samples, k, m, statistic, p))
