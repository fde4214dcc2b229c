"""Panelized Gauss-Legendre rules.

Every integral in the package is assembled from these rules; higher-level code
only decides where the panel breakpoints go.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss


@lru_cache(maxsize=64)
def _reference_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(a: float, b: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Single-panel Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _reference_rule(int(order))
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def panel_rule(breaks, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule with one ``order``-point panel between consecutive breaks."""
    breaks = np.asarray(breaks, dtype=float)
    if breaks.ndim != 1 or breaks.size < 2:
        raise ValueError("need at least two breakpoints")
    if np.any(np.diff(breaks) <= 0):
        raise ValueError("breakpoints must be strictly increasing")
    x, w = _reference_rule(int(order))
    half = 0.5 * np.diff(breaks)
    mid = 0.5 * (breaks[1:] + breaks[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def uniform_panels(a: float, b: float, n_panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule with ``n_panels`` equal panels on [a, b]."""
    return panel_rule(np.linspace(a, b, int(n_panels) + 1), order)


def merge_breaks(*arrays, lo: float | None = None, hi: float | None = None, tol: float = 1e-14) -> np.ndarray:
    """Sorted union of breakpoint arrays, clipped to [lo, hi], near-duplicates removed."""
    b = np.sort(np.concatenate([np.atleast_1d(np.asarray(a, float)) for a in arrays]))
    if lo is not None:
        b = b[b >= lo]
    if hi is not None:
        b = b[b <= hi]
    if lo is not None and (b.size == 0 or b[0] > lo):
        b = np.concatenate([[lo], b])
    if hi is not None and (b.size == 0 or b[-1] < hi):
        b = np.concatenate([b, [hi]])
    keep = np.concatenate([[True], np.diff(b) > tol * max(1.0, float(np.abs(b).max(initial=0.0)))])
    return b[keep]
