"""Composite Gauss-Legendre rules with panel doubling."""

from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np

DEFAULT_ORDER = 32


class QuadratureError(RuntimeError):
    """Raised when panel doubling fails to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


class QuadratureWarning(UserWarning):
    pass


@lru_cache(maxsize=32)
def _legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_nodes(breakpoints, panels: int, order: int = DEFAULT_ORDER):
    """Nodes and weights of a composite rule.

    Every interval between consecutive ``breakpoints`` is split into
    ``panels`` equal panels carrying an ``order``-point Gauss-Legendre rule.
    """
    bp = np.asarray(breakpoints, dtype=float)
    x0, w0 = _legendre(order)
    nodes, weights = [], []
    for a, b in zip(bp[:-1], bp[1:]):
        edges = np.linspace(a, b, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes.append((mid[:, None] + half[:, None] * x0[None, :]).ravel())
        weights.append((half[:, None] * w0[None, :]).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def integrate(func, breakpoints, *, tol: float = 1e-10, order: int = DEFAULT_ORDER,
              start_panels: int = 1, max_panels: int = 1 << 14, strict: bool = True):
    """Integrate ``func`` over the union of ``breakpoints`` intervals.

    ``func`` maps a 1-D node array to an array whose leading axis runs over
    the nodes; any trailing axes are integrated independently, which lets a
    whole set of Fourier coefficients share one rule. Panels are doubled until
    two successive estimates differ by less than ``tol`` in max-norm.

    Returns ``(value, panels)``.
    """
    panels = max(1, int(start_panels))
    x, w = composite_nodes(breakpoints, panels, order)
    prev = np.tensordot(w, func(x), axes=(0, 0))
    diff = np.inf
    while panels < max_panels:
        panels *= 2
        x, w = composite_nodes(breakpoints, panels, order)
        cur = np.tensordot(w, func(x), axes=(0, 0))
        diff = float(np.max(np.abs(cur - prev)))
        if diff < tol:
            return cur, panels
        prev = cur
    msg = f"quadrature did not converge: change {diff:.3e} > tol {tol:.1e} at {panels} panels"
    if strict:
        raise QuadratureError(msg, diff)
    warnings.warn(msg, QuadratureWarning, stacklevel=2)
    return prev, panels
