"""Composite Gauss-Legendre quadrature."""

from functools import lru_cache

import numpy as np

from .errors import NumericError


@lru_cache(maxsize=32)
def legendre_nodes(order):
    """Nodes and weights on [-1, 1] (cached)."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_nodes(a, b, panels, order):
    """Nodes and weights of the composite rule with ``panels`` equal panels."""
    x, w = legendre_nodes(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def composite_gauss_legendre(f, a, b, panels=1, order=16):
    """Integrate vectorized ``f`` over [a, b] with a fixed composite rule."""
    nodes, weights = panel_nodes(a, b, panels, order)
    return np.sum(weights * f(nodes))


def adaptive_gauss_legendre(f, a, b, rtol=1e-8, order=16, max_panels=2 ** 16, atol=0.0):
    """Halve every panel until the relative change drops below ``rtol``.

    Returns ``(value, trace)`` where ``trace`` lists ``(panels, value)`` for
    each refinement level.  Raises :class:`NumericError` carrying that trace
    when ``max_panels`` is reached first.
    """
    panels = 1
    prev = composite_gauss_legendre(f, a, b, panels, order)
    trace = [(panels, prev)]
    while panels < max_panels:
        panels *= 2
        cur = composite_gauss_legendre(f, a, b, panels, order)
        trace.append((panels, cur))
        if abs(cur - prev) <= rtol * abs(cur) + atol:
            return cur, trace
        prev = cur
    raise NumericError("Gauss-Legendre refinement did not converge", trace=trace)
