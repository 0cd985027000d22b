"""Tensor quadrature rules on the fundamental domain, the fiber torus and boxes in R^n."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import exact
from .group_actions import ActionFamily


@lru_cache(maxsize=64)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return (nodes + 1.0) / 2.0, weights / 2.0


def panel_rule(lo: float, hi: float, order: int, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [lo, hi]."""
    s, w = _gauss_legendre(order)
    edges = np.linspace(lo, hi, panels + 1)
    width = np.diff(edges)
    nodes = (edges[:-1, None] + width[:, None] * s[None, :]).ravel()
    weights = (width[:, None] * w[None, :]).ravel()
    return nodes, weights


def tensor_rule(rules: list[tuple[np.ndarray, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([w.ravel() for w in wgrids], axis=-1), axis=-1)
    return points, weights


@dataclass(frozen=True)
class QuadratureGrid:
    """Gauss-Legendre panels on F, trapezoid nodes on T^n, optional box rule on R^n.

    The base rule lives on the unit cube and is pushed through the affine
    chart of the family's fundamental domain.
    """

    order: int = 16
    panels: int = 4
    fiber_size: int = 16
    box_order: int = 16
    box_panels: int = 8

    def __post_init__(self):
        for name in ("order", "panels", "fiber_size", "box_order", "box_panels"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")

    def base(self, family: ActionFamily) -> tuple[np.ndarray, np.ndarray]:
        n = family.n
        s, w = tensor_rule([panel_rule(0.0, 1.0, self.order, self.panels)] * n)
        chart = exact.to_float(family.chart)
        offset = exact.to_float(family.offset)
        volume = abs(float(family.fundamental_volume))
        return s @ chart.T + offset, w * volume

    def fiber(self, n: int, size: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        size = int(size or self.fiber_size)
        nodes = np.arange(size) / size
        pts = np.array(list(itertools.product(nodes, repeat=n)), float).reshape(-1, n)
        return pts, np.full(len(pts), 1.0 / size ** n)

    def box(self, center, half_width, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        center = np.atleast_1d(np.asarray(center, float))
        half = np.broadcast_to(np.asarray(half_width, float), center.shape)
        rules = [panel_rule(c - h, c + h, self.box_order, self.box_panels) for c, h in zip(center, half)]
        return tensor_rule(rules)

    def doubled(self) -> "QuadratureGrid":
        return QuadratureGrid(self.order, 2 * self.panels, 2 * self.fiber_size,
                              self.box_order, 2 * self.box_panels)
