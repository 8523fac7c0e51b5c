"""Simplex discretizations with positivity-preserving linear interpolation.

d = 2 uses a uniform parameter grid on the segment, d = 3 a triangular
barycentric lattice. Interpolation is piecewise linear in barycentric
coordinates, hence exact on linear functions and nonnegative on nonnegative
data; quadrature weights integrate linear functions exactly and sum to one
(the normalized simplex measure).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UnsupportedDimensionError


@dataclass(frozen=True)
class SimplexGrid:
    dim: int
    resolution: int
    nodes: np.ndarray  # (N, d), pairwise distinct simplex points
    weights: np.ndarray  # (N,), >= 0, sum 1

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def interpolate(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Barycentric stencil for L1-normalized points.

        Returns (idx, w) with shapes (P, k): node indices and nonnegative
        weights summing to one per row, k = 2 for d = 2 and 3 for d = 3.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.dim == 2:
            return self._interp_2d(pts)
        return self._interp_3d(pts)

    def _interp_2d(self, pts):
        r = self.resolution
        x = np.clip(pts[:, 0] * r, 0.0, float(r))
        i = np.minimum(x.astype(np.intp), r - 1)
        frac = x - i
        idx = np.stack([i, i + 1], axis=1)
        w = np.stack([1.0 - frac, frac], axis=1)
        return idx, w

    def _interp_3d(self, pts):
        r = self.resolution
        x = np.clip(pts[:, 0] * r, 0.0, float(r))
        y = np.clip(pts[:, 1] * r, 0.0, float(r))
        i = np.minimum(x.astype(np.intp), r - 1)
        j = np.minimum(y.astype(np.intp), r - 1)
        fu = x - i
        fv = y - j
        lower = fu + fv <= 1.0
        idx = np.empty((pts.shape[0], 3), dtype=np.intp)
        w = np.empty((pts.shape[0], 3))
        li, lj, lfu, lfv = i[lower], j[lower], fu[lower], fv[lower]
        idx[lower, 0] = self._node_index(li, lj)
        idx[lower, 1] = self._node_index(np.minimum(li + 1, r - lj), lj)
        idx[lower, 2] = self._node_index(li, np.minimum(lj + 1, r - li))
        w[lower, 0] = 1.0 - lfu - lfv
        w[lower, 1] = lfu
        w[lower, 2] = lfv
        up = ~lower
        ui, uj, ufu, ufv = i[up], j[up], fu[up], fv[up]
        idx[up, 0] = self._node_index(ui + 1, uj)
        idx[up, 1] = self._node_index(ui, uj + 1)
        idx[up, 2] = self._node_index(ui + 1, uj + 1)
        w[up, 0] = 1.0 - ufv
        w[up, 1] = 1.0 - ufu
        w[up, 2] = ufu + ufv - 1.0
        return idx, np.maximum(w, 0.0)

    def _node_index(self, a, b):
        # lattice node (a, b, r-a-b); rows of constant a are stored contiguously
        r = self.resolution
        return a * (r + 1) - a * (a - 1) // 2 + b

    def interpolate_values(self, values: np.ndarray, points: np.ndarray) -> np.ndarray:
        idx, w = self.interpolate(points)
        return np.einsum("pk,pk->p", np.asarray(values)[idx], w)


def build_grid(d: int, resolution: int) -> SimplexGrid:
    """Uniform simplex grid; d = 2 segment or d = 3 triangular lattice."""
    if d not in (2, 3):
        raise UnsupportedDimensionError(f"grids cover d in {{2, 3}}, got d={d}")
    r = int(resolution)
    if r < 2:
        raise ValueError("resolution must be at least 2")
    if d == 2:
        t = np.arange(r + 1) / r
        nodes = np.stack([t, 1.0 - t], axis=1)
        weights = np.full(r + 1, 1.0 / r)
        weights[0] *= 0.5
        weights[-1] *= 0.5
        return SimplexGrid(2, r, _freeze(nodes), _freeze(weights))
    rows = []
    for a in range(r + 1):
        for b in range(r + 1 - a):
            rows.append((a / r, b / r, (r - a - b) / r))
    nodes = np.array(rows)
    weights = np.zeros(len(rows))
    grid = SimplexGrid(3, r, _freeze(nodes), weights)
    # vertex quadrature: every micro-triangle spreads its area evenly
    tri_w = 1.0 / (3.0 * r * r)
    for a in range(r):
        for b in range(r - a):
            for ia, ib in ((a, b), (a + 1, b), (a, b + 1)):
                weights[grid._node_index(ia, ib)] += tri_w
            if a + b <= r - 2:
                for ia, ib in ((a + 1, b), (a, b + 1), (a + 1, b + 1)):
                    weights[grid._node_index(ia, ib)] += tri_w
    weights.flags.writeable = False
    return grid


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a
