"""Uniform collocation grids on the periodic box and random parameter subsets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class CollocationGrid:
    dims: int
    n_per_dim: int
    points: np.ndarray
    weight: float
    lengths: tuple

    @property
    def n_points(self):
        return self.points.shape[0]

    @property
    def shape(self):
        return (self.n_per_dim,) * self.dims


def tensor_grid(dims, n_per_dim, lengths=None):
    """Tensor-product grid with lexicographic row order (last axis fastest).

    The quadrature weight is the cell volume, i.e. the periodic trapezoid rule.
    """
    if n_per_dim < 2:
        raise ValueError("n_per_dim must be >= 2")
    if dims < 1:
        raise ValueError("dims must be >= 1")
    lengths = (TWO_PI,) * dims if lengths is None else tuple(float(v) for v in lengths)
    if len(lengths) != dims:
        raise ValueError("need one length per dimension")
    axes = [L * np.arange(n_per_dim) / n_per_dim for L in lengths]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    weight = float(np.prod(lengths)) / n_per_dim ** dims
    return CollocationGrid(dims, n_per_dim, points, weight, lengths)


def l2_inner(grid, f, g):
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if f.shape != (grid.n_points,) or g.shape != (grid.n_points,):
        raise ValueError(
            f"expected vectors of length {grid.n_points}, got {f.shape} and {g.shape}")
    return grid.weight * float(f @ g)


def l2_norm(grid, f):
    return np.sqrt(l2_inner(grid, f, f))


def make_rng(seed):
    """Counter-based (Philox) generator; its ``bit_generator.state`` is a plain dict."""
    return np.random.Generator(np.random.Philox(seed))


def subsample_params(param_count, n_sub, rng):
    """Sorted uniform sample of ``n_sub`` distinct indices; advances ``rng``."""
    if not 1 <= n_sub <= param_count:
        raise ValueError(f"n_sub={n_sub} must lie in [1, {param_count}]")
    if n_sub == param_count:
        return np.arange(param_count)
    return np.sort(rng.choice(param_count, size=n_sub, replace=False))
