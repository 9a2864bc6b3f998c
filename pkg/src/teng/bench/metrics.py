"""Relative L2 errors per time and over the whole trajectory."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import l2_inner


def rel_l2(u_hat, u_ref, grid):
    ref = l2_inner(grid, u_ref, u_ref)
    if ref <= 0:
        raise ValueError("reference field has zero norm")
    d = np.asarray(u_hat, dtype=np.float64) - np.asarray(u_ref, dtype=np.float64)
    return float(np.sqrt(l2_inner(grid, d, d) / ref))


def global_rel_l2(pairs, grid, dt):
    """Space-time relative error with uniform weight ``dt`` on every stored time."""
    num = den = 0.0
    n = 0
    for u_hat, u_ref in pairs:
        d = np.asarray(u_hat, dtype=np.float64) - np.asarray(u_ref, dtype=np.float64)
        num += l2_inner(grid, d, d) * dt
        den += l2_inner(grid, u_ref, u_ref) * dt
        n += 1
    if n == 0:
        raise ValueError("need at least one time sample")
    if den <= 0:
        raise ValueError("reference has zero space-time norm")
    return float(np.sqrt(num / den))


@dataclass
class ErrorSeries:
    """Per-time errors plus the squared norms that reproduce the global value."""

    times: list
    rel_l2: list
    err_sq: list
    ref_sq: list
    dt: float

    @classmethod
    def empty(cls, dt):
        return cls([], [], [], [], dt)

    def add(self, t, u_hat, u_ref, grid):
        d = np.asarray(u_hat, dtype=np.float64) - np.asarray(u_ref, dtype=np.float64)
        e, r = l2_inner(grid, d, d), l2_inner(grid, u_ref, u_ref)
        if r <= 0:
            raise ValueError(f"reference field has zero norm at t={t}")
        self.times.append(float(t))
        self.err_sq.append(e)
        self.ref_sq.append(r)
        self.rel_l2.append(float(np.sqrt(e / r)))
        return self.rel_l2[-1]

    @property
    def global_rel_l2(self):
        if not self.times:
            raise ValueError("empty error series")
        return float(np.sqrt(sum(self.err_sq) * self.dt / (sum(self.ref_sq) * self.dt)))
