"""Least-squares solvers for the tangent-space projection."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

METHODS = ("svd", "cgls", "gradient")


@dataclass(frozen=True)
class LstsqConfig:
    """``method="gradient"`` replaces the solve by one step ``x = J^T b``."""

    method: str = "svd"
    rcond: float = 1e-12
    cg_max_iter: Optional[int] = None
    cg_tol: float = 1e-10

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown lstsq method {self.method!r}")
        if not 0 < self.rcond < 1:
            raise ValueError("rcond must lie in (0, 1)")
        if self.cg_tol <= 0:
            raise ValueError("cg_tol must be positive")
        if self.cg_max_iter is not None and self.cg_max_iter < 1:
            raise ValueError("cg_max_iter must be >= 1")


class CglsInfo(NamedTuple):
    iterations: int
    converged: bool
    breakdown: bool
    rel_normal_residual: float


def _check(J, b):
    J = np.asarray(J, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if J.ndim != 2 or b.shape != (J.shape[0],):
        raise ValueError(f"incompatible shapes {J.shape} and {b.shape}")
    if not (np.all(np.isfinite(J)) and np.all(np.isfinite(b))):
        raise ValueError("least-squares inputs contain non-finite values")
    return J, b


def svd_lstsq(J, b, rcond=1e-12):
    """Minimum-norm solution with singular values below ``rcond * s_max`` dropped."""
    J, b = _check(J, b)
    x, *_ = scipy.linalg.lstsq(J, b, cond=rcond, lapack_driver="gelsd",
                               check_finite=False)
    return x


def cgls(J, b, max_iter=None, tol=1e-10):
    """Conjugate gradients on ``J^T J x = J^T b`` from ``x = 0``.

    Returns ``(x, info)``.  A zero-curvature search direction stops the
    iteration early with ``info.breakdown`` set.
    """
    J, b = _check(J, b)
    m = J.shape[1]
    max_iter = m if max_iter is None else max_iter
    x = np.zeros(m)
    r = b.copy()
    s = J.T @ r
    gamma = float(s @ s)
    norm0 = np.sqrt(gamma)
    if norm0 == 0.0:
        return x, CglsInfo(0, True, False, 0.0)
    p = s.copy()
    for it in range(1, max_iter + 1):
        q = J @ p
        delta = float(q @ q)
        if delta == 0.0:
            return x, CglsInfo(it - 1, False, True, np.sqrt(gamma) / norm0)
        step = gamma / delta
        x += step * p
        r -= step * q
        s = J.T @ r
        gamma_new = float(s @ s)
        rel = np.sqrt(gamma_new) / norm0
        if rel <= tol:
            return x, CglsInfo(it, True, False, rel)
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
    return x, CglsInfo(max_iter, False, False, rel)


def gram_solve(J, b):
    """Normal-equation solve ``(J^T J)^{-1} J^T b``; only meant as a test oracle."""
    J, b = _check(J, b)
    return np.linalg.solve(J.T @ J, J.T @ b)


def solve_lstsq(J, b, cfg):
    if cfg.method == "svd":
        return svd_lstsq(J, b, cfg.rcond)
    if cfg.method == "cgls":
        return cgls(J, b, cfg.cg_max_iter, cfg.cg_tol)[0]
    J, b = _check(J, b)
    return J.T @ b
