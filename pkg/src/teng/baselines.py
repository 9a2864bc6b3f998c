"""Comparison methods: sparse TDVP with RK4, and OBTI with Adam."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .linalg import LstsqConfig, solve_lstsq
from .pde import apply_operator
from .stepper import LogEntry, StepResult, _subset, build_target_euler, squared_l2


@dataclass(frozen=True)
class TdvpConfig:
    """``n_sub`` parameters are drawn once per time step (``None``: all)."""

    n_sub: Optional[int] = None
    lstsq: LstsqConfig = field(default_factory=LstsqConfig)


def _tdvp_solve(model, theta, pde, grid, subset, lstsq):
    fb = model.evaluate(theta, grid.points, 2)
    lu = apply_operator(pde, fb)
    J = model.jacobian(theta, grid.points, subset)
    sw = np.sqrt(grid.weight)
    sol = solve_lstsq(sw * J, sw * lu, lstsq)
    vel = np.zeros(model.param_count)
    if subset is None:
        vel[:] = sol
    else:
        vel[subset] = sol
    return vel, squared_l2(grid, J @ sol - lu)


def tdvp_rhs(model, theta, pde, grid, subset=None, lstsq=None):
    """Parameter velocity from projecting ``L u`` onto the tangent space.

    Zero outside ``subset``.
    """
    return _tdvp_solve(model, theta, pde, grid, subset, lstsq or LstsqConfig())[0]


def projection_residual(model, theta, pde, grid, subset=None, lstsq=None):
    """Squared L2 norm of the part of ``L u`` the tangent space misses."""
    return _tdvp_solve(model, theta, pde, grid, subset, lstsq or LstsqConfig())[1]


def tdvp_rk4_step(state):
    cfg = state.stepper
    subset = _subset(state.model, cfg.n_sub, state.rng)
    dt, th = state.dt, state.theta

    def f(theta):
        return tdvp_rhs(state.model, theta, state.pde, state.grid, subset, cfg.lstsq)

    k1, resid = _tdvp_solve(state.model, th, state.pde, state.grid, subset, cfg.lstsq)
    k2 = f(th + 0.5 * dt * k1)
    k3 = f(th + 0.5 * dt * k2)
    k4 = f(th + dt * k3)
    theta = th + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    # logged loss: first-stage projection defect scaled to one Euler step
    entry = LogEntry(state.t0 + (state.step + 1) * dt, dt * dt * resid, 1)
    return replace(state, theta=theta, step=state.step + 1,
                   residual_log=state.residual_log + [entry])


# -- OBTI -------------------------------------------------------------------

@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr0: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    decay_steps: float = 300.0

    def __post_init__(self):
        if self.m.shape != self.v.shape:
            raise ValueError("moment vectors must have equal length")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("betas must lie in (0, 1)")

    @classmethod
    def zeros(cls, n, **kw):
        return cls(np.zeros(n), np.zeros(n), **kw)

    @property
    def lr(self):
        return self.lr0 * 2.0 ** (-self.step / self.decay_steps)


def adam_step(adam, grad):
    """One bias-corrected Adam update; the learning rate halves every ``decay_steps``."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != adam.m.shape:
        raise ValueError("gradient length does not match optimizer state")
    t = adam.step + 1
    m = adam.beta1 * adam.m + (1 - adam.beta1) * grad
    v = adam.beta2 * adam.v + (1 - adam.beta2) * grad * grad
    m_hat = m / (1 - adam.beta1 ** t)
    v_hat = v / (1 - adam.beta2 ** t)
    delta = -adam.lr * m_hat / (np.sqrt(v_hat) + adam.eps)
    return replace(adam, m=m, v=v, step=t), delta


@dataclass(frozen=True)
class ObtiConfig:
    """``optimizer`` is ``"adam"`` or ``"sgd"`` (plain gradient steps of size ``lr0``)."""

    n_iter: int = 300
    optimizer: str = "adam"
    lr0: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    decay_steps: Optional[float] = None

    def __post_init__(self):
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")


def loss_gradient(model, theta, u_target, grid):
    """``(loss, dL/dtheta)`` for the squared L2 loss, ``dL/dtheta = 2 J^T W r``."""
    r = model.evaluate(theta, grid.points, 0).value - u_target
    J = model.jacobian(theta, grid.points)
    return squared_l2(grid, r), 2.0 * J.T @ (grid.weight * r)


def obti_fit(model, theta_init, u_target, grid, cfg):
    """Minimise the squared L2 distance to ``u_target`` with a fresh optimizer."""
    theta = np.array(theta_init, dtype=np.float64)
    adam = AdamState.zeros(model.param_count, lr0=cfg.lr0, beta1=cfg.beta1, beta2=cfg.beta2,
                           eps=cfg.eps, decay_steps=cfg.decay_steps or cfg.n_iter)
    history = []
    for _ in range(cfg.n_iter):
        loss, grad = loss_gradient(model, theta, u_target, grid)
        history.append(loss)
        if cfg.optimizer == "adam":
            adam, delta = adam_step(adam, grad)
        else:
            delta = -cfg.lr0 * grad
        theta = theta + delta
    r = model.evaluate(theta, grid.points, 0).value - u_target
    history.append(squared_l2(grid, r))
    return StepResult(theta, history[-1], cfg.n_iter, tuple(history))


def obti_step(state, n_opt_iters=None):
    cfg = state.stepper
    if n_opt_iters is not None:
        cfg = replace(cfg, n_iter=n_opt_iters)
    target = build_target_euler(state.model, state.theta, state.pde, state.grid, state.dt)
    res = obti_fit(state.model, state.theta, target, state.grid, cfg)
    entry = LogEntry(state.t0 + (state.step + 1) * state.dt, res.loss, res.iterations,
                     (res.loss,), (res.iterations,))
    return replace(state, theta=res.theta, step=state.step + 1,
                   residual_log=state.residual_log + [entry])
