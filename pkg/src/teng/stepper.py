"""Time-evolving natural gradient: per-step fitting and time integrators.

Each physical time step builds a target field from the current network and
fits it by repeated Gauss-Newton style projections: the function-space
gradient of the squared L2 loss is pulled back to parameter space through a
(quadrature weighted) least-squares solve on a random parameter subset.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, List, NamedTuple, Optional

import numpy as np

from .geometry import make_rng, subsample_params
from .linalg import LstsqConfig, solve_lstsq
from .pde import apply_operator

INTEGRATORS = ("euler", "heun", "rk4")


@dataclass(frozen=True)
class StepperConfig:
    """Iteration budget and sparsity of the per-step fit.

    ``subsample_*=None`` means every parameter takes part in the solve.  The
    default cutoff ``rcond=1e-8`` keeps the near-null directions of the
    network Jacobian out of the update; tighter cutoffs make the iteration
    diverge on small networks.
    """

    n_it_first_stage: int = 7
    n_it_second_stage: int = 5
    subsample_first: Optional[int] = None
    subsample_rest: Optional[int] = None
    alpha: float = 0.5
    lstsq: LstsqConfig = field(default_factory=lambda: LstsqConfig(rcond=1e-8))
    early_stop_loss: float = 1e-14

    def __post_init__(self):
        if self.n_it_first_stage < 1 or self.n_it_second_stage < 1:
            raise ValueError("iteration counts must be >= 1")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        for n in (self.subsample_first, self.subsample_rest):
            if n is not None and n < 1:
                raise ValueError("subsample counts must be >= 1")


class StepResult(NamedTuple):
    theta: np.ndarray
    loss: float
    iterations: int
    history: tuple


class LogEntry(NamedTuple):
    t: float
    loss: float
    iterations: int
    stage_losses: tuple = ()
    stage_iterations: tuple = ()


def squared_l2(grid, r):
    return grid.weight * float(r @ r)


def _subset(model, n_sub, rng):
    if n_sub is None or n_sub >= model.param_count:
        return None
    return subsample_params(model.param_count, n_sub, rng)


def projected_update(model, theta, points, weight, delta_u, subset, lstsq):
    """Least-squares pull-back of a function-space step onto ``subset``.

    Rows are scaled by ``sqrt(weight)`` so the solve minimises the discrete
    L2 norm of ``delta_u - J dtheta``.
    """
    sw = np.sqrt(weight)
    J = model.jacobian(theta, points, subset)
    return solve_lstsq(sw * J, sw * delta_u, lstsq)


def teng_stepper(model, theta_init, u_target, grid, cfg, rng=None, n_it=None):
    """Fit ``u_target`` starting from ``theta_init``.

    Runs ``n_it`` (default ``cfg.n_it_first_stage``) natural-gradient
    iterations, drawing ``cfg.subsample_first`` parameters on the first and
    ``cfg.subsample_rest`` on later iterations.  Stops early once the loss
    is at or below ``cfg.early_stop_loss``.  Gauss-Newton iterates are not
    monotone on badly conditioned networks, so the parameters with the
    lowest loss seen are returned; ``history`` keeps every iterate's loss.
    """
    u_target = np.asarray(u_target, dtype=np.float64)
    if u_target.shape != (grid.n_points,):
        raise ValueError(f"target has shape {u_target.shape}, expected ({grid.n_points},)")
    n_it = cfg.n_it_first_stage if n_it is None else n_it
    rng = make_rng(0) if rng is None else rng
    theta = np.array(theta_init, dtype=np.float64)
    best_theta, best = theta, np.inf
    history = []
    used = 0
    for it in range(n_it + 1):
        r = model.evaluate(theta, grid.points, 0).value - u_target
        loss = squared_l2(grid, r)
        history.append(loss)
        if loss < best:
            best_theta, best = theta.copy(), loss
        if it == n_it or loss <= cfg.early_stop_loss:
            break
        subset = _subset(model, cfg.subsample_first if it == 0 else cfg.subsample_rest, rng)
        try:
            step = projected_update(model, theta, grid.points, grid.weight,
                                    -2.0 * cfg.alpha * r, subset, cfg.lstsq)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise RuntimeError(f"least-squares solve failed at iteration {it}: {exc}") from exc
        if subset is None:
            theta += step
        else:
            theta[subset] += step
        used += 1
    return StepResult(best_theta, best, used, tuple(history))


# -- time integration -------------------------------------------------------

@dataclass
class EvolutionState:
    """Everything needed to take the next time step.

    ``rng`` is a single-owner generator that the step functions advance.
    """

    theta: np.ndarray
    model: object
    pde: object
    grid: object
    dt: float
    integrator: str = "euler"
    stepper: object = field(default_factory=StepperConfig)
    rng: np.random.Generator = field(default_factory=lambda: make_rng(0))
    residual_log: List[LogEntry] = field(default_factory=list)
    step: int = 0
    t0: float = 0.0

    def __post_init__(self):
        if self.dt < 0:
            raise ValueError("dt must be non-negative")

    @property
    def t(self):
        return self.t0 + self.step * self.dt


def field_and_rhs(model, theta, pde, grid):
    fb = model.evaluate(theta, grid.points, 2)
    return fb.value, apply_operator(pde, fb)


def build_target_euler(model, theta, pde, grid, dt):
    u, lu = field_and_rhs(model, theta, pde, grid)
    return u + dt * lu


def _advance(state, theta, stages):
    t_new = state.t0 + (state.step + 1) * state.dt
    entry = LogEntry(t_new, stages[-1].loss, sum(s.iterations for s in stages),
                     tuple(s.loss for s in stages), tuple(s.iterations for s in stages))
    return replace(state, theta=theta, step=state.step + 1,
                   residual_log=state.residual_log + [entry])


def step_euler(state):
    cfg = state.stepper
    target = build_target_euler(state.model, state.theta, state.pde, state.grid, state.dt)
    res = teng_stepper(state.model, state.theta, target, state.grid, cfg, state.rng,
                       cfg.n_it_first_stage)
    return _advance(state, res.theta, [res])


def step_heun(state):
    cfg, dt = state.stepper, state.dt
    model, pde, grid = state.model, state.pde, state.grid
    u, k1 = field_and_rhs(model, state.theta, pde, grid)
    tmp = teng_stepper(model, state.theta, u + dt * k1, grid, cfg, state.rng,
                       cfg.n_it_first_stage)
    _, k2 = field_and_rhs(model, tmp.theta, pde, grid)
    res = teng_stepper(model, tmp.theta, u + 0.5 * dt * (k1 + k2), grid, cfg, state.rng,
                       cfg.n_it_second_stage)
    return _advance(state, res.theta, [tmp, res])


def step_rk4(state):
    """Classical RK4 where every stage field is a fitted network."""
    cfg, dt = state.stepper, state.dt
    model, pde, grid = state.model, state.pde, state.grid
    u, k1 = field_and_rhs(model, state.theta, pde, grid)
    s2 = teng_stepper(model, state.theta, u + 0.5 * dt * k1, grid, cfg, state.rng,
                      cfg.n_it_first_stage)
    _, k2 = field_and_rhs(model, s2.theta, pde, grid)
    s3 = teng_stepper(model, s2.theta, u + 0.5 * dt * k2, grid, cfg, state.rng,
                      cfg.n_it_second_stage)
    _, k3 = field_and_rhs(model, s3.theta, pde, grid)
    s4 = teng_stepper(model, s3.theta, u + dt * k3, grid, cfg, state.rng,
                      cfg.n_it_second_stage)
    _, k4 = field_and_rhs(model, s4.theta, pde, grid)
    target = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    res = teng_stepper(model, s4.theta, target, grid, cfg, state.rng, cfg.n_it_second_stage)
    return _advance(state, res.theta, [s2, s3, s4, res])


STEP_FUNCTIONS = {"euler": step_euler, "heun": step_heun, "rk4": step_rk4}


class Trajectory(NamedTuple):
    checkpoints: list
    residual_log: list
    final_state: EvolutionState


def n_steps_for(T, dt):
    if T < 0:
        raise ValueError("T must be non-negative")
    if T == 0:
        return 0
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = int(round(T / dt))
    if abs(n * dt - T) > 1e-9 * T:
        raise ValueError(f"T={T} is not an integer multiple of dt={dt}")
    return n


def evolve(state, T, step_fn: Optional[Callable] = None, checkpoint_stride=1,
           callback: Optional[Callable] = None):
    """Advance ``state`` by ``T / dt`` steps.

    Checkpoints ``(t, theta)`` are kept for the initial state, every
    ``checkpoint_stride``-th step and the final step.  ``callback(state)`` is
    invoked after every step.
    """
    step_fn = step_fn or STEP_FUNCTIONS[state.integrator]
    n = n_steps_for(T, state.dt)
    checkpoints = [(state.t, state.theta.copy())]
    for i in range(1, n + 1):
        state = step_fn(state)
        if not np.all(np.isfinite(state.theta)):
            raise FloatingPointError(f"non-finite parameters at t={state.t:.6g}")
        if i % checkpoint_stride == 0 or i == n:
            checkpoints.append((state.t, state.theta.copy()))
        if callback is not None:
            callback(state)
    return Trajectory(checkpoints, state.residual_log, state)


def residual_bound(residual_log):
    """Triangle-inequality surrogate ``sum_n ||r_n||`` of the accumulated fit error."""
    if len(residual_log) == 0:
        raise ValueError("empty residual log")
    return float(sum(np.sqrt(max(e.loss, 0.0)) for e in residual_log))


# -- initial fit ------------------------------------------------------------

@dataclass(frozen=True)
class FitConfig:
    """Two-stage fit of the initial condition.

    Stage 1 minimises the value-plus-gradient (Sobolev) loss with damped
    natural-gradient steps; stage 2 switches to the plain squared L2 loss and
    runs ordinary stepper iterations, keeping the best parameters seen.
    """

    stage1_threshold: float = 1e-7
    stage1_max_iter: int = 300
    stage2_threshold: float = 1e-14
    stage2_max_iter: int = 100
    stage2_subsample: Optional[int] = None
    lstsq: LstsqConfig = field(default_factory=lambda: LstsqConfig(rcond=1e-8))
    damping0: float = 1e-3

    def __post_init__(self):
        if self.stage1_max_iter < 0 or self.stage2_max_iter < 0:
            raise ValueError("iteration caps must be non-negative")


class FitResult(NamedTuple):
    theta: np.ndarray
    loss: float
    converged: bool
    stage1_loss: float
    stage1_iterations: int
    stage2_iterations: int


def _sobolev_residual(model, theta, grid, target):
    fb = model.evaluate(theta, grid.points, 1)
    sw = np.sqrt(grid.weight)
    return sw * np.concatenate([fb.value - target.value, (fb.grad - target.grad).T.ravel()])


def _sobolev_jacobian(model, theta, grid):
    sw = np.sqrt(grid.weight)
    J = model.jacobian(theta, grid.points)
    return sw * np.concatenate([J, *model.grad_jacobian(theta, grid.points)], axis=0)


def _fit_sobolev(model, theta, grid, target, cfg):
    """Damped Gauss-Newton on the Sobolev residual.

    The damping is scaled by the Jacobian column norms and starts at zero, so
    an exactly representable target is hit in one step.
    """
    R = _sobolev_residual(model, theta, grid, target)
    loss = float(R @ R)
    lam = 0.0
    it = 0
    while it < cfg.stage1_max_iter and loss > cfg.stage1_threshold:
        J = _sobolev_jacobian(model, theta, grid)
        D = np.sqrt(np.einsum("ij,ij->j", J, J))
        it += 1
        while True:
            if lam == 0.0:
                step = solve_lstsq(J, -R, cfg.lstsq)
            else:
                A = np.concatenate([J, np.diag(np.sqrt(lam) * D)], axis=0)
                step = solve_lstsq(A, np.concatenate([-R, np.zeros(len(D))]), cfg.lstsq)
            R_new = _sobolev_residual(model, theta + step, grid, target)
            loss_new = float(R_new @ R_new)
            if loss_new < loss:
                theta, R, loss = theta + step, R_new, loss_new
                lam = lam / 3 if lam > 1e-12 else 0.0
                break
            lam = max(4 * lam, cfg.damping0)
            if lam > 1e10:
                return theta, loss, it
    return theta, loss, it


def fit_initial(model, ic, grid, cfg=None, rng=None, theta0=None):
    """Fit network parameters to the initial condition ``ic``.

    ``ic`` is an :class:`InitialCondition` or a callable ``(points, order)``
    returning a :class:`FieldBatch`.

    Returns a :class:`FitResult`.  Stage-2 Gauss-Newton iterates are not
    monotone (and may need to climb out of a narrow valley), so they run
    unguarded while the best parameters seen are returned; ``converged`` is
    False when the iteration cap is hit before ``cfg.stage2_threshold``.
    """
    from .pde import initial_condition

    cfg = cfg or FitConfig()
    rng = make_rng(0) if rng is None else rng
    if theta0 is None:
        theta0 = model.init_params(int(rng.integers(2 ** 63)))
    theta = np.array(theta0, dtype=np.float64)
    target = ic(grid.points, 1) if callable(ic) else initial_condition(ic, grid.points, 1)

    theta, loss1, it1 = _fit_sobolev(model, theta, grid, target, cfg)

    r = model.evaluate(theta, grid.points, 0).value - target.value
    loss = squared_l2(grid, r)
    best_theta, best = theta, loss
    it2 = 0
    while it2 < cfg.stage2_max_iter and best > cfg.stage2_threshold:
        it2 += 1
        subset = _subset(model, cfg.stage2_subsample, rng)
        step = projected_update(model, theta, grid.points, grid.weight, -r, subset, cfg.lstsq)
        theta = theta.copy()
        if subset is None:
            theta += step
        else:
            theta[subset] += step
        try:
            r = model.evaluate(theta, grid.points, 0).value - target.value
            loss = squared_l2(grid, r)
        except FloatingPointError:
            loss = np.inf
        if loss < best:
            best_theta, best = theta, loss
        elif not np.isfinite(loss):
            theta = best_theta
            r = model.evaluate(theta, grid.points, 0).value - target.value
    return FitResult(best_theta, best, best <= cfg.stage2_threshold, loss1, it1, it2)
