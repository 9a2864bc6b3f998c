import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, strategies as st

from teng.baselines import tdvp_rhs
from teng.geometry import make_rng, subsample_params, tensor_grid
from teng.linalg import LstsqConfig, gram_solve
from teng.net import FieldBatch, NetworkArch, TrigLinearModel
from teng.pde import burgers, heat
from teng.stepper import (EvolutionState, FitConfig, LogEntry, StepperConfig,
                          build_target_euler, evolve, fit_initial, n_steps_for,
                          residual_bound, squared_l2, step_euler, step_heun, step_rk4,
                          teng_stepper)

TOY = TrigLinearModel()                      # theta_1 sin x + theta_2 cos x
GRID1 = tensor_grid(1, 32)
SMALL = NetworkArch(2, 2, 6, 2)
GRID16 = tensor_grid(2, 16)


def small_target(theta, dt=1e-3):
    return build_target_euler(SMALL, theta, heat(0.1), GRID16, dt)


def test_config_validation():
    for kw in (dict(n_it_first_stage=0), dict(n_it_second_stage=0), dict(alpha=0.0),
               dict(alpha=1.5), dict(subsample_first=0)):
        with pytest.raises(ValueError):
            StepperConfig(**kw)


def test_toy_fit_in_one_iteration():
    target = np.sin(GRID1.points[:, 0])
    res = teng_stepper(TOY, np.zeros(2), target, GRID1, StepperConfig(early_stop_loss=0.0),
                       n_it=1)
    assert np.allclose(res.theta, [1.0, 0.0], atol=1e-14)
    assert res.loss <= 1e-20 and res.iterations == 1


def test_zero_residual_stops_immediately():
    th = SMALL.init_params(0)
    target = SMALL.evaluate(th, GRID16.points).value
    res = teng_stepper(SMALL, th, target, GRID16, StepperConfig())
    assert res.loss == 0.0 and res.iterations == 0 and np.array_equal(res.theta, th)


def test_target_shape_checked():
    with pytest.raises(ValueError):
        teng_stepper(TOY, np.zeros(2), np.zeros(5), GRID1, StepperConfig())


def test_solver_failure_names_iteration():
    target = np.full(GRID1.n_points, np.nan)
    with pytest.raises(RuntimeError, match="iteration 0"):
        teng_stepper(TOY, np.zeros(2), target, GRID1, StepperConfig(early_stop_loss=-1.0))


def test_updates_only_subset():
    th = SMALL.init_params(1)
    cfg = StepperConfig(subsample_first=10, early_stop_loss=0.0)
    res = teng_stepper(SMALL, th, small_target(th), GRID16, cfg, make_rng(5), n_it=1)
    subset = subsample_params(SMALL.param_count, 10, make_rng(5))
    changed = np.flatnonzero(res.theta != th)
    assert set(changed) <= set(subset) and len(changed) > 0


@given(st.integers(0, 2 ** 31))
def test_loss_never_increases_full_svd(seed):
    th = SMALL.init_params(seed)
    res = teng_stepper(SMALL, th, small_target(th, 5e-3), GRID16,
                       StepperConfig(early_stop_loss=0.0), n_it=4)
    assert res.loss <= res.history[0]
    assert res.loss <= res.history[1]


@given(st.integers(0, 2 ** 31))
def test_one_iteration_is_tdvp_euler(seed):
    th = SMALL.init_params(seed)
    dt = 1e-3
    lsq = LstsqConfig(rcond=1e-8)
    cfg = StepperConfig(alpha=0.5, lstsq=lsq, early_stop_loss=-1.0)
    target = small_target(th, dt)
    res = teng_stepper(SMALL, th, target, GRID16, cfg, n_it=1)
    euler = th + dt * tdvp_rhs(SMALL, th, heat(0.1), GRID16, lstsq=lsq)
    loss = squared_l2(GRID16, SMALL.evaluate(euler, GRID16.points).value - target)
    assert abs(res.history[1] - loss) <= 1e-8 * loss
    if res.history[1] < res.history[0]:
        assert np.max(np.abs(res.theta - euler)) <= 1e-8 * max(1.0, np.max(np.abs(euler)))


def test_gauss_newton_and_gram_equivalence():
    toy = TrigLinearModel(tuple((kind, (k1, k2)) for kind in ("sin", "cos")
                                for k1, k2 in ((1, 0), (0, 1), (1, 1), (2, -1))))
    grid = tensor_grid(2, 12)
    th = np.linspace(-1, 1, toy.param_count)
    target = np.exp(np.sin(grid.points[:, 0])) * np.cos(grid.points[:, 1])
    J = toy.jacobian(th, grid.points)
    r = toy.evaluate(th, grid.points).value - target
    W = grid.weight
    G = J.T @ (W * J)
    grad = 2 * J.T @ (W * r)
    for alpha in (0.5, 0.2):
        cfg = StepperConfig(alpha=alpha, early_stop_loss=-1.0)
        res = teng_stepper(toy, th, target, grid, cfg, n_it=1)
        nat = -alpha * np.linalg.solve(G, grad)
        assert np.max(np.abs(res.theta - th - nat)) <= 1e-10
    gn = -gram_solve(np.sqrt(W) * J, np.sqrt(W) * r)
    assert np.max(np.abs(-0.5 * np.linalg.solve(G, grad) - gn)) <= 1e-10


def test_build_target_identities():
    th = SMALL.init_params(3)
    u = SMALL.evaluate(th, GRID16.points).value
    assert np.array_equal(build_target_euler(SMALL, th, heat(), GRID16, 0.0), u)
    t = build_target_euler(TOY, np.array([1.0, 0.0]), heat(0.1), GRID1, 0.01)
    assert np.allclose(t, (1 - 0.1 * 0.01) * np.sin(GRID1.points[:, 0]), atol=1e-15)
    const = TrigLinearModel((("cos", (0, 0)),))
    t = build_target_euler(const, np.array([0.7]), burgers(), GRID16, 0.1)
    assert np.allclose(t, 0.7, atol=1e-15)


def toy_state(integrator, dt, theta=(1.0, 0.0), nu=0.1):
    return EvolutionState(np.array(theta), TOY, heat(nu), GRID1, dt, integrator,
                          StepperConfig(early_stop_loss=0.0), make_rng(0))


@pytest.mark.parametrize("fn", [step_euler, step_heun, step_rk4])
def test_zero_dt_is_identity(fn):
    st0 = toy_state("euler", 0.0, (0.3, -0.2))
    st1 = fn(st0)
    assert np.array_equal(st1.theta, st0.theta) and st1.residual_log[-1].loss == 0.0


@pytest.mark.parametrize("fn,order", [(step_euler, 1), (step_heun, 2), (step_rk4, 4)])
def test_single_mode_taylor_factor(fn, order):
    nu, dt = 0.1, 0.05
    a = nu * dt
    import math
    factor = sum((-a) ** j / math.factorial(j) for j in range(order + 1))
    st1 = fn(toy_state("euler", dt, nu=nu))
    assert abs(st1.theta[0] - factor) <= 1e-14 and abs(st1.theta[1]) <= 1e-14
    assert st1.t == pytest.approx(dt) and len(st1.residual_log) == 1


def test_heun_logs_both_stages():
    st1 = step_heun(toy_state("heun", 0.01))
    assert len(st1.residual_log[0].stage_losses) == 2
    assert len(step_rk4(toy_state("rk4", 0.01)).residual_log[0].stage_losses) == 4


def test_evolve_zero_horizon():
    traj = evolve(toy_state("euler", 0.1), 0.0)
    assert len(traj.checkpoints) == 1 and traj.residual_log == []


def test_evolve_three_steps():
    traj = evolve(toy_state("euler", 0.1), 0.3)
    assert [round(e.t, 12) for e in traj.residual_log] == [0.1, 0.2, 0.3]
    assert [round(t, 12) for t, _ in traj.checkpoints] == [0.0, 0.1, 0.2, 0.3]


def test_evolve_checkpoint_stride():
    traj = evolve(toy_state("euler", 0.1), 0.5, checkpoint_stride=2)
    assert [round(t, 12) for t, _ in traj.checkpoints] == [0.0, 0.2, 0.4, 0.5]


def test_steps_must_divide_horizon():
    with pytest.raises(ValueError):
        n_steps_for(0.25, 0.1)
    assert n_steps_for(0.2, 0.005) == 40


def test_evolve_aborts_on_non_finite():
    def bad(state):
        return replace(state, theta=state.theta * np.nan, step=state.step + 1)
    with pytest.raises(FloatingPointError, match="t=0.1"):
        evolve(toy_state("euler", 0.1), 0.3, step_fn=bad)


def test_stepwise_equals_evolve():
    th = SMALL.init_params(2)
    cfg = StepperConfig(subsample_first=20, subsample_rest=15)
    st0 = EvolutionState(th, SMALL, heat(), GRID16, 0.01, "euler", cfg, make_rng(4))
    a = step_euler(step_euler(st0))
    st0b = EvolutionState(th.copy(), SMALL, heat(), GRID16, 0.01, "euler", cfg, make_rng(4))
    b = evolve(st0b, 0.02).final_state
    assert np.array_equal(a.theta, b.theta)


def test_residual_bound():
    assert residual_bound([LogEntry(0.1, 1e-16, 1)]) == pytest.approx(1e-8, rel=1e-12)
    assert residual_bound([LogEntry(0.1, 0.0, 1)] * 3) == 0.0
    assert residual_bound([LogEntry(0.1, 4e-10, 1)] * 5) == pytest.approx(5 * 2e-5, rel=1e-12)
    with pytest.raises(ValueError):
        residual_bound([])


@given(st.lists(st.floats(0, 1e-6), min_size=1, max_size=20))
def test_residual_bound_monotone(losses):
    log = [LogEntry(0.1 * (i + 1), l, 1) for i, l in enumerate(losses)]
    vals = [residual_bound(log[:k]) for k in range(1, len(log) + 1)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_fit_initial_representable_toy():
    def sine(points, order):
        x = points[:, 0]
        return FieldBatch(points, np.sin(x), np.cos(x)[:, None] if order >= 1 else None,
                          -np.sin(x) if order == 2 else None)
    res = fit_initial(TOY, sine, GRID1, FitConfig(), make_rng(0), theta0=np.zeros(2))
    assert res.loss <= 1e-20 and res.converged
    assert res.stage1_iterations + res.stage2_iterations == 1


def test_fit_initial_deterministic():
    from teng.pde import two_dim_exp
    cfg = FitConfig(stage1_max_iter=3, stage2_max_iter=2)
    a = fit_initial(SMALL, two_dim_exp(), GRID16, cfg, make_rng(7))
    b = fit_initial(SMALL, two_dim_exp(), GRID16, cfg, make_rng(7))
    assert np.array_equal(a.theta, b.theta) and not a.converged
    assert a.loss <= squared_l2(GRID16, SMALL.evaluate(SMALL.init_params(
        int(make_rng(7).integers(2 ** 63))), GRID16.points).value
        - __import__("teng").initial_condition(two_dim_exp(), GRID16.points).value)
