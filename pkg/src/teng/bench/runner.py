"""Experiment orchestration: reference, initial fit, time evolution, output files."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..baselines import obti_step, tdvp_rk4_step
from ..geometry import make_rng, tensor_grid
from ..pde import initial_condition, named_ic
from ..spectral import ReferenceSolution, heat_decay, idft, sample_spectrum, spectral_rk4_evolve
from ..stepper import (EvolutionState, FitResult, evolve, fit_initial, n_steps_for,
                       residual_bound, step_euler, step_heun, step_rk4)
from . import io
from .config import dump_config
from .metrics import ErrorSeries

log = logging.getLogger("teng.bench")

STEP_FOR_METHOD = {
    "TengEuler": step_euler,
    "TengHeun": step_heun,
    "TengRk4": step_rk4,
    "TdvpRk4": tdvp_rk4_step,
    "ObtiAdam": obti_step,
}


def rng_streams(seed):
    """Independent Philox streams for the initial fit and the time evolution."""
    fit_ss, evolve_ss = np.random.SeedSequence(seed).spawn(2)
    return make_rng(fit_ss), make_rng(evolve_ss)


def make_grid(cfg):
    return tensor_grid(cfg.pde.dims, cfg.grid.n_per_dim, cfg.domain_lengths())


def time_points(cfg):
    n = n_steps_for(cfg.time.T, cfg.time.dt)
    return np.arange(n + 1) * cfg.time.dt


# -- stages -----------------------------------------------------------------

def fit_stage(cfg) -> FitResult:
    rng, _ = rng_streams(cfg.seed)
    ic = named_ic(cfg.ic)
    return fit_initial(cfg.arch(), ic, make_grid(cfg), cfg.fit_config(), rng)


def initial_theta(cfg):
    if cfg.init_checkpoint is not None:
        theta, _ = io.load_checkpoint(cfg.init_checkpoint, cfg.arch())
        return theta, None
    res = fit_stage(cfg)
    log.info("initial fit: loss %.3e (converged=%s)", res.loss, res.converged)
    return res.theta, res


def initial_spectrum(cfg, theta=None):
    """Fourier coefficients of the initial field.

    With ``theta`` the spectrum of the network field is used instead of the
    analytic initial condition, so that errors measure time stepping alone.
    """
    lengths = cfg.domain_lengths()
    if theta is None:
        ic = named_ic(cfg.ic)
        func = lambda p: initial_condition(ic, p).value
    else:
        arch = cfg.arch()
        func = lambda p: arch.evaluate(theta, p, 0).value
    return sample_spectrum(func, cfg.reference.sample_n, cfg.kmax, lengths, cfg.pde.dims)


def build_reference(cfg, theta=None):
    """Reference fields on the collocation grid at ``0, dt, ..., T``."""
    times = time_points(cfg)
    u0 = initial_spectrum(cfg, theta)
    n = cfg.grid.n_per_dim
    meta = {"kmax": cfg.kmax, "sample_n": cfg.reference.sample_n, "n_per_dim": n}
    if cfg.pde.kind == "heat":
        fields = np.stack([idft(heat_decay(u0, cfg.nu, t), n).ravel() for t in times])
        return ReferenceSolution(times, fields, meta)
    ref = spectral_rk4_evolve(cfg.pde_spec(), u0, cfg.reference.dt_ref, times[-1],
                              store_times=times, eval_n=n)
    ref.meta.update(meta)
    return ref


def load_or_build_reference(cfg, theta0=None):
    """Reference from ``cfg.reference_file`` or freshly computed.

    ``theta0`` is only used when ``cfg.reference.source == "network"``.
    """
    if cfg.reference_file is None:
        if cfg.reference.source == "network":
            if theta0 is None:
                raise ValueError("a network-sourced reference needs the initial parameters")
            return build_reference(cfg, theta0)
        return build_reference(cfg)
    ref, dims, n, lengths = io.load_reference(cfg.reference_file)
    if dims != cfg.pde.dims or n != cfg.grid.n_per_dim:
        raise io.FormatError(f"{cfg.reference_file}: grid {n}^{dims} does not match config")
    if not np.allclose(lengths, cfg.domain_lengths(), rtol=0, atol=1e-12):
        raise io.FormatError(f"{cfg.reference_file}: domain lengths do not match config")
    return ref


# -- single experiment --------------------------------------------------------

@dataclass
class RunResult:
    errors: ErrorSeries
    rows: list
    residual_log: list
    theta: np.ndarray
    out_dir: Path
    fit: Optional[FitResult] = None

    @property
    def global_rel_l2(self):
        return self.errors.global_rel_l2


def run_experiment(cfg, theta0=None, reference=None, out_dir=None, fit=None):
    """Run one method and write ``errors.csv``, ``global_summary.csv`` and checkpoints.

    ``theta0`` and ``reference`` may be supplied to share them between methods.
    """
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    arch, grid = cfg.arch(), make_grid(cfg)
    if theta0 is None:
        theta0, fit = initial_theta(cfg)
    if reference is None:
        reference = load_or_build_reference(cfg, theta0)
    _, rng = rng_streams(cfg.seed)

    state = EvolutionState(np.array(theta0, dtype=np.float64), arch, cfg.pde_spec(), grid,
                           cfg.time.dt, stepper=cfg.method_config(), rng=rng)
    errors = ErrorSeries.empty(cfg.time.dt)
    rows = []
    stride = cfg.time.checkpoint_stride
    n_total = n_steps_for(cfg.time.T, cfg.time.dt)
    io.save_checkpoint(state.theta, arch, out / "theta_000000.ckpt")

    def record(s):
        u = arch.evaluate(s.theta, grid.points, 0).value
        e = errors.add(s.t, u, reference.at(s.t), grid)
        entry = s.residual_log[-1]
        rows.append((s.t, e, entry.loss, entry.iterations, residual_bound(s.residual_log)))
        if s.step % stride == 0 or s.step == n_total:
            io.save_checkpoint(s.theta, arch, out / f"theta_{s.step:06d}.ckpt")
        log.info("%s t=%.4f rel_l2=%.3e loss=%.3e", cfg.method.name, s.t, e, entry.loss)

    traj = evolve(state, cfg.time.T, STEP_FOR_METHOD[cfg.method.name], stride, record)
    io.write_csv(out / "errors.csv", io.ERRORS_HEADER, rows)
    g = errors.global_rel_l2 if rows else float("nan")
    io.write_csv(out / "global_summary.csv", io.SUMMARY_HEADER,
                 [(cfg.method.name, cfg.pde.kind, cfg.time.dt, cfg.time.T, g, len(rows))])
    dump_config(cfg, out / "config.json")
    return RunResult(errors, rows, traj.residual_log, traj.final_state.theta, out, fit)


def run_benchmark(cfg, methods, out_dir=None):
    """Run several methods from one shared initial fit and reference."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    theta0, fit = initial_theta(cfg)
    io.save_checkpoint(theta0, cfg.arch(), out / "init.ckpt")
    reference = load_or_build_reference(cfg, theta0)
    results = {}
    summary = []
    for name in methods:
        mcfg = cfg if name == cfg.method.name else cfg.with_method(name)
        res = run_experiment(mcfg, theta0, reference, out / name, fit)
        results[name] = res
        summary.append((name, cfg.pde.kind, cfg.time.dt, cfg.time.T, res.global_rel_l2,
                        len(res.rows)))
    io.write_csv(out / "global_summary.csv", io.SUMMARY_HEADER, summary)
    return results


def summary_table(root):
    """Collect every ``global_summary.csv`` below ``root`` into aligned text."""
    root = Path(root)
    lines = []
    for path in sorted(root.rglob("global_summary.csv")):
        for row in io.read_csv(path):
            rel = path.parent.relative_to(root)
            lines.append(f"{str(rel):<20} {row['method']:<10} {row['pde']:<11} "
                         f"dt={row['dt']:<8g} T={row['T']:<6g} "
                         f"global_rel_l2={row['global_rel_l2']:.6e} steps={int(row['total_steps'])}")
    if not lines:
        raise FileNotFoundError(f"no global_summary.csv below {root}")
    return "\n".join(lines)
