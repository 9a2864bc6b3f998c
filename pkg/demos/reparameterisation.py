"""
Reparameterisation: TDVP versus TENG
====================================

A single scalar u obeys du/dt = u.  Write it as u = theta or as
u = exp(theta) and take one explicit Euler step of 0.1 from u = 1.
"""
import math

import numpy as np

from teng.geometry import tensor_grid
from teng.linalg import LstsqConfig, solve_lstsq
from teng.net import FieldBatch
from teng.stepper import StepperConfig, teng_stepper


class Scalar:
    """Constant field u(x) = g(theta) on a two-point grid."""

    input_dim, param_count = 1, 1

    def __init__(self, g, dg):
        self.g, self.dg = g, dg

    def evaluate(self, theta, points, order=0):
        return FieldBatch(points, np.full(len(points), self.g(theta[0])))

    def jacobian(self, theta, points, subset=None):
        return np.full((len(points), 1), self.dg(theta[0]))


grid, dt = tensor_grid(1, 2), 0.1
models = {"u = theta": (Scalar(lambda t: t, lambda t: 1.0), 1.0),
          "u = exp(theta)": (Scalar(math.exp, math.exp), 0.0)}

# 1. TDVP: project du/dt onto the tangent direction, step in parameter space
for name, (m, th) in models.items():
    v = solve_lstsq(m.jacobian([th], grid.points), np.full(2, m.g(th)), LstsqConfig())
    print(f"TDVP  {name:<15} u(dt) = {m.g(th + dt * v[0]):.15f}")

# 2. TENG: fit the Euler target u + dt u = 1.1 in function space
for name, (m, th) in models.items():
    res = teng_stepper(m, np.array([th]), np.full(2, 1.1), grid,
                       StepperConfig(early_stop_loss=0.0), n_it=10)
    print(f"TENG  {name:<15} u(dt) = {m.g(res.theta[0]):.15f}")
