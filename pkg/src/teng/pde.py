"""Right-hand-side operators and closed-form initial conditions."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .net import FieldBatch

KINDS = ("heat", "allen_cahn", "burgers")


@dataclass(frozen=True)
class PdeSpec:
    kind: str
    nu: float
    dims: int = 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown PDE kind {self.kind!r}; choose from {KINDS}")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if self.dims not in (2, 3):
            raise ValueError("dims must be 2 or 3")
        if self.kind != "heat" and self.dims != 2:
            raise ValueError(f"{self.kind} is only supported in 2 dimensions")


def heat(nu=0.1, dims=2):
    return PdeSpec("heat", nu, dims)


def allen_cahn(nu=1 / 200):
    return PdeSpec("allen_cahn", nu, 2)


def burgers(nu=1 / 100):
    return PdeSpec("burgers", nu, 2)


def apply_operator(pde, fb):
    """Pointwise ``(L u)(x_p)`` from value, gradient and Laplacian samples."""
    if fb.laplacian is None:
        raise ValueError(f"{pde.kind} operator needs the Laplacian")
    out = pde.nu * fb.laplacian
    if pde.kind == "allen_cahn":
        out = out + fb.value - fb.value ** 3
    elif pde.kind == "burgers":
        if fb.grad is None:
            raise ValueError("burgers operator needs the gradient")
        out = out - fb.value * fb.grad.sum(axis=1)
    return out


# -- initial conditions -----------------------------------------------------

# A_{k1 k2 k3} and B_{k1 k2 k3} for k_i in {1, 2}
THREE_DIM_A000 = 0.043
THREE_DIM_A = {
    (1, 1, 1): 0.047, (1, 2, 1): -0.021, (2, 1, 1): 0.034, (2, 2, 1): -0.02,
    (1, 1, 2): -0.021, (1, 2, 2): -0.041, (2, 1, 2): 0.024, (2, 2, 2): 0.0,
}
THREE_DIM_B = {
    (1, 1, 1): -0.075, (1, 2, 1): -0.056, (2, 1, 1): -0.027, (2, 2, 1): -0.008,
    (1, 1, 2): 0.074, (1, 2, 2): -0.007, (2, 1, 2): 0.032, (2, 2, 2): 0.0,
}

IC_NAMES = ("two_dim_exp", "three_dim_trig", "burgers_alt")
IC_DIMS = {"two_dim_exp": 2, "three_dim_trig": 3, "burgers_alt": 2}


@dataclass(frozen=True)
class InitialCondition:
    name: str
    a000: float = 0.0
    a: dict = field(default_factory=dict)
    b: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in IC_NAMES:
            raise ValueError(f"unknown initial condition {self.name!r}")
        if self.name == "three_dim_trig" and (len(self.a) != 8 or len(self.b) != 8):
            raise ValueError("three_dim_trig needs exactly 8 A and 8 B coefficients")

    @property
    def dims(self):
        return IC_DIMS[self.name]

    @property
    def lengths(self):
        if self.name == "burgers_alt":
            return (2.0, 2 * np.pi)
        return (2 * np.pi,) * self.dims


def two_dim_exp():
    return InitialCondition("two_dim_exp")


def three_dim_trig(a000=THREE_DIM_A000, a=None, b=None):
    return InitialCondition("three_dim_trig", a000, dict(a or THREE_DIM_A), dict(b or THREE_DIM_B))


def burgers_alt():
    return InitialCondition("burgers_alt")


def named_ic(name):
    return {"two_dim_exp": two_dim_exp, "three_dim_trig": three_dim_trig,
            "burgers_alt": burgers_alt}[name]()


def _two_dim_exp(x, order):
    s1, s2 = np.sin(x[:, 0]), np.sin(x[:, 1])
    c1, c2 = np.cos(x[:, 0]), np.cos(x[:, 1])
    n = x.shape[0]
    value = np.zeros(n)
    grad = np.zeros((n, 2))
    lap = np.zeros(n)
    for alpha, beta, sign in ((3, 1, 1), (-3, 1, 1), (3, -1, -1), (-3, -1, -1)):
        e = sign * np.exp(alpha * s1 + beta * s2) / 100
        value += e
        if order >= 1:
            grad[:, 0] += alpha * c1 * e
            grad[:, 1] += beta * c2 * e
        if order == 2:
            lap += (alpha ** 2 * c1 ** 2 - alpha * s1 + beta ** 2 * c2 ** 2 - beta * s2) * e
    return value, grad, lap


def _three_dim_trig(ic, x, order):
    n = x.shape[0]
    value = np.full(n, ic.a000)
    grad = np.zeros((n, 3))
    lap = np.zeros(n)
    for coeffs, f, df in ((ic.a, np.cos, lambda t: -np.sin(t)), (ic.b, np.sin, np.cos)):
        for k, amp in coeffs.items():
            k = np.asarray(k, dtype=np.float64)
            fs = f(x * k)
            term = amp * fs.prod(axis=1)
            value += term
            if order >= 1:
                for i in range(3):
                    others = np.prod([fs[:, j] for j in range(3) if j != i], axis=0)
                    grad[:, i] += amp * k[i] * df(k[i] * x[:, i]) * others
            if order == 2:
                lap -= (k ** 2).sum() * term
    return value, grad, lap


def _burgers_alt(x, order):
    p = np.pi * x[:, 0] - 2
    q = x[:, 1] - 1
    value = np.exp(2 * (np.cos(p) + np.sin(q))) / 50
    q1 = -np.pi * np.sin(p)
    q2 = np.cos(q)
    grad = np.stack([2 * q1 * value, 2 * q2 * value], axis=1)
    q11 = -np.pi ** 2 * np.cos(p)
    q22 = -np.sin(q)
    lap = (2 * q11 + 4 * q1 ** 2 + 2 * q22 + 4 * q2 ** 2) * value
    return value, grad, lap


def initial_condition(ic, points, order=0):
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != ic.dims:
        raise ValueError(f"{ic.name} needs points of shape (n, {ic.dims}), got {x.shape}")
    if ic.name == "two_dim_exp":
        value, grad, lap = _two_dim_exp(x, order)
    elif ic.name == "three_dim_trig":
        value, grad, lap = _three_dim_trig(ic, x, order)
    else:
        value, grad, lap = _burgers_alt(x, order)
    return FieldBatch(x, value, grad if order >= 1 else None, lap if order == 2 else None)
