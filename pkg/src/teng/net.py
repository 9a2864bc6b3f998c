"""Periodic tanh MLP with exact spatial derivatives and parameter Jacobians.

The network is

    u(x) = W_L tanh(... tanh(W_1 e(x) + b_1) ...) + b_L

where the embedding ``e`` maps every coordinate ``x_i`` to ``K`` features
``a_ik cos(s_i x_i + phi_ik) + c_ik`` with ``s_i = 2 pi / L_i``, so the field
is periodic with period ``L_i`` along axis ``i``.

Flat parameter layout: ``a (d*K), phi (d*K), c (d*K)`` followed by
``W_l`` (row-major, ``out x in``) and ``b_l`` for ``l = 1..L``.  The last
entry of the vector is therefore the output bias.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass
class FieldBatch:
    """Field value and optional spatial derivatives at a batch of points."""

    points: np.ndarray
    value: np.ndarray
    grad: Optional[np.ndarray] = None
    laplacian: Optional[np.ndarray] = None

    def __post_init__(self):
        n = self.points.shape[0]
        if self.value.shape != (n,):
            raise ValueError(f"value has shape {self.value.shape}, expected ({n},)")
        if self.grad is not None and self.grad.shape[0] != n:
            raise ValueError("grad row count does not match points")
        if self.laplacian is not None and self.laplacian.shape != (n,):
            raise ValueError("laplacian row count does not match points")


class NonFiniteError(FloatingPointError):
    """Raised when a forward pass produces inf/nan; carries the layer index."""

    def __init__(self, layer: int, what: str = "activation"):
        super().__init__(f"non-finite {what} at layer {layer}")
        self.layer = layer


def _check_finite(arr, layer, what="activation"):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(layer, what)


def _as_points(points, dim):
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise ValueError(f"points must have shape (n, {dim}), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("points contain non-finite values")
    return x


def check_subset(subset, param_count):
    """Validate a parameter index list; ``None`` means all parameters."""
    if subset is None:
        return np.arange(param_count)
    idx = np.asarray(subset)
    if idx.ndim != 1 or idx.size == 0:
        raise ValueError("subset must be a non-empty 1-D index list")
    if not np.issubdtype(idx.dtype, np.integer):
        raise ValueError("subset indices must be integers")
    if idx[0] < 0 or idx[-1] >= param_count:
        raise IndexError(f"subset index out of range [0, {param_count})")
    if np.any(np.diff(idx) <= 0):
        raise ValueError("subset indices must be strictly increasing")
    return idx


@dataclass(frozen=True)
class NetworkArch:
    """Architecture descriptor of the periodic MLP.

    ``n_layers`` counts the affine maps including the scalar output layer,
    so ``n_layers=3`` has two tanh hidden layers.
    """

    input_dim: int = 2
    embed_terms: int = 20
    hidden_dim: int = 40
    n_layers: int = 7
    lengths: Optional[tuple] = None

    def __post_init__(self):
        if self.input_dim not in (2, 3):
            raise ValueError("input_dim must be 2 or 3")
        if self.n_layers < 2:
            raise ValueError("n_layers must be >= 2")
        if self.hidden_dim < 1 or self.embed_terms < 1:
            raise ValueError("hidden_dim and embed_terms must be >= 1")
        if self.lengths is None:
            object.__setattr__(self, "lengths", (TWO_PI,) * self.input_dim)
        else:
            lengths = tuple(float(v) for v in self.lengths)
            if len(lengths) != self.input_dim or min(lengths) <= 0:
                raise ValueError("lengths must hold one positive period per input dim")
            object.__setattr__(self, "lengths", lengths)

    # -- layout -----------------------------------------------------------

    @property
    def embed_width(self):
        return self.input_dim * self.embed_terms

    @property
    def layer_shapes(self):
        """List of ``(out, in)`` shapes of the affine maps."""
        widths = [self.embed_width] + [self.hidden_dim] * (self.n_layers - 1) + [1]
        return [(widths[i + 1], widths[i]) for i in range(self.n_layers)]

    @property
    def param_count(self):
        return 3 * self.embed_width + sum(o * i + o for o, i in self.layer_shapes)

    @property
    def layer_spec(self):
        """Widths ``[K, hidden, ..., hidden, 1]`` as stored in checkpoints."""
        return [self.embed_terms] + [self.hidden_dim] * (self.n_layers - 1) + [1]

    @property
    def scales(self):
        return TWO_PI / np.asarray(self.lengths)

    def _slices(self):
        e = self.embed_width
        out = {"a": slice(0, e), "phi": slice(e, 2 * e), "c": slice(2 * e, 3 * e)}
        pos = 3 * e
        for l, (o, i) in enumerate(self.layer_shapes):
            out[f"W{l}"] = slice(pos, pos + o * i)
            pos += o * i
            out[f"b{l}"] = slice(pos, pos + o)
            pos += o
        return out

    def unpack(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.param_count,):
            raise ValueError(
                f"parameter vector has length {theta.shape}, expected {self.param_count}")
        sl = self._slices()
        d, k = self.input_dim, self.embed_terms
        p = {name: theta[sl[name]].reshape(d, k) for name in ("a", "phi", "c")}
        for l, (o, i) in enumerate(self.layer_shapes):
            p[f"W{l}"] = theta[sl[f"W{l}"]].reshape(o, i)
            p[f"b{l}"] = theta[sl[f"b{l}"]]
        return p

    # -- initialization ---------------------------------------------------

    def init_params(self, seed):
        """Deterministic scaled-normal initialization from a Philox stream."""
        rng = np.random.Generator(np.random.Philox(seed))
        d, k = self.input_dim, self.embed_terms
        parts = [
            rng.standard_normal(d * k),
            rng.uniform(0.0, TWO_PI, d * k),
            np.zeros(d * k),
        ]
        for o, i in self.layer_shapes:
            parts.append(rng.standard_normal(o * i) / np.sqrt(i))
            parts.append(rng.uniform(-1.0, 1.0, o) / np.sqrt(i))
        return np.concatenate(parts)

    # -- forward ----------------------------------------------------------

    def _embed(self, p, x):
        arg = x[:, :, None] * self.scales[None, :, None] + p["phi"][None]
        cos, sin = np.cos(arg), np.sin(arg)
        h0 = p["a"][None] * cos + p["c"][None]
        return cos, sin, h0

    def evaluate(self, theta, points, order=0):
        """Field value, gradient (``order >= 1``) and Laplacian (``order == 2``)."""
        if order not in (0, 1, 2):
            raise ValueError("order must be 0, 1 or 2")
        p = self.unpack(theta)
        x = _as_points(points, self.input_dim)
        n, d, k = x.shape[0], self.input_dim, self.embed_terms
        s = self.scales
        cos, sin, h0 = self._embed(p, x)
        h = h0.reshape(n, d * k)
        _check_finite(h, 0)
        if order >= 1:
            # dh[:, i, :] is the derivative of the embedding wrt x_i
            dh = np.zeros((n, d, d, k))
            for i in range(d):
                dh[:, i, i, :] = -p["a"][i] * s[i] * sin[:, i, :]
            dh = dh.reshape(n, d, d * k)
        if order == 2:
            lap = (-p["a"][None] * (s ** 2)[None, :, None] * cos).reshape(n, d * k)

        last = self.n_layers - 1
        for l in range(last):
            W, b = p[f"W{l}"], p[f"b{l}"]
            z = h @ W.T + b
            h = np.tanh(z)
            _check_finite(h, l + 1)
            if order >= 1:
                d1 = 1.0 - h * h
                dz = dh @ W.T
                dh = d1[:, None, :] * dz
            if order == 2:
                d2 = -2.0 * h * d1
                lap = d1 * (lap @ W.T) + d2 * np.einsum("nij,nij->nj", dz, dz)
        W, b = p[f"W{last}"], p[f"b{last}"]
        value = (h @ W.T + b)[:, 0]
        _check_finite(value, self.n_layers, "output")
        grad = dh @ W[0] if order >= 1 else None
        laplacian = lap @ W[0] if order == 2 else None
        return FieldBatch(x, value, grad, laplacian)

    # -- parameter Jacobians ----------------------------------------------

    def _hidden(self, p, h0):
        hs = [h0]
        for l in range(self.n_layers - 1):
            hs.append(np.tanh(hs[-1] @ p[f"W{l}"].T + p[f"b{l}"]))
        return hs

    def _value_jacobian(self, p, x):
        n, d, k = x.shape[0], self.input_dim, self.embed_terms
        sl = self._slices()
        cos, sin, h0 = self._embed(p, x)
        hs = self._hidden(p, h0.reshape(n, d * k))
        J = np.empty((n, self.param_count))
        last = self.n_layers - 1
        J[:, sl[f"W{last}"]] = hs[last]
        J[:, sl[f"b{last}"]] = 1.0
        delta = np.broadcast_to(p[f"W{last}"], (n, p[f"W{last}"].shape[1]))
        for l in range(last - 1, -1, -1):
            delta = delta * (1.0 - hs[l + 1] ** 2)
            J[:, sl[f"W{l}"]] = (delta[:, :, None] * hs[l][:, None, :]).reshape(n, -1)
            J[:, sl[f"b{l}"]] = delta
            delta = delta @ p[f"W{l}"]
        de = delta.reshape(n, d, k)
        J[:, sl["a"]] = (de * cos).reshape(n, -1)
        J[:, sl["phi"]] = (-de * p["a"][None] * sin).reshape(n, -1)
        J[:, sl["c"]] = de.reshape(n, -1)
        return J

    def _tangent_jacobian(self, p, x, m):
        """Jacobian of ``du/dx_m`` wrt all parameters (reverse over tangent)."""
        n, d, k = x.shape[0], self.input_dim, self.embed_terms
        sl = self._slices()
        s = self.scales[m]
        cos, sin, h0 = self._embed(p, x)
        t0 = np.zeros((n, d, k))
        t0[:, m, :] = -p["a"][m] * s * sin[:, m, :]
        hs, ts, zdots = [h0.reshape(n, d * k)], [t0.reshape(n, d * k)], []
        for l in range(self.n_layers - 1):
            W = p[f"W{l}"]
            h = np.tanh(hs[-1] @ W.T + p[f"b{l}"])
            zd = ts[-1] @ W.T
            hs.append(h)
            zdots.append(zd)
            ts.append((1.0 - h * h) * zd)

        J = np.zeros((n, self.param_count))
        last = self.n_layers - 1
        J[:, sl[f"W{last}"]] = ts[last]
        W = p[f"W{last}"]
        hbar = np.zeros((n, W.shape[1]))
        tbar = np.broadcast_to(W, (n, W.shape[1]))
        for l in range(last - 1, -1, -1):
            h = hs[l + 1]
            d1 = 1.0 - h * h
            d2 = -2.0 * h * d1
            zdbar = tbar * d1
            zbar = hbar * d1 + tbar * d2 * zdots[l]
            J[:, sl[f"W{l}"]] = (zbar[:, :, None] * hs[l][:, None, :]
                                 + zdbar[:, :, None] * ts[l][:, None, :]).reshape(n, -1)
            J[:, sl[f"b{l}"]] = zbar
            hbar = zbar @ p[f"W{l}"]
            tbar = zdbar @ p[f"W{l}"]
        hbar = hbar.reshape(n, d, k)
        tbar = tbar.reshape(n, d, k)
        ja = hbar * cos
        jphi = -hbar * p["a"][None] * sin
        ja[:, m, :] += -tbar[:, m, :] * s * sin[:, m, :]
        jphi[:, m, :] += -tbar[:, m, :] * s * p["a"][m] * cos[:, m, :]
        J[:, sl["a"]] = ja.reshape(n, -1)
        J[:, sl["phi"]] = jphi.reshape(n, -1)
        J[:, sl["c"]] = hbar.reshape(n, -1)
        return J

    def jacobian(self, theta, points, subset=None, chunk=4096):
        """``J[p, s] = du(x_p)/dtheta[subset[s]]`` by reverse accumulation."""
        p = self.unpack(theta)
        x = _as_points(points, self.input_dim)
        idx = check_subset(subset, self.param_count)
        out = np.empty((x.shape[0], idx.size))
        for start in range(0, x.shape[0], chunk):
            stop = start + chunk
            out[start:stop] = self._value_jacobian(p, x[start:stop])[:, idx]
        return out

    def grad_jacobian(self, theta, points, subset=None, chunk=4096):
        """Array ``(d, n, m)`` with ``d(du/dx_i)(x_p)/dtheta[subset[s]]``."""
        p = self.unpack(theta)
        x = _as_points(points, self.input_dim)
        idx = check_subset(subset, self.param_count)
        out = np.empty((self.input_dim, x.shape[0], idx.size))
        for i in range(self.input_dim):
            for start in range(0, x.shape[0], chunk):
                stop = start + chunk
                out[i, start:stop] = self._tangent_jacobian(p, x[start:stop], i)[:, idx]
        return out


@dataclass(frozen=True)
class TrigLinearModel:
    """Degenerate linear-in-parameters model ``u = sum_j theta_j f_j(x)``.

    Each basis function is ``sin(k . x)`` or ``cos(k . x)``; handy for
    cases whose exact answer is known in closed form.
    """

    terms: tuple = (("sin", (1,)), ("cos", (1,)))
    input_dim: int = field(init=False)

    def __post_init__(self):
        dims = {len(k) for _, k in self.terms}
        if len(dims) != 1 or any(kind not in ("sin", "cos") for kind, _ in self.terms):
            raise ValueError("terms must share one wavevector length and be sin/cos")
        object.__setattr__(self, "input_dim", dims.pop())

    @property
    def param_count(self):
        return len(self.terms)

    def init_params(self, seed):
        return np.random.Generator(np.random.Philox(seed)).standard_normal(self.param_count)

    def _basis(self, x):
        ks = np.array([k for _, k in self.terms], dtype=np.float64)
        phase = x @ ks.T
        is_sin = np.array([kind == "sin" for kind, _ in self.terms])
        f = np.where(is_sin, np.sin(phase), np.cos(phase))
        df = np.where(is_sin, np.cos(phase), -np.sin(phase))
        return ks, f, df

    def evaluate(self, theta, points, order=0):
        x = _as_points(points, self.input_dim)
        theta = np.asarray(theta, dtype=np.float64)
        ks, f, df = self._basis(x)
        value = f @ theta
        grad = (df * theta) @ ks if order >= 1 else None
        laplacian = -(f * (ks ** 2).sum(axis=1)) @ theta if order == 2 else None
        return FieldBatch(x, value, grad, laplacian)

    def jacobian(self, theta, points, subset=None):
        x = _as_points(points, self.input_dim)
        idx = check_subset(subset, self.param_count)
        return self._basis(x)[1][:, idx]

    def grad_jacobian(self, theta, points, subset=None):
        x = _as_points(points, self.input_dim)
        idx = check_subset(subset, self.param_count)
        ks, _, df = self._basis(x)
        return np.stack([df[:, idx] * ks[idx, i] for i in range(self.input_dim)])


def init_params(arch, seed):
    return arch.init_params(seed)


def evaluate_field(arch, theta, points, order=0):
    return arch.evaluate(theta, points, order)


def param_jacobian(arch, theta, points, subset=None):
    return arch.jacobian(theta, points, subset)


def sobolev_stack(arch, theta, points, subset=None):
    """Rows ``[J; dJ/dx_1; ...]`` used by the derivative-matching fit."""
    J = arch.jacobian(theta, points, subset)
    return np.concatenate([J, *arch.grad_jacobian(theta, points, subset)], axis=0)


__all__: Sequence[str] = [
    "FieldBatch", "NetworkArch", "TrigLinearModel", "NonFiniteError",
    "init_params", "evaluate_field", "param_jacobian", "sobolev_stack", "check_subset",
]
