"""Fourier reference solvers on the periodic box.

Coefficients follow ``u(x) = sum_k c_k exp(i k . s x)`` with ``s = 2 pi / L``
per axis and are stored on the centred lattice ``[-kmax, kmax]^d`` (array
index ``k + kmax``).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft

TWO_PI = 2.0 * np.pi


@dataclass
class SpectrumField:
    coeffs: np.ndarray
    kmax: int
    dims: int
    lengths: tuple = None

    def __post_init__(self):
        if self.lengths is None:
            self.lengths = (TWO_PI,) * self.dims
        if self.coeffs.shape != (2 * self.kmax + 1,) * self.dims:
            raise ValueError("coefficient array does not match kmax/dims")

    def wavenumbers(self):
        """Physical wavenumbers ``k_i * 2 pi / L_i`` broadcast over the lattice."""
        ks = []
        for i, L in enumerate(self.lengths):
            shape = [1] * self.dims
            shape[i] = -1
            ks.append((np.arange(-self.kmax, self.kmax + 1) * TWO_PI / L).reshape(shape))
        return ks

    def energy(self):
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def hermitian_defect(self):
        flipped = np.conj(self.coeffs[(slice(None, None, -1),) * self.dims])
        return float(np.max(np.abs(self.coeffs - flipped)))


@dataclass
class ReferenceSolution:
    times: np.ndarray
    fields: np.ndarray
    meta: dict = field(default_factory=dict)

    def at(self, t, tol=1e-9):
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > tol * max(1.0, abs(t)):
            raise KeyError(f"no stored reference at t={t}")
        return self.fields[i]


def _to_centered(full, kmax):
    """Pick the ``[-kmax, kmax]^d`` block out of an FFT-ordered array."""
    n = full.shape[0]
    idx = np.arange(-kmax, kmax + 1) % n
    return full[np.ix_(*([idx] * full.ndim))]


def _to_fft_layout(coeffs, kmax, n):
    """Scatter centred coefficients onto an ``n^d`` FFT grid, folding aliases."""
    d = coeffs.ndim
    out = np.zeros((n,) * d, dtype=complex)
    idx = np.arange(-kmax, kmax + 1) % n
    if n >= 2 * kmax + 1:
        out[np.ix_(*([idx] * d))] = coeffs
    else:
        np.add.at(out, np.ix_(*([idx] * d)), coeffs)
    return out


def dft(values, kmax=None, lengths=None):
    """Forward transform of real samples on an ``n^d`` tensor grid."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    if any(s != n for s in values.shape):
        raise ValueError("samples must lie on a cubic n^d grid")
    kmax = (n - 1) // 2 if kmax is None else kmax
    if n < 2 * kmax + 1:
        raise ValueError(f"grid size {n} too small for kmax={kmax}")
    full = scipy.fft.fftn(values) / values.size
    coeffs = _to_centered(full, kmax)
    coeffs = 0.5 * (coeffs + np.conj(coeffs[(slice(None, None, -1),) * values.ndim]))
    return SpectrumField(coeffs, kmax, values.ndim, lengths)


def idft(spec, n):
    """Real samples of the series on an ``n^d`` grid (exact, aliases folded)."""
    full = _to_fft_layout(spec.coeffs, spec.kmax, n)
    return np.real(scipy.fft.ifftn(full)) * n ** spec.dims


def truncate_spectrum(spec, kmax_new):
    if kmax_new > spec.kmax:
        raise ValueError(f"cannot truncate from kmax={spec.kmax} up to {kmax_new}")
    cut = slice(spec.kmax - kmax_new, spec.kmax + kmax_new + 1)
    return replace(spec, coeffs=spec.coeffs[(cut,) * spec.dims].copy(), kmax=kmax_new)


def evaluate_series(spec, points):
    """Evaluate the truncated series at arbitrary points (direct summation)."""
    x = np.asarray(points, dtype=np.float64)
    ks = np.arange(-spec.kmax, spec.kmax + 1)
    scales = TWO_PI / np.asarray(spec.lengths)
    phases = [np.exp(1j * np.outer(x[:, i] * scales[i], ks)) for i in range(spec.dims)]
    if spec.dims == 1:
        out = phases[0] @ spec.coeffs
    elif spec.dims == 2:
        out = np.einsum("pa,ab,pb->p", phases[0], spec.coeffs, phases[1], optimize=True)
    else:
        out = np.einsum("pa,abc,pb,pc->p", phases[0], spec.coeffs, phases[1], phases[2],
                        optimize=True)
    return np.real(out)


def sample_spectrum(func, n, kmax, lengths=None, dims=2):
    """DFT of ``func(points)`` sampled on an ``n^dims`` grid, truncated at ``kmax``."""
    from .geometry import tensor_grid

    grid = tensor_grid(dims, n, lengths)
    values = np.asarray(func(grid.points)).reshape(grid.shape)
    return dft(values, kmax, grid.lengths)


def heat_decay(spec, nu, t):
    if t < 0:
        raise ValueError("t must be non-negative")
    k2 = sum(k ** 2 for k in spec.wavenumbers())
    return replace(spec, coeffs=spec.coeffs * np.exp(-nu * k2 * t))


def heat_exact(u0, nu, t, points):
    """Heat-equation solution at time ``t`` from initial coefficients ``u0``."""
    return evaluate_series(heat_decay(u0, nu, t), points)


def _padded_product(coeffs, kmax, power, n_pad):
    u = np.real(scipy.fft.ifftn(_to_fft_layout(coeffs, kmax, n_pad))) * n_pad ** coeffs.ndim
    prod = scipy.fft.fftn(u ** power) / u.size
    return _to_centered(prod, kmax)


def pad_size(kmax, power):
    """Smallest fast FFT size that keeps a degree-``power`` product alias free."""
    need = (power + 1) * kmax + 1
    return scipy.fft.next_fast_len(max(need, 2 * kmax + 1))


def spectral_rhs(pde, spec):
    """Time derivative of the coefficients; nonlinear terms are de-aliased."""
    ks = spec.wavenumbers()
    k2 = sum(k ** 2 for k in ks)
    c = spec.coeffs
    out = -pde.nu * k2 * c
    if pde.kind == "allen_cahn":
        cube = _padded_product(c, spec.kmax, 3, pad_size(spec.kmax, 3))
        out = out + c - cube
    elif pde.kind == "burgers":
        sq = _padded_product(c, spec.kmax, 2, pad_size(spec.kmax, 2))
        out = out - 0.5j * sum(ks) * sq
    return replace(spec, coeffs=out)


def spectral_rk4_evolve(pde, u0, dt_ref, T, store_times=None, eval_n=None,
                        blowup=1e10):
    """Classical RK4 in coefficient space.

    ``u0`` is a :class:`SpectrumField`.  Real-space samples are stored on an
    ``eval_n^d`` grid at ``store_times`` (default: ``0`` and ``T``), each of
    which must be a multiple of ``dt_ref``.
    """
    if dt_ref <= 0:
        raise ValueError("dt_ref must be positive")
    store_times = np.array([0.0, T] if store_times is None else store_times, dtype=float)
    store_steps = np.rint(store_times / dt_ref).astype(int)
    if np.any(np.abs(store_steps * dt_ref - store_times) > 1e-9 * np.maximum(1.0, store_times)):
        raise ValueError("store times must be multiples of dt_ref")
    n_steps = int(np.rint(T / dt_ref))
    eval_n = eval_n or 2 * u0.kmax + 1
    wanted = {}
    for i, s in enumerate(store_steps):
        wanted.setdefault(s, []).append(i)
    fields = np.empty((len(store_times), eval_n ** u0.dims))

    def rhs(c):
        return spectral_rhs(pde, replace(u0, coeffs=c)).coeffs

    c = u0.coeffs.copy()
    for step in range(n_steps + 1):
        if step in wanted:
            fields[wanted[step]] = idft(replace(u0, coeffs=c), eval_n).ravel()
        if step == n_steps:
            break
        k1 = rhs(c)
        k2 = rhs(c + 0.5 * dt_ref * k1)
        k3 = rhs(c + 0.5 * dt_ref * k2)
        k4 = rhs(c + dt_ref * k3)
        c = c + dt_ref / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.abs(c) < blowup):
            raise FloatingPointError(f"spectral solve blew up at t={(step + 1) * dt_ref:g}")
    meta = {"kmax": u0.kmax, "dt_ref": dt_ref, "eval_n": eval_n, "kind": pde.kind}
    return ReferenceSolution(store_times, fields, meta)
