"""Binary checkpoint and reference files, and CSV output.

All binary data is little-endian.  A checkpoint is ``b"TENG"``, version,
input dimension, the layer widths ``[K, hidden, ..., 1]`` (count then
entries), the parameter count and the raw float64 parameters.  A reference
file is ``b"TREF"``, version, dimension, grid points per axis, one period per
axis, the number of stored times, the times and then one field per time.
"""
from __future__ import annotations

import csv
import struct

import numpy as np

from ..net import NetworkArch

VERSION = 1
CKPT_MAGIC = b"TENG"
REF_MAGIC = b"TREF"


class FormatError(ValueError):
    pass


class _Reader:
    def __init__(self, data, path):
        self.data, self.pos, self.path = data, 0, path

    def take(self, n):
        if self.pos + n > len(self.data):
            raise FormatError(f"{self.path}: truncated file")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, n):
        return np.frombuffer(self.take(8 * n), dtype="<f8").astype(np.float64)

    def done(self):
        if self.pos != len(self.data):
            raise FormatError(f"{self.path}: {len(self.data) - self.pos} trailing bytes")


def _header(r, magic):
    if r.take(4) != magic:
        raise FormatError(f"{r.path}: bad magic, expected {magic!r}")
    (version,) = r.unpack("<I")
    if version != VERSION:
        raise FormatError(f"{r.path}: unsupported version {version}")


def save_checkpoint(theta, arch, path):
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (arch.param_count,):
        raise ValueError("parameter vector does not match the architecture")
    spec = arch.layer_spec
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<III", VERSION, arch.input_dim, len(spec)))
        fh.write(struct.pack(f"<{len(spec)}I", *spec))
        fh.write(struct.pack("<Q", arch.param_count))
        fh.write(theta.astype("<f8").tobytes())


def arch_from_spec(dims, spec, lengths=None):
    if len(spec) < 3 or spec[-1] != 1 or len(set(spec[1:-1])) != 1:
        raise FormatError(f"unsupported layer spec {list(spec)}")
    return NetworkArch(dims, spec[0], spec[1], len(spec) - 1, lengths)


def load_checkpoint(path, arch=None):
    """Return ``(theta, arch)``; if ``arch`` is given it must match the file."""
    with open(path, "rb") as fh:
        r = _Reader(fh.read(), path)
    _header(r, CKPT_MAGIC)
    dims, count = r.unpack("<II")
    spec = list(r.unpack(f"<{count}I"))
    (n,) = r.unpack("<Q")
    file_arch = arch_from_spec(dims, spec, None if arch is None else arch.lengths)
    if n != file_arch.param_count:
        raise FormatError(f"{path}: parameter count {n} inconsistent with layer spec")
    theta = r.floats(n)
    r.done()
    if arch is not None and (arch.input_dim != dims or arch.layer_spec != spec):
        raise FormatError(
            f"{path}: architecture mismatch (file {dims}D {spec}, "
            f"expected {arch.input_dim}D {arch.layer_spec})")
    return theta, file_arch if arch is None else arch


def save_reference(ref, dims, n_per_dim, lengths, path):
    times = np.asarray(ref.times, dtype=np.float64)
    fields = np.asarray(ref.fields, dtype=np.float64)
    if fields.shape != (len(times), n_per_dim ** dims):
        raise ValueError("reference fields do not match the grid")
    with open(path, "wb") as fh:
        fh.write(REF_MAGIC)
        fh.write(struct.pack("<III", VERSION, dims, n_per_dim))
        fh.write(np.asarray(lengths, dtype="<f8").tobytes())
        fh.write(struct.pack("<Q", len(times)))
        fh.write(times.astype("<f8").tobytes())
        fh.write(fields.astype("<f8").tobytes())


def load_reference(path):
    """Return ``(ReferenceSolution, dims, n_per_dim, lengths)``."""
    from ..spectral import ReferenceSolution

    with open(path, "rb") as fh:
        r = _Reader(fh.read(), path)
    _header(r, REF_MAGIC)
    dims, n = r.unpack("<II")
    lengths = tuple(r.floats(dims))
    (n_times,) = r.unpack("<Q")
    times = r.floats(n_times)
    fields = r.floats(n_times * n ** dims).reshape(n_times, n ** dims)
    r.done()
    return ReferenceSolution(times, fields, {"n_per_dim": n}), dims, n, lengths


def fmt(v):
    """Round-trip exact decimal (17 significant digits) for floats."""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path):
    """Rows as dicts; numeric-looking cells are converted to float."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            conv = {}
            for k, v in row.items():
                try:
                    conv[k] = float(v)
                except ValueError:
                    conv[k] = v
            out.append(conv)
    return out


ERRORS_HEADER = ["t", "rel_l2", "step_final_loss", "stepper_iterations", "residual_bound_cum"]
SUMMARY_HEADER = ["method", "pde", "dt", "T", "global_rel_l2", "total_steps"]
