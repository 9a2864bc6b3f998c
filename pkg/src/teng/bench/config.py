"""Experiment configuration: strict JSON parsing, overrides and defaults.

A minimal file only needs ``pde.kind``, ``ic``, ``method.name``, ``time.dt``
and ``time.T``; every other field falls back to the default listed on the
dataclasses below.  Unknown keys are rejected with the offending dotted path.
"""
from __future__ import annotations

import dataclasses
import json
import typing
from dataclasses import dataclass, field
from typing import Optional

from ..baselines import ObtiConfig, TdvpConfig
from ..linalg import LstsqConfig
from ..net import NetworkArch
from ..pde import IC_NAMES, PdeSpec, named_ic
from ..stepper import FitConfig, StepperConfig

METHODS = ("TengEuler", "TengHeun", "TengRk4", "TdvpRk4", "ObtiAdam")
DEFAULT_NU = {"heat": 0.1, "allen_cahn": 1 / 200, "burgers": 1 / 100}
DEFAULT_KMAX = {"heat": 32, "allen_cahn": 48, "burgers": 64}

TENG_KEYS = {"n_it_first_stage", "n_it_second_stage", "subsample_first", "subsample_rest",
             "alpha", "early_stop_loss"}
TDVP_KEYS = {"n_sub"}
OBTI_KEYS = {"n_iter", "lr0", "beta1", "beta2", "eps", "decay_steps"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PdeSection:
    kind: str
    nu: Optional[float] = None  # None: 0.1 heat, 1/200 Allen-Cahn, 1/100 Burgers
    dims: int = 2


@dataclass(frozen=True)
class NetSection:
    n_layers: int = 3
    hidden: int = 16
    embed_terms: int = 10


@dataclass(frozen=True)
class GridSection:
    n_per_dim: int = 64


@dataclass(frozen=True)
class TimeSection:
    dt: float
    T: float
    checkpoint_stride: int = 1


@dataclass(frozen=True)
class MethodSection:
    """Settings for all methods; only those of ``name`` may appear in a file."""

    name: str
    n_it_first_stage: int = 7
    n_it_second_stage: int = 5
    subsample_first: Optional[int] = None
    subsample_rest: Optional[int] = None
    alpha: float = 0.5
    early_stop_loss: float = 1e-14
    n_sub: Optional[int] = None
    n_iter: int = 300
    lr0: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    decay_steps: Optional[float] = None


@dataclass(frozen=True)
class LstsqSection:
    method: str = "svd"
    rcond: float = 1e-8
    cg_max_iter: Optional[int] = None
    cg_tol: float = 1e-10


@dataclass(frozen=True)
class FitSection:
    stage1_threshold: float = 1e-7
    stage1_max_iter: int = 300
    stage2_threshold: float = 1e-14
    stage2_max_iter: int = 100
    stage2_subsample: Optional[int] = None


@dataclass(frozen=True)
class ReferenceSection:
    kmax: Optional[int] = None  # None: 32 heat, 48 Allen-Cahn, 64 Burgers
    dt_ref: float = 1e-3
    sample_n: int = 256
    source: str = "ic"  # "network": evolve the fitted t=0 network field instead


@dataclass(frozen=True)
class ExperimentConfig:
    pde: PdeSection
    ic: str
    time: TimeSection
    method: MethodSection
    lengths: Optional[tuple] = None  # None: periods of the initial condition
    net: NetSection = field(default_factory=NetSection)
    grid: GridSection = field(default_factory=GridSection)
    lstsq: LstsqSection = field(default_factory=LstsqSection)
    fit: FitSection = field(default_factory=FitSection)
    reference: ReferenceSection = field(default_factory=ReferenceSection)
    seed: int = 0
    output_dir: str = "out"
    init_checkpoint: Optional[str] = None
    reference_file: Optional[str] = None

    def __post_init__(self):
        _validate(self)

    # -- derived objects ----------------------------------------------------

    @property
    def nu(self):
        return DEFAULT_NU[self.pde.kind] if self.pde.nu is None else self.pde.nu

    @property
    def kmax(self):
        return DEFAULT_KMAX[self.pde.kind] if self.reference.kmax is None else self.reference.kmax

    def domain_lengths(self):
        return named_ic(self.ic).lengths if self.lengths is None else self.lengths

    def pde_spec(self):
        return PdeSpec(self.pde.kind, self.nu, self.pde.dims)

    def arch(self):
        return NetworkArch(self.pde.dims, self.net.embed_terms, self.net.hidden,
                           self.net.n_layers, self.domain_lengths())

    def lstsq_config(self):
        s = self.lstsq
        return LstsqConfig(s.method, s.rcond, s.cg_max_iter, s.cg_tol)

    def fit_config(self):
        f = self.fit
        return FitConfig(f.stage1_threshold, f.stage1_max_iter, f.stage2_threshold,
                         f.stage2_max_iter, f.stage2_subsample, self.lstsq_config())

    def method_config(self):
        m = self.method
        if m.name.startswith("Teng"):
            return StepperConfig(m.n_it_first_stage, m.n_it_second_stage, m.subsample_first,
                                 m.subsample_rest, m.alpha, self.lstsq_config(),
                                 m.early_stop_loss)
        if m.name == "TdvpRk4":
            return TdvpConfig(m.n_sub, self.lstsq_config())
        return ObtiConfig(m.n_iter, "adam", m.lr0, m.beta1, m.beta2, m.eps, m.decay_steps)

    def with_method(self, name):
        """Same experiment with another method (method-specific settings reset)."""
        return dataclasses.replace(self, method=MethodSection(name))


def _validate(cfg):
    p = cfg.pde
    if p.kind not in DEFAULT_NU:
        raise ConfigError(f"pde.kind: unknown kind {p.kind!r}")
    if p.nu is not None and p.nu <= 0:
        raise ConfigError("pde.nu: must be positive")
    if cfg.ic not in IC_NAMES:
        raise ConfigError(f"ic: unknown initial condition {cfg.ic!r}")
    ic = named_ic(cfg.ic)
    if ic.dims != p.dims:
        raise ConfigError(f"pde.dims: {p.dims} does not match ic {cfg.ic!r} ({ic.dims}D)")
    try:
        cfg.pde_spec()
    except ValueError as exc:
        raise ConfigError(f"pde: {exc}") from None
    if cfg.lengths is not None and tuple(cfg.lengths) != tuple(ic.lengths):
        raise ConfigError(f"lengths: ic {cfg.ic!r} is periodic on {ic.lengths}")
    if cfg.method.name not in METHODS:
        raise ConfigError(f"method.name: expected one of {METHODS}, got {cfg.method.name!r}")
    positive = {
        "net.n_layers": cfg.net.n_layers, "net.hidden": cfg.net.hidden,
        "net.embed_terms": cfg.net.embed_terms, "grid.n_per_dim": cfg.grid.n_per_dim,
        "time.dt": cfg.time.dt, "time.checkpoint_stride": cfg.time.checkpoint_stride,
        "reference.dt_ref": cfg.reference.dt_ref, "reference.sample_n": cfg.reference.sample_n,
    }
    for key, v in positive.items():
        if v <= 0:
            raise ConfigError(f"{key}: must be positive")
    if cfg.time.T < 0:
        raise ConfigError("time.T: must be non-negative")
    if cfg.seed < 0 or cfg.seed >= 2 ** 64:
        raise ConfigError("seed: must be an unsigned 64-bit integer")
    for name, build in (("net", cfg.arch), ("lstsq", cfg.lstsq_config),
                        ("fit", cfg.fit_config), ("method", cfg.method_config)):
        try:
            build()
        except ValueError as exc:
            raise ConfigError(f"{name}: {exc}") from None
    if cfg.reference.source not in ("ic", "network"):
        raise ConfigError(f"reference.source: expected 'ic' or 'network', got "
                          f"{cfg.reference.source!r}")
    if cfg.kmax < 1:
        raise ConfigError("reference.kmax: must be positive")


# -- parsing ------------------------------------------------------------------

def _check_type(value, tp, path):
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _check_type(value, args[0], path)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected an object")
        return _build(tp, value, path + ".")
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if tp is tuple:
        if not isinstance(value, (list, tuple)) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"{path}: expected a list of numbers")
        return tuple(float(v) for v in value)
    raise TypeError(f"unsupported field type {tp}")


def _build(cls, data, prefix=""):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in names:
            raise ConfigError(f"unknown key {prefix + key!r}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        path = prefix + f.name
        if f.name in data:
            kwargs[f.name] = _check_type(data[f.name], hints[f.name], path)
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise ConfigError(f"missing required key {path!r}")
    if cls is MethodSection:
        _check_method_keys(data, prefix)
    return cls(**kwargs)


def _check_method_keys(data, prefix):
    name = data.get("name")
    allowed = {"name"} | (TENG_KEYS if str(name).startswith("Teng") else
                          TDVP_KEYS if name == "TdvpRk4" else
                          OBTI_KEYS if name == "ObtiAdam" else set())
    for key in data:
        if key not in allowed:
            raise ConfigError(f"key {prefix + key!r} does not apply to method {name!r}")


def config_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return _build(ExperimentConfig, data)


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data, overrides):
    """Apply ``key=value`` strings (dotted keys, JSON values) to a raw config dict."""
    data = json.loads(json.dumps(data))
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        parts = key.split(".")
        node = data
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r}: {part!r} is not a section")
        node[parts[-1]] = _parse_value(raw)
    return data


def load_raw(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def parse_config(path, overrides=()):
    return config_from_dict(apply_overrides(load_raw(path), overrides))


def config_to_dict(cfg):
    """Plain-JSON form; only keys relevant to the chosen method are emitted."""
    out = dataclasses.asdict(cfg)
    name = cfg.method.name
    keep = {"name"} | (TENG_KEYS if name.startswith("Teng") else
                       TDVP_KEYS if name == "TdvpRk4" else OBTI_KEYS)
    out["method"] = {k: v for k, v in out["method"].items() if k in keep}
    if out["lengths"] is not None:
        out["lengths"] = list(out["lengths"])
    return out


def dump_config(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
