"""TOML run configurations for the command-line tool.

A config has top-level run settings plus optional tables::

    kind = "simulate"
    t0 = 1.0
    n_realizations = 200
    master_seed = 1

    [lattice]
    lengths = [1001]

    [disorder]
    kind = "uniform"
    W = 5.0

Tables and keys that are left out take their defaults; unknown keys are
rejected. ``serialize`` writes every field, so ``parse(serialize(c)) == c``.
"""
from __future__ import annotations

import hashlib
from dataclasses import MISSING, dataclass, field, fields
from typing import Any, Optional

import numpy as np
import tomli
import tomli_w

from .errors import ConfigError, ParameterError
from .model import DISORDER_KINDS, FLAVORS, DisorderSpec, LatticeSpec, make_disorder_kind
from .propagate import log_times
from .theory import TAIL_CLASSES

KINDS = ("simulate", "imdos", "predict", "lindblad", "rg", "fit")


def _spec(kind, check=None, doc=""):
    return {"type": kind, "check": check, "doc": doc}


def _opt(default, kind, check=None):
    return field(default=default, metadata=_spec(kind, check))


def _optlist(default, kind, check=None):
    return field(default_factory=lambda: list(default), metadata=_spec(kind, check))


def _positive(v):
    return None if v > 0 else "must be positive"


def _nonneg(v):
    return None if v >= 0 else "must be non-negative"


def _choice(options):
    return lambda v: None if v in options else f"must be one of {list(options)}"


def _window(v):
    if v == []:
        return None
    if len(v) != 2 or not 0 < v[0] < v[1]:
        return "must be [t_lo, t_hi] with 0 < t_lo < t_hi, or empty for the default"
    return None


@dataclass
class LatticeSection:
    lengths: list = _optlist([101], "int_list",
                             lambda v: None if 1 <= len(v) <= 2 and all(n >= 1 for n in v)
                             else "must list one or two positive lengths")


@dataclass
class DisorderSection:
    kind: str = _opt("uniform", str, _choice(tuple(DISORDER_KINDS)))
    W: Optional[float] = _opt(None, float, _positive)
    sigma: Optional[float] = _opt(None, float, _positive)
    c: Optional[float] = _opt(None, float, _positive)
    flavor: str = _opt("imaginary", str, _choice(FLAVORS))


_DISORDER_PARAM = {"uniform": "W", "gaussian": "sigma", "triangular": "c"}


@dataclass
class PropagatorSection:
    method: str = _opt("stepped", str, _choice(("stepped", "exact")))
    step_factor: float = _opt(0.05, float, lambda v: None if 0 < v <= 0.2 else "must lie in (0, 0.2]")


@dataclass
class TimesSection:
    t_min: float = _opt(1.0, float, _positive)
    t_max: float = _opt(1000.0, float, _positive)
    points: int = _opt(101, int, lambda v: None if v >= 2 else "must be >= 2")


@dataclass
class FitSection:
    early: list = _optlist([], "float_list", _window)
    late: list = _optlist([], "float_list", _window)
    crossover: list = _optlist([], "float_list", _window)
    law: str = _opt("", str, _choice(("",) + tuple(TAIL_CLASSES)))
    input: str = _opt("", str)


@dataclass
class ImdosSection:
    bins: int = _opt(101, int, lambda v: None if v >= 10 else "must be >= 10")


@dataclass
class PredictSection:
    tail: str = _opt("uniform", str, _choice(tuple(TAIL_CLASSES)))
    d: int = _opt(1, int, _choice((1, 2)))
    xi: float = _opt(1.0, float, _positive)
    x_max: float = _opt(1e6, float, lambda v: None if v > 1 else "must exceed 1")
    W: Optional[float] = _opt(None, float, _positive)
    sigma: Optional[float] = _opt(None, float, _positive)
    a: Optional[float] = _opt(None, float, _positive)
    b: Optional[float] = _opt(None, float, _positive)
    lambda_edge: Optional[float] = _opt(None, float)


_TAIL_PARAMS = {"uniform": ("W",), "gaussian": ("sigma",), "linear": ("a", "b")}


@dataclass
class LindbladSection:
    model: str = _opt("lossy", str, _choice(("lossy", "dissipative")))
    gamma: float = _opt(0.0, float, _nonneg)
    Gamma: float = _opt(1.0, float, _positive)
    form: str = _opt("matrix", str, _choice(("matrix", "jump")))


@dataclass
class RgSection:
    d: int = _opt(3, int, _choice((1, 2, 3)))
    g0: float = _opt(0.1, float, _nonneg)
    l_max: float = _opt(50.0, float, _positive)
    dl: float = _opt(0.01, float, lambda v: None if 0 < v <= 0.01 else "must lie in (0, 0.01]")


_SECTIONS = {
    "lattice": LatticeSection,
    "disorder": DisorderSection,
    "propagator": PropagatorSection,
    "times": TimesSection,
    "fit": FitSection,
    "imdos": ImdosSection,
    "predict": PredictSection,
    "lindblad": LindbladSection,
    "rg": RgSection,
}


@dataclass
class RunConfig:
    kind: str = _opt("simulate", str, _choice(KINDS))
    t0: float = _opt(1.0, float, _positive)
    n_realizations: int = _opt(1, int, lambda v: None if v >= 1 else "must be >= 1")
    master_seed: int = _opt(0, int, lambda v: None if 0 <= v < 2 ** 64 else "must be a 64-bit unsigned integer")
    output: str = _opt("out", str)
    lattice: LatticeSection = field(default_factory=LatticeSection)
    disorder: DisorderSection = field(default_factory=DisorderSection)
    propagator: PropagatorSection = field(default_factory=PropagatorSection)
    times: TimesSection = field(default_factory=TimesSection)
    fit: FitSection = field(default_factory=FitSection)
    imdos: ImdosSection = field(default_factory=ImdosSection)
    predict: PredictSection = field(default_factory=PredictSection)
    lindblad: LindbladSection = field(default_factory=LindbladSection)
    rg: RgSection = field(default_factory=RgSection)

    # -- derived objects --

    def lattice_spec(self) -> LatticeSpec:
        return LatticeSpec(tuple(self.lattice.lengths))

    def disorder_spec(self) -> DisorderSpec:
        name = _DISORDER_PARAM[self.disorder.kind]
        kind = make_disorder_kind(self.disorder.kind, **{name: getattr(self.disorder, name)})
        return DisorderSpec(kind, self.disorder.flavor, self.master_seed)

    def time_grid(self) -> np.ndarray:
        return log_times(self.times.t_min, self.times.t_max, self.times.points)

    def tail_params(self) -> dict:
        p = {k: getattr(self.predict, k) for k in _TAIL_PARAMS[self.predict.tail]}
        if self.predict.tail == "linear" and self.predict.lambda_edge is not None:
            p["lambda_edge"] = self.predict.lambda_edge
        return p

    def digest(self) -> str:
        return hashlib.sha256(serialize(self).encode()).hexdigest()[:16]


def _coerce(value: Any, kind, where: str):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if kind in ("int_list", "float_list"):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        item = int if kind == "int_list" else float
        return [_coerce(v, item, f"{where}[{i}]") for i, v in enumerate(value)]
    raise AssertionError(kind)


def _fill(cls, table: dict, prefix: str):
    if not isinstance(table, dict):
        raise ConfigError(f"{prefix or 'config'}: expected a table")
    known = {f.name: f for f in fields(cls)}
    for key in table:
        if key not in known:
            raise ConfigError(f"unknown key '{prefix}{key}'")
    values = {}
    for name, f in known.items():
        where = f"{prefix}{name}"
        if name in _SECTIONS and cls is RunConfig:
            values[name] = _fill(_SECTIONS[name], table.get(name, {}), f"{name}.")
            continue
        if name not in table:
            continue
        value = _coerce(table[name], f.metadata["type"], where)
        check = f.metadata.get("check")
        problem = check(value) if check else None
        if problem:
            raise ConfigError(f"{where} = {table[name]!r}: {problem}")
        values[name] = value
    return cls(**values)


def validate(cfg: RunConfig) -> RunConfig:
    """Cross-field checks that single-key validation cannot express."""
    if not cfg.times.t_min < cfg.times.t_max:
        raise ConfigError(f"times.t_min = {cfg.times.t_min} must be below times.t_max = {cfg.times.t_max}")
    name = _DISORDER_PARAM[cfg.disorder.kind]
    if cfg.kind in ("simulate", "imdos") and getattr(cfg.disorder, name) is None:
        raise ConfigError(f"disorder.{name} is required for disorder.kind = {cfg.disorder.kind!r}")
    if cfg.kind == "predict":
        for key in _TAIL_PARAMS[cfg.predict.tail]:
            if getattr(cfg.predict, key) is None:
                raise ConfigError(f"predict.{key} is required for predict.tail = {cfg.predict.tail!r}")
    if cfg.kind == "fit" and not cfg.fit.input:
        raise ConfigError("fit.input must name a data CSV for kind = 'fit'")
    try:
        if cfg.kind in ("simulate", "imdos"):
            cfg.disorder_spec()
        if cfg.kind == "predict":
            TAIL_CLASSES[cfg.predict.tail](**cfg.tail_params())
    except ParameterError as exc:
        raise ConfigError(f"{cfg.kind}: {exc}") from None
    return cfg


def from_dict(data: dict) -> RunConfig:
    return validate(_fill(RunConfig, data, ""))


def parse_config(text: str) -> RunConfig:
    """Parse and validate TOML text; syntax errors report the line."""
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return from_dict(data)


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _to_table(obj) -> dict:
    out = {}
    for f in fields(obj):
        value = getattr(obj, f.name)
        if value is None:
            continue
        out[f.name] = _to_table(value) if f.name in _SECTIONS and isinstance(obj, RunConfig) else value
    return out


def to_dict(cfg: RunConfig) -> dict:
    return _to_table(cfg)


def serialize(cfg: RunConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))
