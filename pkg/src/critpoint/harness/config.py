"""INI experiment configs.

Grammar: one ``[experiment]`` or ``[experiment NAME]`` section per sweep. Keys::

    family        quad_cos | separable_quartic | saddle_band | random_cubic_reg
    d             positive integer
    eps           comma-separated positive floats
    n_h           comma-separated positive integers
    oracle        exact | zero | noisy | fd            (default exact)
    delta         oracle accuracy, float >= 0           (default 0)
    mode          faithful | practical                  (default faithful)
    scale         float in (0, 1], practical mode only  (default 1)
    seeds         comma-separated distinct integers     (default 0)
    methods       comma-separated: dispatch, restarted, reduction (default dispatch)
    repeat        positive integer                      (default 1)
    out           CSV path, relative to the config file (optional)
    max_iterations, max_grad_queries   optional integer caps
    record_timing true | false                          (default false)
    param.NAME    family parameter, parsed as float when possible

Lines starting with ``#`` or ``;`` are comments.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from typing import Optional

from ..errors import ConfigError
from ..families import FAMILIES

ORACLES = ("exact", "zero", "noisy", "fd")
METHODS = ("dispatch", "restarted", "reduction")
KNOWN_KEYS = {"family", "d", "eps", "n_h", "oracle", "delta", "mode", "scale", "seeds", "methods",
              "repeat", "out", "max_iterations", "max_grad_queries", "record_timing"}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    family: str
    d: int
    eps_list: tuple
    n_H_list: tuple
    oracle: str = "exact"
    delta: float = 0.0
    mode: str = "faithful"
    scale: float = 1.0
    seeds: tuple = (0,)
    methods: tuple = ("dispatch",)
    repeat: int = 1
    out: Optional[str] = None
    params: dict = field(default_factory=dict)
    max_iterations: Optional[int] = None
    max_grad_queries: Optional[int] = None
    record_timing: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"[{self.name}] unknown family {self.family!r}")
        if self.d < 1:
            raise ConfigError(f"[{self.name}] d must be positive")
        if not self.eps_list or not self.n_H_list or not self.seeds or not self.methods:
            raise ConfigError(f"[{self.name}] eps, n_h, seeds and methods must be nonempty")
        if any(not e > 0 for e in self.eps_list):
            raise ConfigError(f"[{self.name}] eps values must be positive")
        if any(n < 1 for n in self.n_H_list):
            raise ConfigError(f"[{self.name}] n_h values must be at least 1")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"[{self.name}] seeds must be distinct")
        if self.oracle not in ORACLES:
            raise ConfigError(f"[{self.name}] oracle must be one of {', '.join(ORACLES)}")
        if self.delta < 0:
            raise ConfigError(f"[{self.name}] delta must be nonnegative")
        if self.mode not in ("faithful", "practical"):
            raise ConfigError(f"[{self.name}] mode must be faithful or practical")
        if not 0 < self.scale <= 1:
            raise ConfigError(f"[{self.name}] scale must lie in (0, 1]")
        if self.mode == "faithful" and self.scale != 1.0:
            raise ConfigError(f"[{self.name}] scale only applies in practical mode")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"[{self.name}] unknown method {bad[0]!r}")
        if self.repeat < 1:
            raise ConfigError(f"[{self.name}] repeat must be positive")


def _split(raw, cast, key, section):
    try:
        return tuple(cast(tok.strip()) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"[{section}] cannot parse {key} = {raw!r}") from exc


def _scalar(raw, cast, key, section):
    try:
        return cast(raw.strip())
    except ValueError as exc:
        raise ConfigError(f"[{section}] cannot parse {key} = {raw!r}") from exc


def _param_value(raw):
    try:
        return float(raw)
    except ValueError:
        return raw.strip()


def _bool(raw):
    val = raw.strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def parse_config(text, base_dir="."):
    """Parse config text into a list of ExperimentConfig."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    configs = []
    for section in parser.sections():
        head, _, tail = section.partition(" ")
        if head != "experiment":
            raise ConfigError(f"unexpected section [{section}]")
        name = tail.strip() or "experiment"
        sec = parser[section]
        unknown = [k for k in sec if k not in KNOWN_KEYS and not k.startswith("param.")]
        if unknown:
            raise ConfigError(f"[{name}] unknown key {unknown[0]!r}")
        for key in ("family", "d", "eps", "n_h"):
            if key not in sec:
                raise ConfigError(f"[{name}] missing key {key!r}")
        out = sec.get("out")
        if out is not None:
            out = os.path.normpath(os.path.join(base_dir, out.strip()))
        opt_int = {}
        for key in ("max_iterations", "max_grad_queries"):
            opt_int[key] = _scalar(sec[key], int, key, name) if key in sec else None
        configs.append(ExperimentConfig(
            name=name,
            family=sec["family"].strip(),
            d=_scalar(sec["d"], int, "d", name),
            eps_list=_split(sec["eps"], float, "eps", name),
            n_H_list=_split(sec["n_h"], int, "n_h", name),
            oracle=sec.get("oracle", "exact").strip(),
            delta=_scalar(sec.get("delta", "0"), float, "delta", name),
            mode=sec.get("mode", "faithful").strip(),
            scale=_scalar(sec.get("scale", "1"), float, "scale", name),
            seeds=_split(sec.get("seeds", "0"), int, "seeds", name),
            methods=_split(sec.get("methods", "dispatch"), str, "methods", name),
            repeat=_scalar(sec.get("repeat", "1"), int, "repeat", name),
            out=out,
            params={k[len("param."):]: _param_value(v) for k, v in sec.items() if k.startswith("param.")},
            record_timing=_scalar(sec.get("record_timing", "false"), _bool, "record_timing", name),
            **opt_int,
        ))
    if not configs:
        raise ConfigError("config defines no [experiment] section")
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ConfigError("experiment names must be distinct")
    return configs


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, os.path.dirname(os.path.abspath(path)))
