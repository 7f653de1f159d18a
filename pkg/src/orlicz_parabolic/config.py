"""Experiment configuration: schema, defaults and strict validation.

Configs are YAML (or JSON, which YAML accepts) mappings::

    name: plap-p3-q2
    nfunction: {kind: power, p: 3}
    source_growth: {kind: power-modular, q: 2}
    n: 1
    r: 2
    seed: 0
    grid: {N: 257, R: 1.0, T: 0.1, cadence: 1.0e-5}
    scheme: {scheme: explicit, sigma: 0.9, dt: null, epsilon: null, tol: 1.0e-11, max_iter: 500}
    experiment:
      rho: 0.5            # ratio between consecutive cylinder radii
      rho0: 0.25          # largest cylinder radius
      K: 5                # number of cylinders
      center: null        # spatial centre, default grid centre
      slack: 0.1          # one-sided tolerance on fitted exponents
      source_norm: 1.0    # target L^{F,r} norm of the source (0 = homogeneous)
      source_width: 0.5   # radius of the spatial source bump
      initial: tilted     # tilted | zero | random
      cutoff_radius: 0.75 # radius of the energy-estimate cutoff
    output: out

Only ``nfunction`` is required.
"""
from __future__ import annotations

import copy
import json
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .nfunction import InvalidNFunctionError, NFunction, from_spec

__all__ = ["ConfigError", "Config", "parse_config", "config_from_dict", "DEFAULTS"]


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending key path."""


DEFAULTS = {
    "name": "experiment",
    "nfunction": None,
    "source_growth": {"kind": "power-modular", "q": 2.0},
    "n": 1,
    "r": 2.0,
    "seed": 0,
    "grid": {"N": 257, "R": 1.0, "T": 0.1, "cadence": 1.0e-5},
    "scheme": {
        "scheme": "explicit",
        "sigma": 0.9,
        "dt": None,
        "epsilon": None,
        "tol": 1.0e-11,
        "max_iter": 500,
    },
    "experiment": {
        "rho": 0.5,
        "rho0": 0.25,
        "K": 5,
        "center": None,
        "slack": 0.1,
        "source_norm": 1.0,
        "source_width": 0.5,
        "initial": "tilted",
        "cutoff_radius": 0.75,
    },
    "output": "out",
}

_INITIAL_PROFILES = ("tilted", "zero", "random")


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e-5`` (no dot) as a float."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)
_NUMBER = (int, float)


@dataclass
class Config:
    name: str
    nf: NFunction
    F: NFunction
    nfunction: dict
    source_growth: dict
    n: int
    r: float
    seed: int
    grid: dict
    scheme: dict
    experiment: dict
    output: str
    raw: dict = field(default_factory=dict, repr=False)

    def with_grid(self, **changes) -> "Config":
        raw = copy.deepcopy(self.raw)
        raw["grid"] = {**raw.get("grid", {}), **changes}
        return config_from_dict(raw)

    def with_experiment(self, **changes) -> "Config":
        raw = copy.deepcopy(self.raw)
        raw["experiment"] = {**raw.get("experiment", {}), **changes}
        return config_from_dict(raw)


def _merge(defaults, given, path, strict):
    out = copy.deepcopy(defaults)
    for key, val in given.items():
        kp = f"{path}.{key}" if path else str(key)
        if key not in defaults:
            if strict:
                raise ConfigError(f"{kp}: unknown key")
            warnings.warn(f"{kp}: unknown key ignored", stacklevel=3)
            continue
        dv = defaults[key]
        if isinstance(dv, dict) and key not in ("nfunction", "source_growth"):
            if not isinstance(val, dict):
                raise ConfigError(f"{kp}: expected a mapping, got {type(val).__name__}")
            out[key] = _merge(dv, val, kp, strict)
        else:
            out[key] = val
    return out


def _expect(value, types, path, allow_none=False):
    if value is None and allow_none:
        return value
    if isinstance(value, bool) or not isinstance(value, types):
        names = types.__name__ if isinstance(types, type) else "/".join(t.__name__ for t in types)
        raise ConfigError(f"{path}: expected {names}, got {value!r}")
    return value


def _build_nf(spec, path) -> NFunction:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"{path}: expected a mapping with a 'kind' key")
    params = {k: v for k, v in spec.items() if k != "kind"}
    for k, v in params.items():
        if spec["kind"] != "tabulated":
            _expect(v, _NUMBER, f"{path}.{k}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return from_spec(spec["kind"], **params)
    except TypeError as exc:
        raise ConfigError(f"{path}: bad parameters for kind {spec['kind']!r}: {exc}") from None
    except InvalidNFunctionError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def config_from_dict(data: dict, strict: bool = True) -> Config:
    if not isinstance(data, dict):
        raise ConfigError("<root>: expected a mapping")
    if "nfunction" not in data:
        raise ConfigError("nfunction: missing required key")
    merged = _merge(DEFAULTS, data, "", strict)
    _expect(merged["name"], str, "name")
    n = _expect(merged["n"], int, "n")
    if n not in (1, 2):
        raise ConfigError(f"n: dimension must be 1 or 2, got {n}")
    r = float(_expect(merged["r"], _NUMBER, "r"))
    if not r > 1:
        raise ConfigError(f"r: time integrability must satisfy r > 1, got {r}")
    seed = _expect(merged["seed"], int, "seed")

    g = merged["grid"]
    N = _expect(g["N"], int, "grid.N")
    if N < 5:
        raise ConfigError("grid.N: need at least 5 nodes")
    for k in ("R", "T", "cadence"):
        if not float(_expect(g[k], _NUMBER, f"grid.{k}")) > 0:
            raise ConfigError(f"grid.{k}: must be positive")
    ratio = float(g["T"]) / float(g["cadence"])
    if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
        raise ConfigError("grid.cadence: T must be an integer multiple of the cadence")

    s = merged["scheme"]
    if s["scheme"] not in ("explicit", "implicit-variational"):
        raise ConfigError(f"scheme.scheme: unknown scheme {s['scheme']!r}")
    sigma = float(_expect(s["sigma"], _NUMBER, "scheme.sigma"))
    if not 0 < sigma <= 1:
        raise ConfigError("scheme.sigma: CFL factor must lie in (0, 1]")
    _expect(s["dt"], _NUMBER, "scheme.dt", allow_none=True)
    eps = _expect(s["epsilon"], _NUMBER, "scheme.epsilon", allow_none=True)
    if eps is not None and eps < 0:
        raise ConfigError("scheme.epsilon: must be >= 0")
    _expect(s["tol"], _NUMBER, "scheme.tol")
    _expect(s["max_iter"], int, "scheme.max_iter")

    e = merged["experiment"]
    rho = float(_expect(e["rho"], _NUMBER, "experiment.rho"))
    if not 0 < rho < 1:
        raise ConfigError("experiment.rho: must lie in (0, 1)")
    rho0 = float(_expect(e["rho0"], _NUMBER, "experiment.rho0"))
    if not 0 < rho0 < 1:
        raise ConfigError("experiment.rho0: must lie in (0, 1)")
    if _expect(e["K"], int, "experiment.K") < 1:
        raise ConfigError("experiment.K: must be >= 1")
    if e["center"] is not None:
        c = e["center"]
        if not isinstance(c, list) or len(c) != n:
            raise ConfigError(f"experiment.center: expected a list of {n} numbers")
        for i, ci in enumerate(c):
            _expect(ci, _NUMBER, f"experiment.center[{i}]")
    for k in ("slack", "source_norm", "source_width", "cutoff_radius"):
        if float(_expect(e[k], _NUMBER, f"experiment.{k}")) < 0:
            raise ConfigError(f"experiment.{k}: must be >= 0")
    if e["initial"] not in _INITIAL_PROFILES:
        raise ConfigError(f"experiment.initial: expected one of {_INITIAL_PROFILES}")
    _expect(merged["output"], str, "output")

    nf = _build_nf(merged["nfunction"], "nfunction")
    if not nf.admissible and not nf.oracle:
        raise ConfigError(f"nfunction: growth bounds ({nf.g0}, {nf.g1}) are not admissible (need 1 < g0)")
    F = _build_nf(merged["source_growth"], "source_growth")
    if not F.g0 > 0:
        raise ConfigError("source_growth: need f0 > 0")
    return Config(
        name=merged["name"],
        nf=nf,
        F=F,
        nfunction=dict(merged["nfunction"]),
        source_growth=dict(merged["source_growth"]),
        n=n,
        r=r,
        seed=seed,
        grid=g,
        scheme=s,
        experiment=e,
        output=merged["output"],
        raw=copy.deepcopy(data),
    )


def parse_config(path, strict: bool = True) -> Config:
    """Read and validate a YAML/JSON config file."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"<file>: {path} does not exist")
    text = p.read_text()
    try:
        data = json.loads(text) if p.suffix == ".json" else yaml.load(text, Loader=_Loader)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"<file>: cannot parse {path}: {exc}") from None
    return config_from_dict(data, strict=strict)
