"""Experiment configuration files.

Configs are INI files with one section per concern. Every key is optional
except where a subcommand needs it; unknown sections or keys are rejected so
that typos do not pass silently.

::

    [model]
    type = two_neuron        ; two_neuron | ring | zero
    b1 = -0.1
    b2 = 2.8
    b3 = -3
    b4 = 4
    k = 0.15
    n = 5                    ; ring only
    p = 1
    d = 0.5

    [solver]
    alpha = 0.93
    step_size = 0.005
    t_end = 100
    convolution_mode = direct    ; direct | fft_accelerated
    divergence_threshold = 1e6
    corrector_iterations = 1
    block_size = 64
    backend = auto               ; auto | compiled | python

    [initial]
    x0 = -4.5, 0.5, -4.5         ; full state, sub-network-major for rings
    x1 = ...                     ; ring alternative: per-node lists
    x2 = ...
    phi = ...
    x0_list = 0,0.5,-5 | 0,0.5,14   ; several starts separated by '|'

    [stability]
    deltas = -20, -5, 10
    classify = yes

    [ring]
    delta = 0                    ; one value, or one per node
    alphas = 0.5, 0.9

    [sweep]
    alpha_lo = 0.96
    alpha_hi = 1.0
    alpha_step = 0.002
    observable = phi
    transient_fraction = 0.5
    fixed_point_tol = 0.01
    peak_cluster_tol = 0.001
    max_period = 16

    [lyapunov]
    renorm_interval = 50
    transient = 0

    [output]
    directory = out

Numbers must parse as finite reals; lists are comma separated.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import ClassifierConfig
from .fode import ConfigError, DomainError, SolverConfig, SystemDef
from .models import FmhnnParams, RingParams, pack_ring_state, ring_system, two_neuron_system

__all__ = ["ConfigParseError", "ExperimentConfig", "parse_config", "parse_config_text", "load_config"]


class ConfigParseError(ConfigError):
    """The config file is malformed or holds an unparsable value."""


# section -> key -> (attribute, kind)
_SCHEMA = {
    "model": {
        "type": ("model", "str"),
        "b1": ("b1", "float"),
        "b2": ("b2", "float"),
        "b3": ("b3", "float"),
        "b4": ("b4", "float"),
        "k": ("k", "float"),
        "n": ("n", "int"),
        "p": ("p", "int"),
        "d": ("d", "float"),
    },
    "solver": {
        "alpha": ("alpha", "float?"),
        "step_size": ("step_size", "float"),
        "t_end": ("t_end", "float"),
        "convolution_mode": ("convolution_mode", "str"),
        "divergence_threshold": ("divergence_threshold", "float"),
        "corrector_iterations": ("corrector_iterations", "int"),
        "block_size": ("block_size", "int"),
        "backend": ("backend", "str"),
    },
    "initial": {
        "x0": ("x0", "floats?"),
        "x1": ("x1", "floats?"),
        "x2": ("x2", "floats?"),
        "phi": ("phi", "floats?"),
        "x0_list": ("x0_list", "vectors"),
    },
    "stability": {
        "deltas": ("deltas", "floats"),
        "classify": ("classify", "bool"),
    },
    "ring": {
        "delta": ("ring_delta", "floats"),
        "alphas": ("ring_alphas", "floats"),
    },
    "sweep": {
        "alpha_lo": ("alpha_lo", "float?"),
        "alpha_hi": ("alpha_hi", "float?"),
        "alpha_step": ("alpha_step", "float?"),
        "observable": ("observable", "str"),
        "transient_fraction": ("transient_fraction", "float"),
        "fixed_point_tol": ("fixed_point_tol", "float"),
        "peak_cluster_tol": ("peak_cluster_tol", "float"),
        "max_period": ("max_period", "int"),
    },
    "lyapunov": {
        "renorm_interval": ("renorm_interval", "int"),
        "transient": ("lyapunov_transient", "float"),
    },
    "output": {
        "directory": ("output_dir", "str"),
    },
}

MODELS = ("two_neuron", "ring", "zero")


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "two_neuron"
    b1: float = -0.1
    b2: float = 2.8
    b3: float = -3.0
    b4: float = 4.0
    k: float = 0.15
    n: int = 5
    p: int = 1
    d: float = 0.5

    alpha: Optional[float] = None
    step_size: float = 0.005
    t_end: float = 100.0
    convolution_mode: str = "direct"
    divergence_threshold: float = 1e6
    corrector_iterations: int = 1
    block_size: int = 64
    backend: str = "auto"

    x0: Optional[tuple] = None
    x1: Optional[tuple] = None
    x2: Optional[tuple] = None
    phi: Optional[tuple] = None
    x0_list: tuple = ()

    deltas: tuple = ()
    classify: bool = True

    ring_delta: tuple = (0.0,)
    ring_alphas: tuple = (0.5, 0.9, 0.99)

    alpha_lo: Optional[float] = None
    alpha_hi: Optional[float] = None
    alpha_step: Optional[float] = None
    observable: str = "phi"
    transient_fraction: float = 0.5
    fixed_point_tol: float = 1e-2
    peak_cluster_tol: float = 1e-3
    max_period: int = 16

    renorm_interval: int = 50
    lyapunov_transient: float = 0.0

    output_dir: str = "out"

    # -- builders: these raise ConfigError/DomainError on semantic violations
    def params(self) -> FmhnnParams:
        return FmhnnParams(self.b1, self.b2, self.b3, self.b4, self.k)

    def ring_params(self) -> RingParams:
        return RingParams(self.params(), self.n, self.p, self.d)

    def system(self) -> SystemDef:
        if self.model == "ring":
            return ring_system(self.ring_params())
        if self.model == "zero":
            return SystemDef(3, lambda t, x, prm: np.zeros(3))
        return two_neuron_system(self.params())

    def solver(self) -> SolverConfig:
        return SolverConfig(
            step_size=self.step_size,
            t_end=self.t_end,
            convolution_mode=self.convolution_mode,
            divergence_threshold=self.divergence_threshold,
            corrector_iterations=self.corrector_iterations,
            block_size=self.block_size,
            backend=self.backend,
        )

    def classifier(self) -> ClassifierConfig:
        return ClassifierConfig(
            transient_fraction=self.transient_fraction,
            fixed_point_tol=self.fixed_point_tol,
            peak_cluster_tol=self.peak_cluster_tol,
            max_period=self.max_period,
        )

    def require_alpha(self) -> float:
        if self.alpha is None:
            raise DomainError("[solver] alpha is required")
        return self.alpha

    def initial_state(self) -> np.ndarray:
        dim = self.system().dimension
        if self.x0 is not None:
            x0 = np.asarray(self.x0, dtype=float)
        elif self.model == "ring" and None not in (self.x1, self.x2, self.phi):
            if not len(self.x1) == len(self.x2) == len(self.phi) == self.n:
                raise DomainError(f"per-node initial lists must have n={self.n} entries")
            x0 = pack_ring_state(self.x1, self.x2, self.phi)
        else:
            raise DomainError("[initial] needs x0 (or x1, x2, phi for rings)")
        if x0.shape != (dim,):
            raise DomainError(f"initial state has {x0.size} entries, model dimension is {dim}")
        return x0

    def initial_states(self) -> list:
        """``x0_list`` if given, else the single initial state."""
        if self.x0_list:
            return [np.asarray(v, dtype=float) for v in self.x0_list]
        return [self.initial_state()]

    def alpha_grid(self) -> np.ndarray:
        lo, hi, step = self.alpha_lo, self.alpha_hi, self.alpha_step
        if lo is None and hi is None:
            return np.array([self.require_alpha()])
        if lo is None or hi is None:
            raise DomainError("[sweep] needs both alpha_lo and alpha_hi")
        if lo == hi:
            return np.array([lo])
        if step is None or step <= 0:
            raise DomainError("[sweep] alpha_step must be positive")
        if not 0 < lo < hi <= 1:
            raise DomainError("need 0 < alpha_lo < alpha_hi <= 1")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        grid = np.round(lo + step * np.arange(count), 12)
        if hi - grid[-1] > 1e-9 * step:
            grid = np.append(grid, hi)
        return grid

    def observable_index(self) -> int:
        obs = self.observable.strip()
        if obs.lstrip("-").isdigit():
            idx = int(obs)
        else:
            names = {"x1": 0, "x2": 1, "phi": 2}
            if self.model == "ring":
                for i in range(self.n):
                    for off, nm in enumerate(("x1", "x2", "phi")):
                        names[f"{nm}_{i + 1}"] = 3 * i + off
            if obs not in names:
                raise DomainError(f"unknown observable {obs!r}")
            idx = names[obs]
        if not 0 <= idx < self.system().dimension:
            raise DomainError(f"observable index {idx} out of range")
        return idx

    # -- echo ------------------------------------------------------------
    def to_ini(self) -> str:
        """Serialize every field; :func:`parse_config_text` reads it back unchanged."""
        lines = []
        for section, keys in _SCHEMA.items():
            lines.append(f"[{section}]")
            for key, (attr, kind) in keys.items():
                value = getattr(self, attr)
                if value is None:
                    continue
                lines.append(f"{key} = {_render(value, kind)}")
            lines.append("")
        return "\n".join(lines)


def _render(value, kind: str) -> str:
    if kind.startswith("floats"):
        return ", ".join(repr(float(v)) for v in value)
    if kind == "vectors":
        return " | ".join(", ".join(repr(float(v)) for v in vec) for vec in value)
    if kind.startswith("float"):
        return repr(float(value))
    if kind == "bool":
        return "yes" if value else "no"
    return str(value)


def _finite(text: str, where: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ConfigParseError(f"{where}: {text!r} is not a number") from None
    if not math.isfinite(v):
        raise ConfigParseError(f"{where}: value must be finite")
    return v


def _floats(text: str, where: str) -> tuple:
    parts = [s.strip() for s in text.split(",")]
    if parts == [""]:
        return ()
    return tuple(_finite(s, where) for s in parts)


def _convert(text: str, kind: str, where: str):
    text = text.strip()
    if kind in ("float", "float?"):
        return _finite(text, where)
    if kind == "int":
        try:
            return int(text)
        except ValueError:
            raise ConfigParseError(f"{where}: {text!r} is not an integer") from None
    if kind in ("floats", "floats?"):
        return _floats(text, where)
    if kind == "vectors":
        return tuple(_floats(chunk, where) for chunk in text.split("|") if chunk.strip())
    if kind == "bool":
        low = text.lower()
        if low in ("1", "yes", "true", "on"):
            return True
        if low in ("0", "no", "false", "off"):
            return False
        raise ConfigParseError(f"{where}: {text!r} is not a boolean")
    return text


def parse_config_text(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigParseError(f"malformed config: {exc}") from None
    values = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigParseError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigParseError(f"unknown key {key!r} in [{section}]")
            attr, kind = _SCHEMA[section][key]
            values[attr] = _convert(raw, kind, f"[{section}] {key}")
    model = values.get("model", "two_neuron")
    if model not in MODELS:
        raise ConfigParseError(f"[model] type must be one of {', '.join(MODELS)}")
    return ExperimentConfig(**values)


def parse_config(path) -> ExperimentConfig:
    """Read and parse a config file. ``OSError`` propagates for unreadable paths."""
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


load_config = parse_config


def replace(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return dataclasses.replace(cfg, **changes)
