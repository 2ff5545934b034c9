"""Run configuration: JSON-compatible file, CLI overrides, canonical hash."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

from .algebra import InvalidParameterError

__all__ = ["ConfigError", "RunConfig", "ModelSection", "OperatorSection",
           "SamplerSection", "SmoothingSection", "ClassicalSection",
           "ScalingSection", "PlotSection", "load_config"]


class ConfigError(ValueError):
    """Invalid or missing configuration entry; message names the key."""


@dataclass
class ModelSection:
    N: int = 20
    xi: float = 0.4
    epsilon: float = 0.4


@dataclass
class OperatorSection:
    v: str = "D_x"
    w: str = "D_x"


@dataclass
class SamplerSection:
    t_min: float = 1e7
    t_max: float = 1e9
    count: int = 2500


@dataclass
class SmoothingSection:
    nu_window: int = 50
    lambda_window: int = 60
    r2_min: float = 0.9
    curvature_max: float = 0.5


@dataclass
class ClassicalSection:
    plane: str = "q1"
    orientation: int = 1
    n_cells: int = 100
    budget: int = 500
    traj_time: float = 2e4
    tol: float = 1e-12
    xi_values: list = field(default_factory=lambda: [0.4])
    epsilon: float = 0.4
    energies: list = field(default_factory=lambda: [0.2])
    dump_sections: bool = False


@dataclass
class ScalingSection:
    sizes: list = field(default_factory=lambda: [10, 16, 24, 34])
    energies: list = field(default_factory=lambda: [0.2])
    hamiltonian: str = "u3"  # 'u3' | 'goe'
    window_rule: str = "2N"  # '2N' or an integer window


@dataclass
class PlotSection:
    input: str = ""
    x: str = ""
    y: list = field(default_factory=list)
    logx: bool = False
    logy: bool = False
    output: str = "plot.svg"


@dataclass
class RunConfig:
    """Fully resolved run configuration.

    The seed is mandatory and never defaulted from the clock; every random
    stream of a run derives from it by a fixed scheme: [seed, 0] long-time
    sampler, [seed, 1, N] GOE draws.
    """

    seed: int
    threads: int = 1
    out: str = "runs"
    parity_block: int | None = None  # None = full space, else 1 or 2
    model: ModelSection = field(default_factory=ModelSection)
    operators: OperatorSection = field(default_factory=OperatorSection)
    sampler: SamplerSection = field(default_factory=SamplerSection)
    smoothing: SmoothingSection = field(default_factory=SmoothingSection)
    classical: ClassicalSection = field(default_factory=ClassicalSection)
    scaling: ScalingSection = field(default_factory=ScalingSection)
    plot: PlotSection = field(default_factory=PlotSection)

    def to_dict(self) -> dict:
        return asdict(self)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:12]


_SECTIONS = {
    "model": ModelSection,
    "operators": OperatorSection,
    "sampler": SamplerSection,
    "smoothing": SmoothingSection,
    "classical": ClassicalSection,
    "scaling": ScalingSection,
    "plot": PlotSection,
}


def _build_section(cls, data: dict, path: str):
    valid = {f.name for f in fields(cls)}
    for key in data:
        if key not in valid:
            raise ConfigError(f"unknown key {path}.{key}")
    return cls(**data)


def config_from_dict(data: dict) -> RunConfig:
    """Validate a raw dict; unknown keys raise ConfigError naming the key."""
    data = dict(data)
    if "seed" not in data:
        raise ConfigError("missing mandatory key 'seed' (no wall-clock default)")
    kwargs = {}
    for key in list(data):
        if key in _SECTIONS:
            section = data.pop(key)
            if not isinstance(section, dict):
                raise ConfigError(f"section {key} must be a mapping")
            kwargs[key] = _build_section(_SECTIONS[key], section, key)
    top_valid = {f.name for f in fields(RunConfig)}
    for key in data:
        if key not in top_valid:
            raise ConfigError(f"unknown key {key}")
    kwargs.update(data)
    try:
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    """Read a JSON config file and apply flat CLI overrides.

    Overrides use top-level names (seed, threads, out); a None path starts
    from an empty config, in which case the seed override is required.
    """
    raw = {}
    if path is not None:
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    return config_from_dict(raw)
