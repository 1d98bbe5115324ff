"""Experiment configuration: JSON text in, validated dataclasses out.

Every field is optional; omitted ones take the standard experimental values
(k = 20, s = 4, a radius-25 sphere with 100 x 100 samples, 10% noise and the
sampling box [-1.5, 1.5]^3 with 201 nodes per axis). Complex numbers are
written either as plain numbers or as ``[re, im]`` pairs.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .forward import BallSource, ConfigError, PointSource, build_sphere_surface
from .imaging import ImagingSpec, SamplingGrid
from .kernels import WaveContext
from .reconstruct import ReconstructionParams


@dataclass(frozen=True)
class SurfaceConfig:
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 25.0
    n_phi: int = 100
    n_theta: int = 100

    def build(self):
        return build_sphere_surface(self.center, self.radius, self.n_phi, self.n_theta)


@dataclass(frozen=True)
class GridConfig:
    lower: tuple = (-1.5, -1.5, -1.5)
    upper: tuple = (1.5, 1.5, 1.5)
    n: int = 201
    coarse_n: int = 48
    two_stage: bool = True

    def build(self):
        return SamplingGrid(self.lower, self.upper, (self.n,) * 3)


@dataclass(frozen=True)
class NoiseConfig:
    delta1: float = 0.1
    delta2: float = 0.1
    seed: int = 0


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    stem: str = "run"


@dataclass(frozen=True)
class SourceEntry:
    """One ground-truth source; ``radius`` is ``None`` for point sources."""

    location: tuple
    moment: tuple
    radius: float | None = None

    def build(self):
        if self.radius is None:
            return PointSource(self.location, self.moment)
        return BallSource(self.location, self.radius, self.moment)


@dataclass(frozen=True)
class ExperimentConfig:
    k: float = 20.0
    surface: SurfaceConfig = field(default_factory=SurfaceConfig)
    sources: tuple = ()
    mode: str = "point"
    quad_order: int = 6
    allow_exterior: bool = False
    grid: GridConfig = field(default_factory=GridConfig)
    imaging: ImagingSpec = field(default_factory=ImagingSpec)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    reconstruction: ReconstructionParams = field(default_factory=ReconstructionParams)
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def ctx(self):
        return WaveContext(self.k)

    def source_objects(self):
        return [s.build() for s in self.sources]

    def reconstruction_params(self, dense=None):
        """Reconstruction parameters with the grid's staging choices folded in."""
        from dataclasses import replace

        dense = (not self.grid.two_stage) if dense is None else dense
        return replace(self.reconstruction, coarse_n=self.grid.coarse_n, dense=bool(dense))

    def to_dict(self):
        d = asdict(self)
        d["sources"] = [_source_to_json(s) for s in self.sources]
        return json.loads(json.dumps(d))


def _complex_to_json(z):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _source_to_json(s: SourceEntry):
    mom = [_complex_to_json(c) for c in s.moment]
    if s.radius is None:
        return {"location": list(s.location), "moment": mom}
    return {"center": list(s.location), "radius": s.radius, "vector": mom}


def _number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if not np.isfinite(value):
        raise ConfigError(f"{name} must be finite")
    return float(value)


def _integer(value, name):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return int(value)


def _vec3(value, name):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(f"{name} must be a list of three numbers")
    return tuple(_number(v, f"{name}[{i}]") for i, v in enumerate(value))


def _complex(value, name):
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(f"{name} must be a number or a [re, im] pair")
        return complex(_number(value[0], name), _number(value[1], name))
    return complex(_number(value, name), 0.0)


def _cvec3(value, name):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(f"{name} must be a list of three (complex) numbers")
    return tuple(_complex(v, f"{name}[{i}]") for i, v in enumerate(value))


def _section(raw, name, cls, converters):
    """Build dataclass ``cls`` from mapping ``raw`` with per-field converters."""
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"{name} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown field(s) in {name}: {', '.join(sorted(unknown))}")
    kwargs = {}
    for key, value in raw.items():
        conv = converters.get(key)
        kwargs[key] = conv(value, f"{name}.{key}") if conv else value
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        msg = str(exc)
        raise ConfigError(msg if msg.startswith(name) else f"{name}: {msg}") from None


def _optional(conv):
    return lambda v, n: None if v is None else conv(v, n)


def _choice(*options):
    def conv(v, n):
        if v not in options:
            raise ConfigError(f"{n} must be one of {options}, got {v!r}")
        return v

    return conv


def _flag(v, n):
    if not isinstance(v, bool):
        raise ConfigError(f"{n} must be true or false")
    return v


def _parse_sources(raw):
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise ConfigError("sources must be a list")
    out = []
    for j, item in enumerate(raw):
        name = f"sources[{j}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{name} must be an object")
        if "location" in item:
            extra = set(item) - {"location", "moment"}
            if extra or "moment" not in item:
                raise ConfigError(f"{name} needs exactly 'location' and 'moment'")
            entry = SourceEntry(_vec3(item["location"], f"{name}.location"), _cvec3(item["moment"], f"{name}.moment"))
        elif "center" in item:
            extra = set(item) - {"center", "radius", "vector"}
            if extra or not {"radius", "vector"} <= set(item):
                raise ConfigError(f"{name} needs exactly 'center', 'radius' and 'vector'")
            radius = _number(item["radius"], f"{name}.radius")
            if radius <= 0:
                raise ConfigError(f"{name}.radius must be positive")
            entry = SourceEntry(_vec3(item["center"], f"{name}.center"), _cvec3(item["vector"], f"{name}.vector"), radius)
        else:
            raise ConfigError(f"{name} must have a 'location' (point) or a 'center' (ball)")
        if not any(entry.moment):
            raise ConfigError(f"{name} has a zero moment vector")
        out.append(entry)
    return tuple(out)


def parse_config_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown top-level field(s): {', '.join(sorted(unknown))}")
    k = _number(raw.get("k", 20.0), "k")
    if k <= 0:
        raise ConfigError(f"k must be positive, got {k}")
    surface = _section(
        raw.get("surface"),
        "surface",
        SurfaceConfig,
        {"center": _vec3, "radius": _number, "n_phi": _integer, "n_theta": _integer},
    )
    if surface.radius <= 0:
        raise ConfigError(f"surface.radius must be positive, got {surface.radius}")
    for name in ("n_phi", "n_theta"):
        if getattr(surface, name) < 2:
            raise ConfigError(f"surface.{name} must be at least 2")
    grid = _section(
        raw.get("grid"),
        "grid",
        GridConfig,
        {"lower": _vec3, "upper": _vec3, "n": _integer, "coarse_n": _integer, "two_stage": _flag},
    )
    grid.build()
    imaging = _section(
        raw.get("imaging"),
        "imaging",
        ImagingSpec,
        {"base": _choice("interior", "conjugate"), "variant": _choice("real", "imag", "modulus"), "s": _integer},
    )
    noise = _section(
        raw.get("noise"), "noise", NoiseConfig, {"delta1": _number, "delta2": _number, "seed": _integer}
    )
    if noise.delta1 < 0 or noise.delta2 < 0:
        raise ConfigError("noise.delta1 and noise.delta2 must be nonnegative")
    opt_num = _optional(_number)
    recon = _section(
        raw.get("reconstruction"),
        "reconstruction",
        ReconstructionParams,
        {
            "eta": _number,
            "gamma": _number,
            "min_sep": opt_num,
            "tau_stop": _number,
            "max_rounds": _integer,
            "merge_radius": opt_num,
            "mask_radius": opt_num,
            "residue_radius": opt_num,
            "mask": _choice("auto", "on", "off"),
            "mask_ratio": _number,
            "coarse_n": _integer,
            "coarse_eta_factor": _number,
            "dense": _flag,
        },
    )
    output = _section(raw.get("output"), "output", OutputConfig, {})
    mode = _choice("point", "small-volume")(raw.get("mode", "point"), "mode")
    sources = _parse_sources(raw.get("sources"))
    kinds = {s.radius is None for s in sources}
    if len(kinds) > 1:
        raise ConfigError("sources mixes point sources and balls")
    if sources and (sources[0].radius is None) != (mode == "point"):
        raise ConfigError(f"mode {mode!r} does not match the kind of sources given")
    quad_order = _integer(raw.get("quad_order", 6), "quad_order")
    if quad_order < 2:
        raise ConfigError("quad_order must be >= 2")
    allow_exterior = _flag(raw.get("allow_exterior", False), "allow_exterior")
    cfg = ExperimentConfig(
        k=k,
        surface=surface,
        sources=sources,
        mode=mode,
        quad_order=quad_order,
        allow_exterior=allow_exterior,
        grid=grid,
        imaging=imaging,
        noise=noise,
        reconstruction=recon,
        output=output,
    )
    _check_geometry(cfg)
    return cfg


def _check_geometry(cfg: ExperimentConfig):
    c = np.array(cfg.surface.center)
    for j, s in enumerate(cfg.sources):
        d = np.linalg.norm(np.array(s.location) - c) + (s.radius or 0.0)
        if d >= cfg.surface.radius and not (cfg.allow_exterior and s.radius is None):
            raise ConfigError(
                f"sources[{j}] lies on or outside the measurement sphere (surface.radius={cfg.surface.radius})"
            )


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_config_dict(raw)
