"""Experiment configuration: flat ``key = value`` text with dotted keys.

Example::

    # desk-scale replica
    scene.points = 0,0,0,1; -12,-12,2,1; 12,12,2,1; 24,-12,4,1; 24,12,4,1
    scene.z_o = 10
    series.M = 6
    retrieval.beta_step = 0.05
    seeds = 0, 1, 2
"""

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .correlation import comp_scale_series
from .retrieval import ConstraintSet, RetrievalConfig
from .sim import ScatteringScene

# 1 front point, 2 diagonal points mid-depth, 2 vertical points at the back
FIVE_POINT_SCENE = (
    (0, 0, 0, 1.0),
    (-12, -12, 2, 1.0),
    (12, 12, 2, 1.0),
    (24, -12, 4, 1.0),
    (24, 12, 4, 1.0),
)


class ConfigError(ValueError):
    pass


@dataclass
class SceneSection:
    points: tuple = FIVE_POINT_SCENE
    z_o: float = 10.0
    z_i: float = 25.0
    delta_z: float = 1.0
    sensor_n: int = 256
    grain_px: float = 8.0
    read_sigma: float = 0.0


@dataclass
class SeriesSection:
    M: int = 6


@dataclass
class PreprocessSection:
    crop: int = 256
    downsample: int = 4
    bias_window: int = 32
    background_window: int = 63
    interpolation: str = "bilinear"


@dataclass
class RetrievalSection:
    beta_start: float = 2.0
    beta_end: float = 0.0
    beta_step: float = 0.05
    iters_per_beta: int = 10
    er_iters: int = 500
    realness: bool = True
    non_negativity: bool = True
    intensity_max: object = "auto"


@dataclass
class MemorySection:
    # None: half the cropped correlation window / sqrt(2) x grain
    d_px: float = None
    delta_corr_px: float = None


@dataclass
class ExperimentConfig:
    scene: SceneSection = field(default_factory=SceneSection)
    series: SeriesSection = field(default_factory=SeriesSection)
    preprocess: PreprocessSection = field(default_factory=PreprocessSection)
    retrieval: RetrievalSection = field(default_factory=RetrievalSection)
    memory: MemorySection = field(default_factory=MemorySection)
    out: str = "out"
    seeds: tuple = (0,)

    def validate(self):
        """Build every derived object once so invalid settings surface as ConfigError."""
        try:
            self.make_scene(0)
            comp_scale_series(self.scene.z_o, self.scene.z_i, self.scene.delta_z, self.series.M)
            self.retrieval_config(0)
            p = self.preprocess
            if p.crop > self.scene.sensor_n or p.crop % p.downsample:
                raise ValueError(
                    f"crop {p.crop} must be <= sensor_n {self.scene.sensor_n} "
                    f"and divisible by downsample {p.downsample}"
                )
            if p.bias_window >= p.crop // p.downsample:
                raise ValueError(
                    f"bias_window {p.bias_window} must be smaller than the slice side "
                    f"{p.crop // p.downsample}"
                )
            if p.background_window < 3 or p.background_window % 2 == 0:
                raise ValueError("background_window must be odd and >= 3")
            if self.scene.read_sigma < 0:
                raise ValueError("read_sigma must be >= 0")
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def make_scene(self, seed):
        s = self.scene
        return ScatteringScene(
            points=s.points,
            z_o=s.z_o,
            z_i=s.z_i,
            delta_z=s.delta_z,
            sensor_n=s.sensor_n,
            grain_px=s.grain_px,
            seed=seed,
        )

    def retrieval_config(self, seed):
        r = self.retrieval
        return RetrievalConfig(
            beta_start=r.beta_start,
            beta_end=r.beta_end,
            beta_step=r.beta_step,
            iters_per_beta=r.iters_per_beta,
            er_iters=r.er_iters,
            seed=seed,
            constraints=ConstraintSet(r.realness, r.non_negativity, r.intensity_max),
        )

    @property
    def d_px(self):
        if self.memory.d_px is not None:
            return self.memory.d_px
        return self.preprocess.crop / 2

    @property
    def delta_corr_px(self):
        if self.memory.delta_corr_px is not None:
            return self.memory.delta_corr_px
        return math.sqrt(2) * self.scene.grain_px

    def grid_shape(self):
        side = self.preprocess.crop // self.preprocess.downsample
        return (2 * self.series.M - 1, side, side)


def derive_seeds(seed):
    """Independent integer seeds for the speckle, the read noise and the retrieval."""
    speckle, noise, retrieval = np.random.SeedSequence(int(seed)).generate_state(3)
    return int(speckle), int(noise), int(retrieval)


def _parse_bool(text):
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_optional_float(text):
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


def _parse_intensity_max(text):
    value = text.strip().lower()
    if value == "auto":
        return "auto"
    if value in ("none", "off"):
        return None
    return float(text)


def _parse_points(text):
    points = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) != 4:
            raise ValueError(f"point needs x,y,plane,intensity, got {chunk!r}")
        points.append((int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3])))
    return tuple(points)


def _parse_seeds(text):
    return tuple(int(s) for s in text.replace(",", " ").split())


_PARSERS = {
    bool: _parse_bool,
    int: int,
    float: float,
    str: str.strip,
}

_SPECIAL = {
    "scene.points": _parse_points,
    "retrieval.intensity_max": _parse_intensity_max,
    "memory.d_px": _parse_optional_float,
    "memory.delta_corr_px": _parse_optional_float,
    "seeds": _parse_seeds,
    "out": str.strip,
}


def _set(config, key, raw):
    parts = key.split(".")
    target = config
    for name in parts[:-1]:
        if not hasattr(target, name) or not dataclasses.is_dataclass(getattr(target, name)):
            raise ConfigError(f"unknown config section {name!r} in key {key!r}")
        target = getattr(target, name)
    attr = parts[-1]
    fields = {f.name: f for f in dataclasses.fields(target)}
    if attr not in fields or dataclasses.is_dataclass(getattr(target, attr)):
        raise ConfigError(f"unknown config key {key!r}")
    parser = _SPECIAL.get(key) or _PARSERS.get(fields[attr].type)
    try:
        setattr(target, attr, parser(raw))
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def parse_config(text, base=None):
    config = ExperimentConfig() if base is None else base
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        _set(config, key, value)
    return config


def load_config(path=None):
    if path is None:
        return ExperimentConfig().validate()
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read()).validate()


def dump_config(config):
    """Serialize ``config`` back to the flat text format."""
    lines = []

    def fmt(value):
        if isinstance(value, bool):
            return "true" if value else "false"
        if value is None:
            return "none"
        return str(value)

    for section in ("scene", "series", "preprocess", "retrieval", "memory"):
        obj = getattr(config, section)
        for f in dataclasses.fields(obj):
            value = getattr(obj, f.name)
            if f.name == "points":
                value = "; ".join(",".join(fmt(v) for v in p) for p in value)
            lines.append(f"{section}.{f.name} = {fmt(value)}")
    lines.append(f"out = {config.out}")
    lines.append(f"seeds = {', '.join(str(s) for s in config.seeds)}")
    return "\n".join(lines) + "\n"
