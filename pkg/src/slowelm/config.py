"""Run configuration: one flat record of every tunable, read from ``key=value`` files."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

from .elm import MODES
from .events import FORMATS
from .pipeline import FeatureParams
from .synth import SuiteConfig, default_shapes

DISTANCES = (("near", 30.0), ("mid", 45.0), ("far", 60.0))
BASE_OMEGA = math.pi / 2


class ConfigError(ValueError):
    pass


def _ints(s) -> tuple:
    return tuple(int(v) for v in _items(s))


def _floats(s) -> tuple:
    return tuple(float(v) for v in _items(s))


def _items(s) -> tuple:
    if isinstance(s, (tuple, list)):
        return tuple(s)
    return tuple(v.strip() for v in str(s).split(",") if v.strip())


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    # windowing and ROI
    n_w: int = 2000
    stride: int = 500
    trim_fraction: float = 0.9
    smooth_dist: float = 10.0
    side: int = 60
    # network
    n_hidden: int = 3000
    k: int = 200
    C: float = 1.0
    mode: str = "slow"
    eps: float = 1e-10
    pose_bins: int = 8
    # synthetic suite
    objects: int = 8
    speeds: int = 3
    distances: int = 3
    pitch_low: float = 10.0
    pitch_high: float = 30.0
    total_rotation: float = 1080.0
    events_per_degree: float = 200.0
    noise_rate: float = 0.05
    width: int = 128
    height: int = 128
    fmt: str = "evt-bin"
    # evaluation and benchmarking
    k_sweep: tuple = (10, 25, 50, 100, 200, 400, 800)
    sweep_modes: tuple = ("slow", "pca", "identity", "fast")
    spans: tuple = (0.0, 45.0, 90.0, 135.0, 180.0, 270.0, 360.0)
    multiview_modes: tuple = ("slow", "pca")
    bench_duration: float = 10.0
    bench_ks: tuple = (50, 200)

    def validate(self) -> "RunConfig":
        checks = [
            (self.n_w >= 1, "n_w must be >= 1"),
            (self.stride >= 1, "stride must be >= 1"),
            (0 < self.trim_fraction <= 1, "trim_fraction must be in (0, 1]"),
            (self.smooth_dist >= 0, "smooth_dist must be >= 0"),
            (self.side >= 1, "side must be >= 1"),
            (self.n_hidden >= 1, "n_hidden must be >= 1"),
            (1 <= self.k <= self.n_hidden, f"k must be in [1, n_hidden={self.n_hidden}]"),
            (self.C > 0, "C must be positive"),
            (self.mode in MODES, f"mode must be one of {MODES}"),
            (0 < self.eps < 1, "eps must be in (0, 1)"),
            (self.pose_bins >= 1, "pose_bins must be >= 1"),
            (1 <= self.objects <= len(default_shapes()), f"objects must be in [1, {len(default_shapes())}]"),
            (self.speeds >= 1, "speeds must be >= 1"),
            (1 <= self.distances <= len(DISTANCES), f"distances must be in [1, {len(DISTANCES)}]"),
            (0 <= self.pitch_low < 80 and 0 <= self.pitch_high < 80, "pitches must be in [0, 80)"),
            (self.total_rotation > 0, "total_rotation must be positive"),
            (self.events_per_degree > 0, "events_per_degree must be positive"),
            (0 <= self.noise_rate < 1, "noise_rate must be in [0, 1)"),
            (self.width >= 2 and self.height >= 2, "sensor must be at least 2x2"),
            (self.fmt in FORMATS, f"fmt must be one of {FORMATS}"),
            (all(k >= 1 for k in self.k_sweep), "k_sweep entries must be >= 1"),
            (all(m in MODES for m in self.sweep_modes), f"sweep_modes must be among {MODES}"),
            (all(m in MODES for m in self.multiview_modes), f"multiview_modes must be among {MODES}"),
            (all(s >= 0 for s in self.spans), "spans must be >= 0"),
            (self.bench_duration > 0, "bench_duration must be positive"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        return self

    @property
    def omegas(self) -> tuple:
        return tuple(BASE_OMEGA * 2**i for i in range(self.speeds))

    def features(self) -> FeatureParams:
        return FeatureParams(self.n_w, self.stride, self.trim_fraction, self.smooth_dist, self.side)

    def suite(self) -> SuiteConfig:
        return SuiteConfig(
            num_objects=self.objects,
            speeds=self.omegas,
            distances=DISTANCES[: self.distances],
            elevations=(("low", self.pitch_low), ("high", self.pitch_high)),
            train_elevation="low",
            total_rotation=self.total_rotation,
            events_per_degree=self.events_per_degree,
            noise_rate=self.noise_rate,
            width=self.width,
            height=self.height,
            seed=self.seed,
        )

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return asdict(self)


_CONVERT = {}
for _f in fields(RunConfig):
    _d = _f.default
    if isinstance(_d, tuple):
        _CONVERT[_f.name] = _ints if _d and isinstance(_d[0], int) else (_floats if _d and isinstance(_d[0], float) else _items)
    elif isinstance(_d, bool):
        _CONVERT[_f.name] = lambda s: str(s).lower() in ("1", "true", "yes")
    else:
        _CONVERT[_f.name] = type(_d)


def coerce(key: str, value):
    if key not in _CONVERT:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        return _CONVERT[key](value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad value for {key}: {value!r} ({e})") from None


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = coerce(key, value)
    return out


def load_config(path=None, overrides=None, base: RunConfig = RunConfig()) -> RunConfig:
    """File values over ``base``, then ``overrides`` (None entries ignored)."""
    values = {}
    if path is not None:
        with open(path) as fh:
            values.update(parse_config_text(fh.read()))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = coerce(key, value)
    return replace(base, **values).validate()
