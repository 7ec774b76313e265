"""Synthetic rotating-platform recordings.

An extruded planar outline stands on a turntable, offset from the rotation
axis and facing outward. A pinhole camera looks at the turntable from a
given distance and height. Events are sampled on the projected visible
edges with a fixed number of events per degree of rotation, so a faster
platform produces the same events compressed in time.

Units: lengths in cm, angles in degrees unless a name says otherwise,
timestamps in microseconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .events import EventStream, StreamMeta

SENSOR = (128, 128)


@dataclass(frozen=True)
class ShapeSpec:
    """Closed 2D outlines (u across, v up, cm) extruded ``depth`` cm along w."""

    object_id: int
    name: str
    outlines: tuple  # tuple of (P, 2) arrays
    depth: float = 1.5

    def __post_init__(self):
        for o in self.outlines:
            o = np.asarray(o)
            if o.ndim != 2 or o.shape[1] != 2 or len(o) < 3:
                raise ValueError(f"{self.name}: outlines need >= 3 points of (u, v)")
            if np.ptp(o[:, 0]) <= 0 or np.ptp(o[:, 1]) <= 0:
                raise ValueError(f"{self.name}: degenerate outline")

    def outline3d(self):
        """Front and back cap polylines as (P, 3) arrays."""
        caps = []
        for w in (-self.depth / 2, self.depth / 2):
            for o in self.outlines:
                o = np.asarray(o, dtype=np.float64)
                caps.append(np.column_stack([o, np.full(len(o), w)]))
        return caps

    def segments(self):
        """Edge segments ``(A, B, group)``; group 0/1 = front/back cap, 2 = extrusion edge."""
        A, B, g = [], [], []
        half = self.depth / 2
        for cap, w in ((0, -half), (1, half)):
            for o in self.outlines:
                o = np.asarray(o, dtype=np.float64)
                p = np.column_stack([o, np.full(len(o), w)])
                A.append(p)
                B.append(np.roll(p, -1, axis=0))
                g.append(np.full(len(o), cap))
        for o in self.outlines:
            o = np.asarray(o, dtype=np.float64)
            A.append(np.column_stack([o, np.full(len(o), -half)]))
            B.append(np.column_stack([o, np.full(len(o), half)]))
            g.append(np.full(len(o), 2))
        return np.concatenate(A), np.concatenate(B), np.concatenate(g)


def _poly(*pts):
    return np.array(pts, dtype=np.float64)


def _circle(r, cy, n=24):
    a = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return np.column_stack([r * np.cos(a), cy + r * np.sin(a)])


def _star(r_out, r_in, cy, points=5):
    a = np.pi / 2 + np.arange(2 * points) * np.pi / points
    r = np.where(np.arange(2 * points) % 2 == 0, r_out, r_in)
    return np.column_stack([r * np.cos(a), cy + r * np.sin(a)])


def default_shapes() -> list:
    """Eight distinct outlines, roughly 7-9 cm tall, standing on v = 1."""
    outlines = [
        ("square", [_poly((-3.5, 1), (3.5, 1), (3.5, 8), (-3.5, 8))]),
        ("triangle", [_poly((-4, 1), (4, 1), (0, 9))]),
        ("cross", [_poly((-1, 1), (1, 1), (1, 4), (3.5, 4), (3.5, 6), (1, 6), (1, 9),
                         (-1, 9), (-1, 6), (-3.5, 6), (-3.5, 4), (-1, 4))]),
        ("L", [_poly((-3, 1), (3, 1), (3, 3), (-1, 3), (-1, 9), (-3, 9))]),
        ("U", [_poly((-3.5, 1), (3.5, 1), (3.5, 9), (1.5, 9), (1.5, 3), (-1.5, 3), (-1.5, 9), (-3.5, 9))]),
        ("star", [_star(4.2, 1.8, 5.0)]),
        ("bar", [_poly((-1, 1), (1, 1), (1, 9.5), (-1, 9.5))]),
        ("ring", [_circle(3.8, 5.0), _circle(2.0, 5.0)]),
    ]
    return [ShapeSpec(i, name, tuple(o)) for i, (name, o) in enumerate(outlines)]


@dataclass(frozen=True)
class RigConfig:
    omega: float = math.pi  # rad/s
    distance: float = 30.0  # line of sight, camera to aim point on the axis
    pitch: float = 10.0  # degrees the view looks down
    events_per_degree: float = 200.0
    noise_rate: float = 0.05
    seed: int = 0
    width: int = SENSOR[0]
    height: int = SENSOR[1]
    focal_px: float = 180.0
    axis_offset: float = 5.0  # object centre to rotation axis
    target_height: float = 5.0  # camera aims at this height on the axis
    reference_distance: float = 30.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if not self.events_per_degree > 0:
            raise ValueError("events_per_degree must be positive")
        if not 0 <= self.noise_rate < 1:
            raise ValueError("noise_rate must be in [0, 1)")
        if self.distance <= self.axis_offset + 5:
            raise ValueError("camera too close to the platform")

    @property
    def omega_deg(self) -> float:
        return math.degrees(self.omega)


class Camera:
    """Pinhole camera ``distance`` cm from the aim point, looking down by ``pitch``."""

    def __init__(self, rig: RigConfig):
        target = np.array([0.0, rig.target_height, 0.0])
        a = math.radians(rig.pitch)
        self.pos = target + rig.distance * np.array([0.0, math.sin(a), -math.cos(a)])
        f = target - self.pos
        f /= np.linalg.norm(f)
        r = np.cross([0.0, 1.0, 0.0], f)
        r /= np.linalg.norm(r)
        self.forward, self.right, self.up = f, r, np.cross(f, r)
        self.focal = rig.focal_px
        self.cx = (rig.width - 1) / 2
        self.cy = (rig.height - 1) / 2

    def project(self, P: np.ndarray):
        """World points (..., 3) to pixel coordinates (px, py)."""
        d = P - self.pos
        z = d @ self.forward
        return self.cx + self.focal * (d @ self.right) / z, self.cy - self.focal * (d @ self.up) / z


def _rotate(P: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Rotate local points (S, 3) about the vertical axis by angles (E,) -> (E, S, 3)."""
    c = np.cos(theta)[:, None]
    s = np.sin(theta)[:, None]
    x, y, z = P[:, 0], P[:, 1], P[:, 2]
    return np.stack([c * x + s * z, np.broadcast_to(y, (len(theta), len(y))), -s * x + c * z], axis=-1)


class _Scene:
    def __init__(self, shape: ShapeSpec, rig: RigConfig):
        self.cam = Camera(rig)
        A, B, g = shape.segments()
        off = np.array([0.0, 0.0, -rig.axis_offset])
        self.A, self.B, self.group = A + off, B + off, g
        uv = np.concatenate([np.asarray(o) for o in shape.outlines])
        cu, cv = uv.mean(axis=0)
        half = shape.depth / 2
        self.cap_centres = np.array([[cu, cv, -half], [cu, cv, half]]) + off
        self.cap_normals = np.array([[0.0, 0.0, -1.0], [0.0, 0.0, 1.0]])

    def visible(self, theta: np.ndarray) -> np.ndarray:
        """(E, S) mask: caps facing the camera plus all extrusion edges."""
        centres = _rotate(self.cap_centres, theta)
        normals = _rotate(self.cap_normals, theta)
        facing = np.einsum("esk,esk->es", normals, self.cam.pos - centres) > 0
        vis = np.ones((len(theta), len(self.group)), dtype=bool)
        for cap in (0, 1):
            vis[:, self.group == cap] = facing[:, cap : cap + 1]
        return vis

    def image_segments(self, theta: np.ndarray):
        ax, ay = self.cam.project(_rotate(self.A, theta))
        bx, by = self.cam.project(_rotate(self.B, theta))
        return ax, ay, bx, by


@dataclass(eq=False)
class Recording:
    stream: EventStream
    angles: np.ndarray  # annotated platform angle per event, degrees
    noise: np.ndarray  # True for spurious events
    shape: ShapeSpec
    rig: RigConfig


def _rotate_each(P: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Rotate point ``P[i]`` by ``theta[i]`` about the vertical axis."""
    c, s = np.cos(theta), np.sin(theta)
    return np.column_stack([c * P[:, 0] + s * P[:, 2], P[:, 1], -s * P[:, 0] + c * P[:, 2]])


def generate_recording(
    shape: ShapeSpec,
    rig: RigConfig,
    total_rotation: float = 1080.0,
    grid_step: float = 0.05,
) -> Recording:
    """Render one recording of ``shape`` turning through ``total_rotation`` degrees.

    The event count is ``round(events_per_degree * total_rotation)`` for any
    ``omega``. Event ``i`` sits at angle ``(i + u_i) / events_per_degree``
    with ``u_i`` uniform in [0, 1); its timestamp is that angle over the
    angular velocity, rounded to a microsecond, and it is rendered at the
    angle the annotation assigns to that timestamp.

    Edges are picked in proportion to their projected length, evaluated on a
    ``grid_step`` degree grid; the event position itself is computed at the
    exact annotated angle.
    """
    if not total_rotation > 0:
        raise ValueError("total_rotation must be positive")
    rng = np.random.default_rng(rig.seed)
    n = int(round(rig.events_per_degree * total_rotation))
    jitter = rng.random(n)
    pick = rng.random(n)
    along = rng.random(n)
    is_noise = rng.random(n) < rig.noise_rate
    nx = rng.integers(0, rig.width, n)
    ny = rng.integers(0, rig.height, n)
    npol = rng.choice(np.array([-1, 1], dtype=np.int8), n)

    nominal = (np.arange(n) + jitter) / rig.events_per_degree
    t = np.rint(nominal / rig.omega_deg * 1e6).astype(np.int64)
    angles = rig.omega_deg * t.astype(np.float64) * 1e-6

    scene = _Scene(shape, rig)
    grid = np.radians(np.arange(0.0, angles[-1] + 2 * grid_step, grid_step)) if n else np.zeros(1)
    ax, ay, bx, by = scene.image_segments(grid)
    cum = np.cumsum(np.hypot(bx - ax, by - ay) * scene.visible(grid), axis=1)
    g = np.rint(angles / grid_step).astype(np.int64)
    seg = np.empty(n, dtype=np.int64)
    for lo in range(0, n, 16384):
        sl = slice(lo, lo + 16384)
        c = cum[g[sl]]
        seg[sl] = np.argmax(c > (pick[sl] * c[:, -1])[:, None], axis=1)

    # swap caps if the grid point and the exact angle disagree on which one faces the camera
    th = np.radians(angles)
    group = scene.group[seg]
    on_cap = group < 2
    n_cap = int(np.sum(scene.group == 0))
    facing = np.einsum(
        "ek,ek->e",
        _rotate_each(scene.cap_normals[np.minimum(group, 1)], th),
        scene.cam.pos - _rotate_each(scene.cap_centres[np.minimum(group, 1)], th),
    ) > 0
    flip = on_cap & ~facing
    seg[flip] = np.where(group[flip] == 0, seg[flip] + n_cap, seg[flip] - n_cap)

    P = scene.A[seg] + along[:, None] * (scene.B[seg] - scene.A[seg])
    px, py = scene.cam.project(_rotate_each(P, th))
    px2, _ = scene.cam.project(_rotate_each(P, th + np.radians(0.05)))
    x = np.clip(np.rint(px), 0, rig.width - 1).astype(np.int32)
    y = np.clip(np.rint(py), 0, rig.height - 1).astype(np.int32)
    p = np.where(px2 >= px, 1, -1).astype(np.int8)
    x[is_noise] = nx[is_noise]
    y[is_noise] = ny[is_noise]
    p[is_noise] = npol[is_noise]

    meta = StreamMeta(
        object_id=shape.object_id,
        omega=rig.omega,
        distance_scale=rig.reference_distance / rig.distance,
    )
    stream = EventStream(rig.width, rig.height, t, x, y, p, meta)
    return Recording(stream, angles, is_noise, shape, rig)


def projected_segments(shape: ShapeSpec, rig: RigConfig, angle_deg: float):
    """Visible image-plane segments ``(ax, ay, bx, by)`` at one platform angle."""
    scene = _Scene(shape, rig)
    th = np.radians(np.atleast_1d(float(angle_deg)))
    ax, ay, bx, by = scene.image_segments(th)
    vis = scene.visible(th)[0]
    return ax[0][vis], ay[0][vis], bx[0][vis], by[0][vis]


def point_segment_distance(px, py, ax, ay, bx, by) -> np.ndarray:
    """Distance from each point to the nearest of the given segments."""
    px = np.asarray(px, dtype=np.float64)[:, None]
    py = np.asarray(py, dtype=np.float64)[:, None]
    dx, dy = bx - ax, by - ay
    L2 = np.where(dx * dx + dy * dy > 0, dx * dx + dy * dy, 1.0)
    s = np.clip(((px - ax) * dx + (py - ay) * dy) / L2, 0.0, 1.0)
    return np.min(np.hypot(px - (ax + s * dx), py - (ay + s * dy)), axis=1)


def edge_mask(shape: ShapeSpec, rig: RigConfig, angle_lo: float, angle_hi: float, step: float = 0.1) -> np.ndarray:
    """Sensor-sized boolean mask of every pixel an edge crosses between two angles."""
    scene = _Scene(shape, rig)
    th = np.radians(np.arange(angle_lo, angle_hi + step / 2, step))
    ax, ay, bx, by = scene.image_segments(th)
    vis = scene.visible(th)
    mask = np.zeros((rig.height, rig.width), dtype=bool)
    L = np.hypot(bx - ax, by - ay)
    m = int(np.ceil(L.max() * 4)) + 2
    s = np.linspace(0.0, 1.0, m)
    px = ax[..., None] + s * (bx - ax)[..., None]
    py = ay[..., None] + s * (by - ay)[..., None]
    xi = np.clip(np.rint(px[vis]), 0, rig.width - 1).astype(int).ravel()
    yi = np.clip(np.rint(py[vis]), 0, rig.height - 1).astype(int).ravel()
    mask[yi, xi] = True
    return mask


# ---------------------------------------------------------------- suites

@dataclass(frozen=True)
class SuiteConfig:
    num_objects: int = 8
    speeds: tuple = (math.pi / 2, math.pi, 2 * math.pi)  # rad/s
    distances: tuple = (("near", 30.0), ("mid", 45.0), ("far", 60.0))
    elevations: tuple = (("low", 10.0), ("high", 30.0))  # view pitch, degrees
    train_elevation: str = "low"
    total_rotation: float = 1080.0
    events_per_degree: float = 200.0
    noise_rate: float = 0.05
    width: int = SENSOR[0]
    height: int = SENSOR[1]
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.num_objects <= len(default_shapes()):
            raise ValueError(f"num_objects must be in [1, {len(default_shapes())}]")
        if self.train_elevation not in dict(self.elevations):
            raise ValueError(f"train_elevation {self.train_elevation!r} not among elevations")

    def subset(self, **kw) -> "SuiteConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class RecordingSpec:
    index: int
    object_id: int
    shape: str
    omega: float
    distance: str
    distance_cm: float
    elevation: str
    pitch: float
    split: str
    seed: int

    @property
    def stem(self) -> str:
        return (
            f"rec{self.index:03d}_obj{self.object_id}_{self.distance}_{self.elevation}"
            f"_w{self.omega:.4f}".replace(".", "p")
        )


def recording_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def generate_suite(cfg: SuiteConfig = SuiteConfig()) -> list:
    """Enumerate objects x distances x elevations x speeds, split by elevation.

    Returns the deterministic list of :class:`RecordingSpec`; render each with
    :func:`render`.
    """
    specs = []
    shapes = default_shapes()[: cfg.num_objects]
    i = 0
    for shape in shapes:
        for dname, dcm in cfg.distances:
            for ename, ecm in cfg.elevations:
                for omega in cfg.speeds:
                    split = "train" if ename == cfg.train_elevation else "test"
                    specs.append(
                        RecordingSpec(i, shape.object_id, shape.name, float(omega), dname, float(dcm),
                                      ename, float(ecm), split, recording_seed(cfg.seed, i))
                    )
                    i += 1
    return specs


def rig_for(spec: RecordingSpec, cfg: SuiteConfig) -> RigConfig:
    return RigConfig(
        omega=spec.omega,
        distance=spec.distance_cm,
        pitch=spec.pitch,
        events_per_degree=cfg.events_per_degree,
        noise_rate=cfg.noise_rate,
        seed=spec.seed,
        width=cfg.width,
        height=cfg.height,
    )


def render(spec: RecordingSpec, cfg: SuiteConfig) -> Recording:
    shape = default_shapes()[spec.object_id]
    return generate_recording(shape, rig_for(spec, cfg), cfg.total_rotation)
