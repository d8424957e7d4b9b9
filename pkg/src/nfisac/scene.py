"""Geometric scene model and per-block channel synthesis.

A scene holds static compact scatterers (point objects), static flat
reflectors (wall segments), and dynamic target clusters whose geometry is
redrawn every coherence block. Each channel realization is the
superposition of single-interaction paths: the downlink vector is
``h = sum_s beta(s, u) * theta(s)`` and the monostatic round-trip matrix is
``H = sum_s gamma(s) * theta(s) theta(s)^T`` (plain transpose), where
``theta`` is the spherical-wave array response of the interaction point.

Path coefficients are circularly-symmetric complex Gaussian with variance
equal to the source object's mean gain; the downlink coefficient carries an
additional free-space factor for the interaction-to-user hop, so
``E[|beta|^2] = gain * (wavelength / 4 pi)^2 / |s - u|^2``. Everything is
deterministic given (scene, u, block_seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .geometry import ArrayGeometry, Point2D, as_point, as_points, steering_matrix

KIND_T1 = "t1"
KIND_T2 = "t2"
KIND_ST = "st"

# Sub-stream tags hashed together with the block seed.
_STREAM_TARGETS = 101
_STREAM_COEFFS = 102


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle, used for the user region and object placement."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError(f"degenerate rectangle {self}")

    def contains(self, p) -> bool:
        p = as_point(p)
        return self.xmin <= p.x <= self.xmax and self.ymin <= p.y <= self.ymax

    def grid(self, spacing: float) -> np.ndarray:
        """Regular grid covering the rectangle, lexicographically ordered (x, y)."""
        if spacing <= 0:
            raise ValueError("grid spacing must be positive")
        nx = int(math.floor((self.xmax - self.xmin) / spacing + 1e-9)) + 1
        ny = int(math.floor((self.ymax - self.ymin) / spacing + 1e-9)) + 1
        xs = self.xmin + spacing * np.arange(nx)
        ys = self.ymin + spacing * np.arange(ny)
        out = np.empty((nx * ny, 2))
        out[:, 0] = np.repeat(xs, ny)
        out[:, 1] = np.tile(ys, nx)
        return out


@dataclass(frozen=True)
class Type1Object:
    """Static compact scatterer at a known location."""

    location: Point2D
    mean_interaction_gain: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "location", as_point(self.location))
        if self.mean_interaction_gain < 0:
            raise ValueError("mean interaction gain must be non-negative")


@dataclass(frozen=True)
class Type2Object:
    """Static flat reflector (wall segment) producing specular paths."""

    endpoint_a: Point2D
    endpoint_b: Point2D
    mean_reflection_gain: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "endpoint_a", as_point(self.endpoint_a))
        object.__setattr__(self, "endpoint_b", as_point(self.endpoint_b))
        if self.endpoint_a == self.endpoint_b:
            raise ValueError("wall endpoints must be distinct")
        if not 0.0 <= self.mean_reflection_gain <= 1.0:
            raise ValueError("mean reflection gain must lie in [0, 1]")


@dataclass(frozen=True)
class SensingTargetCluster:
    """Dynamic target: scatter points redrawn per block inside a disc."""

    center: Point2D
    radius: float
    num_points: int = 8
    mean_scatter_gain: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if self.radius < 0:
            raise ValueError("cluster radius must be non-negative")
        if self.num_points < 1:
            raise ValueError("cluster needs at least one scatter point")
        if self.mean_scatter_gain < 0:
            raise ValueError("mean scatter gain must be non-negative")


@dataclass(frozen=True)
class Scene:
    """Immutable static environment plus dynamic target clusters."""

    type1: tuple[Type1Object, ...] = ()
    type2: tuple[Type2Object, ...] = ()
    targets: tuple[SensingTargetCluster, ...] = ()
    roi: Rect = field(default_factory=lambda: Rect(-7.0, 7.0, 5.0, 25.0))

    def __post_init__(self):
        object.__setattr__(self, "type1", tuple(self.type1))
        object.__setattr__(self, "type2", tuple(self.type2))
        object.__setattr__(self, "targets", tuple(self.targets))


class Interaction(NamedTuple):
    """One primary interaction point and the channels it feeds."""

    point: Point2D
    kind: str
    mean_gain: float
    in_comm: bool
    in_sensing: bool


@dataclass(frozen=True)
class PathComponent:
    """One path: interaction point plus its downlink and round-trip coefficients."""

    interaction_point: Point2D
    comm_coefficient: complex
    roundtrip_coefficient: complex
    kind: str

    def __post_init__(self):
        object.__setattr__(self, "interaction_point", as_point(self.interaction_point))
        if not (np.isfinite(self.comm_coefficient) and
                np.isfinite(self.roundtrip_coefficient)):
            raise ValueError("path coefficients must be finite")


@dataclass(frozen=True)
class ChannelRealization:
    """Downlink vector h, round-trip matrix H, and the paths behind them."""

    h: np.ndarray
    H: np.ndarray
    components: tuple[PathComponent, ...]
    block_seed: int


def specular_point(wall: Type2Object, src, dst) -> Point2D | None:
    """Reflection point of the specular src -> wall -> dst path, if it exists.

    Mirrors ``src`` across the wall's supporting line and intersects the
    mirror-to-dst segment with the wall segment. Returns None when src and
    dst are not strictly on the same side of the line or the intersection
    misses the segment. With ``dst == src`` this degenerates to the foot of
    the perpendicular from src, the monostatic reflection point.
    """
    src = as_point(src)
    dst = as_point(dst)
    a = np.asarray(wall.endpoint_a, dtype=np.float64)
    b = np.asarray(wall.endpoint_b, dtype=np.float64)
    tangent = b - a
    length = float(np.hypot(*tangent))
    if length == 0.0:
        raise ValueError("degenerate wall of zero length")
    tangent = tangent / length
    normal = np.array([-tangent[1], tangent[0]])
    d_src = float(np.dot(np.asarray(src) - a, normal))
    d_dst = float(np.dot(np.asarray(dst) - a, normal))
    if d_src * d_dst <= 0.0:
        return None
    mirror = np.asarray(src) - 2.0 * d_src * normal
    # Intersection parameter along the mirror -> dst segment, then position
    # along the wall; the denominator is nonzero because both points sit
    # strictly off the line on the same side.
    sigma = d_src / (d_src + d_dst)
    hit = mirror + sigma * (np.asarray(dst) - mirror)
    tau = float(np.dot(hit - a, tangent))
    if tau < 0.0 or tau > length:
        return None
    point = a + tau * tangent
    return Point2D(float(point[0]), float(point[1]))


def enumerate_interactions(scene: Scene, geom: ArrayGeometry, u,
                           block_seed: int) -> list[Interaction]:
    """All primary interaction points for user location u in one block.

    Point scatterers interact at their own location for both channels.
    Each wall contributes its downlink specular point (array reference ->
    wall -> u) and its monostatic point (foot of the perpendicular from the
    array reference); walls with no valid point are skipped. Cluster
    scatter points are drawn uniformly in the disc, fixed per block_seed.
    """
    u = as_point(u)
    q0 = scene_reference(geom)
    out: list[Interaction] = []
    for obj in scene.type1:
        out.append(Interaction(obj.location, KIND_T1, obj.mean_interaction_gain,
                               True, True))
    for wall in scene.type2:
        comm = specular_point(wall, q0, u)
        if comm is not None:
            out.append(Interaction(comm, KIND_T2, wall.mean_reflection_gain,
                                   True, False))
        mono = specular_point(wall, q0, q0)
        if mono is not None:
            out.append(Interaction(mono, KIND_T2, wall.mean_reflection_gain,
                                   False, True))
    for ci, cluster in enumerate(scene.targets):
        rng = np.random.default_rng((block_seed, _STREAM_TARGETS, ci))
        r = cluster.radius * np.sqrt(rng.random(cluster.num_points))
        phi = 2.0 * np.pi * rng.random(cluster.num_points)
        for k in range(cluster.num_points):
            p = Point2D(cluster.center.x + r[k] * math.cos(phi[k]),
                        cluster.center.y + r[k] * math.sin(phi[k]))
            out.append(Interaction(p, KIND_ST, cluster.mean_scatter_gain,
                                   True, True))
    return out


def scene_reference(geom: ArrayGeometry) -> Point2D:
    """Array reference point used as the common ray origin."""
    return geom.reference


def draw_coefficients(interactions: list[Interaction], u, geom: ArrayGeometry,
                      block_seed: int) -> list[PathComponent]:
    """Draw the complex path coefficients for one block.

    Each interaction gets one reflectivity draw ``g ~ CN(0, mean_gain)``
    per block that feeds both links: the round-trip coefficient is ``g``
    itself (two-way free-space loss is already carried by the outer
    product of array responses), and the downlink coefficient adds the
    interaction-to-user hop, ``g * (wavelength / 4 pi) * exp(-j k d) / d``
    with ``d = |s - u|``. Sharing the reflectivity is what ties the echo
    to the downlink: directions that dominate the clutter-suppressed echo
    are the ones carrying downlink energy. Interactions that feed only one
    channel get an exact zero in the other slot.
    """
    u = as_point(u)
    rng = np.random.default_rng((block_seed, _STREAM_COEFFS))
    amp = geom.wavelength / (4.0 * np.pi)
    k = geom.wavenumber
    out: list[PathComponent] = []
    for it in interactions:
        g = math.sqrt(it.mean_gain / 2.0) * complex(rng.standard_normal(),
                                                    rng.standard_normal())
        beta = 0.0 + 0.0j
        gamma = 0.0 + 0.0j
        if it.in_comm:
            d = math.hypot(it.point.x - u.x, it.point.y - u.y)
            if d == 0.0:
                raise ValueError(f"interaction point {it.point} coincides with user")
            beta = g * amp * complex(math.cos(-k * d), math.sin(-k * d)) / d
        if it.in_sensing:
            gamma = g
        out.append(PathComponent(it.point, beta, gamma, it.kind))
    return out


def synthesize_downlink(components: list[PathComponent],
                        geom: ArrayGeometry) -> np.ndarray:
    """Superpose the downlink paths into the channel vector h, shape (N,)."""
    if not components:
        return np.zeros(geom.n, dtype=np.complex128)
    pts = as_points([c.interaction_point for c in components])
    beta = np.array([c.comm_coefficient for c in components], dtype=np.complex128)
    theta = steering_matrix(geom, pts)
    return theta @ beta


def synthesize_sensing(components: list[PathComponent],
                       geom: ArrayGeometry) -> np.ndarray:
    """Superpose the round-trip paths into the matrix H, shape (N, N).

    H is complex-symmetric (equal to its plain transpose), not Hermitian.
    """
    if not components:
        return np.zeros((geom.n, geom.n), dtype=np.complex128)
    pts = as_points([c.interaction_point for c in components])
    gamma = np.array([c.roundtrip_coefficient for c in components],
                     dtype=np.complex128)
    theta = steering_matrix(geom, pts)
    return (theta * gamma[None, :]) @ theta.T


def realize(scene: Scene, geom: ArrayGeometry, u, block_seed: int) -> ChannelRealization:
    """Full channel realization for one coherence block."""
    interactions = enumerate_interactions(scene, geom, u, block_seed)
    components = draw_coefficients(interactions, u, geom, block_seed)
    return ChannelRealization(
        h=synthesize_downlink(components, geom),
        H=synthesize_sensing(components, geom),
        components=tuple(components),
        block_seed=block_seed,
    )


def random_type1(count: int, region: Rect, mean_gain: float,
                 seed: int) -> tuple[Type1Object, ...]:
    """Point scatterers placed uniformly at random in a rectangle."""
    rng = np.random.default_rng(seed)
    xs = rng.uniform(region.xmin, region.xmax, count)
    ys = rng.uniform(region.ymin, region.ymax, count)
    return tuple(Type1Object(Point2D(float(x), float(y)), mean_gain)
                 for x, y in zip(xs, ys))


def near_field_check(scene: Scene, geom: ArrayGeometry) -> list[str]:
    """Messages for scene features outside the array's radiative near field.

    Checks point-scatterer locations, wall monostatic points and endpoints,
    and the extreme ranges of each cluster disc. Callers decide whether to
    warn; nothing is raised.
    """
    from .geometry import near_field_bounds, validate_roi

    lower, upper = near_field_bounds(geom)
    msgs = []
    pts: list[tuple[str, Point2D]] = []
    for i, obj in enumerate(scene.type1):
        pts.append((f"type1[{i}]", obj.location))
    for i, wall in enumerate(scene.type2):
        pts.append((f"type2[{i}].a", wall.endpoint_a))
        pts.append((f"type2[{i}].b", wall.endpoint_b))
        mono = specular_point(wall, geom.reference, geom.reference)
        if mono is not None:
            pts.append((f"type2[{i}].monostatic", mono))
    for label, p in pts:
        ok, _ = validate_roi(geom, [p])
        if not ok:
            msgs.append(f"{label} at ({p.x:.3g}, {p.y:.3g}) outside "
                        f"({lower:.3g}, {upper:.3g}) m near-field range")
    for i, cl in enumerate(scene.targets):
        d0 = math.hypot(cl.center.x - geom.reference.x,
                        cl.center.y - geom.reference.y)
        if d0 - cl.radius <= lower or d0 + cl.radius >= upper:
            msgs.append(f"targets[{i}] disc spans ({d0 - cl.radius:.3g}, "
                        f"{d0 + cl.radius:.3g}) m from the array, outside "
                        f"({lower:.3g}, {upper:.3g}) m near-field range")
    return msgs
