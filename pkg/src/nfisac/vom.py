"""Virtual object map: offline construction, ranking, storage, lookup.

The map is built once per static environment. Candidate virtual-object
points are the static interaction points collected over a grid of sampled
user locations; greedy leader clustering merges near-duplicates into a
library of L locations. Each grid location stores the indices of the J
library points with the largest long-term downlink contribution

    m(s, u) = E[|beta(s, u)|^2] * ||theta(s)||^2,

and one array-side entry stores the K indices with the largest round-trip
contribution

    rho(s) = E[|gamma(s)|^2] * ||theta(s)||^4.

Both expectations have closed forms under the Gaussian coefficient model
(see scene.draw_coefficients), so the default build is fully deterministic;
a Monte Carlo path is kept for alternative coefficient statistics.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import ArrayGeometry, Point2D, as_point, as_points, steering_norms_sq
from .scene import KIND_ST, Rect, Scene, enumerate_interactions

_FORMAT_TAG = "nfisac-vom 1"


@dataclass(frozen=True)
class VirtualObjectLibrary:
    """Clustered virtual-object locations s_1 ... s_L."""

    locations: tuple[Point2D, ...]

    def __post_init__(self):
        locs = tuple(as_point(p) for p in self.locations)
        object.__setattr__(self, "locations", locs)
        if len(set(locs)) != len(locs):
            raise ValueError("library locations must be pairwise distinct")

    def __len__(self) -> int:
        return len(self.locations)

    def as_array(self) -> np.ndarray:
        return as_points(self.locations)


@dataclass(frozen=True)
class VomCommEntry:
    """Top-J library indices for one sampled user location."""

    grid_location: Point2D
    indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "grid_location", as_point(self.grid_location))
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("comm entry indices must be distinct")


@dataclass(frozen=True)
class VomSensEntry:
    """Top-K library indices for the array-side sensing prior."""

    indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("sensing entry indices must be distinct")


@dataclass(frozen=True)
class Vom:
    """Virtual object map: library, per-grid-point comm entries, sensing entry.

    Library indices are 0-based throughout. ``comm_entries`` follows the
    lexicographic (x, then y) order of ``roi.grid(grid_spacing)``.
    """

    library: VirtualObjectLibrary
    comm_entries: tuple[VomCommEntry, ...]
    sens_entry: VomSensEntry
    grid_spacing: float
    roi: Rect
    build_metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "comm_entries", tuple(self.comm_entries))
        n = len(self.library)
        for e in self.comm_entries:
            if any(not 0 <= i < n for i in e.indices):
                raise ValueError("comm entry index out of library range")
        if any(not 0 <= i < n for i in self.sens_entry.indices):
            raise ValueError("sensing entry index out of library range")

    def grid_array(self) -> np.ndarray:
        return as_points([e.grid_location for e in self.comm_entries])


def collect_virtual_points(scene: Scene, geom: ArrayGeometry,
                           ue_samples) -> list[Point2D]:
    """Static interaction points accumulated over sampled user locations.

    Duplicates are kept (clustering collapses them); dynamic cluster
    points are excluded since they are not part of the static map.
    """
    raw = np.asarray(ue_samples, dtype=np.float64)
    if raw.size == 0:
        raise ValueError("need at least one sampled user location")
    samples = [as_point(p) for p in np.atleast_2d(raw)]
    out: list[Point2D] = []
    for u in samples:
        for it in enumerate_interactions(scene, geom, u, block_seed=0):
            if it.kind != KIND_ST:
                out.append(it.point)
    return out


def cluster_points(points, radius: float) -> VirtualObjectLibrary:
    """Greedy leader clustering; library locations are cluster centroids.

    Points are scanned in the given order; a point joins the first cluster
    whose leader (founding point) lies within ``radius``, else it founds a
    new cluster. Deterministic for a fixed input order.
    """
    if radius <= 0:
        raise ValueError("clustering radius must be positive")
    pts = [as_point(p) for p in points]
    leaders: list[Point2D] = []
    sums: list[list[float]] = []
    counts: list[int] = []
    for p in pts:
        for ci, lead in enumerate(leaders):
            if math.hypot(p.x - lead.x, p.y - lead.y) <= radius:
                sums[ci][0] += p.x
                sums[ci][1] += p.y
                counts[ci] += 1
                break
        else:
            leaders.append(p)
            sums.append([p.x, p.y])
            counts.append(1)
    centroids = tuple(Point2D(sx / c, sy / c)
                      for (sx, sy), c in zip(sums, counts))
    return VirtualObjectLibrary(centroids)


def _point_segment_distance(p: Point2D, a: Point2D, b: Point2D) -> float:
    ax, ay = a
    vx, vy = b.x - ax, b.y - ay
    wx, wy = p.x - ax, p.y - ay
    t = (wx * vx + wy * vy) / (vx * vx + vy * vy)
    t = min(1.0, max(0.0, t))
    return math.hypot(wx - t * vx, wy - t * vy)


def static_gain_at(scene: Scene, s) -> float:
    """Mean gain of the static object nearest to a virtual-object location.

    Clustered library points do not coincide exactly with any one object,
    so the gain driving the long-term metrics is taken from the closest
    static feature (point scatterer, or wall segment). Ties resolve to the
    first feature in scene order.
    """
    s = as_point(s)
    best = None
    for obj in scene.type1:
        d = math.hypot(s.x - obj.location.x, s.y - obj.location.y)
        if best is None or d < best[0]:
            best = (d, obj.mean_interaction_gain)
    for wall in scene.type2:
        d = _point_segment_distance(s, wall.endpoint_a, wall.endpoint_b)
        if best is None or d < best[0]:
            best = (d, wall.mean_reflection_gain)
    if best is None:
        raise ValueError("scene has no static objects to attribute a gain to")
    return best[1]


def comm_metric(s, u, scene: Scene, geom: ArrayGeometry,
                mc_trials: int | None = None, seed: int = 0) -> float:
    """Long-term downlink contribution of virtual object s at user u.

    Default is the closed form gain * (lambda/4pi)^2 / |s-u|^2 * ||theta||^2.
    Passing ``mc_trials`` >= 1 instead averages |beta|^2 over that many
    coefficient draws (for non-Gaussian models layered on top).
    """
    s = as_point(s)
    u = as_point(u)
    d2 = (s.x - u.x) ** 2 + (s.y - u.y) ** 2
    if d2 == 0.0:
        raise ValueError("virtual object coincides with the user location")
    gain = static_gain_at(scene, s)
    amp2 = (geom.wavelength / (4.0 * np.pi)) ** 2
    norm2 = float(steering_norms_sq(geom, [s])[0])
    if mc_trials is None:
        return gain * amp2 / d2 * norm2
    if mc_trials < 1:
        raise ValueError("mc_trials must be >= 1")
    rng = np.random.default_rng(seed)
    g = math.sqrt(gain / 2.0) * (rng.standard_normal(mc_trials)
                                 + 1j * rng.standard_normal(mc_trials))
    beta2 = np.abs(g) ** 2 * amp2 / d2
    return float(np.mean(beta2)) * norm2


def sens_metric(s, scene: Scene, geom: ArrayGeometry,
                mc_trials: int | None = None, seed: int = 0) -> float:
    """Long-term round-trip contribution gain * ||theta(s)||^4."""
    s = as_point(s)
    gain = static_gain_at(scene, s)
    norm2 = float(steering_norms_sq(geom, [s])[0])
    if mc_trials is None:
        return gain * norm2 * norm2
    if mc_trials < 1:
        raise ValueError("mc_trials must be >= 1")
    rng = np.random.default_rng(seed)
    g = math.sqrt(gain / 2.0) * (rng.standard_normal(mc_trials)
                                 + 1j * rng.standard_normal(mc_trials))
    return float(np.mean(np.abs(g) ** 2)) * norm2 * norm2


def _top_indices(values: np.ndarray, count: int) -> tuple[int, ...]:
    """Indices of the largest values, descending, ties by ascending index."""
    order = np.argsort(-values, kind="stable")
    return tuple(int(i) for i in order[:count])


def build_vom(scene: Scene, geom: ArrayGeometry, J: int = 5, K: int = 20,
              grid_spacing: float = 1.0, cluster_radius: float = 0.5) -> Vom:
    """Construct the full map for a static scene.

    User locations are sampled on the ROI grid; J and K are clamped (with
    a warning) when the clustered library is smaller than requested.
    """
    if J < 1 or K < 1:
        raise ValueError("J and K must be >= 1")
    grid = scene.roi.grid(grid_spacing)
    points = collect_virtual_points(scene, geom, grid)
    library = cluster_points(points, cluster_radius)
    L = len(library)
    if L == 0:
        raise ValueError("no static interaction points: empty library")
    if J > L or K > L:
        warnings.warn(f"library has only {L} entries; clamping J={J}, K={K}",
                      stacklevel=2)
        J = min(J, L)
        K = min(K, L)

    locs = library.as_array()
    gains = np.array([static_gain_at(scene, p) for p in library.locations])
    norm2 = steering_norms_sq(geom, locs)
    amp2 = (geom.wavelength / (4.0 * np.pi)) ** 2

    entries = []
    for gx, gy in grid:
        d2 = (locs[:, 0] - gx) ** 2 + (locs[:, 1] - gy) ** 2
        if np.any(d2 == 0.0):
            # A grid point sitting exactly on a library point would blow up
            # the closed form; nudge the ranking by excluding that entry.
            with np.errstate(divide="ignore"):
                m = np.where(d2 == 0.0, -np.inf, gains * amp2 / d2 * norm2)
        else:
            m = gains * amp2 / d2 * norm2
        entries.append(VomCommEntry(Point2D(float(gx), float(gy)),
                                    _top_indices(m, J)))

    rho = gains * norm2 * norm2
    sens = VomSensEntry(_top_indices(rho, K))

    meta = {
        "ue_samples": int(grid.shape[0]),
        "points_collected": int(len(points)),
        "cluster_radius": float(cluster_radius),
        "metric": "analytic",
    }
    return Vom(library=library, comm_entries=tuple(entries), sens_entry=sens,
               grid_spacing=float(grid_spacing), roi=scene.roi,
               build_metadata=meta)


def lookup(vom: Vom, u) -> list[Point2D]:
    """Library locations of the comm entry nearest to user location u.

    Nearest neighbor over the stored grid (ties break to the first grid
    point in lexicographic order). u must lie inside the map's ROI.
    """
    u = as_point(u)
    if not vom.roi.contains(u):
        raise ValueError(f"user location {u} outside the mapped region {vom.roi}")
    grid = vom.grid_array()
    d2 = (grid[:, 0] - u.x) ** 2 + (grid[:, 1] - u.y) ** 2
    entry = vom.comm_entries[int(np.argmin(d2))]
    return [vom.library.locations[i] for i in entry.indices]


def save_vom(vom: Vom, path) -> None:
    """Serialize to a line-oriented text file; reread is bit-identical.

    Floats are written with repr() so every IEEE double survives the round
    trip exactly. Format (indices 0-based):

        nfisac-vom 1
        grid_spacing <float>
        roi <xmin> <xmax> <ymin> <ymax>
        meta <key> <value>            (0+ lines, sorted by key)
        library <L>
        <x> <y>                       (L lines)
        comm <n_entries> <J>
        <grid_x> <grid_y> <idx...>    (n_entries lines, J indices each)
        sens <K>
        <idx...>                      (single line)
    """
    lines = [_FORMAT_TAG,
             f"grid_spacing {vom.grid_spacing!r}",
             f"roi {vom.roi.xmin!r} {vom.roi.xmax!r} {vom.roi.ymin!r} {vom.roi.ymax!r}"]
    for key in sorted(vom.build_metadata):
        value = vom.build_metadata[key]
        token = repr(value) if isinstance(value, float) else str(value)
        if " " in f"{key}{token}":
            raise ValueError(f"metadata entry {key!r} not serializable")
        lines.append(f"meta {key} {token}")
    lines.append(f"library {len(vom.library)}")
    for p in vom.library.locations:
        lines.append(f"{p.x!r} {p.y!r}")
    j = len(vom.comm_entries[0].indices) if vom.comm_entries else 0
    lines.append(f"comm {len(vom.comm_entries)} {j}")
    for e in vom.comm_entries:
        idx = " ".join(str(i) for i in e.indices)
        lines.append(f"{e.grid_location.x!r} {e.grid_location.y!r} {idx}")
    lines.append(f"sens {len(vom.sens_entry.indices)}")
    lines.append(" ".join(str(i) for i in vom.sens_entry.indices))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_meta_token(token: str):
    for cast in (int, float):
        try:
            return cast(token)
        except ValueError:
            continue
    return token


def load_vom(path) -> Vom:
    """Read a map written by save_vom."""
    with open(path, encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != _FORMAT_TAG:
        raise ValueError(f"{path}: not a {_FORMAT_TAG!r} file")
    pos = 1

    def take() -> str:
        nonlocal pos
        if pos >= len(lines):
            raise ValueError(f"{path}: truncated file")
        ln = lines[pos]
        pos += 1
        return ln

    key, spacing = take().split()
    if key != "grid_spacing":
        raise ValueError(f"{path}: expected grid_spacing, got {key!r}")
    tokens = take().split()
    if tokens[0] != "roi" or len(tokens) != 5:
        raise ValueError(f"{path}: malformed roi line")
    roi = Rect(*(float(t) for t in tokens[1:]))

    meta: dict = {}
    while pos < len(lines) and lines[pos].startswith("meta "):
        _, k, v = take().split(maxsplit=2)
        meta[k] = _parse_meta_token(v)

    key, count = take().split()
    if key != "library":
        raise ValueError(f"{path}: expected library section, got {key!r}")
    locs = []
    for _ in range(int(count)):
        x, y = take().split()
        locs.append(Point2D(float(x), float(y)))
    library = VirtualObjectLibrary(tuple(locs))

    key, n_entries, _j = take().split()
    if key != "comm":
        raise ValueError(f"{path}: expected comm section, got {key!r}")
    entries = []
    for _ in range(int(n_entries)):
        tokens = take().split()
        entries.append(VomCommEntry(Point2D(float(tokens[0]), float(tokens[1])),
                                    tuple(int(t) for t in tokens[2:])))

    key, _k = take().split()
    if key != "sens":
        raise ValueError(f"{path}: expected sens section, got {key!r}")
    sens = VomSensEntry(tuple(int(t) for t in take().split()))

    return Vom(library=library, comm_entries=tuple(entries), sens_entry=sens,
               grid_spacing=float(spacing), roi=roi, build_metadata=meta)
