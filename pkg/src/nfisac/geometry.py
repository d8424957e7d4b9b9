"""Antenna array geometry and exact spherical-wave array responses.

All coordinates are 2-D points in meters. The response model is the exact
spherical wavefront: entry n of the response to a point p equals
``(wavelength / 4 pi) * exp(-j k d_n) / d_n`` with ``d_n`` the distance
from element n to p and ``k = 2 pi / wavelength``. No far-field phase
approximation is used anywhere.

``ArrayGeometry`` is immutable after construction and every function here
is pure, so instances are safe to share across concurrent trials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels

SPEED_OF_LIGHT = 2.998e8
"""Propagation speed in m/s. The reproduction setup overrides this with the
rounded 3.0e8 so the 2.4 GHz wavelength is exactly 12.5 cm."""


class Point2D(NamedTuple):
    x: float
    y: float


def as_point(p) -> Point2D:
    """Coerce a coordinate pair to a finite Point2D."""
    if not isinstance(p, Point2D):
        x, y = p
        p = Point2D(float(x), float(y))
    if not (math.isfinite(p.x) and math.isfinite(p.y)):
        raise ValueError(f"non-finite point {p}")
    return p


def as_points(points) -> np.ndarray:
    """Stack point-likes into a contiguous float array of shape (M, 2)."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.float64)
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected points of shape (M, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite point coordinates")
    return np.ascontiguousarray(arr)


@dataclass(frozen=True)
class ArrayGeometry:
    """Immutable antenna array: element positions plus carrier parameters.

    Attributes
    ----------
    elements : np.ndarray
        Element positions, shape (N, 2), meters.
    wavelength : float
        Carrier wavelength in meters.
    carrier_freq : float
        Carrier frequency in Hz.
    """

    elements: np.ndarray
    wavelength: float
    carrier_freq: float

    def __post_init__(self):
        object.__setattr__(self, "elements", as_points(self.elements))
        if self.elements.shape[0] < 1:
            raise ValueError("array needs at least one element")
        if self.wavelength <= 0 or self.carrier_freq <= 0:
            raise ValueError("wavelength and carrier frequency must be positive")

    @property
    def n(self) -> int:
        return self.elements.shape[0]

    @property
    def reference(self) -> Point2D:
        """Array reference point: arithmetic mean of the element positions."""
        q0 = self.elements.mean(axis=0)
        return Point2D(float(q0[0]), float(q0[1]))

    @property
    def aperture(self) -> float:
        """Maximum pairwise element distance in meters."""
        d = self.elements[:, None, :] - self.elements[None, :, :]
        return float(np.hypot(d[..., 0], d[..., 1]).max())

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength


def make_ula(n: int, carrier_freq: float, spacing: float | None = None,
             speed_of_light: float = SPEED_OF_LIGHT) -> ArrayGeometry:
    """Uniform linear array on the x-axis, centered so the reference is the origin.

    Parameters
    ----------
    n : int
        Number of elements.
    carrier_freq : float
        Carrier frequency in Hz.
    spacing : float, optional
        Element spacing in meters; defaults to half a wavelength.
    speed_of_light : float, optional
        Propagation speed used to derive the wavelength.
    """
    if n < 1:
        raise ValueError(f"need at least one element, got n={n}")
    wavelength = speed_of_light / carrier_freq
    if spacing is None:
        spacing = wavelength / 2.0
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    x = (np.arange(n, dtype=np.float64) - (n - 1) / 2.0) * spacing
    elements = np.column_stack([x, np.zeros(n)])
    return ArrayGeometry(elements=elements, wavelength=wavelength,
                         carrier_freq=carrier_freq)


def steering_matrix(geom: ArrayGeometry, points) -> np.ndarray:
    """Spherical-wave responses for many points at once, shape (N, P).

    Raises if any point coincides with an element position.
    """
    pts = as_points(points)
    out = kernels.steering_matrix(geom.elements, pts, geom.wavelength)
    if not np.all(np.isfinite(out)):
        raise ValueError("point coincides with an array element")
    return out


def steering_vector(geom: ArrayGeometry, p) -> np.ndarray:
    """Spherical-wave response vector for a single point, shape (N,)."""
    p = as_point(p)
    return steering_matrix(geom, [(p.x, p.y)])[:, 0]


def steering_norms_sq(geom: ArrayGeometry, points) -> np.ndarray:
    """Squared 2-norms of the responses per point, shape (P,)."""
    pts = as_points(points)
    out = kernels.steering_norm_sq(geom.elements, pts, geom.wavelength)
    if not np.all(np.isfinite(out)):
        raise ValueError("point coincides with an array element")
    return out


def near_field_bounds(geom: ArrayGeometry) -> tuple[float, float]:
    """Radiative near-field interval (Fresnel distance, Rayleigh distance).

    Lower bound ``(D^4 / (8 wavelength))^(1/3)``, upper bound
    ``2 D^2 / wavelength`` with D the array aperture.
    """
    d = geom.aperture
    if d == 0.0:
        raise ValueError("near-field region undefined for a zero-aperture array")
    lower = (d ** 4 / (8.0 * geom.wavelength)) ** (1.0 / 3.0)
    upper = 2.0 * d ** 2 / geom.wavelength
    return lower, upper


class RoiViolation(NamedTuple):
    point: Point2D
    element_index: int
    distance: float
    kind: str  # "below_fresnel" or "beyond_rayleigh"


def validate_roi(geom: ArrayGeometry, roi_points) -> tuple[bool, list[RoiViolation]]:
    """Check that every point lies in the radiative near field of every element.

    Returns (ok, violations); violations are reported, never raised.
    """
    pts = as_points(roi_points)
    lower, upper = near_field_bounds(geom)
    diff = geom.elements[:, None, :] - pts[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    violations = []
    for ni, pi in zip(*np.nonzero(dist <= lower)):
        violations.append(RoiViolation(Point2D(*pts[pi]), int(ni),
                                       float(dist[ni, pi]), "below_fresnel"))
    for ni, pi in zip(*np.nonzero(dist >= upper)):
        violations.append(RoiViolation(Point2D(*pts[pi]), int(ni),
                                       float(dist[ni, pi]), "beyond_rayleigh"))
    return len(violations) == 0, violations
