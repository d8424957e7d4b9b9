"""NumPy fallback for the compiled response kernels.

Same contracts as ``nfisac._kernels``: points coinciding with an element
yield non-finite entries, which the geometry wrappers turn into errors.
"""

import numpy as np


def steering_matrix(elements, points, wavelength):
    """Response of every array element to every point, shape (N, P)."""
    diff = elements[:, None, :] - points[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    amp = wavelength / (4.0 * np.pi)
    k = 2.0 * np.pi / wavelength
    with np.errstate(divide="ignore", invalid="ignore"):
        return amp * np.exp(-1j * k * dist) / dist


def steering_norm_sq(elements, points, wavelength):
    """Squared 2-norm of the response vector per point, shape (P,)."""
    diff = elements[:, None, :] - points[None, :, :]
    d2 = diff[..., 0] ** 2 + diff[..., 1] ** 2
    amp = wavelength / (4.0 * np.pi)
    with np.errstate(divide="ignore"):
        return (amp * amp / d2).sum(axis=0)
