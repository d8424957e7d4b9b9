"""Echo simulation, static-clutter suppression, dynamic-subspace extraction.

The array transmits the pilot block and hears its own echo E = H Z + N.
The map's sensing entry predicts which static responses dominate H; an
orthonormal basis U for their span lets us strip the static background in
factored form, E_tilde = E - U (U^H E), without materializing the N x N
projector. An economy SVD of the residual then yields a small orthonormal
basis for whatever the static map could not explain - the dynamic
subspace handed to the joint estimator.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .geometry import ArrayGeometry, steering_matrix
from .vom import Vom

_ORTHO_TOL = 1e-10
_RANK_TOL = 1e-10


@dataclass(frozen=True)
class EchoObservation:
    """Received monostatic echo block and the noise power that made it."""

    E: np.ndarray
    noise_variance: float

    def __post_init__(self):
        E = np.asarray(self.E, dtype=np.complex128)
        if E.ndim != 2:
            raise ValueError("echo must be an N x T_p matrix")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be non-negative")
        object.__setattr__(self, "E", E)


@dataclass(frozen=True)
class ClutterProjector:
    """Orthonormal basis for the map-predicted static echo subspace."""

    basis: np.ndarray
    source_indices: tuple[int, ...]

    def __post_init__(self):
        U = np.asarray(self.basis, dtype=np.complex128)
        if U.ndim != 2:
            raise ValueError("basis must be an N x K' matrix")
        if U.shape[1]:
            gram = U.conj().T @ U
            if not np.allclose(gram, np.eye(U.shape[1]), atol=_ORTHO_TOL):
                raise ValueError("clutter basis columns are not orthonormal")
        object.__setattr__(self, "basis", U)
        object.__setattr__(self, "source_indices",
                           tuple(int(i) for i in self.source_indices))

    @property
    def width(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class DynamicSubspace:
    """Leading left singular directions of the clutter-suppressed echo."""

    basis: np.ndarray
    singular_values: np.ndarray
    rho: int
    eta: float
    rho_max: int

    def __post_init__(self):
        U = np.asarray(self.basis, dtype=np.complex128)
        sv = np.asarray(self.singular_values, dtype=np.float64)
        if not 0 <= self.rho <= self.rho_max:
            raise ValueError("subspace dimension out of range")
        if U.shape[1] != self.rho:
            raise ValueError("basis width disagrees with rho")
        if sv.size > 1 and np.any(np.diff(sv) > 0):
            raise ValueError("singular values must be non-increasing")
        object.__setattr__(self, "basis", U)
        object.__setattr__(self, "singular_values", sv)


def simulate_echo(H: np.ndarray, Z: np.ndarray, sigma_s2: float,
                  seed) -> EchoObservation:
    """E = H Z + N with i.i.d. circular complex Gaussian noise of variance sigma_s2."""
    H = np.asarray(H, dtype=np.complex128)
    Z = np.asarray(Z, dtype=np.complex128)
    if H.ndim != 2 or Z.ndim != 2 or H.shape[1] != Z.shape[0]:
        raise ValueError(f"shape mismatch: H {H.shape} vs Z {Z.shape}")
    E = H @ Z
    if sigma_s2 < 0:
        raise ValueError("noise variance must be non-negative")
    if sigma_s2 > 0:
        rng = np.random.default_rng(seed)
        scale = np.sqrt(sigma_s2 / 2.0)
        E = E + scale * (rng.standard_normal(E.shape)
                         + 1j * rng.standard_normal(E.shape))
    return EchoObservation(E=E, noise_variance=float(sigma_s2))


def build_clutter_projector(vom: Vom, geom: ArrayGeometry) -> ClutterProjector:
    """Orthonormalize the steering vectors of the map's sensing entry.

    Column-pivoted thin QR of A_sens; columns whose diagonal R entry falls
    below 1e-10 of the Frobenius norm of A_sens are dropped (near-duplicate
    virtual objects), with a warning.
    """
    indices = vom.sens_entry.indices
    if not indices:
        raise ValueError("sensing entry is empty")
    pts = np.array([vom.library.locations[i] for i in indices], dtype=np.float64)
    A = steering_matrix(geom, pts)
    Q, R, _ = scipy.linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > _RANK_TOL * np.linalg.norm(A)))
    if rank < len(indices):
        warnings.warn(f"dropping {len(indices) - rank} rank-deficient clutter "
                      "column(s)", stacklevel=2)
    return ClutterProjector(basis=Q[:, :rank], source_indices=indices)


def suppress_clutter(proj: ClutterProjector, obs: EchoObservation) -> np.ndarray:
    """Project the echo onto the orthogonal complement of the static subspace.

    Computed as E - U (U^H E); an empty basis leaves the echo untouched.
    """
    E = obs.E
    U = proj.basis
    if U.shape[1] == 0:
        return E.copy()
    if U.shape[0] != E.shape[0]:
        raise ValueError(f"basis rows {U.shape[0]} vs echo rows {E.shape[0]}")
    return E - U @ (U.conj().T @ E)


def extract_dynamic_subspace(E_tilde: np.ndarray, eta: float = 0.9,
                             rho_max: int = 5,
                             zero_tol: float = 0.0) -> DynamicSubspace:
    """Economy SVD of the residual echo with the cumulative-energy rule.

    The dimension is the smallest k whose leading singular values carry a
    fraction eta of the total squared spectrum, capped at rho_max. A
    residual with Frobenius norm <= zero_tol (default: exact zero only)
    yields an empty subspace.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    if rho_max < 1:
        raise ValueError("rho_max must be >= 1")
    E_tilde = np.asarray(E_tilde, dtype=np.complex128)
    if E_tilde.ndim != 2:
        raise ValueError("residual echo must be a matrix")
    n = E_tilde.shape[0]
    fro = np.linalg.norm(E_tilde)
    if fro <= zero_tol:
        return DynamicSubspace(basis=np.zeros((n, 0), dtype=np.complex128),
                               singular_values=np.zeros(0), rho=0,
                               eta=float(eta), rho_max=int(rho_max))
    U, s, _ = np.linalg.svd(E_tilde, full_matrices=False)
    energy = np.cumsum(s ** 2) / np.sum(s ** 2)
    k = int(np.searchsorted(energy, eta - 1e-15) + 1)
    rho = min(int(rho_max), k)
    return DynamicSubspace(basis=U[:, :rho], singular_values=s, rho=rho,
                           eta=float(eta), rho_max=int(rho_max))


def dump_subspace(sub: DynamicSubspace, path) -> None:
    """Write the subspace to a small text file for offline inspection."""
    lines = ["nfisac-subspace 1",
             f"rho {sub.rho}",
             f"eta {sub.eta!r}",
             f"rho_max {sub.rho_max}",
             "singular_values " + " ".join(repr(float(v))
                                           for v in sub.singular_values),
             f"basis {sub.basis.shape[0]} {sub.basis.shape[1]}"]
    for row in sub.basis:
        lines.append(" ".join(f"{v.real!r} {v.imag!r}" for v in row))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
