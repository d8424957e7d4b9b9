"""Pilot/feedback simulation and the downlink channel estimators.

Three estimators share one ridge core. The joint scheme regresses the fed-
back pilot observation on the map-predicted static steering vectors plus
the echo-derived dynamic subspace. The map-only benchmark replaces the
dynamic subspace with atoms picked greedily from a polar-domain codebook
against the static-subspace residual. The no-prior benchmark is plain
orthogonal matching pursuit over the same codebook.

The measurement operator throughout is y = Z^H h + n for a pilot block Z
with power-normalized columns; all solvers therefore work on measured
atoms Z^H a rather than the atoms themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import ArrayGeometry, Point2D, as_points, steering_matrix

MODE_IDEAL = "ideal"
MODE_SCALAR = "scalar_quantized"

_OMP_RESIDUAL_STOP = 1e-8


@dataclass(frozen=True)
class PilotMatrix:
    """Known downlink pilot block; every column carries squared norm P."""

    Z: np.ndarray
    per_symbol_power: float

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=np.complex128)
        if Z.ndim != 2:
            raise ValueError("pilot block must be an N x T_p matrix")
        if self.per_symbol_power <= 0:
            raise ValueError("per-symbol power must be positive")
        norms = np.sum(np.abs(Z) ** 2, axis=0)
        if not np.allclose(norms, self.per_symbol_power, rtol=1e-9):
            raise ValueError("pilot columns are not power-normalized")
        object.__setattr__(self, "Z", Z)

    @property
    def t_p(self) -> int:
        return self.Z.shape[1]


@dataclass(frozen=True)
class FeedbackConfig:
    """Uplink feedback model for the pilot observation."""

    mode: str = MODE_IDEAL
    bits_total: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in (MODE_IDEAL, MODE_SCALAR):
            raise ValueError(f"unknown feedback mode {self.mode!r}")
        if self.mode == MODE_SCALAR and self.bits_total < 2:
            raise ValueError("scalar feedback needs at least 1 bit per component")


@dataclass(frozen=True)
class StaticBasis:
    """Steering vectors of the map-predicted static interaction points."""

    A_sta: np.ndarray
    source_points: tuple[Point2D, ...]

    def __post_init__(self):
        A = np.asarray(self.A_sta, dtype=np.complex128)
        if A.ndim != 2 or A.shape[1] != len(self.source_points):
            raise ValueError("basis width must match the source point count")
        object.__setattr__(self, "A_sta", A)
        object.__setattr__(self, "source_points", tuple(self.source_points))

    @property
    def width(self) -> int:
        return self.A_sta.shape[1]


def make_static_basis(geom: ArrayGeometry, points) -> StaticBasis:
    """Assemble the static response matrix from map-returned locations."""
    pts = [Point2D(float(p[0]), float(p[1])) for p in points]
    A = steering_matrix(geom, as_points(pts))
    return StaticBasis(A_sta=A, source_points=tuple(pts))


@dataclass(frozen=True)
class RidgeConfig:
    """Ridge weights for the static and dynamic coefficient blocks.

    ``None`` selects a scale-aware default per block: auto_scale times the
    mean squared column norm of that block's measured atoms. Tying each
    weight to its own block matters because the static columns are raw
    steering vectors (norms around lambda/4pi/d) while dynamic columns are
    orthonormal; a shared trace would flatten the static block entirely.
    """

    mu_s: float | None = None
    mu_d: float | None = None
    auto_scale: float = 1e-2

    def __post_init__(self):
        for mu in (self.mu_s, self.mu_d):
            if mu is not None and mu < 0:
                raise ValueError("ridge weights must be non-negative")

    def resolve(self, static_trace: float, n_static: int, dyn_trace: float,
                n_dyn: int) -> tuple[float, float]:
        auto_s = self.auto_scale * static_trace / max(n_static, 1)
        auto_d = self.auto_scale * dyn_trace / max(n_dyn, 1)
        return (auto_s if self.mu_s is None else self.mu_s,
                auto_d if self.mu_d is None else self.mu_d)


@dataclass(frozen=True)
class ChannelEstimate:
    """Estimate, its coefficients, and solver diagnostics."""

    h_hat: np.ndarray
    alpha: np.ndarray
    xi: np.ndarray
    scheme: str
    foc_residual: float = 0.0
    support: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "h_hat",
                           np.asarray(self.h_hat, dtype=np.complex128))
        object.__setattr__(self, "alpha",
                           np.asarray(self.alpha, dtype=np.complex128))
        object.__setattr__(self, "xi",
                           np.asarray(self.xi, dtype=np.complex128))


@dataclass(frozen=True)
class PolarCodebook:
    """Near-field dictionary sampled uniformly in sin-angle and reciprocal range."""

    atoms: np.ndarray
    grid: tuple[tuple[float, float], ...]
    G_angles: int
    G_rings: int
    r_min: float
    r_max: float

    def __post_init__(self):
        A = np.asarray(self.atoms, dtype=np.complex128)
        if A.ndim != 2 or A.shape[1] != len(self.grid):
            raise ValueError("atom count must match the grid")
        object.__setattr__(self, "atoms", A)
        object.__setattr__(self, "grid", tuple(self.grid))

    @property
    def size(self) -> int:
        return self.atoms.shape[1]


def _pilot_array(Z) -> np.ndarray:
    if isinstance(Z, PilotMatrix):
        return Z.Z
    return np.asarray(Z, dtype=np.complex128)


def make_pilots(n: int, t_p: int, power: float, seed,
                orthogonal: bool = False) -> PilotMatrix:
    """Pilot block with power-normalized columns.

    Default: i.i.d. complex Gaussian columns rescaled to squared norm P.
    ``orthogonal=True`` (requires T_p >= N) instead takes N rows of the
    T_p-point DFT so that Z^H Z = P I at T_p = N.
    """
    if t_p < 1:
        raise ValueError("pilot length must be >= 1")
    if power <= 0:
        raise ValueError("per-symbol power must be positive")
    if orthogonal:
        if t_p < n:
            raise ValueError("orthogonal pilots need T_p >= N")
        idx_n = np.arange(n)[:, None]
        idx_t = np.arange(t_p)[None, :]
        Z = np.exp(-2j * np.pi * idx_n * idx_t / t_p) * math.sqrt(power / n)
        return PilotMatrix(Z=Z, per_symbol_power=float(power))
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, t_p)) + 1j * rng.standard_normal((n, t_p))
    Z *= math.sqrt(power) / np.linalg.norm(Z, axis=0, keepdims=True)
    return PilotMatrix(Z=Z, per_symbol_power=float(power))


def observe_pilots(Z, h: np.ndarray, sigma2: float, seed) -> np.ndarray:
    """User-side pilot observation y = Z^H h + n, noise variance sigma2."""
    Zm = _pilot_array(Z)
    h = np.asarray(h, dtype=np.complex128)
    if h.shape != (Zm.shape[0],):
        raise ValueError(f"channel shape {h.shape} vs array size {Zm.shape[0]}")
    if sigma2 < 0:
        raise ValueError("noise variance must be non-negative")
    y = Zm.conj().T @ h
    if sigma2 > 0:
        rng = np.random.default_rng(seed)
        scale = math.sqrt(sigma2 / 2.0)
        y = y + scale * (rng.standard_normal(y.shape)
                         + 1j * rng.standard_normal(y.shape))
    return y


def feedback(y: np.ndarray, cfg: FeedbackConfig) -> np.ndarray:
    """Feedback link: pass-through, or per-component uniform quantization.

    Scalar mode spends bits_total / (2 T_p) bits on each real component
    over the per-vector range [-3 rms, 3 rms]; the range scalar itself is
    assumed fed back at full precision.
    """
    y = np.asarray(y, dtype=np.complex128)
    if cfg.mode == MODE_IDEAL:
        return y.copy()
    parts = np.concatenate([y.real, y.imag])
    bits = cfg.bits_total // (2 * y.size)
    if bits < 1:
        raise ValueError(f"{cfg.bits_total} bits cannot cover {2 * y.size} "
                         "components")
    rms = math.sqrt(float(np.mean(parts ** 2)))
    if rms == 0.0:
        return np.zeros_like(y)
    lo, hi = -3.0 * rms, 3.0 * rms
    levels = 2 ** bits
    step = (hi - lo) / levels
    idx = np.clip(np.floor((parts - lo) / step), 0, levels - 1)
    rec = lo + (idx + 0.5) * step
    return rec[: y.size] + 1j * rec[y.size:]


def _ridge_solve(y_hat: np.ndarray, Zm: np.ndarray, A_sta: np.ndarray,
                 dyn_cols: np.ndarray, cfg: RidgeConfig, scheme: str,
                 support: tuple[int, ...]) -> ChannelEstimate:
    """Shared regularized LS core: solve for [alpha; xi] and rebuild h_hat."""
    n_s = A_sta.shape[1]
    n_d = dyn_cols.shape[1]
    Phi = np.concatenate([Zm.conj().T @ A_sta, Zm.conj().T @ dyn_cols], axis=1)
    if Phi.shape[1] == 0:
        return ChannelEstimate(h_hat=np.zeros(Zm.shape[0], dtype=np.complex128),
                               alpha=np.zeros(0), xi=np.zeros(0),
                               scheme=scheme, support=support)
    G = Phi.conj().T @ Phi
    diag = np.real(np.diag(G))
    mu_s, mu_d = cfg.resolve(float(np.sum(diag[:n_s])), n_s,
                             float(np.sum(diag[n_s:])), n_d)
    damp = np.concatenate([np.full(n_s, mu_s), np.full(n_d, mu_d)])
    b = Phi.conj().T @ y_hat
    try:
        z = np.linalg.solve(G + np.diag(damp), b)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(G + np.diag(damp))
        raise ValueError(f"singular regularized system (cond {cond:.3e}); "
                         "set nonzero ridge weights") from exc
    foc = Phi.conj().T @ (Phi @ z - y_hat) + damp * z
    ref = float(np.linalg.norm(b))
    foc_residual = float(np.linalg.norm(foc)) / ref if ref > 0 else float(
        np.linalg.norm(foc))
    alpha, xi = z[:n_s], z[n_s:]
    h_hat = A_sta @ alpha + dyn_cols @ xi
    return ChannelEstimate(h_hat=h_hat, alpha=alpha, xi=xi, scheme=scheme,
                           foc_residual=foc_residual, support=support)


def estimate_joint(y_hat: np.ndarray, Z, static, dyn,
                   cfg: RidgeConfig | None = None,
                   scheme: str = "joint") -> ChannelEstimate:
    """Ridge regression on the static steering vectors plus the dynamic subspace.

    ``static`` may be a StaticBasis or a plain N x J matrix; ``dyn`` may be
    a sensing.DynamicSubspace or a plain N x rho matrix; rho = 0 degenerates
    to the static-only solve.
    """
    cfg = cfg or RidgeConfig()
    Zm = _pilot_array(Z)
    A_sta = np.asarray(getattr(static, "A_sta", static), dtype=np.complex128)
    dyn_cols = np.asarray(getattr(dyn, "basis", dyn), dtype=np.complex128)
    if dyn_cols.ndim == 1:
        dyn_cols = dyn_cols[:, None]
    if dyn_cols.size == 0:
        dyn_cols = np.zeros((Zm.shape[0], 0), dtype=np.complex128)
    return _ridge_solve(np.asarray(y_hat, dtype=np.complex128), Zm,
                        A_sta, dyn_cols, cfg, scheme, support=())


def estimate_vom_only(y_hat: np.ndarray, Z, static: StaticBasis,
                      codebook: PolarCodebook | None = None,
                      n_dyn_atoms: int = 0,
                      cfg: RidgeConfig | None = None) -> ChannelEstimate:
    """Map-only benchmark: static basis plus greedily picked codebook atoms.

    Dynamic atoms are selected by normalized correlation against the
    residual left after projecting the observation out of the measured
    static subspace; the final coefficients come from the same ridge solve
    as the joint scheme, with picked atoms standing in for the dynamic
    subspace. n_dyn_atoms = 0 reduces to the static-only ridge.
    """
    cfg = cfg or RidgeConfig()
    Zm = _pilot_array(Z)
    y_hat = np.asarray(y_hat, dtype=np.complex128)
    if n_dyn_atoms < 0:
        raise ValueError("n_dyn_atoms must be >= 0")
    if n_dyn_atoms > 0 and (codebook is None or codebook.size == 0):
        raise ValueError("need a non-empty codebook to pick dynamic atoms")

    picked: list[int] = []
    if n_dyn_atoms > 0:
        meas_static = Zm.conj().T @ static.A_sta
        Q = _orth_columns(meas_static)
        resid = y_hat - Q @ (Q.conj().T @ y_hat)
        meas_atoms = Zm.conj().T @ codebook.atoms
        norms = np.linalg.norm(meas_atoms, axis=0)
        usable = norms > 0
        for _ in range(min(n_dyn_atoms, codebook.size)):
            scores = np.abs(meas_atoms.conj().T @ resid)
            scores = np.where(usable, scores / np.where(usable, norms, 1.0),
                              -1.0)
            scores[picked] = -1.0
            g = int(np.argmax(scores))
            if scores[g] < 0:
                break
            picked.append(g)
            Q = _extend_orth(Q, meas_atoms[:, g])
            resid = y_hat - Q @ (Q.conj().T @ y_hat)

    dyn_cols = (codebook.atoms[:, picked] if picked
                else np.zeros((Zm.shape[0], 0), dtype=np.complex128))
    return _ridge_solve(y_hat, Zm, static.A_sta, dyn_cols, cfg,
                        scheme="vom_only", support=tuple(picked))


def _orth_columns(M: np.ndarray) -> np.ndarray:
    """Orthonormal basis for the column space (rank-revealing, tolerance-based)."""
    if M.shape[1] == 0:
        return np.zeros((M.shape[0], 0), dtype=np.complex128)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((M.shape[0], 0), dtype=np.complex128)
    rank = int(np.sum(s > 1e-12 * s[0]))
    return U[:, :rank]


def _extend_orth(Q: np.ndarray, col: np.ndarray) -> np.ndarray:
    """Grow an orthonormal basis by one column (re-orthogonalized Gram-Schmidt)."""
    v = col - Q @ (Q.conj().T @ col)
    v = v - Q @ (Q.conj().T @ v)
    nrm = np.linalg.norm(v)
    if nrm <= 1e-12 * max(np.linalg.norm(col), 1e-300):
        return Q
    return np.concatenate([Q, (v / nrm)[:, None]], axis=1)


def build_polar_codebook(geom: ArrayGeometry, G_angles: int = 128,
                         G_rings: int = 8, r_min: float = 4.0,
                         r_max: float = 64.0) -> PolarCodebook:
    """Unit-norm steering atoms on a sin-angle x reciprocal-range lattice.

    Angles are uniform in sin over [-1, 1]; ranges uniform in 1/r over
    [1/r_max, 1/r_min]. Atom order is angle-major (ring index fastest).
    Positions are taken from the array reference, broadside along +y.
    """
    if G_angles < 1 or G_rings < 1:
        raise ValueError("codebook needs at least one angle and one ring")
    if not 0 < r_min < r_max:
        raise ValueError("need 0 < r_min < r_max")
    sin_angles = (np.linspace(-1.0, 1.0, G_angles) if G_angles > 1
                  else np.array([0.0]))
    inv_r = (np.linspace(1.0 / r_max, 1.0 / r_min, G_rings) if G_rings > 1
             else np.array([1.0 / r_max]))
    radii = 1.0 / inv_r
    ref = geom.reference
    grid = []
    pts = np.empty((G_angles * G_rings, 2))
    for ia, sa in enumerate(sin_angles):
        ca = math.sqrt(max(0.0, 1.0 - sa * sa))
        for ir, r in enumerate(radii):
            g = ia * G_rings + ir
            pts[g, 0] = ref.x + r * sa
            pts[g, 1] = ref.y + r * ca
            grid.append((float(sa), float(r)))
    atoms = steering_matrix(geom, pts)
    atoms = atoms / np.linalg.norm(atoms, axis=0, keepdims=True)
    return PolarCodebook(atoms=atoms, grid=tuple(grid), G_angles=int(G_angles),
                         G_rings=int(G_rings), r_min=float(r_min),
                         r_max=float(r_max))


def estimate_omp(y_hat: np.ndarray, Z, codebook: PolarCodebook,
                 sparsity: int = 10) -> ChannelEstimate:
    """Orthogonal matching pursuit over the measured codebook atoms.

    Iterates: pick the atom with the largest normalized correlation to the
    residual, least-squares refit on the accumulated support, update the
    residual. Stops at ``sparsity`` atoms or when the residual drops below
    1e-8 of the observation norm.
    """
    if sparsity < 1:
        raise ValueError("sparsity must be >= 1")
    Zm = _pilot_array(Z)
    y_hat = np.asarray(y_hat, dtype=np.complex128)
    meas = Zm.conj().T @ codebook.atoms
    norms = np.linalg.norm(meas, axis=0)
    usable = norms > 0
    y_norm = float(np.linalg.norm(y_hat))

    support: list[int] = []
    coeffs = np.zeros(0, dtype=np.complex128)
    resid = y_hat.copy()
    for _ in range(min(sparsity, codebook.size)):
        if float(np.linalg.norm(resid)) <= _OMP_RESIDUAL_STOP * y_norm:
            break
        scores = np.abs(meas.conj().T @ resid)
        scores = np.where(usable, scores / np.where(usable, norms, 1.0), -1.0)
        scores[support] = -1.0
        g = int(np.argmax(scores))
        if scores[g] <= 0:
            break
        support.append(g)
        sub = meas[:, support]
        coeffs, *_ = np.linalg.lstsq(sub, y_hat, rcond=None)
        resid = y_hat - sub @ coeffs

    h_hat = (codebook.atoms[:, support] @ coeffs if support
             else np.zeros(Zm.shape[0], dtype=np.complex128))
    if support:
        sub = meas[:, support]
        foc = sub.conj().T @ (sub @ coeffs - y_hat)
        ref = float(np.linalg.norm(sub.conj().T @ y_hat))
        foc_residual = float(np.linalg.norm(foc)) / ref if ref > 0 else 0.0
    else:
        foc_residual = 0.0
    return ChannelEstimate(h_hat=h_hat, alpha=np.zeros(0), xi=coeffs,
                           scheme="omp", foc_residual=foc_residual,
                           support=tuple(support))
