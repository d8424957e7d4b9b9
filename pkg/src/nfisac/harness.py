"""Monte Carlo experiment harness.

One coherence block is simulated end to end by ``run_block``: channel
realization, monostatic echo, clutter suppression, dynamic-subspace
extraction, pilot observation, feedback, then every scheme ("joint",
"vom_only", "omp", plus the "perfect" CSI reference) scored on the
identical realization and noise draws - a paired comparison. ``run_sweep``
repeats this over the pilot-length sweep and aggregates means and standard
errors into a ResultsTable whose CSV emission is byte-reproducible.

Seeding: every random draw gets its own integer seed derived from
(master_seed, stream tag, indices) through numpy's SeedSequence, so blocks
are independent, purposes never collide, and parallel execution cannot
change any result. The channel stream is keyed by block index only, which
reuses the same channel realizations across pilot lengths (common random
numbers across the sweep axis).

Noise levels come from a calibration pre-pass: the pilot, echo, and data
SNRs are interpreted per observation symbol / receive antenna-symbol /
data symbol against mean channel energies over ``calibration_draws``
channel realizations, and the implied variances are logged with results.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import subprocess
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import ExperimentConfig, config_to_dict
from .estimator import (ChannelEstimate, PolarCodebook, StaticBasis,
                        build_polar_codebook, estimate_joint, estimate_omp,
                        estimate_vom_only, feedback, make_pilots,
                        make_static_basis, observe_pilots)
from .geometry import ArrayGeometry, Point2D
from .kernels import BACKEND
from .metrics import TrialMetrics, achievable_rate, beam_gain, mrt, nmse
from .scene import Scene, realize
from .sensing import (build_clutter_projector, extract_dynamic_subspace,
                      simulate_echo, suppress_clutter)
from .vom import Vom, build_vom, lookup

SCHEMES = ("joint", "vom_only", "omp", "perfect")

CSV_HEADER = "scheme,t_p,nmse_mean,nmse_stderr,rate_mean,rate_stderr,trials"

WORKERS_ENV = "NFISAC_WORKERS"

# Stream tags for seed derivation; never reuse across purposes.
_STREAM_CHANNEL = 1
_STREAM_PILOT = 2
_STREAM_PILOT_NOISE = 3
_STREAM_ECHO_NOISE = 4
_STREAM_CALIBRATION = 5

_ZERO_SUBSPACE_REL_TOL = 1e-12


def derive_seed(*parts: int) -> int:
    """Collision-resistant integer seed from a tuple of integers."""
    state = np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)
    return int(state[0])


@dataclass(frozen=True)
class CalibratedNoise:
    """Noise variances implied by the configured SNRs."""

    sigma2_pilot: float
    sigma2_echo: float
    sigma2_data: float
    mean_h_energy: float
    mean_H_energy: float


def calibrate_noise(cfg: ExperimentConfig, scene: Scene, geom: ArrayGeometry,
                    u) -> CalibratedNoise:
    """Map configured SNRs to noise variances against mean channel energies.

    Pilot: per observation symbol, E|z^H h|^2 = P E||h||^2 / N for an
    isotropic power-P pilot column. Echo: per receive antenna-symbol,
    E|(HZ)_{nt}|^2 = P E||H||_F^2 / N^2. Data: P |h^H w|^2 / sigma^2 with
    the perfect-CSI beam gain ||h||^2 as the reference level.
    """
    h2 = 0.0
    H2 = 0.0
    for i in range(cfg.calibration_draws):
        rlz = realize(scene, geom, u,
                      derive_seed(cfg.master_seed, _STREAM_CALIBRATION, i))
        h2 += float(np.vdot(rlz.h, rlz.h).real)
        H2 += float(np.sum(np.abs(rlz.H) ** 2))
    h2 /= cfg.calibration_draws
    H2 /= cfg.calibration_draws
    n = geom.n
    return CalibratedNoise(
        sigma2_pilot=cfg.power * h2 / n / 10.0 ** (cfg.pilot_snr_db / 10.0),
        sigma2_echo=cfg.power * H2 / n ** 2 / 10.0 ** (cfg.echo_snr_db / 10.0),
        sigma2_data=cfg.power * h2 / 10.0 ** (cfg.data_snr_db / 10.0),
        mean_h_energy=h2,
        mean_H_energy=H2,
    )


@dataclass(frozen=True)
class RunContext:
    """Everything reusable across blocks: map, bases, codebook, noise levels."""

    cfg: ExperimentConfig
    geom: ArrayGeometry
    scene: Scene
    vom: Vom
    static: StaticBasis
    projector: object
    codebook: PolarCodebook
    noise: CalibratedNoise
    ue: Point2D


def prepare_run(cfg: ExperimentConfig, vom: Vom | None = None) -> RunContext:
    """Build the offline artifacts once; pass a prebuilt map to skip that step."""
    geom = cfg.geometry()
    scene = cfg.scene()
    if vom is None:
        vom = build_vom(scene, geom, J=cfg.j, K=cfg.k,
                        grid_spacing=cfg.grid_spacing,
                        cluster_radius=cfg.cluster_radius)
    ue = Point2D(*cfg.ue)
    static = make_static_basis(geom, lookup(vom, ue))
    projector = build_clutter_projector(vom, geom)
    codebook = build_polar_codebook(geom, G_angles=cfg.g_angles,
                                    G_rings=cfg.g_rings, r_min=cfg.r_min,
                                    r_max=cfg.r_max)
    noise = calibrate_noise(cfg, scene, geom, ue)
    return RunContext(cfg=cfg, geom=geom, scene=scene, vom=vom, static=static,
                      projector=projector, codebook=codebook, noise=noise,
                      ue=ue)


def _score(est_h: np.ndarray, h: np.ndarray, ctx: RunContext, scheme: str,
           t_p: int) -> TrialMetrics:
    err = nmse(h, est_h) if scheme != "perfect" else 0.0
    nrm = float(np.linalg.norm(est_h))
    if nrm == 0.0:
        return TrialMetrics(nmse=err, rate=0.0, beam_gain=0.0, scheme=scheme,
                            t_p=t_p)
    w = mrt(est_h)
    rate = achievable_rate(h, w, ctx.cfg.power, ctx.noise.sigma2_data, t_p,
                           ctx.cfg.t)
    return TrialMetrics(nmse=err, rate=rate, beam_gain=beam_gain(h, w),
                        scheme=scheme, t_p=t_p)


def _digest(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()


def run_block(ctx: RunContext, t_p: int, block_index: int,
              trace: dict | None = None) -> dict[str, TrialMetrics]:
    """Simulate one coherence block and score every scheme on it.

    Deterministic given (config, t_p, block_index). With ``trace`` a dict,
    hashes of the shared intermediate artifacts (channel, echo, raw and
    fed-back observations) and solver diagnostics are recorded in it.
    """
    cfg = ctx.cfg
    seed = cfg.master_seed
    rlz = realize(ctx.scene, ctx.geom, ctx.ue,
                  derive_seed(seed, _STREAM_CHANNEL, block_index))
    pilots = make_pilots(ctx.geom.n, t_p, cfg.power,
                         derive_seed(seed, _STREAM_PILOT, t_p, block_index),
                         orthogonal=cfg.orthogonal_pilots)
    echo = simulate_echo(rlz.H, pilots.Z, ctx.noise.sigma2_echo,
                         derive_seed(seed, _STREAM_ECHO_NOISE, t_p,
                                     block_index))
    resid = suppress_clutter(ctx.projector, echo)
    dyn = extract_dynamic_subspace(
        resid, eta=cfg.eta, rho_max=cfg.rho_max,
        zero_tol=_ZERO_SUBSPACE_REL_TOL * float(np.linalg.norm(echo.E)))
    y = observe_pilots(pilots, rlz.h, ctx.noise.sigma2_pilot,
                       derive_seed(seed, _STREAM_PILOT_NOISE, t_p,
                                   block_index))
    y_hat = feedback(y, cfg.feedback())

    ridge = cfg.ridge()
    estimates: dict[str, ChannelEstimate] = {
        "joint": estimate_joint(y_hat, pilots, ctx.static, dyn, ridge),
        "vom_only": estimate_vom_only(y_hat, pilots, ctx.static, ctx.codebook,
                                      cfg.vom_only_atoms, ridge),
        "omp": estimate_omp(y_hat, pilots, ctx.codebook, cfg.omp_sparsity),
    }
    out = {name: _score(est.h_hat, rlz.h, ctx, name, t_p)
           for name, est in estimates.items()}
    out["perfect"] = _score(rlz.h, rlz.h, ctx, "perfect", t_p)

    if trace is not None:
        trace["h"] = _digest(rlz.h)
        trace["E"] = _digest(echo.E)
        trace["y"] = _digest(y)
        trace["y_hat"] = _digest(y_hat)
        trace["rho"] = dyn.rho
        trace["foc_residual"] = {name: est.foc_residual
                                 for name, est in estimates.items()}
    return out


@dataclass(frozen=True)
class SweepRow:
    """Aggregated outcome for one (scheme, pilot length) cell."""

    scheme: str
    t_p: int
    nmse_mean: float
    nmse_stderr: float
    rate_mean: float
    rate_stderr: float
    trials: int


@dataclass(frozen=True)
class ResultsTable:
    rows: tuple[SweepRow, ...]
    meta: dict = field(default_factory=dict)

    def row(self, scheme: str, t_p: int) -> SweepRow:
        for r in self.rows:
            if r.scheme == scheme and r.t_p == t_p:
                return r
        raise KeyError(f"no row for ({scheme!r}, {t_p})")

    def schemes(self) -> tuple[str, ...]:
        seen = dict.fromkeys(r.scheme for r in self.rows)
        return tuple(seen)

    def t_p_values(self) -> tuple[int, ...]:
        return tuple(sorted({r.t_p for r in self.rows}))


def _mean_stderr(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values)
    mean = float(np.mean(arr))
    if arr.size < 2:
        return mean, 0.0
    return mean, float(np.std(arr, ddof=1) / math.sqrt(arr.size))


_WORKER_CTX: RunContext | None = None


def _worker_init(cfg: ExperimentConfig) -> None:
    global _WORKER_CTX
    _WORKER_CTX = prepare_run(cfg)


def _worker_run(task: tuple[int, int]) -> tuple[int, int, dict, float]:
    t_p, block = task
    trace: dict = {}
    metrics = run_block(_WORKER_CTX, t_p, block, trace=trace)
    worst = max(trace["foc_residual"].values())
    return t_p, block, metrics, worst


def worker_count() -> int:
    """Worker-count override from the environment (default: serial)."""
    raw = os.environ.get(WORKERS_ENV, "")
    if not raw:
        return 1
    count = int(raw)
    if count < 1:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer")
    return count


def run_sweep(cfg: ExperimentConfig, ctx: RunContext | None = None,
              verbose: bool = False,
              per_trial: dict | None = None) -> ResultsTable:
    """Full Monte Carlo sweep over pilot lengths; deterministic aggregation.

    Parallel execution (via the worker-count environment override) changes
    only wall time: results are reduced in (t_p, block) order. Passing a
    dict as ``per_trial`` fills it with the raw per-block metrics keyed by
    (t_p, block_index) -> scheme -> TrialMetrics.
    """
    if ctx is None:
        ctx = prepare_run(cfg)
    elif ctx.cfg != cfg:
        raise ValueError("run context was prepared for a different configuration")
    tasks = [(t_p, b) for t_p in cfg.t_p_values for b in range(cfg.trials)]
    collected: dict[tuple[int, int], dict[str, TrialMetrics]] = {}
    max_foc = 0.0

    n_workers = worker_count()
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers,
                                 initializer=_worker_init,
                                 initargs=(cfg,)) as pool:
            for t_p, block, metrics, worst in pool.map(_worker_run, tasks,
                                                       chunksize=8):
                collected[(t_p, block)] = metrics
                max_foc = max(max_foc, worst)
                if verbose and block == cfg.trials - 1:
                    print(f"  T_p={t_p}: {cfg.trials} trials done",
                          file=sys.stderr)
    else:
        for t_p, block in tasks:
            trace: dict = {}
            collected[(t_p, block)] = run_block(ctx, t_p, block, trace=trace)
            max_foc = max(max_foc, max(trace["foc_residual"].values()))
            if verbose and block == cfg.trials - 1:
                print(f"  T_p={t_p}: {cfg.trials} trials done",
                      file=sys.stderr)

    if per_trial is not None:
        per_trial.update(collected)
    rows = []
    for scheme in SCHEMES:
        for t_p in cfg.t_p_values:
            per = [collected[(t_p, b)][scheme] for b in range(cfg.trials)]
            nm, ns = _mean_stderr([m.nmse for m in per])
            rm, rs = _mean_stderr([m.rate for m in per])
            rows.append(SweepRow(scheme=scheme, t_p=t_p, nmse_mean=nm,
                                 nmse_stderr=ns, rate_mean=rm, rate_stderr=rs,
                                 trials=cfg.trials))
    meta = {
        "config": config_to_dict(cfg),
        "version": __version__,
        "kernel_backend": BACKEND,
        "git": _git_identifier(),
        "workers": n_workers,
        "max_foc_residual": max_foc,
        "noise": {
            "sigma2_pilot": ctx.noise.sigma2_pilot,
            "sigma2_echo": ctx.noise.sigma2_echo,
            "sigma2_data": ctx.noise.sigma2_data,
            "mean_h_energy": ctx.noise.mean_h_energy,
            "mean_H_energy": ctx.noise.mean_H_energy,
        },
        "library_size": len(ctx.vom.library),
        "dynamic_rho_cap": cfg.rho_max,
    }
    return ResultsTable(rows=tuple(rows), meta=meta)


def _git_identifier() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], cwd=os.path.dirname(
            os.path.abspath(__file__)), capture_output=True, text=True,
            timeout=5, check=False)
        return out.stdout.strip() if out.returncode == 0 else "unknown"
    except OSError:
        return "unknown"


def emit_results(table: ResultsTable, out_dir) -> tuple[str, str]:
    """Write results.csv (byte-reproducible) and metadata.json into a directory."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "results.csv")
    meta_path = os.path.join(out_dir, "metadata.json")
    lines = [CSV_HEADER]
    for r in table.rows:
        lines.append(",".join([r.scheme, str(r.t_p), repr(r.nmse_mean),
                               repr(r.nmse_stderr), repr(r.rate_mean),
                               repr(r.rate_stderr), str(r.trials)]))
    try:
        with open(csv_path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        with open(meta_path, "w", encoding="utf-8") as fh:
            json.dump(table.meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write results under {out_dir!r}: {exc}") from exc
    return csv_path, meta_path


def read_results(csv_path) -> ResultsTable:
    """Parse a results.csv; loads metadata.json from the same directory if present."""
    with open(csv_path, encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{csv_path}: unexpected header")
    rows = []
    for ln in lines[1:]:
        scheme, t_p, nm, ns, rm, rs, trials = ln.split(",")
        rows.append(SweepRow(scheme=scheme, t_p=int(t_p), nmse_mean=float(nm),
                             nmse_stderr=float(ns), rate_mean=float(rm),
                             rate_stderr=float(rs), trials=int(trials)))
    meta_path = os.path.join(os.path.dirname(os.path.abspath(csv_path)),
                             "metadata.json")
    meta = {}
    if os.path.exists(meta_path):
        with open(meta_path, encoding="utf-8") as fh:
            meta = json.load(fh)
    return ResultsTable(rows=tuple(rows), meta=meta)
