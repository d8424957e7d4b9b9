"""Estimation-quality and link-level figures of merit."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TrialMetrics:
    """Per-trial outcome for one scheme at one pilot length."""

    nmse: float
    rate: float
    beam_gain: float
    scheme: str
    t_p: int

    def __post_init__(self):
        if self.nmse < 0 or self.rate < 0 or self.beam_gain < 0:
            raise ValueError("metrics must be non-negative")


def nmse(h_true: np.ndarray, h_hat: np.ndarray) -> float:
    """Normalized squared estimation error ||h - h_hat||^2 / ||h||^2."""
    h_true = np.asarray(h_true)
    h_hat = np.asarray(h_hat)
    denom = float(np.vdot(h_true, h_true).real)
    if denom == 0.0:
        raise ValueError("true channel is identically zero")
    err = h_true - h_hat
    return float(np.vdot(err, err).real) / denom


def mrt(h_hat: np.ndarray) -> np.ndarray:
    """Maximum-ratio transmission beam: the unit vector along the estimate."""
    h_hat = np.asarray(h_hat, dtype=np.complex128)
    nrm = float(np.linalg.norm(h_hat))
    if nrm == 0.0:
        raise ValueError("zero estimate gives no beam direction")
    return h_hat / nrm


def beam_gain(h_true: np.ndarray, w: np.ndarray) -> float:
    """|h^H w|^2 for a unit-norm beam w."""
    return float(np.abs(np.vdot(h_true, w)) ** 2)


def achievable_rate(h_true: np.ndarray, w: np.ndarray, power: float,
                    sigma2: float, t_p: int, t: int) -> float:
    """Pilot-overhead-discounted downlink rate in bits/s/Hz.

    R = (1 - T_p / T) * log2(1 + P |h^H w|^2 / sigma^2).
    """
    if not 0 <= t_p <= t:
        raise ValueError(f"pilot length {t_p} exceeds block length {t}")
    if sigma2 <= 0:
        raise ValueError("noise power must be positive")
    snr = power * beam_gain(h_true, w) / sigma2
    return (1.0 - t_p / t) * math.log2(1.0 + snr)
