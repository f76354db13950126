"""Isotropy metrics of a singular spectrum.

All metrics act on the energy distribution q_i = s_i^2 / sum_j s_j^2 of
the nonzero singular values. Values at or below ``ZERO_TOLERANCE * s_max``
count as zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg

ZERO_TOLERANCE = 1e-12
DEFAULT_TOP_K = (1, 10)


@dataclass(frozen=True)
class SpectrumMetrics:
    h_norm: float
    erank: float
    top_e: dict
    q_ratio: float
    n_nonzero: int


def nonzero_spectrum(sigma, zero_tolerance: float = ZERO_TOLERANCE) -> np.ndarray:
    s = np.sort(np.abs(np.asarray(sigma, dtype=np.float64)))[::-1]
    if s.size == 0 or s[0] <= 0.0:
        raise ValueError("empty spectrum: no strictly positive singular values")
    return s[s > zero_tolerance * s[0]]


def energy_distribution(sigma) -> np.ndarray:
    s = nonzero_spectrum(sigma)
    # scale first so squaring cannot overflow or underflow
    e = (s / s[0]) ** 2
    return e / e.sum()


def _entropy(q: np.ndarray) -> float:
    return float(-(q * np.log(q)).sum())


def normalized_entropy(sigma) -> float:
    """Shannon entropy of q divided by log n; 1 by convention when n == 1."""
    q = energy_distribution(sigma)
    if q.size == 1:
        return 1.0
    return _entropy(q) / math.log(q.size)


def effective_rank(sigma) -> float:
    return math.exp(_entropy(energy_distribution(sigma)))


def top_k_energy(sigma, k: int) -> float:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    q = energy_distribution(sigma)
    return float(q[: min(k, q.size)].sum())


def quantile_ratio(sigma, zero_tolerance: float = ZERO_TOLERANCE) -> float:
    """Q3 / Q1 of the eigenvalues s_i^2 (linear interpolation at p * (n - 1)).

    With ``zero_tolerance=0`` tiny values survive filtering and their squares
    may underflow, which is reported rather than divided by.
    """
    s = nonzero_spectrum(sigma, zero_tolerance)
    if s.size < 2:
        raise ValueError("quantile ratio needs at least two nonzero singular values")
    eig = (s / s[0]) ** 2
    q1, q3 = np.quantile(eig, [0.25, 0.75])
    if q1 <= 0.0:
        raise ValueError("lower quartile vanishes")
    return float(q3 / q1)


def spectrum_metrics(sigma, top_k=DEFAULT_TOP_K) -> SpectrumMetrics:
    s = nonzero_spectrum(sigma)
    return SpectrumMetrics(
        h_norm=normalized_entropy(s),
        erank=effective_rank(s),
        top_e={k: top_k_energy(s, k) for k in top_k},
        q_ratio=quantile_ratio(s) if s.size >= 2 else 1.0,
        n_nonzero=int(s.size),
    )


def matrix_metrics(a, top_k=DEFAULT_TOP_K) -> SpectrumMetrics:
    a = linalg.as_matrix(a)
    if not a.any():
        raise ValueError("zero matrix has an empty spectrum")
    return spectrum_metrics(linalg.singular_spectrum(a), top_k)
