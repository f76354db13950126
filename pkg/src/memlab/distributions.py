"""Class-frequency vectors over the K stored facts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ClassDistribution:
    p: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return int(self.p.shape[0])


def two_class_distribution(k: int, l: int, alpha: float) -> ClassDistribution:
    """Head of ``l`` facts sharing mass ``alpha``; the other ``k - l`` share the rest."""
    if not 1 <= l < k:
        raise ValueError(f"need 1 <= l < k, got l={l}, k={k}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    p = np.empty(k)
    p[:l] = alpha / l
    p[l:] = (1.0 - alpha) / (k - l)
    return ClassDistribution(p, {"kind": "two_class", "alpha": alpha, "beta": l / k, "l": l})


def power_law_distribution(m: int, n_qa: int) -> ClassDistribution:
    """Grouped power law: group g has N_g classes with 2**(m-g) * n_qa samples each.

    N_0 = 1 and N_g = 2**(g-1) for g > 0, giving 2**m classes with the
    head class first. ``meta["counts"]`` holds the integer sample counts.
    """
    if m < 0 or n_qa < 1:
        raise ValueError(f"need m >= 0 and n_qa >= 1, got m={m}, n_qa={n_qa}")
    counts = []
    groups = []
    for g in range(m + 1):
        n_classes = 1 if g == 0 else 2 ** (g - 1)
        counts.extend([2 ** (m - g) * n_qa] * n_classes)
        groups.extend([g] * n_classes)
    counts_arr = np.asarray(counts, dtype=np.int64)
    p = counts_arr / counts_arr.sum()
    return ClassDistribution(
        p,
        {"kind": "power_law", "m": m, "n_qa": n_qa, "counts": counts_arr, "groups": np.asarray(groups)},
    )


def empirical_distribution(counts) -> ClassDistribution:
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim != 1 or (counts < 0).any() or counts.sum() <= 0:
        raise ValueError("counts must be a nonnegative 1-D vector with positive total")
    return ClassDistribution(counts / counts.sum(), {"kind": "empirical"})


def imbalance_ratio(alpha: float, beta: float) -> float:
    """min of the head/tail per-fact odds ratio and its reciprocal; 1 when balanced."""
    for name, x in (("alpha", alpha), ("beta", beta)):
        if not 0.0 < x < 1.0:
            raise ValueError(f"{name} must lie strictly inside (0, 1), got {x}")
    odds = alpha * (1.0 - beta) / (beta * (1.0 - alpha))
    return min(odds, 1.0 / odds)
