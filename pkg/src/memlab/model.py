"""One-layer linear associative memory with a softmax readout.

Fact k is queried with key ``E[:, k]``; the model scores every object
with ``softmax(E_til.T @ W @ E[:, k])`` and the population loss is the
p-weighted cross-entropy of the correct objects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import ClassDistribution
from .embeddings import EmbeddingPair

LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class MemoryProblem:
    embeddings: EmbeddingPair
    distribution: ClassDistribution

    def __post_init__(self):
        k = self.distribution.k
        if self.embeddings.e.shape[1] != k or self.embeddings.e_til.shape[1] != k:
            raise ValueError(
                f"distribution has {k} facts but embeddings have "
                f"{self.embeddings.e.shape[1]} / {self.embeddings.e_til.shape[1]} columns"
            )

    @property
    def k(self) -> int:
        return self.distribution.k

    @property
    def p(self) -> np.ndarray:
        return self.distribution.p

    @property
    def weight_shape(self) -> tuple[int, int]:
        return self.embeddings.e_til.shape[0], self.embeddings.e.shape[0]

    def zeros(self) -> np.ndarray:
        return np.zeros(self.weight_shape)

    @property
    def trivial_embeddings(self) -> bool:
        """Both embedding matrices are exactly the identity, so coordinate changes can be skipped."""
        eye = np.eye(self.k)
        emb = self.embeddings
        return emb.e.shape == eye.shape and np.array_equal(emb.e, eye) and np.array_equal(emb.e_til, eye)


def _check_w(problem: MemoryProblem, w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != problem.weight_shape:
        raise ValueError(f"weight shape {w.shape} does not match {problem.weight_shape}")
    return w


def logits(problem: MemoryProblem, w: np.ndarray) -> np.ndarray:
    """K x K matrix; column k holds the object logits for query k."""
    w = _check_w(problem, w)
    if problem.trivial_embeddings:
        return w.copy()
    emb = problem.embeddings
    return emb.e_til.T @ w @ emb.e


def column_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=0, keepdims=True)
    ez = np.exp(z)
    return ez / ez.sum(axis=0, keepdims=True)


def correct_from_logits(z: np.ndarray) -> np.ndarray:
    """Diagonal of ``column_softmax(z)`` without forming the full matrix."""
    z = z - z.max(axis=0, keepdims=True)
    return np.exp(np.diag(z)) / np.exp(z).sum(axis=0)


def scores(problem: MemoryProblem, w: np.ndarray) -> np.ndarray:
    return column_softmax(logits(problem, w))


def loss(problem: MemoryProblem, w: np.ndarray) -> float:
    return loss_from_logits(problem, logits(problem, w))


def loss_from_logits(problem: MemoryProblem, z: np.ndarray) -> float:
    zmax = z.max(axis=0)
    log_probs = np.diag(z) - zmax - np.log(np.exp(z - zmax).sum(axis=0))
    # log-softmax cannot underflow to -inf; the floor only guards pathological input
    log_probs = np.maximum(log_probs, np.log(LOG_FLOOR))
    return float(-(problem.p * log_probs).sum())


def gradient(problem: MemoryProblem, w: np.ndarray) -> np.ndarray:
    """dL/dW = E_til (S - I) diag(p) E^T with S the score matrix."""
    return gradient_from_logits(problem, logits(problem, w))


def gradient_from_logits(problem: MemoryProblem, z: np.ndarray) -> np.ndarray:
    s = column_softmax(z)
    s[np.diag_indices_from(s)] -= 1.0
    if problem.trivial_embeddings:
        return s * problem.p
    emb = problem.embeddings
    return emb.e_til @ (s * problem.p) @ emb.e.T


def correct_probabilities(problem: MemoryProblem, w: np.ndarray) -> np.ndarray:
    return correct_from_logits(logits(problem, w))


def max_prob_gap(problem: MemoryProblem, w: np.ndarray) -> float:
    probs = correct_probabilities(problem, w)
    return float(probs.max() - probs.min())
