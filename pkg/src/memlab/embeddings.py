"""Orthonormal key/value embedding pairs for the associative memory."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

# Euler-style angles of the adversarial 3x3 blocks, kept at printed precision.
OBJECT_ANGLES = (3.638, 2.949, 5.218)
KEY_ANGLES = (1.715, 0.876, 3.098)

KINDS = ("identity", "coupled_rotation", "random_orthonormal")


@dataclass(frozen=True)
class EmbeddingPair:
    """Key embeddings ``e`` (d_s x K) and object embeddings ``e_til`` (d_o x K)."""

    e: np.ndarray
    e_til: np.ndarray
    kind: str
    seed: Optional[int] = None

    @property
    def k(self) -> int:
        return int(self.e.shape[1])

    def orthonormality_error(self) -> float:
        eye = np.eye(self.k)
        return max(
            float(np.linalg.norm(self.e.T @ self.e - eye)),
            float(np.linalg.norm(self.e_til.T @ self.e_til - eye)),
        )

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "e": matrix_to_json(self.e),
            "e_til": matrix_to_json(self.e_til),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "EmbeddingPair":
        return cls(
            e=matrix_from_json(doc["e"]),
            e_til=matrix_from_json(doc["e_til"]),
            kind=doc["kind"],
            seed=doc.get("seed"),
        )


def matrix_to_json(a: np.ndarray) -> dict:
    rows, cols = a.shape
    return {"rows": int(rows), "cols": int(cols), "values": [float(x) for x in a.ravel()]}


def matrix_from_json(doc: dict) -> np.ndarray:
    rows, cols, values = int(doc["rows"]), int(doc["cols"]), doc["values"]
    if len(values) != rows * cols:
        raise ValueError(f"matrix dump has {len(values)} values, expected {rows}x{cols}")
    return np.asarray(values, dtype=np.float64).reshape(rows, cols)


def _check_k(k: int) -> None:
    if int(k) != k or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k}")


def identity_embeddings(k: int) -> EmbeddingPair:
    _check_k(k)
    return EmbeddingPair(np.eye(k), np.eye(k), "identity")


def rotation_block(a: float, b: float, c: float) -> np.ndarray:
    """3x3 rotation from three Euler-style angles (radians)."""
    ca, sa = np.cos(a), np.sin(a)
    cb, sb = np.cos(b), np.sin(b)
    cc, sc = np.cos(c), np.sin(c)
    return np.array(
        [
            [ca * cb * cc - sa * sc, -ca * cb * sc - sa * cc, ca * sb],
            [sa * cb * cc + ca * sc, -sa * cb * sc + ca * cc, sa * sb],
            [-sb * cc, sb * sc, cb],
        ]
    )


def coupled_embeddings(k: int) -> EmbeddingPair:
    """Block-diagonal embeddings whose supports overlap inside 3x3 blocks.

    Requires ``k % 3 == 0``; object embeddings repeat
    ``rotation_block(*OBJECT_ANGLES)`` and key embeddings repeat
    ``rotation_block(*KEY_ANGLES)`` along the diagonal.
    """
    _check_k(k)
    if k % 3:
        raise ValueError(f"coupled embeddings need k divisible by 3 (k mod 3 = 0), got k={k}")
    blocks = np.eye(k // 3)
    return EmbeddingPair(
        e=np.kron(blocks, rotation_block(*KEY_ANGLES)),
        e_til=np.kron(blocks, rotation_block(*OBJECT_ANGLES)),
        kind="coupled_rotation",
    )


def gram_schmidt(a: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt (right-looking), run twice for re-orthogonalisation."""
    q = np.array(a, dtype=np.float64, copy=True)
    n = q.shape[1]
    scale = np.linalg.norm(q, axis=0)
    for sweep in range(2):
        for j in range(n):
            norm = np.linalg.norm(q[:, j])
            if sweep == 0 and norm <= 1e-12 * scale[j] or norm == 0.0:
                raise ValueError(f"column {j} is linearly dependent on the previous ones")
            q[:, j] /= norm
            rest = q[:, j + 1:]
            rest -= np.outer(q[:, j], q[:, j] @ rest)
    return q


def seeded_generator(seed: int) -> np.random.Generator:
    """PCG64 (numpy's default bit generator) seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


def random_orthonormal(k: int, seed: int) -> EmbeddingPair:
    """Two independent orthonormal K x K matrices from one seeded PCG64 stream.

    Key embeddings are drawn first, object embeddings second.
    """
    _check_k(k)
    rng = seeded_generator(seed)
    e = gram_schmidt(rng.standard_normal((k, k)))
    e_til = gram_schmidt(rng.standard_normal((k, k)))
    return EmbeddingPair(e, e_til, "random_orthonormal", seed)


def make_embeddings(kind: str, k: int, seed: int = 0) -> EmbeddingPair:
    if kind == "identity":
        return identity_embeddings(k)
    if kind in ("coupled", "coupled_rotation"):
        return coupled_embeddings(k)
    if kind in ("random", "random_orthonormal"):
        return random_orthonormal(k, seed)
    raise ValueError(f"unknown embedding kind {kind!r}; expected one of {KINDS}")
