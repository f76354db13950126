"""Dense matrix helpers: SVD, orthogonal factors and Newton-Schulz.

Matrices are plain ``float64`` numpy arrays. The SVD is a one-sided
(Hestenes) Jacobi method with a round-robin pair ordering so that each
round of disjoint rotations is applied as one vectorised update. Above
``JACOBI_MAX_DIM`` the ``auto`` method hands off to LAPACK, which is
much faster at K ~ 1000 and is cross-checked against Jacobi in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

DEFAULT_RANK_TOLERANCE = 1e-10
DEFAULT_NS_ITERATIONS = 24
JACOBI_MAX_DIM = 128
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 60


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``a = u @ diag(s) @ v.T`` over the retained directions."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    rank_tolerance: float

    @property
    def rank(self) -> int:
        return int(self.s.shape[0])

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.v.T


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array and reject NaN/Inf entries."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    bad = ~np.isfinite(arr)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise ValueError(f"{name} has non-finite entry {arr[i, j]!r} at ({i}, {j})")
    return arr


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings covering every (p, q), p < q, in n-1 rounds (n even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        ps = np.array(players[:half])
        qs = np.array(players[half:][::-1])
        lo, hi = np.minimum(ps, qs), np.maximum(ps, qs)
        rounds.append((lo, hi))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi_columns(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonalise the columns of a (m >= n); returns (rotated a, v)."""
    m, n = a.shape
    work = a.copy()
    v = np.eye(n)
    if n % 2:
        # phantom zero column so the tournament has an even number of players
        work = np.hstack([work, np.zeros((m, 1))])
        v = np.pad(v, ((0, 1), (0, 1)))
    rounds = _round_robin(work.shape[1])
    for _ in range(JACOBI_MAX_SWEEPS):
        rotated = False
        for ps, qs in rounds:
            ap, aq = work[:, ps], work[:, qs]
            alpha = np.einsum("ij,ij->j", ap, ap)
            beta = np.einsum("ij,ij->j", aq, aq)
            gamma = np.einsum("ij,ij->j", ap, aq)
            active = np.abs(gamma) > JACOBI_TOL * np.sqrt(alpha * beta)
            if not active.any():
                continue
            rotated = True
            ps, qs = ps[active], qs[active]
            alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            # tangent of the rotation angle, written without dividing by gamma
            diff = beta - alpha
            sign = np.where((diff >= 0) == (gamma > 0), 1.0, -1.0)
            t = sign * 2.0 * np.abs(gamma) / (np.abs(diff) + np.hypot(diff, 2.0 * gamma))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            for mat in (work, v):
                mp, mq = mat[:, ps].copy(), mat[:, qs]
                mat[:, ps] = c * mp - s * mq
                mat[:, qs] = s * mp + c * mq
        if not rotated:
            break
    return work[:, :n], v[:n, :n]


def _fix_signs(u: np.ndarray, v: np.ndarray) -> None:
    """Make each u column's largest-magnitude entry nonnegative (in place)."""
    if u.shape[1] == 0:
        return
    idx = np.argmax(np.abs(u), axis=0)
    flip = u[idx, np.arange(u.shape[1])] < 0
    u[:, flip] *= -1.0
    v[:, flip] *= -1.0


def _full_svd(a: np.ndarray, method: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All min(m, n) singular triplets, s descending. u columns for s == 0 may be 0."""
    if method == "auto":
        method = "jacobi" if min(a.shape) <= JACOBI_MAX_DIM else "lapack"
    if method == "lapack":
        try:
            u, s, vt = np.linalg.svd(a, full_matrices=False)
        except np.linalg.LinAlgError:
            # divide-and-conquer occasionally fails to converge; QR iteration is slower but robust
            u, s, vt = scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesvd")
        return u, s, vt.T
    if method != "jacobi":
        raise ValueError(f"unknown svd method {method!r}")
    transposed = a.shape[0] < a.shape[1]
    work = a.T if transposed else a
    cols, v = _jacobi_columns(work)
    s = np.linalg.norm(cols, axis=0)
    order = np.argsort(-s, kind="stable")
    s, cols, v = s[order], cols[:, order], v[:, order]
    u = np.zeros_like(cols)
    nz = s > 0
    u[:, nz] = cols[:, nz] / s[nz]
    if transposed:
        u, v = v, u
    return u, s, v


def svd(a, rank_tolerance: float = DEFAULT_RANK_TOLERANCE, method: str = "auto") -> SvdFactors:
    """Thin SVD keeping singular values above ``rank_tolerance * s[0]``.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    ``JACOBI_MAX_DIM``). Column signs are fixed so that each left singular
    vector's largest-magnitude entry is nonnegative.
    """
    a = as_matrix(a)
    if not 0.0 < rank_tolerance <= 1e-3:
        raise ValueError(f"rank_tolerance must lie in (0, 1e-3], got {rank_tolerance}")
    m, n = a.shape
    u, s, v = _full_svd(a, method)
    if s.size == 0 or s[0] == 0.0:
        return SvdFactors(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)), rank_tolerance)
    keep = s > rank_tolerance * s[0]
    u, s, v = u[:, keep].copy(), s[keep].copy(), v[:, keep].copy()
    _fix_signs(u, v)
    return SvdFactors(u, s, v, rank_tolerance)


def singular_spectrum(a, method: str = "auto") -> np.ndarray:
    """All min(m, n) singular values, descending, numerical zeros included."""
    a = as_matrix(a)
    _, s, _ = _full_svd(a, method)
    return s


def orthogonal_factor_exact(
    a, rank_tolerance: float = DEFAULT_RANK_TOLERANCE, method: str = "auto"
) -> np.ndarray:
    """``U @ V.T`` over the retained singular directions; zero maps to zero."""
    f = svd(a, rank_tolerance, method)
    if f.rank == 0:
        return np.zeros((f.u.shape[0], f.v.shape[0]))
    return f.u @ f.v.T


def newton_schulz(a, iterations: int = DEFAULT_NS_ITERATIONS) -> np.ndarray:
    """Cubic Newton-Schulz approximation of the orthogonal factor.

    The input is scaled by its Frobenius norm so every singular value is
    at most 1, then ``X <- 1.5 X - 0.5 X X^T X`` is applied ``iterations``
    times. Small singular values grow by ~1.5x per iteration, so matrices
    with a wide spread need more iterations than the textbook 5-10.
    """
    a = as_matrix(a)
    if iterations < 1:
        raise ValueError("iterations must be a positive integer")
    norm = np.linalg.norm(a)
    if norm == 0.0:
        raise ValueError("degenerate input: Newton-Schulz needs a nonzero matrix")
    x = a / norm
    wide = x.shape[0] <= x.shape[1]
    for _ in range(iterations):
        if wide:
            x = 1.5 * x - 0.5 * (x @ x.T) @ x
        else:
            x = 1.5 * x - 0.5 * x @ (x.T @ x)
    return x


def frobenius_inner(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sum(a * b))


def nuclear_norm(a) -> float:
    return float(singular_spectrum(a).sum())
