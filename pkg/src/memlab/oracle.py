"""Closed-form ground truth for the two-class associative memory.

Everything here is written directly from the block formulas and does not
call into ``model``, ``optim`` or ``linalg``, so that agreement between the
two routes is evidence rather than tautology. Inputs are embeddings (plain
arrays) and the two-class parameters (K, L, alpha).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .embeddings import KEY_ANGLES, OBJECT_ANGLES, rotation_block
from .linalg import SvdFactors


@dataclass(frozen=True)
class TwoClassParams:
    k: int
    l: int
    alpha: float

    def __post_init__(self):
        if not 1 <= self.l < self.k:
            raise ValueError(f"need 1 <= l < k, got l={self.l}, k={self.k}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def beta(self) -> float:
        return self.l / self.k

    @property
    def gamma1(self) -> float:
        return self.alpha / (self.beta * self.k)

    @property
    def gamma2(self) -> float:
        return (1.0 - self.alpha) / ((1.0 - self.beta) * self.k)

    @property
    def lam(self) -> float:
        a, b = self.alpha, self.beta
        return math.sqrt(a * a * (1.0 - b) ** 3 + (1.0 - a) ** 2 * b**3)

    @property
    def r(self) -> float:
        return min(self.gamma1 / self.gamma2, self.gamma2 / self.gamma1)


def _split(emb):
    e, e_til = np.asarray(emb.e), np.asarray(emb.e_til)
    if e.shape[1] != e_til.shape[1]:
        raise ValueError("embedding column counts differ")
    return e, e_til


def gradient_at_zero(params: TwoClassParams, emb) -> np.ndarray:
    """Loss gradient at W = 0, assembled from its four outer-product blocks."""
    e, et = _split(emb)
    k, l, a = params.k, params.l, params.alpha
    if e.shape[1] != k:
        raise ValueError(f"embeddings have {e.shape[1]} columns, params say k={k}")
    head, tail = slice(0, l), slice(l, k)
    neg = (a / l) * et[:, head] @ e[:, head].T
    neg += ((1 - a) / (k - l)) * et[:, tail] @ e[:, tail].T
    # E_til J_{K,L} E_head^T = (E_til 1_K)(E_head 1_L)^T
    ones_obj = et.sum(axis=1)
    neg -= (a / (l * k)) * np.outer(ones_obj, e[:, head].sum(axis=1))
    neg -= ((1 - a) / ((k - l) * k)) * np.outer(ones_obj, e[:, tail].sum(axis=1))
    return -neg


def gd_eta(params: TwoClassParams, eps: float) -> float:
    """Smallest GD step at W = 0 bringing the faster class to probability 1 - eps."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    rate = max(params.gamma1, params.gamma2)
    return math.log((1.0 / eps - 1.0) * (params.k - 1)) / rate


def gd_min_prob(params: TwoClassParams, eps: float) -> float:
    """Slower class's correct probability at ``gd_eta``."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    r, k = params.r, params.k
    tail = (1.0 - eps) ** r * eps ** (1.0 - r) * (k - 1) ** (r - 1.0)
    return 1.0 - eps / (eps + tail)


def helmert_basis(n: int) -> np.ndarray:
    """n x (n-1) orthonormal basis of the complement of the all-ones vector."""
    h = np.zeros((n, max(n - 1, 0)))
    for j in range(1, n):
        h[:j, j - 1] = 1.0
        h[j, j - 1] = -float(j)
        h[:, j - 1] /= math.sqrt(j * (j + 1))
    return h


def muon_update_closed_form(params: TwoClassParams, emb) -> np.ndarray:
    """Muon's update at W = 0 (the orthogonal factor of the gradient).

    Built from the projector form: centred head and tail projectors plus
    one rank-one term coupling the two class indicators.
    """
    e, et = _split(emb)
    k, l, a = params.k, params.l, params.alpha
    head, tail = slice(0, l), slice(l, k)
    rh, rt = helmert_basis(l), helmert_basis(k - l)
    neg = et[:, head] @ (rh @ rh.T) @ e[:, head].T
    neg += et[:, tail] @ (rt @ rt.T) @ e[:, tail].T
    scale = 1.0 / math.sqrt(k * (a * a * (k - l) ** 3 + (1 - a) ** 2 * l**3))
    left = (k - l) * et[:, head].sum(axis=1) - l * et[:, tail].sum(axis=1)
    right = ((k - l) * a / l) * e[:, head].sum(axis=1) - (l * (1 - a) / (k - l)) * e[:, tail].sum(axis=1)
    neg += scale * np.outer(left, right)
    return -neg


def muon_block_coefficients(params: TwoClassParams) -> dict:
    """J-block coefficients c of the Muon update at W = 0 in embedding coordinates.

    ``E_til.T @ (-G) @ E = I + (1/K) * [[c11 J, c12 J], [c21 J, c22 J]]``.
    Off-diagonal blocks carry a 1/lambda factor (see muon_update_closed_form).
    """
    a, b, lam = params.alpha, params.beta, params.lam
    return {
        "c11": ((1 - b) ** 2 * a / lam - 1.0) / b,
        "c22": (b * b * (1 - a) / lam - 1.0) / (1 - b),
        "c12": -b * (1 - a) / lam,
        "c21": -a * (1 - b) / lam,
    }


def _class_probs(params: TwoClassParams, coeffs: dict, eta: float) -> tuple[float, float]:
    """Head and tail correct probabilities at W = -eta * G_muon (embedding coords)."""
    k, l = params.k, params.l
    c = {key: v / k for key, v in coeffs.items()}
    # head query: correct logit 1 + c11, other head c11, tail objects c21
    head = 1.0 / (1.0 + (l - 1) * math.exp(-eta) + (k - l) * math.exp(eta * (c["c21"] - c["c11"] - 1.0)))
    tail = 1.0 / (1.0 + (k - l - 1) * math.exp(-eta) + l * math.exp(eta * (c["c12"] - c["c22"] - 1.0)))
    return head, tail


def muon_eta_closed_form(params: TwoClassParams, eps: float) -> float:
    """Step size at which Muon's faster class first reaches 1 - eps (scalar root solve)."""
    coeffs = muon_block_coefficients(params)

    def gap(eta):
        return max(_class_probs(params, coeffs, eta)) - (1.0 - eps)

    hi = 1.0
    while gap(hi) < 0:
        hi *= 2.0
    return brentq(gap, 0.0, hi, xtol=1e-14, rtol=1e-14)


def muon_probs_closed_form(params: TwoClassParams, eta: float) -> tuple[float, float]:
    return _class_probs(params, muon_block_coefficients(params), eta)


def _svd2x2(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form SVD of a real 2x2 matrix (no LAPACK)."""
    (m11, m12), (m21, m22) = m
    t = m11**2 + m12**2 + m21**2 + m22**2
    det2 = (m11 * m22 - m12 * m21) ** 2
    disc = math.sqrt(max(t * t - 4.0 * det2, 0.0))
    s1 = math.sqrt((t + disc) / 2.0)
    s2 = math.sqrt(max((t - disc) / 2.0, 0.0))
    # right vectors: eigenvectors of M^T M
    g11, g22, g12 = m11**2 + m21**2, m12**2 + m22**2, m11 * m12 + m21 * m22
    theta = 0.5 * math.atan2(2.0 * g12, g11 - g22)
    v = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    u = np.zeros((2, 2))
    if s1 > 0:
        u[:, 0] = m @ v[:, 0] / s1
    else:
        u[:, 0] = (1.0, 0.0)
    if s2 > 1e-15 * max(s1, 1.0):
        u[:, 1] = m @ v[:, 1] / s2
    else:
        u[:, 1] = (-u[1, 0], u[0, 0])
    return u, np.array([s1, s2]), v


def _assemble(values, u_cols, v_cols) -> SvdFactors:
    s = np.asarray(values, dtype=np.float64)
    u = np.column_stack(u_cols) if u_cols else np.zeros((0, 0))
    v = np.column_stack(v_cols) if v_cols else np.zeros((0, 0))
    order = np.argsort(-s, kind="stable")
    return SvdFactors(u[:, order], s[order], v[:, order], 0.0)


def _subspace_columns(l: int, k: int):
    rh, rt = helmert_basis(l), helmert_basis(k - l)
    cols = [np.concatenate([rh[:, j], np.zeros(k - l)]) for j in range(rh.shape[1])]
    cols += [np.concatenate([np.zeros(l), rt[:, j]]) for j in range(rt.shape[1])]
    e1 = np.concatenate([np.full(l, 1.0 / math.sqrt(l)), np.zeros(k - l)])
    e2 = np.concatenate([np.zeros(l), np.full(k - l, 1.0 / math.sqrt(k - l))])
    return cols, rh.shape[1], rt.shape[1], e1, e2


def svd_block_constant(a, b, c11, c12, c21, c22, l: int, k: int) -> SvdFactors:
    """SVD of diag(a 1_L, b 1_{K-L}) plus a 2x2 block-constant matrix.

    The spectrum is a (L-1 times), b (K-L-1 times) and the two singular
    values of the reduced 2x2 matrix acting on the class-indicator plane.
    Returns all K triplets (``rank_tolerance`` 0), sorted descending.
    """
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if not 1 <= l < k:
        raise ValueError(f"need 1 <= l < k, got l={l}, k={k}")
    cross = math.sqrt(l * (k - l))
    m = np.array([[a + l * c11, cross * c12], [cross * c21, b + (k - l) * c22]])
    mu, ms, mv = _svd2x2(m)
    cols, nh, nt, e1, e2 = _subspace_columns(l, k)
    values = [a] * nh + [b] * nt + list(ms)
    u_cols = cols + [mu[0, i] * e1 + mu[1, i] * e2 for i in range(2)]
    v_cols = cols + [mv[0, i] * e1 + mv[1, i] * e2 for i in range(2)]
    return _assemble(values, u_cols, v_cols)


def svd_simp(a, b, l: int, k: int) -> SvdFactors:
    """SVD of ``diag(x) - (1/K) 1 x^T`` with x = (a 1_L, b 1_{K-L}).

    Uses the explicit singular vectors: the coupled pair (u1, v1) with
    value sqrt((a^2 (K-L) + b^2 L) / K) and the null pair (u2, v2).
    """
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if not 1 <= l < k:
        raise ValueError(f"degenerate split l={l} for k={k}")
    cols, nh, nt, _, _ = _subspace_columns(l, k)
    ind_h = np.concatenate([np.ones(l), np.zeros(k - l)])
    ind_t = 1.0 - ind_h
    norm_v = math.sqrt(a * a * (k - l) + b * b * l)
    v1 = (a * math.sqrt(k - l) / math.sqrt(l) * ind_h - b * math.sqrt(l) / math.sqrt(k - l) * ind_t) / norm_v
    v2 = (b * ind_h + a * ind_t) / norm_v
    u1 = ((k - l) * ind_h - l * ind_t) / math.sqrt(k * l * (k - l))
    u2 = np.full(k, 1.0 / math.sqrt(k))
    s1 = math.sqrt((a * a * (k - l) + b * b * l) / k)
    values = [a] * nh + [b] * nt + [s1, 0.0]
    return _assemble(values, cols + [u1, u2], cols + [v1, v2])


def simp_matrix(a, b, l: int, k: int) -> np.ndarray:
    x = np.concatenate([np.full(l, float(a)), np.full(k - l, float(b))])
    return np.diag(x) - np.outer(np.ones(k), x) / k


ADAM_A = np.array([[2.0, 0.0, 0.0], [2.0, 0.0, 2.0], [-2.0, -2.0, -2.0]])
ADAM_B = np.array([[-1.0, -1.0, -1.0], [-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]])

# printed 3x3 products used to bound sign-descent rates
PRINTED_ROTATED_SUM = np.array(
    [
        [1.46552253, 1.0132908, -0.11179563],
        [-0.0732561, 1.00709257, -1.26935805],
        [0.0544114, 0.89611102, 1.54147329],
    ]
)
PRINTED_ROTATED_B = np.array(
    [
        [-0.19288146, -1.24460331, -1.4058011],
        [-0.20112175, -1.2977753, -1.46585978],
        [-0.12780259, -0.82466989, -0.93147899],
    ]
)


@dataclass(frozen=True)
class AdamAdversarial:
    a_mat: np.ndarray
    b_mat: np.ndarray
    sum_mat: np.ndarray
    rotated_sum: np.ndarray
    rotated_b: np.ndarray
    r_exponent: float
    eta_bound_rate: float


def adam_adversarial() -> AdamAdversarial:
    r_obj, r_key = rotation_block(*OBJECT_ANGLES), rotation_block(*KEY_ANGLES)
    s = ADAM_A + ADAM_B
    return AdamAdversarial(
        a_mat=ADAM_A.copy(),
        b_mat=ADAM_B.copy(),
        sum_mat=s,
        rotated_sum=r_obj.T @ s @ r_key,
        rotated_b=r_obj.T @ ADAM_B @ r_key,
        r_exponent=1.668 / 2.471,
        eta_bound_rate=2.471,
    )


def sign_pattern_coupled(k: int) -> np.ndarray:
    """Expected ``-sign(grad)`` at W = 0 for coupled embeddings and large K."""
    if k % 3:
        raise ValueError("k must be divisible by 3")
    n = k // 3
    return np.kron(np.eye(n), ADAM_A) + np.kron(np.ones((n, n)), ADAM_B)


def sign_pattern_identity(k: int) -> np.ndarray:
    return 2.0 * np.eye(k) - np.ones((k, k))


def sym3_eigenvalues(s: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric 3x3 matrix via the trigonometric cubic solution."""
    p1 = s[0, 1] ** 2 + s[0, 2] ** 2 + s[1, 2] ** 2
    q = np.trace(s) / 3.0
    if p1 == 0.0:
        return np.sort(np.diag(s))[::-1]
    p2 = (s[0, 0] - q) ** 2 + (s[1, 1] - q) ** 2 + (s[2, 2] - q) ** 2 + 2.0 * p1
    p = math.sqrt(p2 / 6.0)
    bmat = (s - q * np.eye(3)) / p
    r = np.linalg.det(bmat) / 2.0
    phi = math.acos(min(1.0, max(-1.0, r))) / 3.0
    e1 = q + 2.0 * p * math.cos(phi)
    e3 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    e2 = 3.0 * q - e1 - e3
    return np.array([e1, e2, e3])


def singular_values_3x3(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.maximum(sym3_eigenvalues(a.T @ a), 0.0))


def adam_singular_ratio() -> float:
    """sigma_min / sigma_max of the 3x3 block A (shared with the full update)."""
    s = singular_values_3x3(ADAM_A)
    return float(s.min() / s.max())


def structure_coefficients(x: np.ndarray, l: int) -> dict:
    """Least-squares fit of x to diag(a 1_L, b 1_{K-L}) + block-constant C."""
    k = x.shape[0]
    if l < 2 or k - l < 2:
        raise ValueError("both classes need at least two facts")
    head, tail = x[:l, :l], x[l:, l:]
    c11 = (head.sum() - np.trace(head)) / (l * (l - 1))
    c22 = (tail.sum() - np.trace(tail)) / ((k - l) * (k - l - 1))
    a = np.trace(head) / l - c11
    b = np.trace(tail) / (k - l) - c22
    c12 = x[:l, l:].mean()
    c21 = x[l:, :l].mean()
    recon = np.block(
        [
            [a * np.eye(l) + c11 * np.ones((l, l)), c12 * np.ones((l, k - l))],
            [c21 * np.ones((k - l, l)), b * np.eye(k - l) + c22 * np.ones((k - l, k - l))],
        ]
    )
    return {
        "a": float(a),
        "b": float(b),
        "c11": float(c11),
        "c12": float(c12),
        "c21": float(c21),
        "c22": float(c22),
        "residual": float(np.linalg.norm(x - recon)),
    }


@dataclass
class StructureReport:
    steps: list = field(default_factory=list)
    residual_tolerance: float = 1e-6

    @property
    def max_residual(self) -> float:
        return max((s["residual"] for s in self.steps), default=0.0)

    @property
    def max_ab_gap(self) -> float:
        return max((abs(s["a"] - s["b"]) for s in self.steps), default=0.0)

    @property
    def max_c_ratio(self) -> float:
        """max over steps with a > 0 of K * max|c| / a."""
        ratios = [s["c_ratio"] for s in self.steps if s["c_ratio"] is not None]
        return max(ratios, default=0.0)

    @property
    def violations(self) -> list:
        return [s["step"] for s in self.steps if s["residual"] > self.residual_tolerance]


def multi_step_structure_check(weights, emb, params: TwoClassParams, residual_tolerance: float = 1e-6) -> StructureReport:
    """Project each iterate onto the diag-block / J-block basis in embedding coordinates."""
    e, et = _split(emb)
    report = StructureReport(residual_tolerance=residual_tolerance)
    for t, w in enumerate(weights):
        x = et.T @ np.asarray(w) @ e
        coeffs = structure_coefficients(x, params.l)
        cmax = max(abs(coeffs[key]) for key in ("c11", "c12", "c21", "c22"))
        coeffs["c_ratio"] = params.k * cmax / coeffs["a"] if coeffs["a"] > 0 else None
        coeffs["step"] = t
        report.steps.append(coeffs)
    return report
