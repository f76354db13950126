"""Cross-checks between the numerical route and the closed forms in ``oracle``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import linalg, oracle
from ..distributions import power_law_distribution, two_class_distribution
from ..embeddings import KINDS as EMBEDDING_KINDS
from ..embeddings import make_embeddings, seeded_generator
from ..model import MemoryProblem, gradient
from ..optim import min_eta_for_target, update_direction


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    details: str


def two_class_problem(kind: str, k: int, l: int, alpha: float = 0.8, seed: int = 0) -> MemoryProblem:
    return MemoryProblem(make_embeddings(kind, k, seed), two_class_distribution(k, l, alpha))


def _rel(a, b) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def sign_pattern_holds(kind: str, k: int, l: int, alpha: float = 0.8) -> bool:
    """Whether ``-sign(grad)`` at W = 0 equals the predicted +-1 pattern exactly."""
    prob = two_class_problem(kind, k, l, alpha)
    observed = -np.sign(gradient(prob, prob.zeros()))
    expected = oracle.sign_pattern_identity(k) if kind == "identity" else oracle.sign_pattern_coupled(k)
    return bool(np.array_equal(observed, expected))


def head_size(k: int, beta: float = 0.2, multiple: int = 1) -> int:
    """Head size closest to beta * k, rounded to a multiple of ``multiple``."""
    l = multiple * max(1, round(beta * k / multiple))
    return min(l, k - multiple)


def measure_sign_threshold(kind: str, k_values, alpha: float = 0.8, beta: float = 0.2):
    """Smallest scanned K from which the sign pattern holds for every larger scanned K.

    Coupled embeddings use a head size divisible by 3 so the class boundary
    falls between 3x3 blocks. Returns None when the largest K fails.
    """
    multiple = 3 if kind == "coupled_rotation" else 1
    threshold = None
    for k in sorted(k_values, reverse=True):
        if not sign_pattern_holds(kind, k, head_size(k, beta, multiple), alpha):
            break
        threshold = k
    return threshold


def _check_gradient() -> CheckResult:
    worst = 0.0
    for k, l in ((9, 2), (99, 21)):
        for kind in EMBEDDING_KINDS:
            prob = two_class_problem(kind, k, l, seed=3)
            g = gradient(prob, prob.zeros())
            worst = max(worst, float(np.abs(g - oracle.gradient_at_zero(oracle.TwoClassParams(k, l, 0.8), prob.embeddings)).max()))
    return CheckResult("gradient_closed_form", worst <= 1e-12, f"max entry error {worst:.3g}")


def _check_svd() -> CheckResult:
    rng = seeded_generator(11)
    worst = 0.0
    for _ in range(10):
        k = int(rng.integers(4, 40))
        l = int(rng.integers(2, k - 1))
        a, b = rng.uniform(0.1, 2.0, size=2)
        closed = oracle.svd_simp(a, b, l, k)
        worst = max(worst, float(np.abs(closed.s - linalg.singular_spectrum(oracle.simp_matrix(a, b, l, k))).max()))
        c = rng.normal(size=4) * 0.3
        mat = np.diag(np.r_[np.full(l, a), np.full(k - l, b)]) + np.block(
            [[c[0] * np.ones((l, l)), c[1] * np.ones((l, k - l))], [c[2] * np.ones((k - l, l)), c[3] * np.ones((k - l, k - l))]]
        )
        closed = oracle.svd_block_constant(a, b, c[0], c[1], c[2], c[3], l, k)
        worst = max(worst, float(np.abs(closed.s - linalg.singular_spectrum(mat)).max()))
    return CheckResult("svd_closed_forms", worst <= 1e-9, f"max singular value error {worst:.3g}")


def _check_muon() -> CheckResult:
    worst = 0.0
    for k, l in ((30, 6), (60, 12)):
        for kind in EMBEDDING_KINDS:
            prob = two_class_problem(kind, k, l, seed=5)
            d = update_direction("muon_exact", gradient(prob, prob.zeros()))
            worst = max(worst, _rel(d, oracle.muon_update_closed_form(oracle.TwoClassParams(k, l, 0.8), prob.embeddings)))
    return CheckResult("muon_closed_form", worst <= 1e-8, f"max relative Frobenius error {worst:.3g}")


def _check_muon_eta() -> CheckResult:
    params = oracle.TwoClassParams(99, 21, 0.8)
    prob = two_class_problem("identity", 99, 21)
    closed = oracle.muon_eta_closed_form(params, 0.1)
    numeric = min_eta_for_target(prob, prob.zeros(), "muon_exact", 0.1)
    err = abs(numeric - closed) / closed
    return CheckResult("muon_step_size", err <= 1e-6, f"closed {closed:.10g} numeric {numeric:.10g}")


def _check_gd() -> CheckResult:
    params = oracle.TwoClassParams(1000, 200, 0.8)
    prob = two_class_problem("identity", 1000, 200)
    eta = oracle.gd_eta(params, 0.1)
    w = -eta * gradient(prob, prob.zeros())
    from ..model import correct_probabilities

    c = correct_probabilities(prob, w)
    expected = oracle.gd_min_prob(params, 0.1)
    err = abs(c.min() - expected) / expected
    return CheckResult("gd_min_prob", err <= 1e-6 and abs(c.max() - 0.9) <= 1e-9, f"min {c.min():.12g} expected {expected:.12g}")


def _check_sign_patterns() -> CheckResult:
    ident = measure_sign_threshold("identity", range(2, 61))
    coupled = measure_sign_threshold("coupled_rotation", range(6, 121, 3))
    big = sign_pattern_holds("coupled_rotation", 999, 201) and sign_pattern_holds("identity", 999, 200)
    passed = ident is not None and coupled is not None and big
    return CheckResult("sign_patterns", passed, f"identity from K={ident}, coupled from K={coupled} (head size divisible by 3), K=999 {big}")


def _check_adam_matrices() -> CheckResult:
    adv = oracle.adam_adversarial()
    err = max(float(np.abs(adv.rotated_sum - oracle.PRINTED_ROTATED_SUM).max()), float(np.abs(adv.rotated_b - oracle.PRINTED_ROTATED_B).max()))
    ratio = oracle.adam_singular_ratio()
    return CheckResult("adam_block_matrices", err <= 1e-6 and ratio <= 0.25 + 1e-6, f"max entry error {err:.3g}, sigma ratio {ratio:.6f}")


def _check_newton_schulz() -> CheckResult:
    rng = seeded_generator(7)
    worst = 0.0
    for n in (8, 32, 64):
        q1, _ = np.linalg.qr(rng.normal(size=(n, n)))
        q2, _ = np.linalg.qr(rng.normal(size=(n, n)))
        a = q1 @ np.diag(np.linspace(0.1, 1.0, n)) @ q2.T
        worst = max(worst, float(np.linalg.norm(linalg.newton_schulz(a) - linalg.orthogonal_factor_exact(a))))
    return CheckResult("newton_schulz", worst <= 1e-2, f"max Frobenius distance {worst:.3g}")


def _check_dual_norms() -> CheckResult:
    rng = seeded_generator(13)
    worst = 0.0
    for _ in range(5):
        g = rng.normal(size=(20, 20))
        l1 = np.abs(g).sum()
        worst = max(worst, abs(linalg.frobenius_inner(g, np.sign(g)) - l1) / l1)
        nuc = linalg.nuclear_norm(g)
        worst = max(worst, abs(linalg.frobenius_inner(g, linalg.orthogonal_factor_exact(g)) - nuc) / nuc)
    return CheckResult("dual_norms", worst <= 1e-8, f"max relative error {worst:.3g}")


def _check_power_law() -> CheckResult:
    dist = power_law_distribution(15, 6)
    counts = dist.meta["counts"]
    ok = dist.k == 32768 and int(counts.max()) == 196608 and int(counts.min()) == 6
    return CheckResult("power_law", ok, f"classes {dist.k}, head {int(counts.max())}, tail {int(counts.min())}")


CHECKS: tuple[Callable[[], CheckResult], ...] = (
    _check_gradient,
    _check_svd,
    _check_muon,
    _check_muon_eta,
    _check_gd,
    _check_sign_patterns,
    _check_adam_matrices,
    _check_newton_schulz,
    _check_dual_norms,
    _check_power_law,
)


def run_checks() -> list[CheckResult]:
    results = []
    for check in CHECKS:
        try:
            results.append(check())
        except Exception as exc:  # a crashing check is a failed check
            results.append(CheckResult(check.__name__.removeprefix("_check_"), False, f"raised {type(exc).__name__}: {exc}"))
    return results
