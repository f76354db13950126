"""Update rules (GD, sign descent, Muon, Adam) and the one-/multi-step protocols."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .model import MemoryProblem, correct_from_logits, gradient, gradient_from_logits, logits, loss_from_logits

KINDS = ("gd", "sign_gd", "muon_exact", "muon_ns", "muon_momentum", "adam_full")
STATEFUL_KINDS = ("muon_momentum", "adam_full")
GRID_POINTS_PER_DECADE = 64
ETA_CEILING = 1e9


@dataclass(frozen=True)
class OptimizerKind:
    name: str
    momentum: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0
    adam_eps: float = 1e-30
    ns_iterations: int = linalg.DEFAULT_NS_ITERATIONS
    rank_tolerance: float = linalg.DEFAULT_RANK_TOLERANCE
    svd_method: str = "auto"

    def __post_init__(self):
        if self.name not in KINDS:
            raise ValueError(f"unknown optimizer {self.name!r}; expected one of {KINDS}")
        for label, val in (("momentum", self.momentum), ("beta1", self.beta1), ("beta2", self.beta2)):
            if not 0.0 <= val < 1.0:
                raise ValueError(f"{label} must lie in [0, 1), got {val}")
        if self.ns_iterations < 1:
            raise ValueError("ns_iterations must be positive")


def as_kind(kind) -> OptimizerKind:
    return kind if isinstance(kind, OptimizerKind) else OptimizerKind(str(kind))


def update_direction(kind, grad: np.ndarray) -> np.ndarray:
    """Direction D of the stateless rules; the step is ``W - eta * D``.

    A numerically zero gradient gives a zero Muon direction.
    """
    kind = as_kind(kind)
    grad = linalg.as_matrix(grad, "gradient")
    if kind.name == "gd":
        return grad.copy()
    if kind.name == "sign_gd":
        return np.sign(grad)
    if kind.name in ("muon_exact", "muon_momentum"):
        return linalg.orthogonal_factor_exact(grad, kind.rank_tolerance, kind.svd_method)
    if kind.name == "muon_ns":
        if not grad.any():
            return np.zeros_like(grad)
        return linalg.newton_schulz(grad, kind.ns_iterations)
    if kind.name == "adam_full":
        # a single fresh Adam step with bias correction is sign(grad)
        return np.sign(grad)
    raise AssertionError(kind.name)


@dataclass
class MomentumState:
    """Accumulators for the stateful rules; ``step`` counts updates taken."""

    buffer: Optional[np.ndarray] = None
    second: Optional[np.ndarray] = None
    step: int = 0


def momentum_update(state: MomentumState, kind, grad: np.ndarray) -> tuple[MomentumState, np.ndarray]:
    """Advance the accumulator and return ``(new_state, direction)``.

    muon_momentum: B_t = mu B_{t-1} + G_t, direction = orthogonal factor of B_t.
    adam_full: bias-corrected first/second moments, direction m_hat / (sqrt(v_hat) + eps).
    """
    kind = as_kind(kind)
    grad = linalg.as_matrix(grad, "gradient")
    zeros = np.zeros_like(grad)
    buf = zeros if state.buffer is None else state.buffer
    t = state.step + 1
    if kind.name == "muon_momentum":
        buf = kind.momentum * buf + grad
        direction = linalg.orthogonal_factor_exact(buf, kind.rank_tolerance, kind.svd_method)
        return MomentumState(buf, None, t), direction
    if kind.name == "adam_full":
        sec = zeros if state.second is None else state.second
        buf = kind.beta1 * buf + (1.0 - kind.beta1) * grad
        sec = kind.beta2 * sec + (1.0 - kind.beta2) * grad * grad
        m_hat = buf / (1.0 - kind.beta1**t)
        v_hat = sec / (1.0 - kind.beta2**t)
        return MomentumState(buf, sec, t), m_hat / (np.sqrt(v_hat) + kind.adam_eps)
    raise ValueError(f"{kind.name} keeps no state; use update_direction")


def one_step(problem: MemoryProblem, w0: np.ndarray, kind, eta: float) -> np.ndarray:
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    return w0 - eta * update_direction(kind, gradient(problem, w0))


class StepLine:
    """Correct-class probabilities along ``W(eta) = w0 - eta * D``.

    Logits are affine in eta, so both logit matrices are formed once and
    each evaluation costs O(K^2).
    """

    def __init__(self, problem: MemoryProblem, w0: np.ndarray, kind):
        self.problem = problem
        self.w0 = np.asarray(w0, dtype=np.float64)
        self.direction = update_direction(kind, gradient(problem, self.w0))
        self._base = logits(problem, self.w0)
        self._slope = -logits(problem, self.direction)

    def correct(self, eta: float) -> np.ndarray:
        return correct_from_logits(self._base + eta * self._slope)

    def max_min(self, eta: float) -> tuple[float, float]:
        c = self.correct(eta)
        return float(c.max()), float(c.min())

    def weights(self, eta: float) -> np.ndarray:
        return self.w0 - eta * self.direction


def _eta_star(line: StepLine, eps: float, decades: int = 3) -> tuple[float, bool]:
    """Smallest feasible eta and whether the feasible set looks like an interval."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    target = 1.0 - eps

    def feasible(eta):
        return line.max_min(eta)[0] >= target

    if feasible(0.0):
        return 0.0, True
    hi = 1e-6
    while not feasible(hi):
        hi *= 2.0
        if hi > ETA_CEILING:
            raise ValueError(f"target unreachable: max correct probability stays below {target} for eta <= {ETA_CEILING:g}")
    # grid guard: look for an earlier feasible point the doubling may have skipped,
    # and check that feasibility persists for `decades` decades past it
    n_grid = GRID_POINTS_PER_DECADE * (3 + decades)
    grid = hi * np.logspace(-3, decades, n_grid + 1)
    flags = np.array([feasible(x) for x in grid])
    first = int(np.argmax(flags))
    interval = bool(flags[first:].all())
    if first > 0 and grid[first] < hi:
        lo, hi = float(grid[first - 1]), float(grid[first])
    else:
        lo = hi / 2.0
    while hi - lo > 1e-10 * hi:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi, interval


def min_eta_for_target(problem: MemoryProblem, w0: np.ndarray, kind, eps: float) -> float:
    """Smallest step size at which some fact reaches correct probability 1 - eps."""
    eta, interval = _eta_star(StepLine(problem, w0, kind), eps)
    if not interval:
        warnings.warn("feasible step sizes do not form an interval on the scan grid", RuntimeWarning)
    return eta


@dataclass(frozen=True)
class RhoScan:
    rho: float
    rho_at_eta_star: float
    eta_star: float
    eta_argmin: float
    feasible_interval: bool


def rho_scan(problem: MemoryProblem, w0: np.ndarray, kind, eps: float, eta_grid_decades: int = 3) -> RhoScan:
    line = StepLine(problem, w0, kind)
    eta_star, interval = _eta_star(line, eps, eta_grid_decades)
    at_star = line.max_min(eta_star)[1]
    best, best_eta = at_star, eta_star
    if eta_star > 0:
        grid = eta_star * np.logspace(0, eta_grid_decades, GRID_POINTS_PER_DECADE * eta_grid_decades + 1)
        for eta in grid[1:]:
            mx, mn = line.max_min(eta)
            if mx >= 1.0 - eps and mn < best:
                best, best_eta = mn, float(eta)
    return RhoScan(best, at_star, eta_star, best_eta, interval)


def rho_one_step(problem: MemoryProblem, w0: np.ndarray, kind, eps: float, eta_grid_decades: int = 3) -> float:
    """Worst correct probability over step sizes where the best fact reaches 1 - eps."""
    return rho_scan(problem, w0, kind, eps, eta_grid_decades).rho


@dataclass(frozen=True)
class Schedule:
    etas: tuple

    def __post_init__(self):
        if len(self.etas) == 0:
            raise ValueError("schedule must contain at least one step")
        for i, eta in enumerate(self.etas):
            if not math.isfinite(eta) or eta < 0:
                raise ValueError(f"schedule entry {i} is not a finite nonnegative step size: {eta}")

    @classmethod
    def constant(cls, eta: float, steps: int) -> "Schedule":
        return cls(tuple([float(eta)] * int(steps)))

    def __len__(self):
        return len(self.etas)


@dataclass
class TrajectoryRecord:
    step: int
    eta: float
    loss: float
    delta: float
    min_prob: float
    max_prob: float
    update_spectrum: Optional[np.ndarray] = None
    degenerate: bool = False
    w: Optional[np.ndarray] = field(default=None, repr=False)


def _record(problem, w, z, step, eta, spectrum=None, degenerate=False, keep_w=False) -> TrajectoryRecord:
    if not np.isfinite(w).all():
        raise FloatingPointError(f"non-finite weights at step {step}")
    c = correct_from_logits(z)
    mx, mn = float(c.max()), float(c.min())
    return TrajectoryRecord(
        step=step,
        eta=eta,
        loss=loss_from_logits(problem, z),
        delta=mx - mn,
        min_prob=mn,
        max_prob=mx,
        update_spectrum=spectrum,
        degenerate=degenerate,
        w=w.copy() if keep_w else None,
    )


def multi_step(
    problem: MemoryProblem,
    w0: np.ndarray,
    kind,
    schedule: Schedule,
    record_spectrum: bool = False,
    keep_weights: bool = False,
) -> list[TrajectoryRecord]:
    """Iterate ``W_t = W_{t-1} - eta_t * D_t``; record 0 is the initial state."""
    kind = as_kind(kind)
    if not isinstance(schedule, Schedule):
        schedule = Schedule(tuple(schedule))
    w = np.array(w0, dtype=np.float64, copy=True)
    # logits of the current iterate serve both its record and the next gradient
    z = logits(problem, w)
    records = [_record(problem, w, z, 0, 0.0, keep_w=keep_weights)]
    state = MomentumState()
    for t, eta in enumerate(schedule.etas, start=1):
        grad = gradient_from_logits(problem, z)
        if not np.isfinite(grad).all():
            raise FloatingPointError(f"non-finite gradient at step {t}")
        if kind.name in STATEFUL_KINDS:
            state, direction = momentum_update(state, kind, grad)
        else:
            direction = update_direction(kind, grad)
        degenerate = not direction.any()
        spectrum = linalg.singular_spectrum(direction) if record_spectrum else None
        w = w - eta * direction
        z = logits(problem, w)
        records.append(_record(problem, w, z, t, eta, spectrum, degenerate, keep_weights))
    return records


def rho_trajectory(records: Sequence[TrajectoryRecord], eps: float) -> float:
    """Infimum of the worst correct probability over steps where the best reaches 1 - eps."""
    if not records:
        raise ValueError("records must be nonempty")
    qualifying = [r.min_prob for r in records if r.max_prob >= 1.0 - eps]
    if not qualifying:
        raise ValueError(f"condition never met: no step has max correct probability >= {1.0 - eps}")
    return min(qualifying)


def first_reaching(records: Sequence[TrajectoryRecord], target: float) -> Optional[TrajectoryRecord]:
    return next((r for r in records if r.max_prob >= target), None)


def with_options(kind, **changes) -> OptimizerKind:
    return replace(as_kind(kind), **changes)
