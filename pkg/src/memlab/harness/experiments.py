"""Experiment orchestration: one-step sweeps, trajectories, oracle suite, spectra."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .. import linalg, spectra
from ..distributions import power_law_distribution, two_class_distribution
from ..embeddings import make_embeddings
from ..model import MemoryProblem, correct_from_logits, logits, loss
from ..optim import OptimizerKind, Schedule, StepLine, first_reaching, multi_step, rho_scan, rho_trajectory
from .checks import run_checks
from .config import ExperimentConfig
from .io import load_matrices, make_row

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_IO = 0, 1, 2, 3


class ExperimentError(RuntimeError):
    """A cell could not produce its result (e.g. target probability unreachable)."""


@dataclass
class RunResult:
    rows: list
    status: int = EXIT_OK
    summary: list = field(default_factory=list)


def build_problem(cfg: ExperimentConfig, kind: str, seed: int) -> MemoryProblem:
    if cfg.distribution == "power_law":
        dist = power_law_distribution(cfg.m, cfg.n_qa)
    else:
        dist = two_class_distribution(cfg.k, cfg.l, cfg.alpha)
    return MemoryProblem(make_embeddings(kind, dist.k, seed), dist)


def optimizer_kind(cfg: ExperimentConfig, name: str) -> OptimizerKind:
    return OptimizerKind(name, momentum=cfg.momentum, beta1=cfg.beta1, beta2=cfg.beta2, ns_iterations=cfg.ns_iterations)


def _metric_cols(sigma) -> dict:
    try:
        m = spectra.spectrum_metrics(sigma, top_k=(10,))
    except ValueError:
        return {}
    return {"h_norm": m.h_norm, "erank": m.erank, "top10e": m.top_e[10], "q_ratio": m.q_ratio}


def _state_cols(problem: MemoryProblem, w: np.ndarray) -> dict:
    c = correct_from_logits(logits(problem, w))
    return {
        "loss": loss(problem, w),
        "delta": float(c.max() - c.min()),
        "min_prob": float(c.min()),
        "max_prob": float(c.max()),
    }


def _cells(cfg: ExperimentConfig):
    return list(product(cfg.seeds, cfg.optimizer, cfg.embeddings))


def _onestep_cell(cfg: ExperimentConfig, seed: int, opt: str, emb: str) -> list:
    problem = build_problem(cfg, emb, seed)
    w0 = problem.zeros()
    kind = optimizer_kind(cfg, opt)
    try:
        scan = rho_scan(problem, w0, kind, cfg.eps, cfg.grid_decades)
    except ValueError as exc:
        raise ExperimentError(f"onestep {opt}/{emb} seed {seed}: {exc}") from exc
    line = StepLine(problem, w0, kind)
    name = f"onestep:{opt}:{emb}"
    metrics = _metric_cols(linalg.singular_spectrum(line.direction))
    rows = [
        make_row(name, seed=seed, step=1, eta=scan.eta_star, rho=scan.rho_at_eta_star,
                 **_state_cols(problem, line.weights(scan.eta_star)), **metrics),
        make_row(name + ":inf", seed=seed, step=1, eta=scan.eta_argmin, rho=scan.rho,
                 **_state_cols(problem, line.weights(scan.eta_argmin))),
    ]
    if scan.eta_star > 0 and cfg.sweep_points_per_decade > 0:
        n = cfg.sweep_points_per_decade * (cfg.grid_decades + 2)
        for eta in scan.eta_star * np.logspace(-2, cfg.grid_decades, n + 1):
            rows.append(make_row(name + ":sweep", seed=seed, step=1, eta=eta, **_state_cols(problem, line.weights(eta))))
    return rows


def _multistep_cell(cfg: ExperimentConfig, seed: int, opt: str, emb: str) -> list:
    problem = build_problem(cfg, emb, seed)
    try:
        records = multi_step(problem, problem.zeros(), optimizer_kind(cfg, opt), Schedule(tuple(cfg.etas())), cfg.record_spectrum)
    except (ValueError, FloatingPointError) as exc:
        raise ExperimentError(f"multistep {opt}/{emb} seed {seed}: {exc}") from exc
    name = f"multistep:{opt}:{emb}"
    rows = []
    for r in records:
        metrics = {} if r.update_spectrum is None or r.degenerate else _metric_cols(r.update_spectrum)
        rows.append(make_row(name, seed=seed, step=r.step, eta=r.eta, loss=r.loss, delta=r.delta,
                             min_prob=r.min_prob, max_prob=r.max_prob, **metrics))
    first = first_reaching(records, 1.0 - cfg.eps)
    if first is not None:
        rows.append(make_row(name + ":rho", seed=seed, step=first.step, eta=first.eta, loss=first.loss,
                             delta=first.delta, min_prob=first.min_prob, max_prob=first.max_prob,
                             rho=rho_trajectory(records, cfg.eps)))
    return rows


def _map_cells(cfg: ExperimentConfig, fn) -> list:
    cells = _cells(cfg)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(lambda c: fn(cfg, *c), cells))
    else:
        chunks = [fn(cfg, *c) for c in cells]
    return [row for chunk in chunks for row in chunk]


def _summarize(rows: list, suffix: str) -> list:
    lines = []
    for row in rows:
        if row["experiment"].endswith(suffix):
            lines.append(f"{row['experiment']} seed={row['seed']} eta={row['eta']:.6g} "
                         f"min_prob={row['min_prob']:.6g} max_prob={row['max_prob']:.6g} rho={row['rho']:.6g}")
    return lines


def run(cfg: ExperimentConfig) -> RunResult:
    cfg.validate()
    if cfg.experiment == "onestep":
        rows = _map_cells(cfg, _onestep_cell)
        summary = _summarize([r for r in rows if r["rho"] is not None], "")
        return RunResult(rows, EXIT_OK, summary)
    if cfg.experiment == "multistep":
        rows = _map_cells(cfg, _multistep_cell)
        summary = _summarize(rows, ":rho")
        reached = {r["experiment"].removesuffix(":rho") + f"#{r['seed']}" for r in rows if r["experiment"].endswith(":rho")}
        for seed, opt, emb in _cells(cfg):
            if f"multistep:{opt}:{emb}#{seed}" not in reached:
                summary.append(f"multistep:{opt}:{emb} seed={seed} never reached {1.0 - cfg.eps:g}")
        return RunResult(rows, EXIT_OK, summary)
    if cfg.experiment == "oracle":
        results = run_checks()
        rows = [make_row(f"oracle:{r.name}") for r in results]
        summary = [f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.details}" for r in results]
        status = EXIT_OK if all(r.passed for r in results) else EXIT_CHECK
        return RunResult(rows, status, summary)
    if cfg.experiment == "spectra":
        mats = load_matrices(cfg.input)
        rows = []
        for i, mat in enumerate(mats):
            if not mat.any():
                rows.append(make_row("spectra", step=i))
                continue
            rows.append(make_row("spectra", step=i, **_metric_cols(linalg.singular_spectrum(mat))))
        return RunResult(rows, EXIT_OK, [f"spectra: {len(rows)} matrices from {cfg.input}"])
    raise AssertionError(cfg.experiment)
