"""Experiment configuration: JSON document plus CLI overrides."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from ..embeddings import KINDS as EMBEDDING_KINDS
from ..optim import KINDS as OPTIMIZER_KINDS

EXPERIMENTS = ("onestep", "multistep", "oracle", "spectra")
EMBEDDING_ALIASES = {"coupled": "coupled_rotation", "random": "random_orthonormal"}


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    experiment: str = "onestep"
    k: int = 99
    l: int = 20
    alpha: float = 0.8
    distribution: str = "two_class"
    m: int = 6
    n_qa: int = 6
    embeddings: list = field(default_factory=lambda: ["identity"])
    optimizer: list = field(default_factory=lambda: ["gd"])
    momentum: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0
    ns_iterations: int = 24
    eps: float = 0.1
    eta: Optional[float] = None
    steps: Optional[int] = None
    schedule: Optional[list] = None
    seeds: list = field(default_factory=lambda: [0])
    grid_decades: int = 3
    sweep_points_per_decade: int = 16
    record_spectrum: bool = True
    workers: int = 1
    input: Optional[str] = None
    out: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known - {"preset"})
        if unknown:
            raise ConfigError(unknown[0], "unknown configuration key")
        cfg = cls()
        if doc.get("preset"):
            cfg = preset(doc["preset"])
        for key, val in doc.items():
            if key != "preset":
                setattr(cfg, key, val)
        return cfg.normalized()

    def normalized(self) -> "ExperimentConfig":
        """Coerce list-valued fields and validate every field."""
        self.embeddings = [EMBEDDING_ALIASES.get(x, x) for x in _as_list(self.embeddings)]
        self.optimizer = _as_list(self.optimizer)
        self.seeds = [int(s) for s in _as_list(self.seeds)]
        if self.schedule is not None:
            self.schedule = [float(x) for x in _as_list(self.schedule)]
        self.validate()
        return self

    @property
    def k_effective(self) -> int:
        return 2**self.m if self.distribution == "power_law" else self.k

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment", f"must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.experiment in ("oracle", "spectra"):
            if self.experiment == "spectra" and not self.input:
                raise ConfigError("input", "spectra needs a matrix dump via --input")
            return
        if self.distribution not in ("two_class", "power_law"):
            raise ConfigError("distribution", "must be 'two_class' or 'power_law'")
        if self.distribution == "two_class":
            if int(self.k) != self.k or self.k < 2:
                raise ConfigError("k", f"must be an integer >= 2, got {self.k}")
            if not 1 <= self.l < self.k:
                raise ConfigError("l", f"must satisfy 1 <= l < k, got l={self.l}, k={self.k}")
            if not 0.0 < self.alpha < 1.0:
                raise ConfigError("alpha", f"must lie in (0, 1), got {self.alpha}")
        elif self.m < 1 or self.n_qa < 1:
            raise ConfigError("m", "power_law needs m >= 1 and n_qa >= 1")
        for emb in self.embeddings:
            if emb not in EMBEDDING_KINDS:
                raise ConfigError("embeddings", f"unknown kind {emb!r}; expected one of {EMBEDDING_KINDS}")
            if emb == "coupled_rotation" and self.k_effective % 3:
                raise ConfigError("embeddings", f"coupled embeddings need k divisible by 3, got k={self.k_effective}")
        if not self.embeddings:
            raise ConfigError("embeddings", "at least one embedding kind is required")
        for opt in self.optimizer:
            if opt not in OPTIMIZER_KINDS:
                raise ConfigError("optimizer", f"unknown optimizer {opt!r}; expected one of {OPTIMIZER_KINDS}")
        if not self.optimizer:
            raise ConfigError("optimizer", "at least one optimizer is required")
        for name in ("momentum", "beta1", "beta2"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(name, "must lie in [0, 1)")
        if not 0.0 < self.eps < 1.0:
            raise ConfigError("eps", f"must lie in (0, 1), got {self.eps}")
        if not self.seeds:
            raise ConfigError("seeds", "at least one seed is required")
        if self.grid_decades < 1:
            raise ConfigError("grid_decades", "must be a positive integer")
        if self.workers < 1:
            raise ConfigError("workers", "must be a positive integer")
        if self.experiment == "multistep":
            if self.schedule is not None:
                if not self.schedule:
                    raise ConfigError("schedule", "schedule is empty")
                if any(not (x >= 0.0) or x == float("inf") for x in self.schedule):
                    raise ConfigError("schedule", "step sizes must be finite and nonnegative")
            else:
                if self.eta is None or self.steps is None:
                    raise ConfigError("schedule", "multistep needs --eta and --steps or an explicit schedule")
                if self.steps < 1:
                    raise ConfigError("steps", "schedule is empty (steps must be >= 1)")
                if not self.eta >= 0.0:
                    raise ConfigError("eta", "must be nonnegative")

    def etas(self) -> list:
        if self.schedule is not None:
            return list(self.schedule)
        return [float(self.eta)] * int(self.steps)


def _as_list(val) -> list:
    if val is None:
        return []
    if isinstance(val, str):
        return [x.strip() for x in val.split(",") if x.strip()]
    if isinstance(val, (list, tuple)):
        return list(val)
    return [val]


PRESETS = {
    # K = 999 with a head of ~20% holding 80% of the mass
    "toy-one-step": dict(
        experiment="onestep",
        k=999,
        l=199,
        alpha=0.8,
        eps=0.1,
        embeddings=["identity", "coupled_rotation"],
        optimizer=["gd", "sign_gd", "muon_exact"],
    ),
    "toy-multi-step": dict(
        experiment="multistep",
        k=999,
        l=199,
        alpha=0.8,
        eps=0.1,
        embeddings=["identity", "coupled_rotation"],
        optimizer=["muon_exact"],
        eta=0.5,
        steps=50,
        record_spectrum=False,
    ),
    "toy-multi-step-gd": dict(
        experiment="multistep",
        k=999,
        l=199,
        alpha=0.8,
        eps=0.1,
        embeddings=["identity", "coupled_rotation"],
        optimizer=["gd"],
        eta=100.0,
        steps=50,
        record_spectrum=False,
    ),
    "oracle": dict(experiment="oracle"),
}


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    cfg = ExperimentConfig()
    for key, val in PRESETS[name].items():
        setattr(cfg, key, list(val) if isinstance(val, list) else val)
    return cfg


def load_config(path: Optional[str], overrides: dict) -> ExperimentConfig:
    """Read a JSON config (optional) and apply non-None overrides on top."""
    doc: dict = {}
    if path:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config", "top-level JSON value must be an object")
    if overrides.get("preset"):
        doc["preset"] = overrides["preset"]
    doc.update({k: v for k, v in overrides.items() if v is not None and k != "preset"})
    return ExperimentConfig.from_dict(doc)
