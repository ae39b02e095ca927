"""Experiment configuration.

Configs are flat JSON objects; unknown keys are rejected so typos surface as
config errors instead of silently falling back to defaults.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from ..basis import UnitaryBasis, dft_matrix, make_basis, random_unitary
from ..group_model import GroupPartition
from ..solver import SolverConfig

EXPERIMENTS = ("phase_transition", "gric_curve", "adversarial_dcs", "bounds_table")
BASES = ("identity", "dft", "composite_dft", "composite_identity", "random")
MODES = ("independent", "shared")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "phase_transition"
    d: int = 16
    L: int = 4
    m_grid: tuple[int, ...] = (4, 8, 12, 16)
    s_grid: tuple[int, ...] = (1, 2, 3)
    partition: str = "contiguous"  # contiguous | interleaved | singletons
    group_size: int = 4
    basis: str = "dft"
    bases: tuple[str, ...] = ()  # bounds_table only; defaults to (basis,)
    family: str = "gaussian"
    mode: str = "independent"
    modes: tuple[str, ...] = ()  # gric_curve / bounds_table; defaults to (mode,)
    trials: int = 100
    seed: int = 0
    noise_level: float = 0.0
    success_threshold: float = 1e-4
    transition_rate: float = 0.95
    signal_placement: str = "uniform"  # uniform | single_block
    amplitude_model: str = "unit_norm_gaussian"
    gric_mode: str = "exact_enumeration"
    gric_trials: int = 0
    delta: float = 0.5
    eta: float = 0.01
    c_const: float = 1.0
    max_iters: int = 5000
    abs_tol: float = 1e-8
    rel_tol: float = 1e-6
    out: str | None = None
    figures: bool = True

    @property
    def D(self) -> int:
        return self.d * self.L

    def __post_init__(self):
        for name in ("m_grid", "s_grid", "bases", "modes"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        err = ConfigError
        if self.experiment not in EXPERIMENTS:
            raise err(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.d < 1 or self.L < 1:
            raise err("d and L must be positive")
        if not self.m_grid or not self.s_grid:
            raise err("m_grid and s_grid must be nonempty")
        if any(m < 1 for m in self.m_grid):
            raise err("every m must be positive")
        if self.trials < 0 or (self.trials == 0 and self.experiment != "bounds_table"):
            raise err("trials must be positive")
        for b in self.bases or (self.basis,):
            if b not in BASES:
                raise err(f"basis must be one of {BASES}, got {b!r}")
        for md in self.modes or (self.mode,):
            if md not in MODES:
                raise err(f"mode must be one of {MODES}, got {md!r}")
        if self.family not in ("gaussian", "rademacher"):
            raise err(f"unknown family {self.family!r}")
        if self.partition not in ("contiguous", "interleaved", "singletons"):
            raise err(f"unknown partition {self.partition!r}")
        if self.partition == "contiguous" and (self.group_size < 1 or self.D % self.group_size):
            raise err(f"group_size {self.group_size} must divide D={self.D}")
        G = self.make_partition().num_groups
        if any(not 1 <= s <= G for s in self.s_grid):
            raise err(f"every s must lie in [1, G={G}]")
        if self.signal_placement not in ("uniform", "single_block"):
            raise err(f"unknown signal placement {self.signal_placement!r}")
        if self.signal_placement == "single_block":
            if self.partition != "contiguous" or self.d % self.group_size:
                raise err("single_block placement needs contiguous groups aligned with sensor blocks")
            if max(self.s_grid) > self.d // self.group_size:
                raise err("single_block placement needs s <= groups per sensor block")
        if self.noise_level < 0:
            raise err("noise_level must be nonnegative")
        if not 0 < self.success_threshold:
            raise err("success_threshold must be positive")
        if self.experiment == "adversarial_dcs":
            if self.partition != "interleaved":
                raise err("adversarial_dcs requires the interleaved partition")
            if self.basis not in ("composite_dft", "composite_identity"):
                raise err("adversarial_dcs requires a block-diagonal composite basis")
            if self.mode != "independent":
                raise err("adversarial_dcs uses independent blocks")
            if any(s > self.d for s in self.s_grid):
                raise err("per-sensor sparsity cannot exceed d")
        if self.gric_mode not in ("exact_enumeration", "monte_carlo"):
            raise err(f"unknown gric_mode {self.gric_mode!r}")
        if not 0 < self.delta < 1 or not 0 < self.eta < 1:
            raise err("delta and eta must lie in (0, 1)")

    def make_partition(self) -> GroupPartition:
        if self.partition == "interleaved":
            return GroupPartition.interleaved(self.d, self.L)
        if self.partition == "singletons":
            return GroupPartition.singletons(self.D)
        return GroupPartition.contiguous(self.D, self.group_size)

    def make_basis(self, kind: str | None = None) -> UnitaryBasis:
        kind = kind or self.basis
        if kind in ("identity", "dft"):
            return make_basis(kind, self.D, self.L)
        if kind == "composite_dft":
            return make_basis("block_diagonal_composite", self.D, self.L, dft_matrix(self.d))
        if kind == "composite_identity":
            return make_basis("block_diagonal_composite", self.D, self.L, np.eye(self.d, dtype=complex))
        return random_unitary(self.D, self.L, self.seed)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(max_iters=self.max_iters, abs_tol=self.abs_tol, rel_tol=self.rel_tol)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        try:
            return replace(self, **kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            obj = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(obj)

