"""Experiment drivers: phase transitions, GRIC curves, adversarial sensing, bound tables.

Each trial draws everything it needs from ``make_rng(seed, m, s, trial, ...)``,
so a cell's results do not depend on grid order or on how trials are spread
over worker processes.
"""
from __future__ import annotations

import io
import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .._rng import make_rng
from ..analysis import coherence_mu, coherence_omega, gric
from ..bounds import BoundInputs, dense_lower_bound, gamma2_entropy_estimate, measurement_bound
from ..group_model import GroupPartition, random_group_sparse
from ..sensing import SubgaussianEnsemble, draw_operator, measure
from ..solver import solve_group_qcbp
from .config import ExperimentConfig

BASE_COLUMNS = ["experiment", "seed", "D", "d", "L", "m", "s", "G", "g", "basis", "mode", "family", "trials"]
PHASE_COLUMNS = BASE_COLUMNS + ["success_rate", "mean_rel_err", "mean_iters"]
ADVERSARIAL_COLUMNS = PHASE_COLUMNS + ["scenario", "method"]
GRIC_COLUMNS = BASE_COLUMNS + ["delta_median", "delta_q1", "delta_q3", "delta_min", "delta_max"]
BOUNDS_COLUMNS = [
    "experiment", "seed", "D", "d", "L", "s", "G", "g", "basis", "mode", "family", "delta", "eta", "c_const",
    "mu", "omega", "kappa", "m_bound", "M_bound", "dense_lower_M", "gamma2_estimate", "m_star", "M_star",
]
TRIAL_COLUMNS = ["trial", "seed", "m", "s", "scenario", "method", "success", "rel_error", "residual", "iterations", "converged"]
_MODE_KEY = {"independent": 0, "shared": 1}
_SCENARIO_KEY = {"adversarial": 0, "control": 1}


@dataclass
class TrialRecord:
    trial: int
    seed: int
    m: int
    s: int
    success: bool
    rel_error: float
    residual: float
    iterations: int
    converged: bool = True
    wall_time: float = 0.0
    scenario: str = ""
    method: str = "joint"


@dataclass
class ExperimentResult:
    experiment: str
    columns: list[str]
    rows: list[dict]
    records: list[TrialRecord] = field(default_factory=list)

    def to_csv(self) -> str:
        return _csv(self.columns, self.rows)

    def trials_csv(self) -> str:
        return _csv(TRIAL_COLUMNS, [asdict(r) for r in self.records])


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def _map(fn, tasks, jobs: int):
    if jobs <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=8))


def _seed_from(rng) -> int:
    return int(rng.integers(0, 2**31))


def _draw_signal(cfg: ExperimentConfig, P: GroupPartition, s: int, rng) -> np.ndarray:
    if cfg.signal_placement == "uniform":
        return random_group_sparse(P, s, 0, cfg.amplitude_model, rng=rng).values
    # all groups inside one sensor's coordinate block
    per_block = cfg.d // cfg.group_size
    l = int(rng.integers(cfg.L))
    groups = l * per_block + np.sort(rng.choice(per_block, size=s, replace=False))
    idx = P.indices(groups)
    x = np.zeros(P.ambient_dim, dtype=complex)
    if cfg.amplitude_model == "rademacher":
        x[idx] = rng.choice([-1.0, 1.0], size=idx.size)
    else:
        x[idx] = rng.standard_normal(idx.size) + 1j * rng.standard_normal(idx.size)
    return x / np.linalg.norm(x)


def recovery_trial(args) -> TrialRecord:
    """One (operator, signal, noise) draw and group-l1 recovery."""
    cfg, basis_kind, mode, m, s, t = args
    basis = cfg.make_basis(basis_kind)
    P = cfg.make_partition()
    rng = make_rng(cfg.seed, m, s, t, _MODE_KEY[mode])
    op = draw_operator(SubgaussianEnsemble(cfg.family, _seed_from(rng)), m, cfg.d, cfg.L, mode, basis)
    x = _draw_signal(cfg, P, s, rng)
    y, _ = measure(op, x, cfg.noise_level, _seed_from(rng))
    start = time.perf_counter()
    res = solve_group_qcbp(op, y, cfg.noise_level, P, cfg.solver_config())
    elapsed = time.perf_counter() - start
    rel = float(np.linalg.norm(res.estimate - x) / np.linalg.norm(x))
    return TrialRecord(
        trial=t,
        seed=cfg.seed,
        m=m,
        s=s,
        success=bool(res.converged and rel <= cfg.success_threshold),
        rel_error=rel,
        residual=res.residual,
        iterations=res.iterations,
        converged=res.converged,
        wall_time=elapsed,
    )


def _summary_row(cfg, experiment, basis, mode, m, s, P, recs) -> dict:
    return {
        "experiment": experiment,
        "seed": cfg.seed,
        "D": cfg.D,
        "d": cfg.d,
        "L": cfg.L,
        "m": m,
        "s": s,
        "G": P.num_groups,
        "g": P.max_group_size,
        "basis": basis,
        "mode": mode,
        "family": cfg.family,
        "trials": len(recs),
        "success_rate": float(np.mean([r.success for r in recs])),
        "mean_rel_err": float(np.mean([r.rel_error for r in recs])),
        "mean_iters": float(np.mean([r.iterations for r in recs])),
    }


def run_phase_transition(cfg: ExperimentConfig, jobs: int = 1, basis_kind: str | None = None, mode: str | None = None) -> ExperimentResult:
    """Success rate of group-l1 recovery over the ``(m, s)`` grid."""
    basis_kind = basis_kind or cfg.basis
    mode = mode or cfg.mode
    P = cfg.make_partition()
    tasks = [(cfg, basis_kind, mode, m, s, t) for m in cfg.m_grid for s in cfg.s_grid for t in range(cfg.trials)]
    records = _map(recovery_trial, tasks, jobs)
    records.sort(key=lambda r: (r.m, r.s, r.trial))
    rows = []
    for m in cfg.m_grid:
        for s in cfg.s_grid:
            recs = [r for r in records if r.m == m and r.s == s]
            rows.append(_summary_row(cfg, "phase_transition", basis_kind, mode, m, s, P, recs))
    return ExperimentResult("phase_transition", PHASE_COLUMNS, rows, records)


def _dcs_signal(cfg, s, scenario, rng) -> np.ndarray:
    d, L = cfg.d, cfg.L
    x = np.zeros(cfg.D, dtype=complex)
    if scenario == "adversarial":
        # one sensor carries an s-sparse block; every other block is zero
        l = int(rng.integers(L))
        idx = l * d + np.sort(rng.choice(d, size=s, replace=False))
    else:
        # common support across all sensors, independent amplitudes
        support = np.sort(rng.choice(d, size=s, replace=False))
        idx = (np.arange(L)[:, None] * d + support[None, :]).ravel()
    x[idx] = rng.standard_normal(idx.size) + 1j * rng.standard_normal(idx.size)
    return x / np.linalg.norm(x)


def _dcs_basis(cfg, scenario) -> str:
    # the spread-energy control always runs in the DFT composite basis
    return "composite_dft" if scenario == "control" else cfg.basis


def dcs_trial(args) -> list[TrialRecord]:
    """Joint group recovery vs one l1 program per sensor on the same draw."""
    cfg, m, s, t, scenario = args
    basis = cfg.make_basis(_dcs_basis(cfg, scenario))
    P = cfg.make_partition()
    rng = make_rng(cfg.seed, m, s, t, _SCENARIO_KEY[scenario])
    op = draw_operator(SubgaussianEnsemble(cfg.family, _seed_from(rng)), m, cfg.d, cfg.L, "independent", basis)
    x = _dcs_signal(cfg, s, scenario, rng)
    y, _ = measure(op, x, cfg.noise_level, _seed_from(rng))
    eps = cfg.noise_level
    scfg = cfg.solver_config()
    out = []

    joint = solve_group_qcbp(op, y, eps, P, scfg)
    rel = float(np.linalg.norm(joint.estimate - x) / np.linalg.norm(x))
    out.append(TrialRecord(t, cfg.seed, m, s, bool(joint.converged and rel <= cfg.success_threshold), rel,
                           joint.residual, joint.iterations, joint.converged, scenario=scenario, method="joint"))

    singles = GroupPartition.singletons(cfg.d)
    sub = basis.payload
    est = np.zeros(cfg.D, dtype=complex)
    iters, conv = 0, True
    for l in range(cfg.L):
        A_l = op.scale * op.block(l) @ sub
        res = solve_group_qcbp(A_l, y[l * m:(l + 1) * m], eps, singles, scfg)
        est[l * cfg.d:(l + 1) * cfg.d] = res.estimate
        iters = max(iters, res.iterations)
        conv = conv and res.converged
    rel = float(np.linalg.norm(est - x) / np.linalg.norm(x))
    out.append(TrialRecord(t, cfg.seed, m, s, bool(conv and rel <= cfg.success_threshold), rel,
                           float(np.linalg.norm(op.apply(est) - y)), iters, conv, scenario=scenario, method="per_sensor"))
    return out


def run_adversarial_dcs(cfg: ExperimentConfig, jobs: int = 1, scenarios=("adversarial", "control")) -> ExperimentResult:
    """Joint vs per-sensor recovery on the interleaved partition.

    ``adversarial`` puts all energy in one sensor's block; ``control``
    spreads a common support over every sensor.
    """
    P = cfg.make_partition()
    tasks = [(cfg, m, s, t, sc) for sc in scenarios for m in cfg.m_grid for s in cfg.s_grid for t in range(cfg.trials)]
    records = [r for batch in _map(dcs_trial, tasks, jobs) for r in batch]
    rows = []
    for sc in scenarios:
        for m in cfg.m_grid:
            for s in cfg.s_grid:
                for method in ("joint", "per_sensor"):
                    recs = [r for r in records if (r.scenario, r.m, r.s, r.method) == (sc, m, s, method)]
                    row = _summary_row(cfg, "adversarial_dcs", _dcs_basis(cfg, sc), "independent", m, s, P, recs)
                    row.update(scenario=sc, method=method)
                    rows.append(row)
    records.sort(key=lambda r: (_SCENARIO_KEY[r.scenario], r.m, r.s, r.trial, r.method))
    return ExperimentResult("adversarial_dcs", ADVERSARIAL_COLUMNS, rows, records)


def gric_trial(args) -> float:
    cfg, mode, m, s, t = args
    basis = cfg.make_basis()
    rng = make_rng(cfg.seed, m, s, t, _MODE_KEY[mode])
    op = draw_operator(SubgaussianEnsemble(cfg.family, _seed_from(rng)), m, cfg.d, cfg.L, mode, basis)
    est = gric(op, cfg.make_partition(), s, mode=cfg.gric_mode, trials=cfg.gric_trials,
               seed=_seed_from(rng), keep_extremes=False)
    return est.delta


def run_gric_curve(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Median and quartiles of the GRIC over operator draws, per ``m``."""
    P = cfg.make_partition()
    modes = cfg.modes or (cfg.mode,)
    rows = []
    for mode in modes:
        for m in cfg.m_grid:
            for s in cfg.s_grid:
                deltas = np.array(_map(gric_trial, [(cfg, mode, m, s, t) for t in range(cfg.trials)], jobs))
                q1, med, q3 = np.quantile(deltas, [0.25, 0.5, 0.75])
                rows.append({
                    "experiment": "gric_curve", "seed": cfg.seed, "D": cfg.D, "d": cfg.d, "L": cfg.L, "m": m, "s": s,
                    "G": P.num_groups, "g": P.max_group_size, "basis": cfg.basis, "mode": mode,
                    "family": cfg.family, "trials": cfg.trials, "delta_median": med, "delta_q1": q1,
                    "delta_q3": q3, "delta_min": deltas.min(), "delta_max": deltas.max(),
                })
    return ExperimentResult("gric_curve", GRIC_COLUMNS, rows)


def empirical_transition(rows: list[dict], rate: float) -> int | None:
    """Smallest ``m`` whose success rate reaches ``rate``."""
    hits = [r["m"] for r in rows if r["success_rate"] >= rate]
    return min(hits) if hits else None


def run_bounds_table(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Predicted measurement counts next to the dense lower bound and observed transitions."""
    P = cfg.make_partition()
    G, g = P.num_groups, P.max_group_size
    rows = []
    for basis_kind in cfg.bases or (cfg.basis,):
        basis = cfg.make_basis(basis_kind)
        coh = coherence_omega(basis, P)
        for mode in cfg.modes or (cfg.mode,):
            variant = "independent_thm2" if mode == "independent" else "shared_thm3"
            kappa = coh.mu if mode == "independent" else coh.omega
            observed = None
            if cfg.trials > 0:
                observed = run_phase_transition(cfg, jobs, basis_kind=basis_kind, mode=mode).rows
            for s in cfg.s_grid:
                inputs = BoundInputs(s=s, G=G, g=g, D=cfg.D, d=cfg.d, L=cfg.L, delta=cfg.delta, eta=cfg.eta,
                                     mu=coh.mu, omega=coh.omega, c_const=cfg.c_const)
                m_bound = measurement_bound(inputs, variant)
                m_star = None
                if observed is not None:
                    m_star = empirical_transition([r for r in observed if r["s"] == s], cfg.transition_rate)
                rows.append({
                    "experiment": "bounds_table", "seed": cfg.seed, "D": cfg.D, "d": cfg.d, "L": cfg.L, "s": s,
                    "G": G, "g": g, "basis": basis_kind, "mode": mode, "family": cfg.family, "delta": cfg.delta,
                    "eta": cfg.eta, "c_const": cfg.c_const, "mu": coh.mu, "omega": coh.omega, "kappa": kappa,
                    "m_bound": m_bound, "M_bound": m_bound * cfg.L, "dense_lower_M": dense_lower_bound(s, G, g),
                    "gamma2_estimate": gamma2_entropy_estimate(kappa, s, cfg.D, G, g),
                    "m_star": m_star, "M_star": None if m_star is None else m_star * cfg.L,
                })
    return ExperimentResult("bounds_table", BOUNDS_COLUMNS, rows)


RUNNERS = {
    "phase_transition": run_phase_transition,
    "gric_curve": run_gric_curve,
    "adversarial_dcs": run_adversarial_dcs,
    "bounds_table": run_bounds_table,
}


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    return RUNNERS[cfg.experiment](cfg, jobs)


def write_outputs(result: ExperimentResult, out, figures: bool = True) -> list[Path]:
    """Write the summary CSV, the per-trial CSV (if any) and a PNG figure next to it."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(result.to_csv())
    written = [out]
    if result.records:
        trials = out.with_name(out.stem + "_trials.csv")
        trials.write_text(result.trials_csv())
        written.append(trials)
    if figures:
        from .plotting import render

        written.append(render(result, out.with_suffix(".png")))
    return written
