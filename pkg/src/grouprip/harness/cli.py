"""Command-line interface.

Exit codes: 0 on success, 2 on configuration or input errors, 3 when a
single-shot ``recover`` run does not converge.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .. import analysis, bounds
from ..basis import make_basis
from ..group_model import GroupPartition, group_norm, random_group_sparse
from ..sensing import SubgaussianEnsemble, draw_operator, measure
from ..solver import SolverConfig, recovery_error_bound, solve_group_qcbp
from . import io as gio
from .config import BASES, ConfigError, ExperimentConfig
from .experiments import run_experiment, write_outputs

EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3


def _emit(obj, out=None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _kv(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


# -- partitions, bases, operators ------------------------------------------------

def _partition_from_args(a, D: int, d: int | None = None, L: int | None = None) -> GroupPartition:
    if getattr(a, "partition_file", None):
        try:
            return GroupPartition.from_json(Path(a.partition_file).read_text())
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot load partition: {exc}") from None
    kind = getattr(a, "partition", "contiguous")
    if kind == "interleaved":
        return GroupPartition.interleaved(d, L)
    if kind == "singletons":
        return GroupPartition.singletons(D)
    return GroupPartition.contiguous(D, a.group_size)


def _basis(kind: str, d: int, L: int, seed: int):
    cfg = ExperimentConfig(d=d, L=L, basis=kind, seed=seed, group_size=1, s_grid=(1,))
    return cfg.make_basis()


def _operator_from_args(a):
    if a.operator:
        return gio.load_operator(a.operator)
    basis = _basis(a.basis, a.d, a.L, a.seed)
    return draw_operator(SubgaussianEnsemble(a.family, a.seed), a.m, a.d, a.L, a.mode, basis)


def _add_operator_flags(p):
    p.add_argument("--operator", help="directory written by save_operator; overrides the draw flags")
    p.add_argument("--m", type=int, default=8)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--L", type=int, default=2)
    p.add_argument("--basis", choices=BASES, default="dft")
    p.add_argument("--mode", choices=("independent", "shared"), default="independent")
    p.add_argument("--family", choices=("gaussian", "rademacher"), default="gaussian")


def _add_partition_flags(p):
    p.add_argument("--partition", choices=("contiguous", "interleaved", "singletons"), default="contiguous")
    p.add_argument("--group-size", type=int, default=2)
    p.add_argument("--partition-file", help="partition JSON from gen-partition")


def cmd_gen_partition(a):
    D = a.D if a.D is not None else a.d * a.L
    P = _partition_from_args(a, D, a.d, a.L)
    text = P.to_json()
    if a.out:
        Path(a.out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def cmd_gen_basis(a):
    basis = _basis(a.kind, a.d, a.L, a.seed)
    U = basis.matrix
    info = {
        "kind": a.kind,
        "D": basis.dim,
        "L": basis.sensors,
        "seed": a.seed,
        "unitarity_defect": float(np.max(np.abs(U.conj().T @ U - np.eye(basis.dim)))),
    }
    if a.out:
        gio.write_matrix(a.out, U)
        info["path"] = a.out
    _emit(info)


def cmd_gric(a):
    op = _operator_from_args(a)
    P = _partition_from_args(a, op.shape[1], op.d, op.L)
    est = analysis.gric(op, P, a.s, mode=a.gric_mode, trials=a.trials, seed=a.seed, keep_extremes=False)
    _emit(json.loads(est.to_json()), a.out)


def cmd_coherence(a):
    if a.basis_file:
        U = gio.read_matrix(a.basis_file)
        basis = make_basis("explicit", U.shape[0], a.L, U)
    else:
        basis = _basis(a.basis, a.d, a.L, a.seed)
    P = _partition_from_args(a, basis.dim, basis.block_dim, basis.sensors)
    rep = analysis.coherence_omega(basis, P)
    _emit(json.loads(rep.to_json()), a.out)


def cmd_recover(a):
    op = _operator_from_args(a)
    D = op.shape[1]
    P = _partition_from_args(a, D, op.d, op.L)
    truth = None
    if a.y:
        y = gio.read_vector(a.y)
    else:
        truth = random_group_sparse(P, a.s, a.seed).values
        y, _ = measure(op, truth, a.eps, a.seed + 1)
    cfg = SolverConfig(max_iters=a.max_iters, abs_tol=a.abs_tol, rel_tol=a.rel_tol)
    res = solve_group_qcbp(op, y, a.eps, P, cfg)
    report = {
        "objective": res.objective,
        "residual": res.residual,
        "iterations": res.iterations,
        "converged": res.converged,
        "eps": a.eps,
    }
    if truth is not None:
        report["rel_error"] = float(np.linalg.norm(res.estimate - truth) / np.linalg.norm(truth))
        report["truth_objective"] = group_norm(truth, P, 1)
    if a.estimate_out:
        gio.write_matrix(a.estimate_out, res.estimate)
    _emit(report, a.out)
    return 0 if res.converged else EXIT_NONCONVERGED


# -- experiments -------------------------------------------------------------------

_EXPERIMENT_OF = {
    "phase-transition": "phase_transition",
    "adversarial-dcs": "adversarial_dcs",
    "gric-curve": "gric_curve",
    "table": "bounds_table",
}


def _experiment_config(a, experiment: str) -> ExperimentConfig:
    obj = {}
    if a.config:
        try:
            obj = json.loads(Path(a.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {a.config}: {exc}") from None
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
    if obj.get("experiment", experiment) != experiment:
        raise ConfigError(f"config is for {obj['experiment']!r}, not {experiment!r}")
    obj["experiment"] = experiment
    for key, value in a.set or ():
        obj[key] = value
    for key in ("seed", "trials", "m_grid", "s_grid", "out"):
        value = getattr(a, key)
        if value is not None:
            obj[key] = value
    if a.no_figures:
        obj["figures"] = False
    return ExperimentConfig.from_dict(obj)


def cmd_experiment(a):
    cfg = _experiment_config(a, _EXPERIMENT_OF[a.command if a.command != "bounds" else a.evaluator])
    result = run_experiment(cfg, jobs=a.jobs)
    if cfg.out:
        for path in write_outputs(result, cfg.out, figures=cfg.figures):
            print(path, file=sys.stderr)
    else:
        sys.stdout.write(result.to_csv())
    return 0


def _add_experiment_flags(p):
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--m-grid", dest="m_grid", type=_int_list)
    p.add_argument("--s-grid", dest="s_grid", type=_int_list)
    p.add_argument("--set", type=_kv, action="append", metavar="KEY=VALUE", help="override any config field")
    p.add_argument("--out", help="summary CSV path; per-trial CSV and PNG are written next to it")
    p.add_argument("--no-figures", action="store_true", help="skip the PNG figure")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_experiment)


# -- bound evaluators ----------------------------------------------------------------

def _bound_measurement(a):
    inp = bounds.BoundInputs(s=a.s, G=a.G, g=a.g, D=a.d * a.L, d=a.d, L=a.L, delta=a.delta, eta=a.eta,
                             mu=a.mu, omega=a.omega, c_const=a.c_const)
    m = bounds.measurement_bound(inp, a.variant)
    return {"inputs": {**vars(inp), "variant": a.variant}, "m": m, "M_total": m * a.L}


def _bound_dense(a):
    return {"inputs": {"s": a.s, "G": a.G, "g": a.g, "c1": a.c1}, "M": bounds.dense_lower_bound(a.s, a.G, a.g, a.c1)}


def _bound_gnsp(a):
    c = bounds.grip_to_gnsp(a.delta, a.denominator)
    out = c.as_dict()
    for k in ("C", "Dconst"):
        if math.isinf(out[k]):
            out[k] = None
    return {"inputs": {"delta": a.delta, "denominator": a.denominator}, **out, "threshold": bounds.GNSP_THRESHOLD}


def _bound_volumetric(a):
    log_n = bounds.covnum_volumetric(a.s, a.G, a.g, a.u)
    return {"inputs": {"s": a.s, "G": a.G, "g": a.g, "u": a.u}, "log_N": log_n}


def _bound_maurey_k(a):
    return {"inputs": {"mu": a.mu, "M_total": a.M_total, "eps": a.eps}, "K": bounds.maurey_K(a.mu, a.M_total, a.eps)}


def _bound_maurey(a):
    v = bounds.covnum_maurey(a.mu, a.D, a.G, a.g, a.eps)
    return {"inputs": {"mu": a.mu, "D": a.D, "G": a.G, "g": a.g, "eps": a.eps}, "sqrt_log_N": v}


def _bound_ext_maurey(a):
    v = bounds.extended_maurey_bound(a.A, a.u, a.covnums, a.constant)
    return {"inputs": {"A": a.A, "u": a.u, "covnums": a.covnums, "constant": a.constant}, "log_N": v}


def _bound_chaos(a):
    v = bounds.chaos_Eu(a.gamma2, a.rho_F, a.rho_op, a.u)
    return {"inputs": {"gamma2": a.gamma2, "rho_F": a.rho_F, "rho_op": a.rho_op, "u": a.u}, "E_u": v}


def _bound_gamma2(a):
    v = bounds.gamma2_entropy_estimate(a.mu, a.s, a.D, a.G, a.g)
    return {"inputs": {"mu": a.mu, "s": a.s, "D": a.D, "G": a.G, "g": a.g}, "gamma2": v}


def _bound_recovery(a):
    l2, l1 = recovery_error_bound(a.rho, a.tau, a.s, a.sigma, a.eps)
    return {"inputs": {"rho": a.rho, "tau": a.tau, "s": a.s, "sigma_s": a.sigma, "eps": a.eps}, "l2": l2, "l1": l1}


def _add_bounds(sub):
    p = sub.add_parser("bounds", help="closed-form evaluators (one JSON object each) and the bounds table")
    ev = p.add_subparsers(dest="evaluator", required=True)

    def add(name, fn, **spec):
        q = ev.add_parser(name)
        for flag, kw in spec.items():
            q.add_argument("--" + flag.replace("_", "-"), dest=flag, **kw)
        q.add_argument("--out")
        q.set_defaults(func=lambda a: _emit(fn(a), a.out))
        return q

    req_i = {"type": int, "required": True}
    req_f = {"type": float, "required": True}
    add("measurement", _bound_measurement, s=req_i, G=req_i, g=req_i, d=req_i, L=req_i,
        delta={"type": float, "default": 0.5}, eta={"type": float, "default": 0.01},
        mu={"type": float}, omega={"type": float}, c_const={"type": float, "default": 1.0},
        variant={"choices": ("independent_thm2", "shared_thm3"), "default": "independent_thm2"})
    add("dense-lower", _bound_dense, s=req_i, G=req_i, g=req_i, c1={"type": float, "default": 1.0})
    add("grip-to-gnsp", _bound_gnsp, delta=req_f, denominator={"choices": ("linear", "quadratic"), "default": "linear"})
    add("covnum-volumetric", _bound_volumetric, s=req_i, G=req_i, g=req_i, u=req_f)
    add("maurey-k", _bound_maurey_k, mu=req_f, M_total=req_f, eps=req_f)
    add("covnum-maurey", _bound_maurey, mu=req_f, D=req_i, G=req_i, g=req_i, eps=req_f)
    add("extended-maurey", _bound_ext_maurey, A=req_f, u=req_f,
        covnums={"type": float, "nargs": "+", "required": True}, constant={"type": float, "default": 16.0})
    add("chaos-eu", _bound_chaos, gamma2=req_f, rho_F=req_f, rho_op=req_f, u=req_f)
    add("gamma2", _bound_gamma2, mu=req_f, s=req_i, D=req_i, G=req_i, g=req_i)
    add("recovery-error", _bound_recovery, rho=req_f, tau=req_f, s=req_i, sigma=req_f, eps=req_f)
    _add_experiment_flags(ev.add_parser("table", help="bounds vs dense lower bound vs observed m*"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="grouprip", description="Group-sparse recovery from block-diagonal measurements.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-partition", help="write a group partition as JSON")
    p.add_argument("--partition", choices=("contiguous", "interleaved", "singletons"), default="contiguous")
    p.add_argument("--D", type=int)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--L", type=int, default=2)
    p.add_argument("--group-size", type=int, default=2)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_partition)

    p = sub.add_parser("gen-basis", help="write a unitary basis as a matrix file")
    p.add_argument("--kind", choices=BASES, default="dft")
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--L", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_basis)

    p = sub.add_parser("gric", help="group restricted isometry constant of one operator draw")
    _add_operator_flags(p)
    _add_partition_flags(p)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--gric-mode", choices=("exact_enumeration", "monte_carlo"), default="exact_enumeration")
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gric)

    p = sub.add_parser("coherence", help="mu and omega of a basis")
    p.add_argument("--basis", choices=BASES, default="dft")
    p.add_argument("--basis-file", help="explicit basis matrix file")
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--L", type=int, default=2)
    _add_partition_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_coherence)

    p = sub.add_parser("recover", help="solve one group-l1 recovery problem")
    _add_operator_flags(p)
    _add_partition_flags(p)
    p.add_argument("--y", help="measurement vector file; without it a random signal is drawn")
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--abs-tol", type=float, default=1e-8)
    p.add_argument("--rel-tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--estimate-out", help="write the estimate as a matrix file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_recover)

    for name in ("phase-transition", "adversarial-dcs", "gric-curve"):
        _add_experiment_flags(sub.add_parser(name))
    _add_bounds(sub)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        code = a.func(a)
    except (ConfigError, gio.MatrixFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
