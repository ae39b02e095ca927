"""Regenerate the frozen solver and bounds-table golden files.

The solver goldens are objectives of the group-l1 program computed with an
independent conic solver (cvxpy + CLARABEL) on 50 seeded instances with
D <= 12. Run from the repository root:

    python3 scripts/make_golden.py

Needs the ``oracle`` extra (cvxpy). The package itself never imports cvxpy.
"""
from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import cvxpy as cp
import numpy as np

from grouprip._rng import make_rng
from grouprip.basis import make_basis
from grouprip.group_model import GroupPartition, random_group_sparse
from grouprip.sensing import SubgaussianEnsemble, draw_operator

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "tests" / "data"
SEED = 2024
N_INSTANCES = 50


def _instance(k: int) -> dict:
    rng = make_rng(SEED, k)
    kind = ("dense_real", "dense_complex", "block_dft")[k % 3]
    if kind == "block_dft":
        L = int(rng.choice([2, 3]))
        d = int(rng.choice([2, 3, 4]))
        D = d * L
        m = int(rng.integers(max(1, d // 2), d + 1))
        op = draw_operator(SubgaussianEnsemble("gaussian", int(rng.integers(2**31))), m, d, L, "independent", make_basis("dft", D, L))
        A = op.materialize()
    else:
        D = int(rng.choice([6, 8, 9, 10, 12]))
        M = int(rng.integers(D // 2, D))
        A = rng.standard_normal((M, D))
        if kind == "dense_complex":
            A = (A + 1j * rng.standard_normal((M, D))) / np.sqrt(2)
        A = A / np.sqrt(M)
    sizes = [g for g in (1, 2, 3, 4) if D % g == 0]
    P = GroupPartition.contiguous(D, int(rng.choice(sizes)))
    s = int(rng.integers(1, max(1, P.num_groups // 2) + 1))
    x = random_group_sparse(P, s, 0, rng=rng).values
    eps = float(rng.uniform(0.01, 0.2))
    e = rng.standard_normal(A.shape[0]) + 1j * rng.standard_normal(A.shape[0])
    y = A @ x + 0.8 * eps * e / np.linalg.norm(e)
    return {"kind": kind, "A": A, "y": y, "eps": eps, "groups": [list(g) for g in P.groups]}


def _oracle(inst: dict) -> float:
    A, y = inst["A"], inst["y"]
    x = cp.Variable(A.shape[1], complex=True)
    obj = cp.sum([cp.norm(x[g], 2) for g in inst["groups"]])
    prob = cp.Problem(cp.Minimize(obj), [cp.norm(A @ x - y, 2) <= inst["eps"]])
    prob.solve(solver=cp.CLARABEL)
    if prob.status != cp.OPTIMAL:
        raise RuntimeError(f"oracle status {prob.status}")
    return float(prob.value)


def _pair(a) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"re": a.real.tolist(), "im": a.imag.tolist()}


def solver_golden() -> None:
    out = []
    for k in range(N_INSTANCES):
        inst = _instance(k)
        out.append({
            "index": k,
            "kind": inst["kind"],
            "A": _pair(inst["A"]),
            "y": _pair(inst["y"]),
            "eps": inst["eps"],
            "groups": inst["groups"],
            "objective": _oracle(inst),
        })
    meta = {"generator": "cvxpy/CLARABEL", "cvxpy": cp.__version__, "seed": SEED}
    (DATA / "solver_golden.json").write_text(json.dumps({"meta": meta, "instances": out}, indent=1) + "\n")


def bounds_golden() -> None:
    cfg = ROOT / "configs" / "bounds_table.json"
    csv = subprocess.run(
        [sys.executable, "-m", "grouprip.harness.cli", "bounds", "table", "--config", str(cfg)],
        check=True, capture_output=True, text=True,
    ).stdout
    (DATA / "bounds_table_golden.csv").write_text(csv)


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    solver_golden()
    bounds_golden()
