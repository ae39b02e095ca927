"""Measurable quantities of a sensing setup.

Coherence parameters of a basis with respect to a partition, the lifted
operators that rewrite ``A Psi x`` as ``V(x) xi``, exact and sampled group
restricted isometry constants, and randomized falsifiers for the group null
space property and the disjoint-support inner-product bound.
"""
from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from ._rng import make_rng
from .basis import UnitaryBasis
from .group_model import GroupPartition, group_norms, top_groups
from .sensing import BlockDiagonalOperator, as_operator

__all__ = [
    "GripEstimate",
    "CoherenceReport",
    "coherence_mu",
    "coherence_omega",
    "lift_opnorm_V",
    "lift_V",
    "lift_V_tilde",
    "factorization_check",
    "gric",
    "gnsp_falsify",
    "disjoint_support_check",
    "ENUMERATION_CAP",
]

ENUMERATION_CAP = 10**5


@dataclass(frozen=True)
class GripEstimate:
    delta: float
    order: int
    mode: str
    supports_evaluated: int
    per_support_extremes: list[tuple[float, float]] | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self))


@dataclass(frozen=True)
class CoherenceReport:
    mu: float
    omega: float | None = None
    branch_taken: dict | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _check_dims(basis: UnitaryBasis, P: GroupPartition):
    if basis.dim != P.ambient_dim:
        raise ValueError(f"basis dimension {basis.dim} != partition dimension {P.ambient_dim}")


def coherence_mu(basis: UnitaryBasis, P: GroupPartition) -> CoherenceReport:
    """``min(sqrt(d) * max_i ||psi_i||_{I,inf}, 1)`` over the rows ``psi_i``."""
    _check_dims(basis, P)
    rows = np.abs(basis.matrix) ** 2
    # per-row group norms: sum |psi_ij|^2 over j in each group
    per_group = np.zeros((basis.dim, P.num_groups))
    np.add.at(per_group.T, P.labels, rows.T)
    raw = math.sqrt(basis.block_dim) * float(np.sqrt(per_group.max()))
    mu = min(raw, 1.0)
    return CoherenceReport(mu=mu, branch_taken={"mu": "row_group_inf" if raw < 1.0 else "one", "mu_raw": raw})


def lift_V_tilde(basis: UnitaryBasis, x) -> np.ndarray:
    """``L x d`` matrix whose row ``l`` is ``(Psi_l x)^T``."""
    x = np.asarray(x)
    if x.shape != (basis.dim,):
        raise ValueError(f"vector length {x.shape} != D={basis.dim}")
    return basis.blocks(x)


def lift_opnorm_V(basis: UnitaryBasis, x) -> float:
    """``||V(x)||_{2->2} = max_l ||Psi_l x||_2`` without forming ``V(x)``."""
    return float(np.max(np.linalg.norm(lift_V_tilde(basis, x), axis=1)))


def lift_V(basis: UnitaryBasis, x, m: int) -> np.ndarray:
    """Dense ``V(x) = diag(V_l(x))`` with ``V_l(x) = I_m kron (Psi_l x)^T``.

    Shape ``(m L, m d L)``; intended for desk-scale checks only.
    """
    Vt = lift_V_tilde(basis, x)
    L, d = Vt.shape
    out = np.zeros((m * L, m * d * L), dtype=complex)
    eye = np.eye(m)
    for l in range(L):
        out[l * m:(l + 1) * m, l * m * d:(l + 1) * m * d] = np.kron(eye, Vt[l][None, :])
    return out


def coherence_omega(basis: UnitaryBasis, P: GroupPartition) -> CoherenceReport:
    """Shared-block coherence: the smaller of two operator-norm bounds.

    Branch one is ``sqrt(g) * max_i ||V~(e_i)||``; branch two is
    ``sqrt(L) * max_{l,i} ||(Psi_l)_{I_i}||`` over column-restricted blocks.
    """
    _check_dims(basis, P)
    Psi = basis.matrix
    L, d = basis.sensors, basis.block_dim
    # V~(e_i) is column i of Psi reshaped to (L, d)
    cols = Psi.T.reshape(basis.dim, L, d)
    first = math.sqrt(P.max_group_size) * float(np.linalg.norm(cols, ord=2, axis=(1, 2)).max())
    second = 0.0
    for l in range(L):
        block = basis.partial_block(l)
        for grp in P.groups:
            second = max(second, float(np.linalg.norm(block[:, list(grp)], ord=2)))
    second *= math.sqrt(L)
    omega = min(first, second)
    mu = coherence_mu(basis, P)
    branches = dict(mu.branch_taken)
    branches.update(omega="vtilde_columns" if first <= second else "restricted_blocks", omega_first=first, omega_second=second)
    return CoherenceReport(mu=mu.mu, omega=omega, branch_taken=branches)


def factorization_check(op: BlockDiagonalOperator, x) -> float:
    """``max |A Psi x - V(x) xi|`` with ``xi`` stacking the rows of every block."""
    x = np.asarray(x)
    xi = op.stacked_blocks().reshape(-1)
    V = lift_V(op.basis, x, op.m)
    return float(np.max(np.abs(op.apply(x) - op.scale * (V @ xi)), initial=0.0))


def _extremes(gram: np.ndarray, P: GroupPartition, supports: np.ndarray, chunk: int = 4096):
    """Extreme eigenvalues of the Gram principal submatrix for each support."""
    index_sets = [P.indices(sup) for sup in supports]
    sizes = np.array([idx.size for idx in index_sets])
    lo = np.empty(len(supports))
    hi = np.empty(len(supports))
    # equal-size index sets are batched through one eigvalsh call
    for k in np.unique(sizes):
        pos = np.flatnonzero(sizes == k)
        for start in range(0, pos.size, chunk):
            sel = pos[start:start + chunk]
            idx = np.stack([index_sets[n] for n in sel])
            ev = np.linalg.eigvalsh(gram[idx[:, :, None], idx[:, None, :]])
            lo[sel], hi[sel] = ev[:, 0], ev[:, -1]
    return lo, hi


def gric(
    op,
    P: GroupPartition,
    s: int,
    mode: str = "exact_enumeration",
    trials: int = 0,
    seed: int = 0,
    cap: int = ENUMERATION_CAP,
    keep_extremes: bool = True,
) -> GripEstimate:
    """Group restricted isometry constant of order ``s``.

    For each support the restricted supremum equals the extreme eigenvalue
    deviation of the column-restricted Gram matrix, so exact mode is exact up
    to floating point. Monte-Carlo mode evaluates ``trials`` uniformly drawn
    supports and can only under-estimate.
    """
    G = P.num_groups
    if not 1 <= s <= G:
        raise ValueError(f"s={s} outside [1, {G}]")
    A = as_operator(op).materialize()
    if A.shape[1] != P.ambient_dim:
        raise ValueError("operator and partition dimensions disagree")
    if mode == "exact_enumeration":
        count = math.comb(G, s)
        if count > cap:
            raise ValueError(f"C({G},{s}) = {count} supports exceeds the enumeration cap {cap}")
        supports = np.array(list(itertools.combinations(range(G), s)), dtype=np.intp)
    elif mode == "monte_carlo":
        if trials < 1:
            raise ValueError("monte_carlo mode needs trials >= 1")
        supports = np.array(
            [np.sort(make_rng(seed, t).choice(G, size=s, replace=False)) for t in range(trials)], dtype=np.intp
        )
    else:
        raise ValueError(f"unknown gric mode {mode!r}")
    gram = A.conj().T @ A
    lo, hi = _extremes(gram, P, supports)
    delta = float(np.max(np.maximum(hi - 1.0, 1.0 - lo)))
    extremes = list(zip(lo.tolist(), hi.tolist())) if keep_extremes else None
    return GripEstimate(delta=max(delta, 0.0), order=s, mode=mode, supports_evaluated=len(supports), per_support_extremes=extremes)


def _gnsp_violated(A, P, s, rho, tau, v) -> bool:
    norms = group_norms(v, P)
    S = top_groups(norms, s)
    mask = np.zeros(P.num_groups, dtype=bool)
    mask[S] = True
    lhs = float(np.sqrt(np.sum(norms[mask] ** 2)))
    rhs = rho / math.sqrt(s) * float(norms[~mask].sum()) + tau * float(np.linalg.norm(A @ v))
    return lhs > rhs + 1e-12 * max(1.0, lhs)


def gnsp_falsify(A, P: GroupPartition, s: int, rho: float, tau: float, trials: int, seed: int = 0) -> list[np.ndarray]:
    """Search for vectors violating the l2-robust group null space property.

    Candidates rotate through dense Gaussian vectors, random ``s``-group-sparse
    vectors, and combinations of the right singular vectors with the smallest
    singular values (an approximate null space). For each candidate only the
    support of its ``s`` largest groups is tested, since that choice maximizes
    the left side and minimizes the tail term at once. An empty result is
    evidence, not proof.
    """
    A = np.asarray(A)
    M, D = A.shape
    if D != P.ambient_dim:
        raise ValueError("matrix and partition dimensions disagree")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 1 <= s <= P.num_groups:
        raise ValueError(f"s={s} outside [1, {P.num_groups}]")
    _, _, Vh = np.linalg.svd(A, full_matrices=True)
    k = max(D - M, 1)
    near_null = Vh[-k:].conj()
    violators = []
    for t in range(trials):
        rng = make_rng(seed, t)
        kind = t % 3
        if kind == 0:
            v = rng.standard_normal(D) + 1j * rng.standard_normal(D)
        elif kind == 1:
            support = rng.choice(P.num_groups, size=s, replace=False)
            idx = P.indices(np.sort(support))
            v = np.zeros(D, dtype=complex)
            v[idx] = rng.standard_normal(idx.size) + 1j * rng.standard_normal(idx.size)
        else:
            coef = rng.standard_normal(k) + 1j * rng.standard_normal(k)
            v = coef @ near_null
        if np.linalg.norm(v) == 0:
            continue
        if _gnsp_violated(A, P, s, rho, tau, v):
            violators.append(v)
    return violators


def disjoint_support_check(
    A, P: GroupPartition, s: int, delta: float, trials: int, seed: int = 0, exhaustive: bool = False
) -> float:
    """Largest observed ratio ``|<Au, Aw>| / sqrt(delta^2 - t^2)``.

    ``u`` and ``w`` are unit vectors on disjoint ``s``-group supports and
    ``||Au||^2 = 1 + t``. ``delta`` should be the exact constant of order
    ``2s``. With ``exhaustive=True`` every ordered disjoint support pair gets
    ``trials`` vector draws; otherwise ``trials`` random pairs are drawn.
    """
    A = np.asarray(A)
    G = P.num_groups
    if 2 * s > G:
        raise ValueError(f"need 2s <= G, got s={s}, G={G}")
    if exhaustive:
        pairs = [
            (np.array(S0), np.array(S1))
            for S0 in itertools.combinations(range(G), s)
            for S1 in itertools.combinations(range(G), s)
            if not set(S0) & set(S1)
        ]
    else:
        pairs = []
        for t in range(trials):
            perm = make_rng(seed, t).permutation(G)
            pairs.append((np.sort(perm[:s]), np.sort(perm[s:2 * s])))
    draws = trials if exhaustive else 1
    worst = 0.0
    clamped = False
    for n, (S0, S1) in enumerate(pairs):
        i0, i1 = P.indices(S0), P.indices(S1)
        for r in range(draws):
            rng = make_rng(seed, n, r, 1)
            u = np.zeros(A.shape[1], dtype=complex)
            w = np.zeros(A.shape[1], dtype=complex)
            u[i0] = rng.standard_normal(i0.size) + 1j * rng.standard_normal(i0.size)
            w[i1] = rng.standard_normal(i1.size) + 1j * rng.standard_normal(i1.size)
            u /= np.linalg.norm(u)
            w /= np.linalg.norm(w)
            Au, Aw = A @ u, A @ w
            t = float(np.vdot(Au, Au).real) - 1.0
            lhs = abs(np.vdot(Aw, Au))
            slack = delta**2 - t**2
            if slack < 0:
                clamped = True
                slack = 0.0
            bound = math.sqrt(slack) + 1e-8
            worst = max(worst, lhs / bound)
    if clamped:
        warnings.warn("delta^2 < t^2 for some draw; delta was likely under-computed", RuntimeWarning, stacklevel=2)
    return worst
