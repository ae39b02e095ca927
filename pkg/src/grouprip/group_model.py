"""Group partitions of ``[0, D)`` and the mixed norms built on them.

Indices are 0-based throughout. A partition need not be contiguous or have
equal group sizes; :meth:`GroupPartition.contiguous` and
:meth:`GroupPartition.interleaved` cover the two layouts used by the
experiments.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._rng import make_rng

__all__ = [
    "GroupPartition",
    "GroupSparseSignal",
    "group_norms",
    "group_norm",
    "group_support_count",
    "best_group_approx",
    "random_group_sparse",
]


@dataclass(frozen=True)
class GroupPartition:
    """A disjoint cover of ``[0, ambient_dim)`` by nonempty index groups."""

    ambient_dim: int
    groups: tuple[tuple[int, ...], ...]
    labels: np.ndarray = field(init=False, repr=False, compare=False)

    def __init__(self, ambient_dim: int, groups: Sequence[Sequence[int]]):
        D = int(ambient_dim)
        if D < 1:
            raise ValueError("ambient_dim must be positive")
        groups = tuple(tuple(int(i) for i in grp) for grp in groups)
        if not groups:
            raise ValueError("a partition needs at least one group")
        labels = np.full(D, -1, dtype=np.intp)
        for gi, grp in enumerate(groups):
            if not grp:
                raise ValueError(f"group {gi} is empty")
            for i in grp:
                if not 0 <= i < D:
                    raise ValueError(f"index {i} in group {gi} outside [0, {D})")
                if labels[i] != -1:
                    raise ValueError(f"index {i} appears in groups {labels[i]} and {gi}")
                labels[i] = gi
        missing = np.flatnonzero(labels < 0)
        if missing.size:
            raise ValueError(f"groups do not cover indices {missing[:10].tolist()}")
        labels.setflags(write=False)
        object.__setattr__(self, "ambient_dim", D)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def contiguous(cls, D: int, group_size: int) -> "GroupPartition":
        """Equal contiguous groups ``{0..g-1}, {g..2g-1}, ...``."""
        if group_size < 1 or D % group_size:
            raise ValueError(f"group size {group_size} does not divide D={D}")
        return cls(D, [range(k, k + group_size) for k in range(0, D, group_size)])

    @classmethod
    def interleaved(cls, d: int, L: int) -> "GroupPartition":
        """Groups ``{i, d+i, ..., (L-1)d+i}`` for ``i`` in ``[0, d)``.

        This is the partition induced by a common support across ``L``
        sensors that each observe a length-``d`` block.
        """
        return cls(d * L, [range(i, d * L, d) for i in range(d)])

    @classmethod
    def singletons(cls, D: int) -> "GroupPartition":
        return cls.contiguous(D, 1)

    @property
    def num_groups(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(grp) for grp in self.groups)

    @property
    def max_group_size(self) -> int:
        return max(self.sizes)

    def indices(self, support: Sequence[int]) -> np.ndarray:
        """Sorted coordinate indices covered by the groups in ``support``."""
        if len(support) == 0:
            return np.empty(0, dtype=np.intp)
        return np.sort(np.concatenate([np.asarray(self.groups[i], dtype=np.intp) for i in support]))

    def permuted(self, order: Sequence[int]) -> "GroupPartition":
        """Same groups listed in a different order."""
        if sorted(order) != list(range(self.num_groups)):
            raise ValueError("order must be a permutation of the group indices")
        return GroupPartition(self.ambient_dim, [self.groups[i] for i in order])

    def to_json(self) -> str:
        return json.dumps({"ambient_dim": self.ambient_dim, "groups": [list(g) for g in self.groups]})

    @classmethod
    def from_json(cls, text: str) -> "GroupPartition":
        obj = json.loads(text)
        try:
            return cls(obj["ambient_dim"], obj["groups"])
        except KeyError as exc:
            raise ValueError(f"partition JSON missing key {exc}") from None


@dataclass(frozen=True)
class GroupSparseSignal:
    values: np.ndarray
    partition: GroupPartition

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.partition.ambient_dim,):
            raise ValueError("signal length does not match the partition")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def _check(x, P: GroupPartition) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (P.ambient_dim,):
        raise ValueError(f"vector of shape {x.shape} does not match ambient dimension {P.ambient_dim}")
    return x


def group_norms(x, P: GroupPartition) -> np.ndarray:
    """Vector of per-group Euclidean norms ``||x_{I_i}||_2``."""
    x = _check(x, P)
    sq = np.bincount(P.labels, weights=np.abs(x) ** 2, minlength=P.num_groups)
    return np.sqrt(sq)


def group_norm(x, P: GroupPartition, p=1) -> float:
    """Group ``l_{I,p}`` norm: the ``l_p`` norm of the per-group ``l_2`` norms.

    ``p`` may be any real ``>= 1`` or ``np.inf`` / ``"inf"``.
    """
    if isinstance(p, str):
        if p.lower() not in ("inf", "infinity"):
            raise ValueError(f"unknown norm order {p!r}")
        p = math.inf
    if p < 1:
        raise ValueError("group norm order must be >= 1")
    norms = group_norms(x, P)
    if math.isinf(p):
        return float(norms.max())
    if p == 1:
        return float(norms.sum())
    if p == 2:
        return float(np.linalg.norm(norms))
    return float(np.sum(norms**p) ** (1.0 / p))


def group_support_count(x, P: GroupPartition, tol: float = 0.0) -> int:
    """Number of groups with ``||x_{I_i}||_2 > tol``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return int(np.count_nonzero(group_norms(x, P) > tol))


def top_groups(norms: np.ndarray, s: int) -> np.ndarray:
    """Indices of the ``s`` largest entries, ties broken by lowest index."""
    order = np.lexsort((np.arange(norms.size), -norms))
    return np.sort(order[:s])


def best_group_approx(x, P: GroupPartition, s: int) -> tuple[np.ndarray, float]:
    """Keep the ``s`` groups of largest norm and zero the rest.

    Returns the approximant and ``sigma_s(x)_{I,1}``, the group-l1 norm of the
    discarded part.
    """
    x = _check(x, P)
    if not 1 <= s <= P.num_groups:
        raise ValueError(f"s={s} outside [1, {P.num_groups}]")
    norms = group_norms(x, P)
    keep = top_groups(norms, s)
    mask = np.zeros(P.num_groups, dtype=bool)
    mask[keep] = True
    approx = np.where(mask[P.labels], x, 0)
    return approx, float(norms[~mask].sum())


def random_group_sparse(
    P: GroupPartition, s: int, seed: int, amplitude_model: str = "unit_norm_gaussian", rng=None
) -> GroupSparseSignal:
    """Unit-norm signal supported on ``s`` uniformly chosen groups.

    ``unit_norm_gaussian`` draws complex Gaussian entries on the support;
    ``rademacher`` draws real signs. Pass ``rng`` to draw from an existing
    stream instead of ``seed``.
    """
    if not 1 <= s <= P.num_groups:
        raise ValueError(f"s={s} outside [1, {P.num_groups}]")
    rng = make_rng(seed) if rng is None else rng
    support = np.sort(rng.choice(P.num_groups, size=s, replace=False))
    idx = P.indices(support)
    x = np.zeros(P.ambient_dim, dtype=complex)
    if amplitude_model == "unit_norm_gaussian":
        x[idx] = rng.standard_normal(idx.size) + 1j * rng.standard_normal(idx.size)
    elif amplitude_model == "rademacher":
        x[idx] = rng.choice([-1.0, 1.0], size=idx.size)
    else:
        raise ValueError(f"unknown amplitude model {amplitude_model!r}")
    x /= np.linalg.norm(x)
    return GroupSparseSignal(x, P)
