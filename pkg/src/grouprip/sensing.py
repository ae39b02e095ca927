"""Block-diagonal subgaussian sensing operators.

The composite map is ``x -> scale * diag(Phi_1, ..., Phi_L) @ Psi @ x`` where
each ``Phi_l`` is a real ``m x d`` block. Sensor ``l`` only sees
``Psi_l x``, so apply and adjoint work blockwise and never form the
``M x D`` product.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from ._rng import make_rng
from .basis import UnitaryBasis

__all__ = [
    "SubgaussianEnsemble",
    "BlockDiagonalOperator",
    "DenseOperator",
    "as_operator",
    "draw_operator",
    "apply",
    "adjoint_apply",
    "measure",
    "materialize",
    "MATERIALIZE_CAP",
]

MATERIALIZE_CAP = 10**7
FAMILIES = ("gaussian", "rademacher")
# Documented subgaussian-norm labels (not estimated): sqrt(8/3) for N(0,1), 1/sqrt(ln 2) for signs.
SUBGAUSSIAN_NORM = {"gaussian": float(np.sqrt(8.0 / 3.0)), "rademacher": float(1.0 / np.sqrt(np.log(2.0)))}


@dataclass(frozen=True)
class SubgaussianEnsemble:
    """Zero-mean, unit-variance entry distribution plus the seed to draw from."""

    family: str = "gaussian"
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown ensemble family {self.family!r}; expected one of {FAMILIES}")

    @property
    def tau(self) -> float:
        return SUBGAUSSIAN_NORM[self.family]

    def sample(self, shape, rng=None) -> np.ndarray:
        rng = make_rng(self.seed) if rng is None else rng
        if self.family == "gaussian":
            return rng.standard_normal(shape)
        return rng.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0


@dataclass(frozen=True, eq=False)
class BlockDiagonalOperator:
    """Sensing operator ``scale * A @ Psi`` with ``A = diag(Phi_l)``.

    ``blocks`` has shape ``(L, m, d)`` in independent mode and ``(m, d)`` in
    shared mode, where every sensor uses the same block.
    """

    blocks: np.ndarray = field(repr=False)
    basis: UnitaryBasis
    scale: float
    mode: str = "independent"
    family: str = "gaussian"
    seed: int | None = None

    def __post_init__(self):
        blocks = np.array(self.blocks, dtype=float)
        L, d = self.basis.sensors, self.basis.block_dim
        if self.mode == "shared":
            if blocks.ndim != 2 or blocks.shape[1] != d:
                raise ValueError(f"shared block must be (m, {d}), got {blocks.shape}")
        elif self.mode == "independent":
            if blocks.ndim != 3 or blocks.shape[0] != L or blocks.shape[2] != d:
                raise ValueError(f"independent blocks must be ({L}, m, {d}), got {blocks.shape}")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")
        blocks.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def m(self) -> int:
        return self.blocks.shape[-2]

    @property
    def d(self) -> int:
        return self.basis.block_dim

    @property
    def L(self) -> int:
        return self.basis.sensors

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m * self.L, self.basis.dim)

    def block(self, l: int) -> np.ndarray:
        return self.blocks if self.mode == "shared" else self.blocks[l]

    def stacked_blocks(self) -> np.ndarray:
        """All ``L`` blocks as an ``(L, m, d)`` array (shared mode broadcasts)."""
        if self.mode == "shared":
            return np.broadcast_to(self.blocks, (self.L,) + self.blocks.shape)
        return self.blocks

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[0] != self.basis.dim:
            raise ValueError(f"input length {x.shape[0]} != D={self.basis.dim}")
        z = self.basis.apply(x).reshape((self.L, self.d) + x.shape[1:])
        if self.mode == "shared":
            y = np.einsum("ij,lj...->li...", self.blocks, z)
        else:
            y = np.einsum("lij,lj...->li...", self.blocks, z)
        return self.scale * y.reshape((self.m * self.L,) + x.shape[1:])

    def adjoint_apply(self, y) -> np.ndarray:
        y = np.asarray(y)
        if y.shape[0] != self.m * self.L:
            raise ValueError(f"input length {y.shape[0]} != M={self.m * self.L}")
        yb = y.reshape((self.L, self.m) + y.shape[1:])
        if self.mode == "shared":
            z = np.einsum("ji,lj...->li...", self.blocks, yb)
        else:
            z = np.einsum("lji,lj...->li...", self.blocks, yb)
        return self.scale * self.basis.adjoint(z.reshape((self.basis.dim,) + y.shape[1:]))

    def materialize(self, cap: int = MATERIALIZE_CAP) -> np.ndarray:
        M, D = self.shape
        if M * D > cap:
            raise MemoryError(f"dense operator would have {M * D} entries (cap {cap})")
        out = np.zeros((M, D), dtype=complex)
        m, d = self.m, self.d
        for l in range(self.L):
            out[l * m:(l + 1) * m] = self.block(l) @ self.basis.partial_block(l)
        return self.scale * out

    @cached_property
    def _outer_inverse(self) -> np.ndarray:
        # A A^* is block diagonal: Psi_l Psi_l^* = I_d, so block l is scale^2 Phi_l Phi_l^T.
        # I + scale^2 Phi Phi^T has eigenvalues >= 1, so its explicit inverse is well conditioned.
        blocks = self.blocks if self.mode == "shared" else self.stacked_blocks()
        eye = np.eye(self.m)
        if self.mode == "shared":
            fac = scipy.linalg.cho_factor(eye + self.scale**2 * blocks @ blocks.T)
            return scipy.linalg.cho_solve(fac, eye)
        grams = self.scale**2 * np.einsum("lij,lkj->lik", blocks, blocks)
        return np.stack([scipy.linalg.cho_solve(scipy.linalg.cho_factor(eye + g), eye) for g in grams])

    def solve_outer(self, r) -> np.ndarray:
        """Solve ``(I + A A^*) w = r`` blockwise."""
        r = np.asarray(r)
        rb = r.reshape(self.L, self.m)
        inv = self._outer_inverse
        if self.mode == "shared":
            out = rb @ inv.T
        else:
            out = np.einsum("lij,lj->li", inv, rb)
        return out.reshape(r.shape)

    def descriptor(self) -> dict:
        return {
            "mode": self.mode,
            "m": self.m,
            "d": self.d,
            "L": self.L,
            "seed": self.seed,
            "family": self.family,
            "scale": self.scale,
        }

    def descriptor_json(self) -> str:
        return json.dumps(self.descriptor(), sort_keys=True)


class DenseOperator:
    """Explicit ``M x D`` matrix with the same interface as the block operator."""

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix)
        if self.matrix.ndim != 2:
            raise ValueError("dense operator must be a 2-D array")
        self._factor = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[0] != self.shape[1]:
            raise ValueError(f"input length {x.shape[0]} != D={self.shape[1]}")
        return self.matrix @ x

    def adjoint_apply(self, y) -> np.ndarray:
        y = np.asarray(y)
        if y.shape[0] != self.shape[0]:
            raise ValueError(f"input length {y.shape[0]} != M={self.shape[0]}")
        return self.matrix.conj().T @ y

    def materialize(self, cap: int = MATERIALIZE_CAP) -> np.ndarray:
        if self.matrix.size > cap:
            raise MemoryError(f"dense operator has {self.matrix.size} entries (cap {cap})")
        return np.array(self.matrix, dtype=complex)

    def solve_outer(self, r) -> np.ndarray:
        if self._factor is None:
            A = self.matrix
            self._factor = scipy.linalg.cho_factor(np.eye(A.shape[0]) + A @ A.conj().T)
        return scipy.linalg.cho_solve(self._factor, r)


def as_operator(op):
    """Wrap a plain array as :class:`DenseOperator`; pass operators through."""
    if isinstance(op, (BlockDiagonalOperator, DenseOperator)):
        return op
    return DenseOperator(op)


def draw_operator(
    ens: SubgaussianEnsemble, m: int, d: int, L: int, mode: str, basis: UnitaryBasis, scale: float | None = None
) -> BlockDiagonalOperator:
    """Draw a block-diagonal operator from ``ens``; scale defaults to ``1/sqrt(m)``."""
    if min(m, d, L) < 1:
        raise ValueError("m, d and L must be positive")
    if basis.dim != d * L or basis.sensors != L:
        raise ValueError(f"basis (D={basis.dim}, L={basis.sensors}) does not match d={d}, L={L}")
    shape = (m, d) if mode == "shared" else (L, m, d)
    blocks = ens.sample(shape)
    scale = 1.0 / np.sqrt(m) if scale is None else scale
    return BlockDiagonalOperator(blocks, basis, scale, mode=mode, family=ens.family, seed=ens.seed)


def apply(op, x) -> np.ndarray:
    return as_operator(op).apply(x)


def adjoint_apply(op, y) -> np.ndarray:
    return as_operator(op).adjoint_apply(y)


def materialize(op, cap: int = MATERIALIZE_CAP) -> np.ndarray:
    return as_operator(op).materialize(cap)


def measure(op, x, noise_level: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Noisy measurements ``y = op(x) + e`` with ``||e||_2 = noise_level`` exactly.

    The noise direction is a normalized complex Gaussian vector.
    """
    if noise_level < 0:
        raise ValueError("noise_level must be nonnegative")
    op = as_operator(op)
    clean = op.apply(x)
    if noise_level == 0:
        return clean, np.zeros(op.shape[0], dtype=complex)
    rng = make_rng(seed)
    e = rng.standard_normal(op.shape[0]) + 1j * rng.standard_normal(op.shape[0])
    e *= noise_level / np.linalg.norm(e)
    return clean + e, e
