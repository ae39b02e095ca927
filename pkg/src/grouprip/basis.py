"""Unitary sparsity bases and their partial expansion blocks.

A basis of dimension ``D = d * L`` is split row-wise into ``L`` blocks
``Psi_l`` of shape ``(d, D)``; sensor ``l`` sees ``Psi_l x``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._rng import make_rng

__all__ = ["UnitaryBasis", "make_basis", "random_unitary", "dft_matrix", "partial_block", "UNITARY_TOL"]

UNITARY_TOL = 1e-10
KINDS = ("identity", "dft", "block_diagonal_composite", "explicit")


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT ``exp(+2j pi m k / n) / sqrt(n)``."""
    k = np.arange(n)
    return np.exp(2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def _unitarity_defect(U: np.ndarray) -> float:
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[1]))))


@dataclass(frozen=True, eq=False)
class UnitaryBasis:
    """A validated ``D x D`` unitary matrix with a sensor count ``L``.

    Identity and DFT bases are applied implicitly (the DFT through
    :mod:`numpy.fft`); ``block_diagonal_composite`` stores only the ``d x d``
    sub-basis repeated on the diagonal.
    """

    dim: int
    sensors: int
    kind: str
    payload: np.ndarray | None = field(default=None, repr=False)

    @property
    def block_dim(self) -> int:
        return self.dim // self.sensors

    @cached_property
    def matrix(self) -> np.ndarray:
        D, d = self.dim, self.block_dim
        if self.kind == "identity":
            M = np.eye(D, dtype=complex)
        elif self.kind == "dft":
            M = dft_matrix(D)
        elif self.kind == "block_diagonal_composite":
            M = np.zeros((D, D), dtype=complex)
            for l in range(self.sensors):
                M[l * d:(l + 1) * d, l * d:(l + 1) * d] = self.payload
        else:
            M = self.payload.astype(complex)
        M.setflags(write=False)
        return M

    def apply(self, x: np.ndarray) -> np.ndarray:
        """``Psi @ x``; ``x`` may carry extra trailing columns."""
        if self.kind == "identity":
            return np.asarray(x, dtype=complex).copy()
        if self.kind == "dft":
            return np.fft.ifft(x, axis=0) * np.sqrt(self.dim)
        if self.kind == "block_diagonal_composite":
            x = np.asarray(x, dtype=complex)
            xb = x.reshape((self.sensors, self.block_dim) + x.shape[1:])
            return np.einsum("ij,lj...->li...", self.payload, xb).reshape(x.shape)
        return self.matrix @ x

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        """``Psi^* @ y``."""
        if self.kind == "identity":
            return np.asarray(y, dtype=complex).copy()
        if self.kind == "dft":
            return np.fft.fft(y, axis=0) / np.sqrt(self.dim)
        if self.kind == "block_diagonal_composite":
            y = np.asarray(y, dtype=complex)
            yb = y.reshape((self.sensors, self.block_dim) + y.shape[1:])
            return np.einsum("ji,lj...->li...", self.payload.conj(), yb).reshape(y.shape)
        return self.matrix.conj().T @ y

    def blocks(self, x: np.ndarray) -> np.ndarray:
        """Stacked partial expansions: row ``l`` is ``Psi_l x`` (shape ``(L, d)``)."""
        return self.apply(x).reshape(self.sensors, self.block_dim)

    def partial_block(self, l: int) -> np.ndarray:
        if not 0 <= l < self.sensors:
            raise IndexError(f"block index {l} outside [0, {self.sensors})")
        d = self.block_dim
        return self.matrix[l * d:(l + 1) * d]

    def to_explicit(self) -> "UnitaryBasis":
        return make_basis("explicit", self.dim, self.sensors, np.array(self.matrix))


def make_basis(kind: str, D: int, L: int, payload=None) -> UnitaryBasis:
    """Build and validate a basis.

    ``payload`` is the full ``D x D`` matrix for ``kind="explicit"`` and the
    ``d x d`` sub-basis for ``kind="block_diagonal_composite"``.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown basis kind {kind!r}; expected one of {KINDS}")
    if D < 1 or L < 1 or D % L:
        raise ValueError(f"L={L} must divide D={D}")
    d = D // L
    if kind in ("identity", "dft"):
        return UnitaryBasis(D, L, kind)
    if payload is None:
        raise ValueError(f"basis kind {kind!r} needs a payload matrix")
    payload = np.array(payload, dtype=complex)
    expected = (d, d) if kind == "block_diagonal_composite" else (D, D)
    if payload.shape != expected:
        raise ValueError(f"payload shape {payload.shape} != {expected}")
    defect = _unitarity_defect(payload)
    if defect > UNITARY_TOL:
        raise ValueError(f"payload is not unitary (max entry defect {defect:.3g})")
    payload.setflags(write=False)
    return UnitaryBasis(D, L, kind, payload)


def random_unitary(D: int, L: int, seed: int, real: bool = False) -> UnitaryBasis:
    """Explicit basis from the QR factorization of a seeded Gaussian matrix.

    The phases of ``R``'s diagonal are folded back into ``Q`` so the result is
    Haar distributed.
    """
    rng = make_rng(seed)
    Z = rng.standard_normal((D, D))
    if not real:
        Z = Z + 1j * rng.standard_normal((D, D))
    Q, R = np.linalg.qr(Z)
    diag = np.diag(R)
    Q = Q * (diag / np.abs(diag))
    return make_basis("explicit", D, L, Q)


def partial_block(basis: UnitaryBasis, l: int) -> np.ndarray:
    """Rows ``l*d .. (l+1)*d - 1`` of the basis matrix."""
    return basis.partial_block(l)
