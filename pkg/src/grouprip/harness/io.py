"""Matrix files and operator serialization.

Matrix files are little-endian: the 8-byte magic ``GRIPMAT1``, a uint32
header length, a JSON header ``{"rows", "cols", "dtype"}`` with dtype
``"f64"`` or ``"c128"``, then the row-major payload.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..basis import make_basis
from ..sensing import BlockDiagonalOperator

MAGIC = b"GRIPMAT1"
_DTYPES = {"f64": np.dtype("<f8"), "c128": np.dtype("<c16")}


class MatrixFormatError(ValueError):
    pass


def encode_matrix(a) -> bytes:
    a = np.asarray(a)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError("only vectors and 2-D matrices can be stored")
    tag = "c128" if np.iscomplexobj(a) else "f64"
    header = json.dumps({"rows": a.shape[0], "cols": a.shape[1], "dtype": tag}, sort_keys=True).encode()
    payload = np.ascontiguousarray(a, dtype=_DTYPES[tag]).tobytes()
    return MAGIC + struct.pack("<I", len(header)) + header + payload


def decode_matrix(buf: bytes) -> np.ndarray:
    if buf[:8] != MAGIC:
        raise MatrixFormatError("bad magic; not a GRIPMAT1 file")
    if len(buf) < 12:
        raise MatrixFormatError("truncated header")
    (hlen,) = struct.unpack("<I", buf[8:12])
    try:
        header = json.loads(buf[12:12 + hlen])
        rows, cols, tag = int(header["rows"]), int(header["cols"]), header["dtype"]
        dtype = _DTYPES[tag]
    except (ValueError, KeyError, TypeError) as exc:
        raise MatrixFormatError(f"invalid header: {exc}") from None
    payload = buf[12 + hlen:]
    if len(payload) != rows * cols * dtype.itemsize:
        raise MatrixFormatError(f"payload has {len(payload)} bytes, expected {rows * cols * dtype.itemsize}")
    return np.frombuffer(payload, dtype=dtype).reshape(rows, cols).copy()


def write_matrix(path, a) -> None:
    Path(path).write_bytes(encode_matrix(a))


def read_matrix(path) -> np.ndarray:
    return decode_matrix(Path(path).read_bytes())


def read_vector(path) -> np.ndarray:
    a = read_matrix(path)
    if a.shape[1] != 1:
        raise MatrixFormatError(f"expected a column vector, got shape {a.shape}")
    return a[:, 0]


def save_operator(op: BlockDiagonalOperator, directory) -> Path:
    """Write ``operator.json``, one matrix file per block and ``basis.gripmat``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    desc = op.descriptor()
    n_blocks = 1 if op.mode == "shared" else op.L
    desc["blocks"] = [f"block_{l:03d}.gripmat" for l in range(n_blocks)]
    desc["basis"] = {"kind": op.basis.kind, "D": op.basis.dim, "L": op.basis.sensors}
    for l, name in enumerate(desc["blocks"]):
        write_matrix(directory / name, op.block(l))
    if op.basis.payload is not None:
        write_matrix(directory / "basis.gripmat", op.basis.payload)
        desc["basis"]["payload"] = "basis.gripmat"
    (directory / "operator.json").write_text(json.dumps(desc, indent=2, sort_keys=True) + "\n")
    return directory


def load_operator(directory) -> BlockDiagonalOperator:
    directory = Path(directory)
    desc = json.loads((directory / "operator.json").read_text())
    b = desc["basis"]
    payload = read_matrix(directory / b["payload"]) if "payload" in b else None
    basis = make_basis(b["kind"], b["D"], b["L"], payload)
    blocks = [read_matrix(directory / name).real for name in desc["blocks"]]
    arr = blocks[0] if desc["mode"] == "shared" else np.stack(blocks)
    return BlockDiagonalOperator(arr, basis, desc["scale"], mode=desc["mode"], family=desc["family"], seed=desc["seed"])
