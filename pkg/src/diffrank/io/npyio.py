"""Tensor array files: NPY v1.0 restricted to little-endian f32/f64, C order,
rank 1 or 2.

The writer always emits version 1.0 with the header space-padded so that the
payload starts on a 64-byte boundary, making output byte-reproducible. The
reader parses the header itself so that malformed files fail with a precise
error instead of whatever a general-purpose loader raises; pickled payloads
are rejected by construction because only the two float descrs are accepted.

f32 payloads are promoted to float64 at load; the declared dtype is kept on
the :class:`TensorFile` so a write after a read reproduces the original bytes
(every f32 value is exactly representable in f64).
"""

from __future__ import annotations

import ast
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..exceptions import MalformedHeader, ShapeMismatch, TruncatedPayload

__all__ = ["TensorFile", "read_tensor", "write_tensor", "read_tensor_header", "tensor_file"]

_MAGIC = b"\x93NUMPY"
_VERSION = b"\x01\x00"
_ALIGN = 64
_DESCR_BY_DTYPE = {"f32": "<f4", "f64": "<f8"}
_DTYPE_BY_DESCR = {v: k for k, v in _DESCR_BY_DTYPE.items()}
_ITEMSIZE = {"f32": 4, "f64": 8}


@dataclass(frozen=True, eq=False)
class TensorFile:
    """An array plus the dtype it is stored as on disk.

    ``data`` is always float64 in memory; ``dtype`` ("f32" or "f64") controls
    the on-disk payload width.
    """

    dtype: str
    data: np.ndarray

    def __post_init__(self):
        if self.dtype not in _DESCR_BY_DTYPE:
            raise ShapeMismatch(f"unsupported dtype {self.dtype!r}; expected 'f32' or 'f64'")
        if self.data.ndim not in (1, 2):
            raise ShapeMismatch(f"tensor rank must be 1 or 2, got shape {self.data.shape}")


def tensor_file(data, dtype: str = "f64") -> TensorFile:
    """Build a TensorFile from any array-like, validating rank and dtype."""
    return TensorFile(dtype=dtype, data=np.asarray(data, dtype=np.float64))


def _header_bytes(descr: str, shape: tuple[int, ...]) -> bytes:
    shape_repr = repr(tuple(int(n) for n in shape))
    header = f"{{'descr': '{descr}', 'fortran_order': False, 'shape': {shape_repr}, }}"
    prefix_len = len(_MAGIC) + len(_VERSION) + 2
    pad = (-(prefix_len + len(header) + 1)) % _ALIGN
    header_bytes = header.encode("latin1") + b" " * pad + b"\n"
    return _MAGIC + _VERSION + struct.pack("<H", len(header_bytes)) + header_bytes


def write_tensor(tf: TensorFile, path) -> None:
    """Serialize a TensorFile; writes to a temp file then renames atomically."""
    path = Path(path)
    descr = _DESCR_BY_DTYPE[tf.dtype]
    payload = np.ascontiguousarray(tf.data, dtype=np.dtype(descr)).tobytes()
    blob = _header_bytes(descr, tf.data.shape) + payload
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def _parse_header(blob: bytes, source: str) -> tuple[str, tuple[int, ...], int]:
    """Return (dtype key, shape, payload offset) from raw file bytes."""
    prefix_len = len(_MAGIC) + len(_VERSION) + 2
    if len(blob) < prefix_len:
        raise MalformedHeader(f"{source}: file shorter than the fixed header prefix")
    if blob[: len(_MAGIC)] != _MAGIC:
        raise MalformedHeader(f"{source}: bad magic bytes")
    if blob[len(_MAGIC) : len(_MAGIC) + 2] != _VERSION:
        raise MalformedHeader(f"{source}: unsupported format version")
    (header_len,) = struct.unpack_from("<H", blob, len(_MAGIC) + 2)
    offset = prefix_len + header_len
    if len(blob) < offset:
        raise MalformedHeader(f"{source}: declared header length {header_len} exceeds file size")
    header = blob[prefix_len:offset]
    if not header.endswith(b"\n"):
        raise MalformedHeader(f"{source}: header is not newline-terminated")
    try:
        fields = ast.literal_eval(header.decode("latin1").strip())
    except (ValueError, SyntaxError) as exc:
        raise MalformedHeader(f"{source}: header dict does not parse: {exc}") from exc
    if not isinstance(fields, dict) or set(fields) != {"descr", "fortran_order", "shape"}:
        raise MalformedHeader(f"{source}: header must declare exactly descr/fortran_order/shape")
    descr = fields["descr"]
    if descr not in _DTYPE_BY_DESCR:
        raise MalformedHeader(
            f"{source}: unsupported descr {descr!r}; only little-endian f32/f64 accepted"
        )
    if fields["fortran_order"] is not False:
        raise MalformedHeader(f"{source}: fortran_order must be False")
    shape = fields["shape"]
    if (
        not isinstance(shape, tuple)
        or len(shape) not in (1, 2)
        or not all(isinstance(n, int) and not isinstance(n, bool) and n >= 0 for n in shape)
    ):
        raise ShapeMismatch(f"{source}: shape {shape!r} is not a rank-1 or rank-2 extent")
    return _DTYPE_BY_DESCR[descr], shape, offset


def read_tensor_header(path) -> tuple[str, tuple[int, ...]]:
    """Read only the dtype and shape of a tensor file (cheap: one small read)."""
    path = Path(path)
    with open(path, "rb") as fh:
        prefix = fh.read(len(_MAGIC) + len(_VERSION) + 2)
        if len(prefix) == len(_MAGIC) + len(_VERSION) + 2:
            (header_len,) = struct.unpack_from("<H", prefix, len(_MAGIC) + 2)
            prefix += fh.read(header_len)
    dtype, shape, _ = _parse_header(prefix, str(path))
    return dtype, shape


def read_tensor(path) -> TensorFile:
    """Deserialize a tensor file, promoting f32 payloads to float64."""
    path = Path(path)
    blob = path.read_bytes()
    dtype, shape, offset = _parse_header(blob, str(path))
    count = int(np.prod(shape, dtype=np.int64)) if shape else 1
    expected = count * _ITEMSIZE[dtype]
    payload = blob[offset:]
    if len(payload) != expected:
        raise TruncatedPayload(
            f"{path}: payload is {len(payload)} bytes, header declares {expected}"
        )
    array = np.frombuffer(payload, dtype=_DESCR_BY_DTYPE[dtype]).reshape(shape)
    return TensorFile(dtype=dtype, data=array.astype(np.float64))
