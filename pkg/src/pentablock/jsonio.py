"""JSON encoding of scalars, matrices, BlockOps, reports and decompositions.

Complex numbers are ``[re, im]`` pairs. Floats are rounded through 17
significant digits, which reproduces every double exactly, so encoding is
bit-stable and decoding restores the same values.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import fields, is_dataclass
from typing import Any

import numpy as np

from .block_toeplitz import BlockOp
from .linalg_core import CommutingTriple, Subspace


class SchemaError(ValueError):
    pass


def _float(x: float):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.17g}")


def encode_complex(z) -> list:
    z = complex(z)
    return [_float(z.real), _float(z.imag)]


def encode_matrix(M) -> dict:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2:
        raise SchemaError(f"matrix must be 2-d, got shape {M.shape}")
    return {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "data": [[encode_complex(z) for z in row] for row in M],
    }


def encode_blockop(X: BlockOp) -> dict:
    return {
        "m": X.m,
        "e": X.e,
        "b": X.b,
        "r": X.r,
        "head": [{"i": i, "j": j, "block": encode_matrix(v)} for (i, j), v in sorted(X.head.items()) if np.any(v)],
        "tail": [{"d": d, "block": encode_matrix(v)} for d, v in sorted(X.tail.items()) if np.any(v)],
    }


def encode_operator(X) -> dict:
    return encode_blockop(X) if isinstance(X, BlockOp) else encode_matrix(X)


def encode_triple(t) -> dict:
    A, S, P = t
    return {"A": encode_operator(A), "S": encode_operator(S), "P": encode_operator(P)}


def encode_subspace(U: Subspace) -> dict:
    return {"ambient_dim": U.ambient_dim, "dim": U.dim, "projector": encode_matrix(U.projector)}


def to_jsonable(obj: Any):
    """Recursively convert library values into JSON-ready structures."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return encode_complex(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, BlockOp):
        return encode_blockop(obj)
    if isinstance(obj, CommutingTriple):
        return encode_triple(obj)
    if isinstance(obj, Subspace):
        return encode_subspace(obj)
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2:
            return encode_matrix(obj)
        return [to_jsonable(x) for x in obj.tolist()] if obj.dtype.kind != "c" else [encode_complex(z) for z in obj.ravel()]
    if hasattr(obj, "to_json"):
        return to_jsonable(obj.to_json())
    if is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    raise SchemaError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False)


# decoding


def decode_complex(v) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, str) and v in ("nan", "inf", "-inf"):
        return complex(float(v))
    if isinstance(v, list) and len(v) == 2:
        return complex(decode_complex(v[0]).real, decode_complex(v[1]).real)
    raise SchemaError(f"expected a number or [re, im] pair, got {v!r}")


def decode_matrix(obj) -> np.ndarray:
    if isinstance(obj, list):
        data, rows, cols = obj, len(obj), len(obj[0]) if obj else 0
    elif isinstance(obj, dict) and "data" in obj:
        data = obj["data"]
        rows = obj.get("rows", len(data))
        cols = obj.get("cols", len(data[0]) if data else 0)
    else:
        raise SchemaError("matrix must be {rows, cols, data} or a nested list")
    if len(data) != rows or any(len(row) != cols for row in data):
        raise SchemaError(f"matrix data does not match declared shape {rows}x{cols}")
    M = np.zeros((rows, cols), dtype=complex)
    for i, row in enumerate(data):
        for j, v in enumerate(row):
            M[i, j] = decode_complex(v)
    return M


def decode_blockop(obj: dict) -> BlockOp:
    try:
        head = {(int(h["i"]), int(h["j"])): decode_matrix(h["block"]) for h in obj.get("head", [])}
        tail = {int(t["d"]): decode_matrix(t["block"]) for t in obj.get("tail", [])}
        return BlockOp(int(obj["m"]), int(obj["e"]), int(obj.get("b", 0)), int(obj.get("r", 1)), head=head, tail=tail)
    except KeyError as exc:
        raise SchemaError(f"BlockOp is missing field {exc}") from None


def decode_operator(obj):
    if isinstance(obj, dict) and "m" in obj and "e" in obj:
        return decode_blockop(obj)
    return decode_matrix(obj)


def decode_ops(obj: dict, names: tuple) -> list:
    """Operators named ``names`` from a dict; scalar entries become 1x1 matrices."""
    missing = [n for n in names if n not in obj]
    if missing:
        raise SchemaError(f"missing operator field(s): {', '.join(missing)}")
    ops = []
    for n in names:
        v = obj[n]
        if isinstance(v, (int, float)) or (isinstance(v, list) and len(v) == 2 and not isinstance(v[0], list)):
            ops.append(np.array([[decode_complex(v)]]))
        else:
            ops.append(decode_operator(v))
    kinds = {isinstance(X, BlockOp) for X in ops}
    if len(kinds) > 1:
        raise SchemaError("cannot mix matrices and BlockOps")
    if kinds == {False}:
        shapes = {X.shape for X in ops}
        if len(shapes) > 1 or any(s[0] != s[1] for s in shapes):
            raise SchemaError(f"operators must be square of one size, got shapes {sorted(shapes)}")
    else:
        spaces = {(X.m, X.e) for X in ops}
        if len(spaces) > 1:
            raise SchemaError(f"BlockOps act on different spaces: {sorted(spaces)}")
    return ops


def decode_triple(obj: dict) -> list:
    if all(k in obj for k in ("a", "s", "p")) and not all(k in obj for k in ("A", "S", "P")):
        return decode_ops(obj, ("a", "s", "p"))
    return decode_ops(obj, ("A", "S", "P"))
