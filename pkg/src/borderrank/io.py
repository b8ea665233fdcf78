"""Shared tensor file format and witness sidecars.

A tensor file is a JSON object::

    {"shape": [d1, ..., dk], "scalar": "f64" | "rational", "data": [...]}

with ``data`` in row-major order.  Rational entries are strings ``"p/q"``
(integers may also appear as plain JSON integers).
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import _exact
from .tensor_core import DenseTensor, as_tensor, from_flat

F64 = "f64"
RATIONAL = "rational"


class TensorFormatError(ValueError):
    """A tensor file or JSON object does not follow the shared format."""


def scalar_to_json(v):
    """JSON form of one entry: ``"p/q"`` (or ``"p"``) for rationals and integers, a float otherwise."""
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return float(v)


def vector_to_json(v):
    return [scalar_to_json(x) for x in np.asarray(v).ravel().tolist()]


def tensor_to_json(A) -> dict:
    A = as_tensor(A)
    return {
        "shape": list(A.shape),
        "scalar": RATIONAL if A.is_exact else F64,
        "data": [scalar_to_json(x) for x in A.array.ravel().tolist()],
    }


def _parse_rational(x):
    if isinstance(x, bool):
        raise TensorFormatError("booleans are not tensor entries")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise TensorFormatError(f"bad rational entry {x!r}") from exc
    raise TensorFormatError(f"rational entries must be strings 'p/q', got {x!r}")


def _parse_float(x):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise TensorFormatError(f"f64 entries must be numbers, got {x!r}")
    return float(x)


def tensor_from_json(obj) -> DenseTensor:
    """Parse the shared format; rejects unknown scalar kinds and length mismatches."""
    if not isinstance(obj, dict):
        raise TensorFormatError("tensor file must hold a JSON object")
    missing = {"shape", "scalar", "data"} - set(obj)
    if missing:
        raise TensorFormatError(f"missing field(s): {', '.join(sorted(missing))}")
    shape, kind, data = obj["shape"], obj["scalar"], obj["data"]
    if (not isinstance(shape, list) or not shape
            or not all(isinstance(d, int) and not isinstance(d, bool) and d >= 1 for d in shape)):
        raise TensorFormatError(f"shape must be a nonempty list of positive integers, got {shape!r}")
    if not isinstance(data, list):
        raise TensorFormatError("data must be a flat list")
    if len(data) != math.prod(shape):
        raise TensorFormatError(f"data has {len(data)} entries, shape {shape} needs {math.prod(shape)}")
    if kind == RATIONAL:
        return from_flat(shape, [_parse_rational(x) for x in data], exact=True)
    if kind == F64:
        vals = [_parse_float(x) for x in data]
        if not all(math.isfinite(v) for v in vals):
            raise TensorFormatError("f64 entries must be finite")
        return from_flat(shape, vals, exact=False)
    raise TensorFormatError(f"scalar must be 'f64' or 'rational', got {kind!r}")


def dumps_tensor(A) -> str:
    return json.dumps(tensor_to_json(A))


def loads_tensor(text: str) -> DenseTensor:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TensorFormatError(f"invalid JSON: {exc}") from exc
    return tensor_from_json(obj)


def read_tensor(path) -> DenseTensor:
    return loads_tensor(Path(path).read_text())


def write_tensor(A, path) -> None:
    Path(path).write_text(dumps_tensor(A) + "\n")


def sidecar_path(path) -> Path:
    """``out.json`` -> ``out.witness.json``."""
    p = Path(path)
    stem = p.name[: -len(".json")] if p.name.endswith(".json") else p.name
    return p.with_name(stem + ".witness.json")


def terms_to_json(terms) -> list:
    """CP terms ``[(coef, [v_1, ..., v_k]), ...]`` as JSON objects."""
    return [{"coef": scalar_to_json(_exact.to_fraction(c) if isinstance(c, (int, np.integer)) else c),
             "vectors": [vector_to_json(v) for v in vecs]} for c, vecs in terms]


def write_sidecar(path, payload: dict) -> Path:
    out = sidecar_path(path)
    out.write_text(json.dumps(payload, indent=2) + "\n")
    return out
