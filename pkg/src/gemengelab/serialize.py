"""JSON encodings for matrices, vectors and reports."""

from __future__ import annotations

import json
import math

import numpy as np


def _num(x: float) -> float | str:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return str(x)
    return x


def complex_to_json(z) -> list:
    z = complex(z)
    return [_num(z.real), _num(z.imag)]


def vector_to_json(v) -> list:
    arr = np.asarray(getattr(v, "data", v)).reshape(-1)
    return [complex_to_json(z) for z in arr]


def matrix_to_json(m) -> list:
    """Row-major nested lists of ``[re, im]`` pairs."""
    arr = np.asarray(getattr(m, "data", m))
    return [[complex_to_json(z) for z in row] for row in arr]


def matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, default=_default)


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
