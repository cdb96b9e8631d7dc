"""Numerical tolerances shared by every module."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass

ENV_TOL_EQ = "GEMENGELAB_TOL_EQ"

#: Largest composite dimension ``tensor`` will build.
MAX_DIM = 2**20


@dataclass(frozen=True)
class Tolerances:
    """Absolute tolerances.

    ``norm``, ``herm``, ``orth`` and ``pos`` guard the validity of inputs,
    ``eq`` is used for every identity checked between two computed values,
    ``var`` is the standard-deviation floor below which a normalized
    correlation is undefined and ``rec`` bounds state reconstruction error.
    """

    norm: float = 1e-10
    herm: float = 1e-10
    orth: float = 1e-10
    pos: float = 1e-10
    eq: float = 1e-8
    var: float = 1e-8
    rec: float = 1e-8

    def replace(self, **changes: float) -> "Tolerances":
        unknown = set(changes) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise KeyError(f"unknown tolerance key(s): {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **{k: float(v) for k, v in changes.items()})


def default_tolerances() -> Tolerances:
    """Defaults, with ``eq`` overridable through ``GEMENGELAB_TOL_EQ``."""
    tol = Tolerances()
    raw = os.environ.get(ENV_TOL_EQ)
    if raw:
        tol = tol.replace(eq=float(raw))
    return tol


def resolve(tol: Tolerances | None) -> Tolerances:
    return default_tolerances() if tol is None else tol
