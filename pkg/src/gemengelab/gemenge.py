"""States carrying preparation-defined convex decompositions.

Two GemengeStates with the same operator can differ in their branch lists,
so a GemengeState is compared branch by branch, never through
``as_operator`` alone.  New multi-branch structure enters only through
``GemengeState.declare`` (an explicit random-mixture preparation) and the
Rule 2 transform in :mod:`gemengelab.detector`; every other operation here
maps k branches to at most k branches.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from gemengelab.config import Tolerances, resolve
from gemengelab.errors import GemengeError, NotProductFormError, NotUnitaryError
from gemengelab.hilbert import (
    Operator,
    StateOperator,
    as_array,
    as_state_operator,
    operator_norm,
    partial_trace,
    unitarity_residual,
)


class Provenance(str, enum.Enum):
    DECLARED = "declared-preparation"
    RULE2 = "rule2-generated"
    TRIVIAL = "trivial"


@dataclass(frozen=True, eq=False)
class Branch:
    weight: float
    state: StateOperator
    tag: str | None = None


def _branch_key(b: Branch):
    flat = b.state.data.reshape(-1)
    return (-b.weight, tuple(np.round(np.concatenate([flat.real, flat.imag]), 12)))


@dataclass(frozen=True, eq=False)
class GemengeState:
    """Weighted branches plus a provenance tag.

    Branches are stored in canonical order: descending weight, ties broken
    by the first differing matrix entry.  A single branch always carries
    ``Provenance.TRIVIAL``.
    """

    branches: tuple[Branch, ...]
    provenance: Provenance = Provenance.TRIVIAL

    def __post_init__(self):
        branches = tuple(self.branches)
        if not branches:
            raise GemengeError("a gemenge needs at least one branch")
        dims = {b.state.dims for b in branches}
        if len(dims) != 1:
            raise GemengeError(f"branches live on different spaces: {sorted(dims)}")
        if any(not b.weight > 0 for b in branches):
            raise GemengeError("branch weights must be positive")
        tol = resolve(None)
        total = sum(b.weight for b in branches)
        if abs(total - 1.0) > tol.norm:
            raise GemengeError(f"branch weights sum to {total:.12g}, not 1")
        branches = tuple(sorted(branches, key=_branch_key))
        object.__setattr__(self, "branches", branches)
        prov = Provenance(self.provenance)
        if len(branches) == 1:
            prov = Provenance.TRIVIAL
        object.__setattr__(self, "provenance", prov)

    @classmethod
    def trivial(cls, state) -> "GemengeState":
        return cls((Branch(1.0, as_state_operator(state)),))

    @classmethod
    def declare(cls, branches: Iterable[tuple], tol: Tolerances | None = None) -> "GemengeState":
        """Random mixture of preparations with rates ``w_k`` of states ``T_k``.

        ``branches`` yields ``(w_k, T_k)`` or ``(w_k, T_k, tag)``.
        """
        items = [Branch(float(b[0]), as_state_operator(b[1], tol), *(b[2:3])) for b in branches]
        return cls(tuple(items), Provenance.DECLARED)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.branches[0].state.dims

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(b.weight for b in self.branches)

    @property
    def states(self) -> tuple[StateOperator, ...]:
        return tuple(b.state for b in self.branches)

    @property
    def is_trivial(self) -> bool:
        return len(self.branches) == 1

    def as_operator(self) -> StateOperator:
        """The mixed operator ``sum_k w_k T_k``.  Drops the branch structure."""
        return as_operator(self)

    def equivalent(self, other: "GemengeState", tol: Tolerances | None = None) -> bool:
        """Same provenance and the same branch list up to permutation."""
        tol = resolve(tol)
        if self.provenance != other.provenance or len(self.branches) != len(other.branches):
            return False
        return _match_branches(
            [(b.weight, b.state.data) for b in self.branches],
            [(b.weight, b.state.data) for b in other.branches],
            tol.eq,
        )

    def to_dict(self) -> dict:
        from gemengelab.serialize import matrix_to_json

        return {
            "provenance": self.provenance.value,
            "dims": list(self.dims),
            "branches": [
                {"weight": b.weight, "tag": b.tag, "state": matrix_to_json(b.state.data)}
                for b in self.branches
            ],
        }


def _match_branches(a: Sequence[tuple], b: Sequence[tuple], tol: float) -> bool:
    """Greedy permutation match of ``(weight, matrix)`` lists."""
    if len(a) != len(b):
        return False
    used = [False] * len(b)
    for wa, ma in a:
        for j, (wb, mb) in enumerate(b):
            if not used[j] and abs(wa - wb) <= tol and operator_norm(ma - mb) <= tol:
                used[j] = True
                break
        else:
            return False
    return True


def as_operator(g: GemengeState) -> StateOperator:
    data = sum(b.weight * b.state.data for b in g.branches)
    return StateOperator(data, g.dims, check=False)


def evolve_unitary(g: GemengeState, u, tol: Tolerances | None = None) -> GemengeState:
    """Conjugate every branch by ``u``; weights, tags and provenance are kept."""
    tol = resolve(tol)
    um = as_array(u)
    res = unitarity_residual(um)
    if res > tol.eq:
        raise NotUnitaryError(f"evolution operator not unitary (residual {res:.3e})")
    if um.shape[0] != g.branches[0].state.dim:
        raise GemengeError("unitary and gemenge dimensions differ")
    out = tuple(
        Branch(b.weight, StateOperator(um @ b.state.data @ um.conj().T, g.dims, check=False), b.tag)
        for b in g.branches
    )
    return GemengeState(out, g.provenance)


def product_residual(t, dims: tuple[int, int] | None = None) -> float:
    """Distance of a bipartite operator from product form.

    The operator is realigned into a ``(dA^2, dB^2)`` matrix whose rank is 1
    exactly when ``t = A (x) B``; the residual is the Frobenius weight of the
    singular values beyond the first, relative to ``|t|_F``.
    """
    mat = as_array(t)
    if dims is None:
        dims = t.dims
    if len(dims) != 2:
        raise GemengeError(f"product test needs a bipartite space, got dims {dims}")
    da, db = dims
    realigned = mat.reshape(da, db, da, db).transpose(0, 2, 1, 3).reshape(da * da, db * db)
    s = np.linalg.svd(realigned, compute_uv=False)
    total = np.linalg.norm(s)
    if total == 0:
        return 0.0
    return float(np.linalg.norm(s[1:]) / total)


def partial_trace_gemenge(g: GemengeState, keep: int = 0, tol: Tolerances | None = None) -> GemengeState:
    """Reduce a gemenge of product branches ``T_k (x) T'_k`` to ``T_k``.

    Any branch that is not a product within ``tol.eq`` makes the reduction
    impossible: no gemenge of the subsystem can come from an entangled branch.
    """
    tol = resolve(tol)
    if len(g.dims) != 2:
        raise GemengeError(f"expected a bipartite gemenge, got dims {g.dims}")
    for i, b in enumerate(g.branches):
        res = product_residual(b.state)
        if res > tol.eq:
            raise NotProductFormError(f"branch {i} is not of product form (residual {res:.3e})")
    out = tuple(Branch(b.weight, partial_trace(b.state, keep), b.tag) for b in g.branches)
    return GemengeState(out, g.provenance)


def coarsen(g: GemengeState, grouping: Sequence[Sequence[int]]) -> GemengeState:
    """Merge branches by a partition of branch indices (canonical order).

    Each group becomes one branch with the summed weight and the
    weight-normalized mixture of its states.
    """
    n = len(g.branches)
    seen = [idx for cell in grouping for idx in cell]
    if any(len(cell) == 0 for cell in grouping):
        raise GemengeError("partition has an empty cell")
    if sorted(seen) != list(range(n)):
        raise GemengeError(f"grouping is not a partition of range({n})")
    merged = []
    for cell in grouping:
        w = sum(g.branches[i].weight for i in cell)
        data = sum(g.branches[i].weight * g.branches[i].state.data for i in cell) / w
        tags = {g.branches[i].tag for i in cell}
        merged.append(Branch(w, StateOperator(data, g.dims, check=False), tags.pop() if len(tags) == 1 else None))
    return GemengeState(tuple(merged), g.provenance)


def branch_operators(g: GemengeState) -> list[Operator]:
    return [b.state for b in g.branches]
