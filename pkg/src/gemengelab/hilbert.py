"""Vectors, operators and the linear-algebra primitives built on them.

Every space is a finite-dimensional truncation.  Composite spaces are tracked
through a ``dims`` tuple listing the factor dimensions in tensor order, so a
two-qubit vector has ``dims == (2, 2)`` and a plain 5-level system ``(5,)``.
Arrays held by the value types are made read-only on construction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from gemengelab.config import MAX_DIM, Tolerances, resolve
from gemengelab.errors import (
    DimensionError,
    InvalidStateError,
    NotUnitaryError,
    OrthonormalityError,
    ZeroProjectionError,
)

# Gram-Schmidt acceptance threshold for candidate basis vectors.  Any nonempty
# complement always contains a basis vector with residual >= 1/sqrt(dim).
_GS_ACCEPT = 1e-6


@dataclass(frozen=True)
class HilbertSpace:
    dim: int
    label: str = ""

    def __post_init__(self):
        if int(self.dim) < 1:
            raise DimensionError(f"dimension must be >= 1, got {self.dim}")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _check_dims(dims, size: int) -> tuple[int, ...]:
    dims = (size,) if dims is None else tuple(int(d) for d in dims)
    if any(d < 1 for d in dims) or math.prod(dims) != size:
        raise DimensionError(f"factor dims {dims} do not multiply to {size}")
    return dims


def as_array(x) -> np.ndarray:
    """Underlying complex array of a StateVector/Operator, or of any array-like."""
    if isinstance(x, (StateVector, Operator)):
        return x.data
    return np.asarray(x, dtype=complex)


class StateVector:
    """A unit vector, optionally on a product space."""

    __slots__ = ("data", "dims")

    def __init__(self, data, dims: Sequence[int] | None = None, *, check: bool = True,
                 tol: Tolerances | None = None):
        arr = np.array(as_array(data), dtype=complex).reshape(-1)
        self.dims = _check_dims(dims, arr.size)
        if check:
            err = abs(np.linalg.norm(arr) - 1.0)
            if err > resolve(tol).norm:
                raise InvalidStateError(f"state vector norm deviates from 1 by {err:.3e}")
        self.data = _frozen(arr)

    @classmethod
    def normalized(cls, data, dims: Sequence[int] | None = None) -> "StateVector":
        arr = np.asarray(as_array(data), dtype=complex).reshape(-1)
        nrm = np.linalg.norm(arr)
        if nrm == 0:
            raise InvalidStateError("cannot normalize the zero vector")
        return cls(arr / nrm, dims, check=False)

    @classmethod
    def basis(cls, dim: int, index: int, dims: Sequence[int] | None = None) -> "StateVector":
        arr = np.zeros(dim, dtype=complex)
        arr[index] = 1.0
        return cls(arr, dims, check=False)

    @property
    def dim(self) -> int:
        return self.data.size

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace(self.dim)

    def inner(self, other) -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.data, as_array(other)))

    def projector(self) -> "StateOperator":
        return StateOperator(np.outer(self.data, self.data.conj()), self.dims, check=False)

    def __repr__(self):
        return f"StateVector(dims={self.dims}, data={np.array2string(self.data, precision=4)})"


class Operator:
    """A square complex matrix acting on a (possibly composite) space."""

    __slots__ = ("data", "dims")

    def __init__(self, data, dims: Sequence[int] | None = None):
        arr = np.array(as_array(data), dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"operator must be a square matrix, got shape {arr.shape}")
        self.dims = _check_dims(dims, arr.shape[0])
        self.data = _frozen(arr)

    @classmethod
    def identity(cls, dim: int, dims: Sequence[int] | None = None) -> "Operator":
        return cls(np.eye(dim, dtype=complex), dims)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def dag(self) -> "Operator":
        return Operator(self.data.conj().T, self.dims)

    def norm(self) -> float:
        return operator_norm(self.data)

    def is_hermitian(self, tol: Tolerances | None = None) -> bool:
        return hermiticity_residual(self.data) <= resolve(tol).herm

    def is_unitary(self, tol: Tolerances | None = None) -> bool:
        return unitarity_residual(self.data) <= resolve(tol).eq

    def is_positive(self, tol: Tolerances | None = None) -> bool:
        tol = resolve(tol)
        if hermiticity_residual(self.data) > tol.herm:
            return False
        return bool(np.linalg.eigvalsh(_herm_part(self.data)).min() >= -tol.pos)

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            return self.data @ other.data
        return Operator(self.data @ as_array(other), self.dims)

    def __repr__(self):
        return f"{type(self).__name__}(dims={self.dims})"


class StateOperator(Operator):
    """Density operator: Hermitian, positive semidefinite, unit trace."""

    __slots__ = ()

    def __init__(self, data, dims: Sequence[int] | None = None, *, check: bool = True,
                 tol: Tolerances | None = None):
        super().__init__(data, dims)
        if check:
            tol = resolve(tol)
            herm = hermiticity_residual(self.data)
            if herm > tol.herm:
                raise InvalidStateError(f"state operator not Hermitian (residual {herm:.3e})")
            lo = np.linalg.eigvalsh(_herm_part(self.data)).min()
            if lo < -tol.pos:
                raise InvalidStateError(f"state operator has negative eigenvalue {lo:.3e}")
            tr = np.trace(self.data)
            if abs(tr - 1.0) > tol.norm:
                raise InvalidStateError(f"state operator trace is {tr.real:.12g}, not 1")

    @classmethod
    def from_vector(cls, vec: StateVector) -> "StateOperator":
        return vec.projector()

    @classmethod
    def maximally_mixed(cls, dim: int, dims: Sequence[int] | None = None) -> "StateOperator":
        return cls(np.eye(dim, dtype=complex) / dim, dims, check=False)

    def purity(self) -> float:
        return float(np.real(np.trace(self.data @ self.data)))


def as_state_operator(x, tol: Tolerances | None = None) -> StateOperator:
    if isinstance(x, StateOperator):
        return x
    if isinstance(x, StateVector):
        return x.projector()
    if isinstance(x, Operator):
        return StateOperator(x.data, x.dims, tol=tol)
    arr = np.asarray(x, dtype=complex)
    if arr.ndim == 1:
        return StateVector(arr, tol=tol).projector()
    return StateOperator(arr, tol=tol)


def _herm_part(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def operator_norm(a) -> float:
    """Largest singular value, i.e. sup of ``|A psi|`` over unit ``psi``."""
    a = as_array(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def hermiticity_residual(a) -> float:
    a = as_array(a)
    return operator_norm(a - a.conj().T)


def unitarity_residual(a) -> float:
    a = as_array(a)
    return operator_norm(a.conj().T @ a - np.eye(a.shape[0]))


def orthonormality_residual(vectors) -> float:
    """``max |<v_i|v_j> - delta_ij|`` over a family of vectors (rows)."""
    vecs = _rows(vectors)
    if vecs.shape[0] == 0:
        return 0.0
    gram = vecs.conj() @ vecs.T
    return float(np.abs(gram - np.eye(vecs.shape[0])).max())


def _rows(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        return vectors.astype(complex)
    rows = [as_array(v).reshape(-1) for v in vectors]
    if not rows:
        return np.zeros((0, 0), dtype=complex)
    return np.array(rows, dtype=complex)


def tensor(a, b):
    """Kronecker product of two vectors or two operators, factor order kept.

    >>> tensor(StateVector.basis(2, 0), StateVector.basis(2, 1)).data.argmax()
    1
    """
    dim = a.dim * b.dim
    if dim > MAX_DIM:
        raise DimensionError(f"product dimension {dim} exceeds cap {MAX_DIM}")
    dims = a.dims + b.dims
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(np.kron(a.data, b.data), dims, check=False)
    if isinstance(a, StateVector) or isinstance(b, StateVector):
        raise TypeError("tensor needs two vectors or two operators")
    data = np.kron(a.data, b.data)
    if isinstance(a, StateOperator) and isinstance(b, StateOperator):
        return StateOperator(data, dims, check=False)
    return Operator(data, dims)


def tensor_all(items: Iterable):
    items = list(items)
    if not items:
        raise ValueError("tensor_all needs at least one factor")
    out = items[0]
    for item in items[1:]:
        out = tensor(out, item)
    return out


_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def partial_trace(state, keep: int | Sequence[int]):
    """Trace out every factor not listed in ``keep``.

    ``state`` may be a StateOperator, a generic Operator or a StateVector
    (treated as its projector).  The kept factors stay in their original order.
    """
    if isinstance(state, StateVector):
        state = state.projector()
    dims = state.dims
    n = len(dims)
    keep_idx = sorted({keep} if isinstance(keep, (int, np.integer)) else set(keep))
    if not keep_idx or any(k < 0 or k >= n for k in keep_idx):
        raise DimensionError(f"factor index {keep} out of range for {n} factors")
    if n > len(_LETTERS) // 2:
        raise DimensionError("too many tensor factors")
    rows = list(_LETTERS[:n])
    cols = [rows[i] if i not in keep_idx else _LETTERS[n + i] for i in range(n)]
    out = "".join(rows[i] for i in keep_idx) + "".join(cols[i] for i in keep_idx)
    tens = state.data.reshape(dims + dims)
    kept_dims = tuple(dims[i] for i in keep_idx)
    d = math.prod(kept_dims)
    red = np.einsum("".join(rows) + "".join(cols) + "->" + out, tens).reshape(d, d)
    if isinstance(state, StateOperator):
        return StateOperator(red, kept_dims, check=False)
    return Operator(red, kept_dims)


@dataclass(frozen=True, eq=False)
class SchmidtForm:
    """``sum_k c_k left_k (x) right_k`` with orthonormal left/right families.

    ``schmidt_decompose`` returns nonnegative real coefficients in
    nonincreasing order.  Forms built directly may carry complex
    coefficients relative to fixed bases.
    """

    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray
    left_dims: tuple[int, ...]
    right_dims: tuple[int, ...]

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex).reshape(-1)
        if np.all(np.abs(c.imag) == 0):
            c = c.real.copy()
        left, right = _rows(self.left), _rows(self.right)
        if left.shape[0] != c.size or right.shape[0] != c.size:
            raise DimensionError("need one left and one right vector per coefficient")
        object.__setattr__(self, "coefficients", _frozen(c))
        object.__setattr__(self, "left", _frozen(left))
        object.__setattr__(self, "right", _frozen(right))
        object.__setattr__(self, "left_dims", _check_dims(self.left_dims, left.shape[1]))
        object.__setattr__(self, "right_dims", _check_dims(self.right_dims, right.shape[1]))

    @classmethod
    def from_families(cls, coefficients, left, right, tol: Tolerances | None = None) -> "SchmidtForm":
        """Build and validate a form from explicit bases (vectors or arrays)."""
        tol = resolve(tol)
        ldims = left[0].dims if isinstance(left[0], StateVector) else None
        rdims = right[0].dims if isinstance(right[0], StateVector) else None
        lrows, rrows = _rows(left), _rows(right)
        form = cls(coefficients, lrows, rrows, ldims or (lrows.shape[1],), rdims or (rrows.shape[1],))
        form.validate(tol)
        return form

    def validate(self, tol: Tolerances | None = None) -> None:
        tol = resolve(tol)
        total = float(np.sum(np.abs(self.coefficients) ** 2))
        if abs(total - 1.0) > tol.norm:
            raise InvalidStateError(f"squared coefficients sum to {total:.12g}")
        for name, fam in (("left", self.left), ("right", self.right)):
            res = orthonormality_residual(fam)
            if res > tol.orth:
                raise OrthonormalityError(f"{name} Schmidt family not orthonormal ({res:.3e})")

    @property
    def size(self) -> int:
        return self.coefficients.size

    def rank(self, tol: float = 1e-10) -> int:
        return int(np.sum(np.abs(self.coefficients) > tol))

    def to_vector(self) -> StateVector:
        amps = np.einsum("k,ki,kj->ij", self.coefficients, self.left, self.right).reshape(-1)
        return StateVector(amps, self.left_dims + self.right_dims, check=False)


def _leading_index(v: np.ndarray, tol: float) -> int:
    nz = np.flatnonzero(np.abs(v) > tol)
    return int(nz[0]) if nz.size else v.size


def schmidt_decompose(phi: StateVector, split: int = 1, tol: Tolerances | None = None) -> SchmidtForm:
    """Schmidt decomposition across the cut after factor ``split``.

    All ``min(d_left, d_right)`` terms are returned, zero coefficients
    included; use ``SchmidtForm.rank`` for the Schmidt rank.  Each left
    vector is phased so that its leading nonzero amplitude is real positive,
    and equal coefficients are ordered by that leading index.
    """
    tol = resolve(tol)
    dims = phi.dims
    if not 1 <= split < len(dims):
        raise DimensionError(f"cannot split {len(dims)} factor(s) at {split}")
    ldims, rdims = dims[:split], dims[split:]
    mat = phi.data.reshape(math.prod(ldims), math.prod(rdims))
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    left = u.T.copy()
    right = vh.copy()
    lead = []
    for k in range(s.size):
        idx = _leading_index(left[k], tol.orth)
        if idx < left.shape[1]:
            phase = left[k, idx] / abs(left[k, idx])
            left[k] *= phase.conjugate()
            right[k] *= phase
        lead.append(idx)
    # svd already sorts descending; regroup ties by leading index
    order = list(range(s.size))
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and s[order[i]] - s[order[j + 1]] <= tol.eq:
            j += 1
        order[i:j + 1] = sorted(order[i:j + 1], key=lambda k: lead[k])
        i = j + 1
    return SchmidtForm(s[order], left[order], right[order], ldims, rdims)


def _extend_to_basis(family: np.ndarray, dim: int) -> np.ndarray:
    """Columns: the family, then Gram-Schmidt survivors of e_0, e_1, ... in order."""
    cols = [v.astype(complex) for v in family]
    for i in range(dim):
        if len(cols) == dim:
            break
        cand = np.zeros(dim, dtype=complex)
        cand[i] = 1.0
        for _ in range(2):  # re-orthogonalize once for stability
            for c in cols:
                cand = cand - np.vdot(c, cand) * c
        nrm = np.linalg.norm(cand)
        if nrm > _GS_ACCEPT:
            cols.append(cand / nrm)
    return np.array(cols, dtype=complex).T.reshape(dim, dim)


def complete_unitary(pairs: Sequence[tuple], dim: int | None = None, dims: Sequence[int] | None = None,
                     tol: Tolerances | None = None) -> Operator:
    """Unitary ``U`` with ``U in_i = out_i`` for every ``(in_i, out_i)`` pair.

    The complement is filled deterministically: both families are extended by
    Gram-Schmidt over the computational basis in index order and the i-th
    extension vector of the inputs is sent to the i-th of the outputs.
    """
    tol = resolve(tol)
    ins = _rows([p[0] for p in pairs])
    outs = _rows([p[1] for p in pairs])
    if dim is None:
        if dims is not None:
            dim = math.prod(dims)
        elif pairs:
            dim = ins.shape[1]
            first = pairs[0][0]
            dims = first.dims if isinstance(first, StateVector) else None
        else:
            raise DimensionError("dimension required when no pairs are given")
    if pairs and (ins.shape[1] != dim or outs.shape[1] != dim):
        raise DimensionError("pair vectors must live in the operator's space")
    if ins.shape[0] > dim:
        raise OrthonormalityError("more pairs than the space dimension")
    for name, fam in (("input", ins), ("output", outs)):
        res = orthonormality_residual(fam)
        if res > tol.orth:
            raise OrthonormalityError(f"{name} family not orthonormal (residual {res:.3e})")
    if not pairs:
        ins = outs = np.zeros((0, dim), dtype=complex)
    u = _extend_to_basis(outs, dim) @ _extend_to_basis(ins, dim).conj().T
    res = unitarity_residual(u)
    if res > tol.eq:
        raise NotUnitaryError(f"completed operator not unitary (residual {res:.3e})")
    return Operator(u, dims)


def _parse_statistics(statistics) -> int:
    if statistics in (1, "+", "boson", "bosonic", "symmetric", "s"):
        return 1
    if statistics in (-1, "-", "fermion", "fermionic", "antisymmetric", "a"):
        return -1
    raise ValueError(f"unknown statistics {statistics!r}")


def permutation_parity(perm: Sequence[int]) -> int:
    inversions = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j])
    return -1 if inversions % 2 else 1


def symmetric_projection(psi, statistics=1) -> np.ndarray:
    """Unnormalized projection onto the (anti)symmetric subspace.

    ``statistics`` is ``+1``/``"boson"`` or ``-1``/``"fermion"``.
    """
    sign = _parse_statistics(statistics)
    dims = psi.dims
    if len(set(dims)) != 1:
        raise DimensionError(f"factors must share one space, got dims {dims}")
    n = len(dims)
    tens = psi.data.reshape(dims)
    acc = np.zeros_like(tens)
    for perm in itertools.permutations(range(n)):
        term = np.transpose(tens, perm)
        acc += term if sign == 1 else permutation_parity(perm) * term
    return acc.reshape(-1) / math.factorial(n)


def symmetrize(psi: StateVector, statistics=1, tol: Tolerances | None = None) -> StateVector:
    """Project onto the (anti)symmetric subspace and renormalize.

    Raises ZeroProjectionError when nothing survives (e.g. antisymmetrizing
    a doubly occupied product).
    """
    proj = symmetric_projection(psi, statistics)
    nrm = np.linalg.norm(proj)
    if nrm <= resolve(tol).norm:
        raise ZeroProjectionError("(anti)symmetrization gives the zero vector")
    return StateVector(proj / nrm, psi.dims, check=False)


def antisymmetrize(psi: StateVector, tol: Tolerances | None = None) -> StateVector:
    return symmetrize(psi, -1, tol)
