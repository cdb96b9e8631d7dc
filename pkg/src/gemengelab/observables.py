"""Sharp observables and POV measures over finite outcome sets.

Outcomes are opaque string labels.  Borel sets of outcomes become subsets of
labels, so sigma-additivity reduces to finite additivity, which holds by
construction for ``POVMeasure.effect``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from gemengelab.config import Tolerances, resolve
from gemengelab.errors import DimensionError, InvalidEffectError, OrthonormalityError
from gemengelab.hilbert import (
    Operator,
    StateVector,
    _rows,
    as_array,
    as_state_operator,
    hermiticity_residual,
    operator_norm,
    orthonormality_residual,
)


def _min_eig(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((a + a.conj().T) / 2).min())


class Effect(Operator):
    """Operator ``E`` with ``0 <= E <= 1``; validated on construction."""

    __slots__ = ()

    def __init__(self, data, dims=None, tol: Tolerances | None = None):
        super().__init__(data, dims)
        tol = resolve(tol)
        if hermiticity_residual(self.data) > tol.herm:
            raise InvalidEffectError("effect is not Hermitian")
        lo = _min_eig(self.data)
        hi = 1.0 - _min_eig(np.eye(self.dim) - self.data)
        if lo < -tol.pos or hi > 1.0 + tol.pos:
            raise InvalidEffectError(f"effect spectrum [{lo:.3g}, {hi:.3g}] leaves [0, 1]")


@dataclass(frozen=True, eq=False)
class POVMeasure:
    """One effect per outcome label.  Not validated on construction; see ``validate_povm``."""

    outcomes: tuple[str, ...]
    effects: tuple[np.ndarray, ...]
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        outcomes = tuple(str(o) for o in self.outcomes)
        effects = tuple(np.array(as_array(e), dtype=complex) for e in self.effects)
        if len(outcomes) != len(effects) or not effects:
            raise DimensionError("need one effect per outcome")
        if len(set(outcomes)) != len(outcomes):
            raise ValueError("duplicate outcome labels")
        dims = {e.shape for e in effects}
        if len(dims) != 1 or effects[0].ndim != 2 or effects[0].shape[0] != effects[0].shape[1]:
            raise DimensionError(f"effects must be square matrices of one size, got {dims}")
        for e in effects:
            e.flags.writeable = False
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "effects", effects)
        if self.values is not None:
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, object]) -> "POVMeasure":
        return cls(tuple(mapping), tuple(mapping.values()))

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def index(self, label: str) -> int:
        try:
            return self.outcomes.index(str(label))
        except ValueError:
            raise KeyError(f"unknown outcome {label!r}") from None

    def effect(self, subset: Iterable[str]) -> np.ndarray:
        """``E(X)`` for a set of outcome labels."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for label in set(subset):
            out = out + self.effects[self.index(label)]
        return out


@dataclass(frozen=True)
class PovmReport:
    positivity_ok: bool
    positivity_residual: float
    upper_bound_ok: bool
    upper_bound_residual: float
    additivity_ok: bool
    additivity_residual: float
    normalization_ok: bool
    normalization_residual: float
    failures: tuple[str, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "positivity": {"ok": self.positivity_ok, "residual": self.positivity_residual},
            "upper_bound": {"ok": self.upper_bound_ok, "residual": self.upper_bound_residual},
            "additivity": {"ok": self.additivity_ok, "residual": self.additivity_residual},
            "normalization": {"ok": self.normalization_ok, "residual": self.normalization_residual},
            "failures": list(self.failures),
        }


def validate_povm(m: POVMeasure, identity=None, tol: Tolerances | None = None) -> PovmReport:
    """Check positivity, the effect bound, additivity and normalization.

    ``identity`` defaults to the identity on the full space; pass ``P_D`` to
    validate a D-localized family against the identity of ``H_D``.
    Residuals are how far each axiom is violated (0 when it holds exactly).
    """
    tol = resolve(tol)
    eye = np.eye(m.dim) if identity is None else as_array(identity)
    pos_res = max(max(0.0, -_min_eig(e)) + hermiticity_residual(e) for e in m.effects)
    upper_res = max(max(0.0, -_min_eig(eye - e)) for e in m.effects)
    # disjoint unions: every split of every subset of labels (capped)
    labels = m.outcomes
    add_res = 0.0
    subsets = []
    for r in range(1, min(len(labels), 4) + 1):
        subsets.extend(itertools.combinations(labels, r))
    for sub in subsets[:64]:
        for cut in range(1, len(sub)):
            x, y = sub[:cut], sub[cut:]
            add_res = max(add_res, operator_norm(m.effect(sub) - m.effect(x) - m.effect(y)))
    norm_res = operator_norm(m.effect(labels) - eye)
    failures = []
    if pos_res > tol.pos:
        failures.append("positivity")
    if upper_res > tol.pos:
        failures.append("effect exceeds identity")
    if add_res > tol.eq:
        failures.append("additivity")
    if norm_res > tol.eq:
        failures.append("normalization")
    return PovmReport(
        pos_res <= tol.pos, pos_res,
        upper_res <= tol.pos, upper_res,
        add_res <= tol.eq, add_res,
        norm_res <= tol.eq, norm_res,
        tuple(failures),
    )


def probability(state, effect, tol: Tolerances | None = None) -> float:
    """``tr[T E]``, snapped into [0, 1] when within ``eq`` of an end point."""
    tol = resolve(tol)
    t = as_state_operator(state, tol).data
    e = as_array(effect)
    if t.shape != e.shape:
        raise DimensionError(f"state {t.shape} and effect {e.shape} differ in dimension")
    p = float(np.real(np.einsum("ij,ji->", t, e)))
    if -tol.eq <= p < 0.0:
        return 0.0
    if 1.0 < p <= 1.0 + tol.eq:
        return 1.0
    return p


@dataclass(frozen=True, eq=False)
class SharpObservable:
    """Discrete observable with eigenvalues ``values`` and eigenvector families.

    ``families[k]`` holds the orthonormal eigenvectors (rows) spanning the
    eigenspace of outcome ``labels[k]``; together they form a complete
    orthonormal basis.
    """

    labels: tuple[str, ...]
    values: tuple[float, ...]
    families: tuple[np.ndarray, ...]

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        values = tuple(float(v) for v in self.values)
        fams = tuple(_rows(f) for f in self.families)
        if not (len(labels) == len(values) == len(fams)) or not labels:
            raise DimensionError("labels, values and families must have equal nonzero length")
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate outcome labels")
        if len(set(values)) != len(values):
            raise ValueError("eigenvalues must be distinct")
        if any(f.shape[0] == 0 for f in fams) or len({f.shape[1] for f in fams}) != 1:
            raise DimensionError("each eigenspace needs at least one vector of the common dimension")
        for f in fams:
            f.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "families", fams)

    @classmethod
    def from_families(cls, labels: Sequence[str], values: Sequence[float], families,
                      tol: Tolerances | None = None) -> "SharpObservable":
        obs = cls(tuple(labels), tuple(values), tuple(families))
        obs.validate(tol)
        return obs

    @classmethod
    def from_hermitian(cls, matrix, labels: Sequence[str] | None = None,
                       tol: Tolerances | None = None) -> "SharpObservable":
        """Group the eigenvectors of a Hermitian matrix by (tolerance-equal) eigenvalue."""
        tol = resolve(tol)
        a = as_array(matrix)
        if hermiticity_residual(a) > tol.herm:
            raise InvalidEffectError("observable matrix is not Hermitian")
        w, v = np.linalg.eigh((a + a.conj().T) / 2)
        groups: list[list[int]] = []
        for i in range(w.size):
            if groups and abs(w[i] - w[groups[-1][0]]) <= tol.eq:
                groups[-1].append(i)
            else:
                groups.append([i])
        values = [float(np.mean(w[g])) for g in groups]
        fams = [v[:, g].T for g in groups]
        if labels is None:
            labels = [f"{x:g}" for x in values]
        return cls(tuple(labels), tuple(values), tuple(fams))

    @classmethod
    def from_basis(cls, vectors, labels: Sequence[str], values: Sequence[float] | None = None,
                   tol: Tolerances | None = None) -> "SharpObservable":
        """Nondegenerate observable with one eigenvector per outcome."""
        rows = _rows(vectors)
        if values is None:
            values = range(len(rows))
        return cls.from_families(labels, values, [r[None, :] for r in rows], tol)

    @property
    def dim(self) -> int:
        return self.families[0].shape[1]

    @property
    def degeneracies(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.families)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise KeyError(f"unknown outcome {label!r}") from None

    def validate(self, tol: Tolerances | None = None) -> None:
        tol = resolve(tol)
        allvecs = np.vstack(self.families)
        res = orthonormality_residual(allvecs)
        if res > tol.orth:
            raise OrthonormalityError(f"eigenvectors not orthonormal (residual {res:.3e})")
        if allvecs.shape[0] != self.dim:
            raise OrthonormalityError("eigenvectors do not form a complete basis")

    def projection(self, k: int | str) -> np.ndarray:
        """``E_k = sum_j |phi_kj><phi_kj|``."""
        k = self.index(k) if isinstance(k, str) else k
        f = self.families[k]
        return f.T @ f.conj()

    def projections(self) -> tuple[np.ndarray, ...]:
        return tuple(self.projection(k) for k in range(len(self.labels)))

    def matrix(self) -> np.ndarray:
        return sum(v * p for v, p in zip(self.values, self.projections()))

    def as_povm(self) -> POVMeasure:
        return POVMeasure(self.labels, self.projections(), self.values)

    def eigenvectors(self) -> list[tuple[int, int, StateVector]]:
        """``(k, j, phi_kj)`` for every eigenvector."""
        return [(k, j, StateVector(f[j], check=False))
                for k, f in enumerate(self.families) for j in range(f.shape[0])]


def pauli(axis: str) -> np.ndarray:
    return {
        "x": np.array([[0, 1], [1, 0]], dtype=complex),
        "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
        "z": np.array([[1, 0], [0, -1]], dtype=complex),
    }[axis]


def spin_half_z(labels=("+", "-")) -> SharpObservable:
    """Spin component along the quantization axis, eigenvalues +1/-1."""
    return SharpObservable.from_families(labels, (1.0, -1.0), [np.array([[1, 0]]), np.array([[0, 1]])])
