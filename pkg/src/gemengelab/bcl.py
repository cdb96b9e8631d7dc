"""Premeasurement couplings of the Beltrametti-Cassinelli-Lahti type.

A setup couples a sharp system observable with eigenvectors ``phi_kl`` to a
pointer with orthonormal states ``psi_k`` through the unitary extension of
``phi_kl (x) psi  ->  phi'_kl (x) psi_k``.  The end states ``phi'_kl`` only
need to be orthonormal within each outcome ``k``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from gemengelab.config import Tolerances, resolve
from gemengelab.errors import DimensionError, SetupError
from gemengelab.gemenge import GemengeState, Provenance, _match_branches
from gemengelab.hilbert import (
    Operator,
    StateOperator,
    StateVector,
    _rows,
    as_array,
    as_state_operator,
    complete_unitary,
    operator_norm,
    orthonormality_residual,
    partial_trace,
    tensor,
)
from gemengelab.observables import SharpObservable
from gemengelab.sampling import (
    random_composition,
    random_density,
    random_orthonormal,
    random_vector,
    rng_from,
)


@dataclass(frozen=True, eq=False)
class BCLSetup:
    """System observable, pointer states, initial apparatus vector and end states.

    ``end_states[k]`` holds the rows ``phi'_kl``, one per eigenvector
    ``phi_kl`` of outcome ``k``.  ``pointer_states[k]`` is ``psi_k``.  The
    pointer projections ``|psi_k><psi_k|`` need not sum to the identity on
    the apparatus space (trigger states of a detector array do not).
    """

    observable: SharpObservable
    pointer_states: tuple[StateVector, ...]
    apparatus_initial: StateVector
    end_states: tuple[np.ndarray, ...]

    def __post_init__(self):
        # the apparatus is one tensor factor here, whatever its inner structure
        ptr = tuple(StateVector(as_array(p)) for p in self.pointer_states)
        init = StateVector(as_array(self.apparatus_initial))
        ends = tuple(_rows(e) for e in self.end_states)
        for e in ends:
            e.flags.writeable = False
        object.__setattr__(self, "pointer_states", ptr)
        object.__setattr__(self, "apparatus_initial", init)
        object.__setattr__(self, "end_states", ends)
        self.validate()

    @classmethod
    def von_neumann(cls, observable: SharpObservable, pointer_states: Sequence, apparatus_initial) -> "BCLSetup":
        """End states equal to the eigenvectors."""
        return cls(observable, tuple(pointer_states), apparatus_initial, tuple(observable.families))

    def validate(self, tol: Tolerances | None = None) -> None:
        tol = resolve(tol)
        obs = self.observable
        n = len(obs.labels)
        obs.validate(tol)
        if len(self.pointer_states) != n:
            raise SetupError(f"{len(self.pointer_states)} pointer states for {n} outcomes")
        if len(self.end_states) != n:
            raise SetupError(f"{len(self.end_states)} end-state families for {n} outcomes")
        d_a = self.apparatus_initial.dim
        if any(p.dim != d_a for p in self.pointer_states):
            raise SetupError("pointer states and initial apparatus vector differ in dimension")
        res = orthonormality_residual([p.data for p in self.pointer_states])
        if res > tol.orth:
            raise SetupError(f"pointer states not orthonormal (residual {res:.3e}); pointer must be nondegenerate")
        for k, (fam, ends) in enumerate(zip(obs.families, self.end_states)):
            if ends.shape != fam.shape:
                raise SetupError(f"outcome {obs.labels[k]!r}: need {fam.shape[0]} end states of dim {fam.shape[1]}")
            res = orthonormality_residual(ends)
            if res > tol.orth:
                raise SetupError(f"end states of outcome {obs.labels[k]!r} not orthonormal (residual {res:.3e})")

    @property
    def labels(self) -> tuple[str, ...]:
        return self.observable.labels

    @property
    def system_dim(self) -> int:
        return self.observable.dim

    @property
    def apparatus_dim(self) -> int:
        return self.apparatus_initial.dim

    def pointer_projection(self, k: int) -> np.ndarray:
        p = self.pointer_states[k].data
        return np.outer(p, p.conj())

    def is_von_neumann(self, tol: Tolerances | None = None) -> bool:
        tol = resolve(tol)
        return all(np.abs(e - f).max() <= tol.eq for e, f in zip(self.end_states, self.observable.families))

    def end_state_overlap_residual(self) -> float:
        """Deviation of the full end-state family from orthonormality across outcomes."""
        return orthonormality_residual(np.vstack(self.end_states))


def build_coupling(setup: BCLSetup, tol: Tolerances | None = None) -> Operator:
    """Unitary on ``H_S (x) H_A`` extending ``phi_kl (x) psi -> phi'_kl (x) psi_k``."""
    pairs = []
    psi = setup.apparatus_initial
    for k, (fam, ends) in enumerate(zip(setup.observable.families, setup.end_states)):
        for phi, end in zip(fam, ends):
            pairs.append((
                tensor(StateVector(phi, check=False), psi),
                tensor(StateVector(end, check=False), setup.pointer_states[k]),
            ))
    return complete_unitary(pairs, dims=(setup.system_dim, setup.apparatus_dim), tol=tol)


@dataclass(frozen=True, eq=False)
class PremeasurementResult:
    """Outcome probabilities, conditional system states and the coupled vector.

    ``conditional_states[k]`` is None when outcome k has probability zero,
    where the normalized conditional state is undefined.
    """

    setup: BCLSetup
    probabilities: tuple[float, ...]
    conditional_states: tuple[StateVector | None, ...]
    final_state: StateVector

    @property
    def labels(self) -> tuple[str, ...]:
        return self.setup.labels

    @property
    def pointer_states(self) -> tuple[StateVector, ...]:
        return self.setup.pointer_states

    def support(self) -> list[int]:
        return [k for k, s in enumerate(self.conditional_states) if s is not None]


def expansion_coefficients(setup: BCLSetup, phi: StateVector) -> list[np.ndarray]:
    """``c_kl = <phi_kl|phi>`` grouped by outcome."""
    return [f.conj() @ phi.data for f in setup.observable.families]


def premeasure(setup: BCLSetup, phi: StateVector, tol: Tolerances | None = None) -> PremeasurementResult:
    tol = resolve(tol)
    if phi.dim != setup.system_dim:
        raise DimensionError(f"input state has dim {phi.dim}, system has {setup.system_dim}")
    probs, conds = [], []
    final = np.zeros(setup.system_dim * setup.apparatus_dim, dtype=complex)
    for k, (c, ends) in enumerate(zip(expansion_coefficients(setup, phi), setup.end_states)):
        v = c @ ends
        p = float(np.vdot(v, v).real)
        if np.sqrt(p) <= tol.norm:
            probs.append(0.0)
            conds.append(None)
            continue
        probs.append(p)
        big_phi = StateVector(v / np.sqrt(p), check=False)
        conds.append(big_phi)
        final += np.sqrt(p) * np.kron(big_phi.data, setup.pointer_states[k].data)
    return PremeasurementResult(
        setup, tuple(probs), tuple(conds),
        StateVector(final, (setup.system_dim, setup.apparatus_dim), check=False),
    )


def apparatus_state(result: PremeasurementResult) -> StateOperator:
    """``sum_kl sqrt(p_k p_l) <Phi_l|Phi_k> |psi_k><psi_l|``, i.e. ``tr_S |Psi_f><Psi_f|``."""
    d_a = result.setup.apparatus_dim
    rho = np.zeros((d_a, d_a), dtype=complex)
    support = result.support()
    for k in support:
        for l in support:
            overlap = result.conditional_states[l].inner(result.conditional_states[k])
            amp = np.sqrt(result.probabilities[k] * result.probabilities[l]) * overlap
            rho += amp * np.outer(result.pointer_states[k].data, result.pointer_states[l].data.conj())
    return StateOperator(rho, check=False)


@dataclass(frozen=True)
class ReproducibilityReport:
    system_probabilities: tuple[float, ...]
    pointer_probabilities: tuple[float, ...]
    residual: float

    def to_dict(self) -> dict:
        return {
            "system_probabilities": list(self.system_probabilities),
            "pointer_probabilities": list(self.pointer_probabilities),
            "residual": self.residual,
        }


def check_probability_reproducibility(setup: BCLSetup, state, coupling: Operator | None = None,
                                      tol: Tolerances | None = None) -> ReproducibilityReport:
    """Compare ``tr[T E^O_k]`` with ``tr[tr_S[U (T (x) T_A) U^dag] E^A_k]``.

    ``T_A`` is the projector on the setup's initial apparatus vector.
    """
    t = as_state_operator(state, tol)
    u = build_coupling(setup, tol) if coupling is None else coupling
    joint = tensor(t, setup.apparatus_initial.projector())
    evolved = StateOperator(u.data @ joint.data @ u.data.conj().T, joint.dims, check=False)
    reduced = partial_trace(evolved, 1).data
    sys_p = tuple(float(np.real(np.trace(t.data @ e))) for e in setup.observable.projections())
    ptr_p = tuple(float(np.real(np.trace(reduced @ setup.pointer_projection(k)))) for k in range(len(sys_p)))
    return ReproducibilityReport(sys_p, ptr_p, max(abs(a - b) for a, b in zip(sys_p, ptr_p)))


@dataclass(frozen=True)
class ObjectificationVerdict:
    criterion_A: bool
    criterion_B: bool
    convex_form_residual: float

    def to_dict(self) -> dict:
        return {"criterion_A": self.criterion_A, "criterion_B": self.criterion_B,
                "convex_form_residual": self.convex_form_residual}


def objectification_check(result: PremeasurementResult, reduced, tol: Tolerances | None = None) -> ObjectificationVerdict:
    """Criteria (A) and (B) for the apparatus state produced by a pipeline.

    (A): the operator equals ``sum_j p_j |psi_j><psi_j|``.
    (B): ``reduced`` is a GemengeState whose branches are exactly the
    ``(p_j, |psi_j><psi_j|)`` with ``p_j > 0``, and whose structure comes from
    a preparation or Rule 2.  A single matching branch (a definite result)
    also satisfies (B); a bare operator never does.
    """
    tol = resolve(tol)
    op = reduced.as_operator().data if isinstance(reduced, GemengeState) else as_array(reduced)
    support = result.support()
    target = sum(result.probabilities[k] * result.setup.pointer_projection(k) for k in support)
    res = operator_norm(op - target)
    crit_a = res <= tol.eq
    crit_b = False
    if isinstance(reduced, GemengeState):
        expected = [(result.probabilities[k], result.setup.pointer_projection(k)) for k in support]
        got = [(b.weight, b.state.data) for b in reduced.branches]
        structured = reduced.provenance != Provenance.TRIVIAL or len(expected) == 1
        crit_b = structured and _match_branches(got, expected, tol.eq)
    return ObjectificationVerdict(bool(crit_a), bool(crit_b), res)


@dataclass(frozen=True, eq=False)
class StateTransformer:
    """Kraus family ``K_k = sum_l |phi'_kl><phi_kl|``, one per outcome label."""

    labels: tuple[str, ...]
    kraus: tuple[np.ndarray, ...]
    von_neumann: bool = False

    def index(self, label: str) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise KeyError(f"unknown outcome {label!r}") from None

    def apply(self, subset: Iterable[str], state) -> Operator:
        """``I(X)(T) = sum_{o_k in X} K_k T K_k^dag`` (not normalized)."""
        t = as_array(state)
        if t.ndim == 1:
            t = np.outer(t, t.conj())
        out = np.zeros_like(t, dtype=complex)
        for label in set(subset):
            k = self.kraus[self.index(label)]
            out = out + k @ t @ k.conj().T
        return Operator(out)

    def probability(self, subset: Iterable[str], state) -> float:
        return float(np.real(np.trace(self.apply(subset, state).data)))

    def completeness_residual(self) -> float:
        total = sum(k.conj().T @ k for k in self.kraus)
        return operator_norm(total - np.eye(total.shape[0]))


def state_transformer(setup: BCLSetup, tol: Tolerances | None = None) -> StateTransformer:
    kraus = tuple(ends.T @ fam.conj() for fam, ends in zip(setup.observable.families, setup.end_states))
    return StateTransformer(setup.labels, kraus, setup.is_von_neumann(tol))


@dataclass(frozen=True)
class RepeatabilityReport:
    residual: float
    kraus_idempotence_residual: float
    is_von_neumann: bool
    samples: int

    def to_dict(self) -> dict:
        return {"residual": self.residual, "kraus_idempotence_residual": self.kraus_idempotence_residual,
                "is_von_neumann": self.is_von_neumann, "samples": self.samples}


def all_subsets(labels: Sequence[str]) -> list[tuple[str, ...]]:
    return [sub for r in range(len(labels) + 1) for sub in itertools.combinations(labels, r)]


def check_repeatability(st: StateTransformer, states=None, seed=0, n_states: int = 20,
                        n_subsets: int = 50) -> RepeatabilityReport:
    """Max of ``|tr[I(Y)(I(X)(T))] - tr[I(Y n X)(T)]|`` over sampled X, Y, T.

    Subsets are enumerated exhaustively for at most four outcomes and drawn
    at random otherwise; ``states`` defaults to ``n_states`` random mixed states.
    """
    rng = rng_from(seed)
    dim = st.kraus[0].shape[1]
    if states is None:
        states = [random_density(dim, rng) for _ in range(n_states)]
    labels = st.labels
    if len(labels) <= 4:
        subsets = all_subsets(labels)
    else:
        subsets = [tuple(l for l in labels if rng.random() < 0.5) for _ in range(n_subsets)]
    worst = 0.0
    count = 0
    for t in states:
        t = as_state_operator(t).data
        for x in subsets:
            after_x = st.apply(x, t).data
            for y in subsets:
                both = set(x) & set(y)
                lhs = st.probability(y, after_x)
                rhs = st.probability(both, t)
                worst = max(worst, abs(lhs - rhs))
                count += 1
    idem = 0.0
    for k, kk in enumerate(st.kraus):
        for l, kl in enumerate(st.kraus):
            target = kk if k == l else np.zeros_like(kk)
            idem = max(idem, operator_norm(kl @ kk - target))
    return RepeatabilityReport(worst, idem, st.von_neumann, count)


def repeatability_counterexample() -> tuple[BCLSetup, StateOperator]:
    """Qubit setup whose "-" end state lies in the "+" eigenspace, plus a state
    on which repeatability fails by 1 (first maximum of the grid search in the tests)."""
    obs = SharpObservable.from_families(("+", "-"), (1.0, -1.0), [np.array([[1, 0]]), np.array([[0, 1]])])
    theta_plus, theta_minus, angle = 0.0, 0.0, np.pi / 2
    ends = (np.array([[np.cos(theta_plus), np.sin(theta_plus)]]),
            np.array([[np.cos(theta_minus), np.sin(theta_minus)]]))
    pointer = (StateVector([1, 0, 0]), StateVector([0, 1, 0]))
    setup = BCLSetup(obs, pointer, StateVector([0, 0, 1]), ends)
    state = StateVector([np.cos(angle), np.sin(angle)]).projector()
    return setup, state


def random_setup(rng, max_system: int = 6, max_apparatus: int = 6, von_neumann: bool = False) -> BCLSetup:
    """Random setup: random degeneracy pattern, eigenbasis, end states and pointer."""
    rng = rng_from(rng)
    d_s = int(rng.integers(1, max_system + 1))
    n_out = int(rng.integers(1, min(d_s, max_apparatus) + 1))
    d_a = int(rng.integers(n_out, max_apparatus + 1))
    degs = random_composition(d_s, n_out, rng)
    basis = random_orthonormal(d_s, d_s, rng)
    fams, start = [], 0
    for g in degs:
        fams.append(basis[start:start + g])
        start += g
    values = np.sort(rng.normal(size=n_out))
    obs = SharpObservable.from_families([f"o{k}" for k in range(n_out)], values, fams)
    pointer = random_orthonormal(n_out, d_a, rng)
    init = random_vector(d_a, rng)
    if von_neumann:
        ends = tuple(fams)
    else:
        ends = tuple(random_orthonormal(g, d_s, rng) for g in degs)
    return BCLSetup(obs, tuple(StateVector(p, check=False) for p in pointer), init, ends)
