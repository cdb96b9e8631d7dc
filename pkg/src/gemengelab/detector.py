"""Ideal ionization-detector arrays and the Rule 2 transform.

The apparatus is the ionization degree of freedom of N detectors, each with
``ion_levels`` basis states ``chi_k0 .. chi_k(L-1)`` (``chi_k0``: nothing
ionized).  A trigger state puts detector k into ``sum_n a_n chi_kn`` and
leaves all others in ``chi_j0``.  Translation degrees of freedom and signal
formation are not modelled.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from gemengelab.bcl import BCLSetup, PremeasurementResult
from gemengelab.config import MAX_DIM, Tolerances, resolve
from gemengelab.errors import (
    DimensionError,
    EndStateOrthogonalityError,
    EntanglingInteractionError,
    NotUnitaryError,
    SetupError,
)
from gemengelab.gemenge import Branch, GemengeState, Provenance, product_residual
from gemengelab.hilbert import (
    StateOperator,
    StateVector,
    as_array,
    as_state_operator,
    partial_trace,
    tensor,
    tensor_all,
    unitarity_residual,
)
from gemengelab.observables import SharpObservable


class DetectorMode(str, enum.Enum):
    ABSORBING = "absorbing"
    NON_ABSORBING = "non-absorbing"


LOST_TAG = "symbolic-lost"
RELEASED_TAG = "released"


@dataclass(frozen=True, eq=False)
class DetectorArrayModel:
    """N ideal detectors sharing trigger amplitudes ``a_n``.

    ``a_0`` must vanish so that the trigger states are orthogonal to each
    other and to the untriggered state.  Efficiency is fixed at 1.
    """

    n_detectors: int
    ion_levels: int = 2
    amplitudes: tuple[complex, ...] | None = None
    efficiency: float = 1.0

    def __post_init__(self):
        if int(self.n_detectors) < 1:
            raise SetupError("a detector array needs at least one detector")
        if int(self.ion_levels) < 2:
            raise SetupError("each detector needs at least the un-ionized and one ionized level")
        amps = self.amplitudes
        if amps is None:
            amps = (0.0, 1.0) + (0.0,) * (self.ion_levels - 2)
        amps = tuple(complex(a) for a in amps)
        if len(amps) != self.ion_levels:
            raise SetupError(f"{len(amps)} amplitudes for {self.ion_levels} ionization levels")
        tol = resolve(None)
        total = sum(abs(a) ** 2 for a in amps)
        if abs(total - 1.0) > tol.norm:
            raise SetupError(f"trigger amplitudes have squared norm {total:.12g}, not 1")
        if abs(amps[0]) > tol.orth:
            raise SetupError("trigger amplitude a_0 must vanish")
        if self.efficiency != 1.0:
            raise SetupError("only ideal detectors (efficiency 1) are modelled")
        if self.ion_levels ** self.n_detectors > MAX_DIM:
            raise DimensionError("apparatus space exceeds the dimension cap")
        object.__setattr__(self, "n_detectors", int(self.n_detectors))
        object.__setattr__(self, "ion_levels", int(self.ion_levels))
        object.__setattr__(self, "amplitudes", amps)

    @property
    def apparatus_dim(self) -> int:
        return self.ion_levels ** self.n_detectors

    def chi(self, n: int) -> StateVector:
        return StateVector.basis(self.ion_levels, n)

    def initial_state(self) -> StateVector:
        """All detectors un-ionized."""
        return tensor_all([self.chi(0)] * self.n_detectors)


def trigger_states(model: DetectorArrayModel) -> tuple[StateVector, ...]:
    excited = StateVector(np.array(model.amplitudes), check=False)
    ground = model.chi(0)
    out = []
    for k in range(model.n_detectors):
        factors = [ground] * model.n_detectors
        factors[k] = excited
        out.append(tensor_all(factors))
    return tuple(out)


def check_end_orthonormality(setup: BCLSetup, tol: Tolerances | None = None) -> float:
    """Raise unless every ``phi'_kl`` is orthonormal to every other, across outcomes too."""
    tol = resolve(tol)
    res = setup.end_state_overlap_residual()
    if res > tol.orth:
        raise EndStateOrthogonalityError(
            f"end states are not orthonormal across outcomes (residual {res:.3e}); "
            "a true registration needs them to be")
    return res


def build_detector_setup(model: DetectorArrayModel, observable: SharpObservable, end_states=None,
                         tol: Tolerances | None = None) -> BCLSetup:
    """Setup whose pointer states are the trigger states of ``model``.

    ``end_states`` defaults to the eigenvectors themselves.
    """
    if len(observable.labels) != model.n_detectors:
        raise SetupError(f"{len(observable.labels)} outcomes for {model.n_detectors} detectors")
    ends = tuple(observable.families) if end_states is None else tuple(end_states)
    setup = BCLSetup(observable, trigger_states(model), model.initial_state(), ends)
    check_end_orthonormality(setup, tol)
    return setup


@dataclass(frozen=True, eq=False)
class Rule2Output:
    gemenge: GemengeState
    mode: DetectorMode
    released: tuple[tuple[float, StateVector], ...] = ()

    def apparatus_gemenge(self) -> GemengeState:
        from gemengelab.gemenge import partial_trace_gemenge

        return partial_trace_gemenge(self.gemenge, keep=1)

    def to_dict(self) -> dict:
        from gemengelab.serialize import vector_to_json

        return {
            "mode": self.mode.value,
            "gemenge": self.gemenge.to_dict(),
            "released": [{"weight": w, "state": vector_to_json(v)} for w, v in self.released],
        }


def rule2_transform(result: PremeasurementResult, model: DetectorArrayModel | None = None,
                    mode: DetectorMode | str = DetectorMode.ABSORBING,
                    tol: Tolerances | None = None) -> Rule2Output:
    """Replace the coupled vector by ``(sum_k)_gs |c_k|^2 |Phi_k><Phi_k| (x) |psi_k><psi_k|``.

    Deterministic: the branches are fixed by the premeasurement result.
    Outcomes of probability zero contribute no branch.
    """
    tol = resolve(tol)
    mode = DetectorMode(mode)
    setup = result.setup
    check_end_orthonormality(setup, tol)
    if model is not None:
        expected = trigger_states(model)
        if len(expected) != len(setup.pointer_states) or any(
                np.abs(a.data - b.data).max() > tol.eq for a, b in zip(expected, setup.pointer_states)):
            raise SetupError("premeasurement pointer states are not the trigger states of this detector array")
    tag = LOST_TAG if mode is DetectorMode.ABSORBING else RELEASED_TAG
    branches, released = [], []
    for k in result.support():
        w = result.probabilities[k]
        big_phi = result.conditional_states[k]
        state = tensor(big_phi.projector(), setup.pointer_states[k].projector())
        branches.append(Branch(w, state, tag))
        if mode is DetectorMode.NON_ABSORBING:
            released.append((w, big_phi))
    gemenge = GemengeState(tuple(branches), Provenance.RULE2)
    return Rule2Output(gemenge, mode, tuple(released))


def dephase(result: PremeasurementResult) -> np.ndarray:
    """``sum_k Pi_k |Psi_f><Psi_f| Pi_k`` with ``Pi_k`` the projector on ``Phi_k (x) psi_k``."""
    rho = result.final_state.projector().data
    out = np.zeros_like(rho)
    for k in result.support():
        v = np.kron(result.conditional_states[k].data, result.pointer_states[k].data)
        pk = np.outer(v, v.conj())
        out += pk @ rho @ pk
    return out


@dataclass(frozen=True, eq=False)
class ScatterResult:
    system: StateVector
    target: StateOperator
    residual: float


def no_entanglement_scatter(phi: StateVector, target, u, tol: Tolerances | None = None) -> ScatterResult:
    """Factor ``U (|phi><phi| (x) T) U^dag`` as ``|phi'><phi'| (x) T'``.

    Raises EntanglingInteractionError when the output is not of that form.
    ``phi'`` is returned with its largest amplitude real positive.
    """
    tol = resolve(tol)
    t = as_state_operator(target, tol)
    um = as_array(u)
    if unitarity_residual(um) > tol.eq:
        raise NotUnitaryError("scattering operator is not unitary")
    dims = (phi.dim, t.dim)
    joint = tensor(phi.projector(), t)
    if um.shape != joint.data.shape:
        raise DimensionError("scattering unitary does not act on system (x) target")
    out = StateOperator(um @ joint.data @ um.conj().T, dims, check=False)
    res = product_residual(out)
    if res > tol.eq:
        raise EntanglingInteractionError(f"interaction entangles system and target (residual {res:.3e})")
    rho_s = partial_trace(out, 0).data
    w, v = np.linalg.eigh((rho_s + rho_s.conj().T) / 2)
    if abs(w[-1] - 1.0) > tol.eq:
        raise EntanglingInteractionError("system factor of the output is not a pure state")
    vec = v[:, -1]
    i = int(np.argmax(np.abs(vec)))
    vec = vec * (abs(vec[i]) / vec[i])
    return ScatterResult(StateVector.normalized(vec), partial_trace(out, 1), res)
