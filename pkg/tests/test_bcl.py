import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gemengelab.bcl import (
    BCLSetup,
    all_subsets,
    apparatus_state,
    build_coupling,
    check_probability_reproducibility,
    check_repeatability,
    objectification_check,
    premeasure,
    random_setup,
    repeatability_counterexample,
    state_transformer,
)
from gemengelab.errors import SetupError
from gemengelab.gemenge import GemengeState
from gemengelab.hilbert import StateVector, operator_norm, partial_trace
from gemengelab.observables import SharpObservable, spin_half_z
from gemengelab.sampling import random_density, random_vector
from oracles import grid_search_counterexample

S2 = 1 / np.sqrt(2)


def ket(*a):
    return StateVector(np.array(a, dtype=complex))


def qubit_setup(ends=None, apparatus_dim=2):
    obs = spin_half_z()
    ptr = [StateVector.basis(apparatus_dim, k) for k in range(2)]
    init = StateVector.basis(apparatus_dim, apparatus_dim - 1 if apparatus_dim > 2 else 0)
    return BCLSetup(obs, ptr, init, ends if ends is not None else obs.families)


# --- setup validation -------------------------------------------------------------

def test_setup_rejects_non_orthonormal_end_states_within_outcome():
    obs = SharpObservable.from_families(("a", "b"), (0, 1), [np.eye(3)[:2], np.eye(3)[2:]])
    bad = (np.array([[1, 0, 0], [1, 0, 0]]), np.array([[0, 0, 1]]))
    with pytest.raises(SetupError):
        BCLSetup(obs, [ket(1, 0), ket(0, 1)], ket(1, 0), bad)


def test_setup_rejects_degenerate_pointer_and_count_mismatch():
    obs = spin_half_z()
    with pytest.raises(SetupError):
        BCLSetup(obs, [ket(1, 0), ket(1, 0)], ket(1, 0), obs.families)
    with pytest.raises(SetupError):
        BCLSetup(obs, [ket(1, 0)], ket(1, 0), obs.families)
    with pytest.raises(SetupError):
        BCLSetup(obs, [ket(1, 0), ket(0, 1)], ket(1, 0, 0), obs.families)


# --- coupling -------------------------------------------------------------------------

def test_von_neumann_qubit_coupling_is_cnot_like():
    setup = qubit_setup()
    u = build_coupling(setup).data
    assert operator_norm(u.conj().T @ u - np.eye(4)) <= 1e-8
    # |00> -> |00>, |10> -> |11> as for a CNOT controlled by the system
    np.testing.assert_allclose(u @ [1, 0, 0, 0], [1, 0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(u @ [0, 0, 1, 0], [0, 0, 0, 1], atol=1e-12)


@given(seed=st.integers(0, 10**6))
def test_coupling_maps_eigenvectors_to_end_states(seed):
    setup = random_setup(seed)
    u = build_coupling(setup).data
    assert operator_norm(u.conj().T @ u - np.eye(u.shape[0])) <= 1e-8
    for k, (fam, ends) in enumerate(zip(setup.observable.families, setup.end_states)):
        for phi, phi_end in zip(fam, ends):
            image = u @ np.kron(phi, setup.apparatus_initial.data)
            assert np.abs(image - np.kron(phi_end, setup.pointer_states[k].data)).max() <= 1e-8


def test_eigenstate_input_gives_definite_apparatus_state():
    setup = qubit_setup()
    res = premeasure(setup, ket(0, 1))
    np.testing.assert_allclose(apparatus_state(res).data, np.diag([0, 1]), atol=1e-15)


def test_single_outcome_system():
    obs = SharpObservable.from_families(("only",), (0.0,), [np.array([[1.0]])])
    setup = BCLSetup(obs, [ket(0, 1)], ket(1, 0), obs.families)
    u = build_coupling(setup).data
    np.testing.assert_allclose(u @ [1, 0], [0, 1], atol=1e-12)
    res = premeasure(setup, ket(1))
    np.testing.assert_allclose(apparatus_state(res).data, np.diag([0, 1]))


# --- premeasurement ------------------------------------------------------------------

def test_premeasure_equal_superposition():
    res = premeasure(qubit_setup(), ket(S2, S2))
    assert res.probabilities == pytest.approx((0.5, 0.5))
    np.testing.assert_allclose(res.conditional_states[0].data, [1, 0], atol=1e-15)
    np.testing.assert_allclose(res.conditional_states[1].data, [0, 1], atol=1e-15)


def test_premeasure_eigenstate_marks_zero_probability():
    res = premeasure(qubit_setup(), ket(1, 0))
    assert res.probabilities == (1.0, 0.0)
    assert res.conditional_states[1] is None
    assert res.support() == [0]


def test_premeasure_degenerate_outcome():
    obs = SharpObservable.from_families(("k", "m"), (1, 2), [np.eye(3)[:2], np.eye(3)[2:]])
    ends = (np.array([[0, 0, 1], [0, 1, 0]]), np.array([[1, 0, 0]]))
    setup = BCLSetup(obs, [ket(1, 0), ket(0, 1)], ket(1, 0), ends)
    phi = StateVector.normalized([1, 1, 1])
    res = premeasure(setup, phi)
    # c_k1 = c_k2 = 1/sqrt(3): Phi_k = (phi'_k1 + phi'_k2)/sqrt(2), p_k = 2/3
    assert res.probabilities[0] == pytest.approx(2 / 3)
    np.testing.assert_allclose(res.conditional_states[0].data, np.array([0, 1, 1]) * S2, atol=1e-15)


@given(seed=st.integers(0, 10**6))
def test_premeasure_matches_coupling(seed):
    rng = np.random.default_rng(seed)
    setup = random_setup(rng)
    phi = random_vector(setup.system_dim, rng)
    res = premeasure(setup, phi)
    direct = build_coupling(setup).data @ np.kron(phi.data, setup.apparatus_initial.data)
    assert np.abs(direct - res.final_state.data).max() <= 1e-8
    assert abs(sum(res.probabilities) - 1) <= 1e-10


# --- apparatus state ------------------------------------------------------------------

def test_apparatus_state_orthonormal_conditionals_is_diagonal():
    rho = apparatus_state(premeasure(qubit_setup(), ket(0.6, 0.8))).data
    np.testing.assert_allclose(rho, np.diag([0.36, 0.64]), atol=1e-15)


def test_apparatus_state_non_orthogonal_conditionals():
    setup = qubit_setup(ends=(np.array([[1, 0]]), np.array([[S2, S2]])))
    res = premeasure(setup, ket(0.6, 0.8))
    rho = apparatus_state(res).data
    s = S2  # <Phi_1|Phi_2>
    assert rho[0, 1] == pytest.approx(np.sqrt(0.36 * 0.64) * s)
    np.testing.assert_allclose(rho, partial_trace(res.final_state, 1).data, atol=1e-14)


@given(seed=st.integers(0, 10**6))
def test_apparatus_state_equals_partial_trace(seed):
    rng = np.random.default_rng(seed)
    setup = random_setup(rng)
    res = premeasure(setup, random_vector(setup.system_dim, rng))
    assert np.abs(apparatus_state(res).data - partial_trace(res.final_state, 1).data).max() <= 1e-8


# --- probability reproducibility ---------------------------------------------------------

def test_reproducibility_examples():
    setup = qubit_setup()
    assert check_probability_reproducibility(setup, ket(1, 0)).residual == 0.0
    assert check_probability_reproducibility(setup, ket(S2, S2)).residual <= 1e-8


def test_reproducibility_random_mixed_states():
    rng = np.random.default_rng(11)
    for _ in range(100):
        setup = random_setup(rng)
        rep = check_probability_reproducibility(setup, random_density(setup.system_dim, rng))
        assert rep.residual <= 1e-8


# --- objectification ---------------------------------------------------------------------

def test_unitary_only_satisfies_a_but_not_b():
    res = premeasure(qubit_setup(), ket(0.6, 0.8))
    v = objectification_check(res, apparatus_state(res))
    assert v.criterion_A and not v.criterion_B


def test_non_orthogonal_conditionals_fail_both():
    setup = qubit_setup(ends=(np.array([[1, 0]]), np.array([[S2, S2]])))
    res = premeasure(setup, ket(0.6, 0.8))
    v = objectification_check(res, apparatus_state(res))
    assert not v.criterion_A and not v.criterion_B
    assert v.convex_form_residual == pytest.approx(np.sqrt(0.36 * 0.64) * S2)


def test_trivial_gemenge_with_several_outcomes_fails_b():
    res = premeasure(qubit_setup(), ket(0.6, 0.8))
    v = objectification_check(res, GemengeState.trivial(apparatus_state(res)))
    assert v.criterion_A and not v.criterion_B


@given(seed=st.integers(0, 10**6))
def test_criterion_a_forces_orthonormal_end_states(seed):
    """Contrapositive: a family not orthonormal across outcomes fails (A) for some input."""
    rng = np.random.default_rng(seed)
    obs = spin_half_z()
    theta = rng.uniform(0.2, np.pi / 2 - 0.2)
    ends = (np.array([[1, 0]]), np.array([[np.cos(theta), np.sin(theta)]]))
    setup = BCLSetup(obs, [ket(1, 0, 0), ket(0, 1, 0)], ket(0, 0, 1), ends)
    assert setup.end_state_overlap_residual() > 1e-10
    res = premeasure(setup, ket(S2, S2))
    assert not objectification_check(res, apparatus_state(res)).criterion_A


# --- state transformer ------------------------------------------------------------------

def test_transformer_full_set_von_neumann_is_luders_sum(rng):
    setup = random_setup(rng, von_neumann=True)
    st_ = state_transformer(setup)
    t = random_density(setup.system_dim, rng).data
    expected = sum(e @ t @ e for e in setup.observable.projections())
    np.testing.assert_allclose(st_.apply(setup.labels, t).data, expected, atol=1e-12)
    assert np.trace(expected).real == pytest.approx(1.0)


def test_transformer_empty_set_is_zero(rng):
    setup = random_setup(rng)
    out = state_transformer(setup).apply([], random_density(setup.system_dim, rng))
    assert np.all(out.data == 0)


def test_transformer_single_outcome_is_conditional_branch():
    setup = qubit_setup(ends=(np.array([[0, 1]]), np.array([[1, 0]])))
    phi = ket(0.6, 0.8j)
    res = premeasure(setup, phi)
    out = state_transformer(setup).apply(["+"], phi).data
    np.testing.assert_allclose(out, 0.36 * res.conditional_states[0].projector().data, atol=1e-15)


def test_transformer_unknown_label():
    with pytest.raises(KeyError):
        state_transformer(qubit_setup()).apply(["?"], np.eye(2) / 2)


@given(seed=st.integers(0, 10**6))
def test_transformer_trace_is_probability(seed):
    rng = np.random.default_rng(seed)
    setup = random_setup(rng)
    st_ = state_transformer(setup)
    t = random_density(setup.system_dim, rng).data
    assert st_.completeness_residual() <= 1e-8
    for sub in all_subsets(setup.labels):
        p = sum(np.trace(t @ setup.observable.projection(k)).real for k in sub)
        assert abs(st_.probability(sub, t) - p) <= 1e-8


def test_von_neumann_kraus_are_projections(rng):
    setup = random_setup(rng, von_neumann=True)
    for k, e in zip(state_transformer(setup).kraus, setup.observable.projections()):
        assert np.abs(k - e).max() <= 1e-8


# --- repeatability ------------------------------------------------------------------------

def test_von_neumann_setups_are_repeatable():
    rng = np.random.default_rng(4)
    for _ in range(20):
        setup = random_setup(rng, max_system=4, von_neumann=True)
        rep = check_repeatability(state_transformer(setup), seed=rng)
        assert rep.is_von_neumann
        assert rep.residual <= 1e-8 and rep.kraus_idempotence_residual <= 1e-8


def test_full_set_twice_is_always_trace_preserving(rng):
    setup = random_setup(rng)
    st_ = state_transformer(setup)
    t = random_density(setup.system_dim, rng).data
    labels = setup.labels
    assert abs(st_.probability(labels, st_.apply(labels, t).data) - st_.probability(labels, t)) <= 1e-12


def test_stored_counterexample_matches_grid_search():
    best_residual, params = grid_search_counterexample()
    assert best_residual == pytest.approx(1.0)
    assert params == pytest.approx((0.0, 0.0, np.pi / 2))
    setup, state = repeatability_counterexample()
    rep = check_repeatability(state_transformer(setup), states=[state])
    assert not rep.is_von_neumann
    assert rep.residual >= 1e-2
    assert rep.residual == pytest.approx(best_residual)
