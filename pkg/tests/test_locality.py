import itertools

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from gemengelab.errors import DimensionError, NotLocalError, OrthonormalityError, ZeroProjectionError
from gemengelab.hilbert import StateOperator, StateVector, operator_norm, symmetrize, tensor
from gemengelab.locality import (
    LatticeSpace,
    expectation,
    gaussian_packet,
    hopping_evolution,
    is_d_local,
    localize,
    locality_residual,
    pair_expectation,
    pair_observable,
    pair_state,
    position_kernel,
    projection_pd,
    separation_status,
    shift_kernel,
    status_change,
    superselection_check,
)
from gemengelab.sampling import random_hermitian, random_vector


def supported_vector(n, sites, rng):
    amps = np.zeros(n, dtype=complex)
    amps[list(sites)] = rng.normal(size=len(sites)) + 1j * rng.normal(size=len(sites))
    return StateVector.normalized(amps)


def test_lattice_rejects_unsorted_sites():
    with pytest.raises(ValueError):
        LatticeSpace(np.array([0.0, 2.0, 1.0]))
    with pytest.raises(DimensionError):
        LatticeSpace.uniform(3).domain([3])


def test_interval_domain():
    lat = LatticeSpace.uniform(6, spacing=0.5)
    assert sorted(lat.interval(0.5, 1.75).indices) == [1, 2, 3]


def test_projection_pd_examples():
    lat = LatticeSpace.uniform(4)
    np.testing.assert_array_equal(projection_pd(lat, range(4)), np.eye(4))
    np.testing.assert_array_equal(projection_pd(lat, []), np.zeros((4, 4)))
    np.testing.assert_array_equal(projection_pd(lat, lat.domain([0, 1])), np.diag([1, 1, 0, 0]))


def test_projection_pd_is_hermitian_idempotent(rng):
    p = projection_pd(10, rng.choice(10, size=4, replace=False))
    np.testing.assert_array_equal(p @ p, p)
    np.testing.assert_array_equal(p.conj().T, p)


def test_localize_position_operator_masks_entries():
    lat = LatticeSpace.uniform(8, spacing=0.3, origin=1.0)
    x = position_kernel(lat)
    dom = lat.domain(range(4))
    expected = np.diag(np.concatenate([lat.sites[:4], np.zeros(4)]))
    np.testing.assert_array_equal(localize(x, dom), expected)


def test_localize_identity_is_pd():
    lat = LatticeSpace.uniform(6)
    dom = lat.domain([1, 4])
    np.testing.assert_array_equal(localize(np.eye(6), dom), projection_pd(lat, dom))


def test_localize_fixes_local_operators(rng):
    lat = LatticeSpace.uniform(7)
    dom = lat.domain([0, 2, 3])
    once = localize(random_hermitian(7, rng), dom)
    np.testing.assert_array_equal(localize(once, dom), once)


def test_is_d_local_examples(rng):
    lat = LatticeSpace.uniform(8)
    dom = lat.domain(range(3))
    assert is_d_local(localize(rng.normal(size=(8, 8)), dom), dom)
    assert not is_d_local(position_kernel(lat), dom)
    assert locality_residual(position_kernel(lat), dom) == pytest.approx(7.0)
    assert is_d_local(np.zeros((8, 8)), dom)
    assert is_d_local(np.zeros((8, 8)), lat.domain([]))


def test_pair_state_norm_and_statistics(rng):
    psi = supported_vector(6, [0, 1, 2], rng)
    phi = supported_vector(6, [4, 5], rng)
    for sign in (1, -1):
        pair = pair_state(psi, phi, sign)
        assert pair.dims == (6, 6)
        assert np.linalg.norm(pair.data) == pytest.approx(1.0, abs=1e-12)
        swapped = pair.data.reshape(6, 6).T.reshape(-1)
        np.testing.assert_allclose(swapped, sign * pair.data, atol=1e-14)


def test_pair_state_matches_permutation_sum():
    psi = StateVector(np.array([0.6, 0.8j, 0, 0]))
    phi = StateVector(np.array([0, 0, 1, -1]) / np.sqrt(2))
    for sign in (1, -1):
        oracle = np.zeros((4, 4), dtype=complex)
        for i, j in itertools.product(range(4), repeat=2):
            oracle[i, j] = (psi.data[i] * phi.data[j] + sign * phi.data[i] * psi.data[j]) / np.sqrt(2)
        np.testing.assert_allclose(pair_state(psi, phi, sign).data, oracle.reshape(-1), atol=1e-15)


def test_pair_state_rejects_overlap():
    psi = StateVector.basis(4, 1)
    with pytest.raises(OrthonormalityError):
        pair_state(psi, psi, -1)
    with pytest.raises(OrthonormalityError):
        pair_state(psi, StateVector.normalized([0, 1, 1, 0]), 1)


def test_pair_observable_identity_and_form(rng):
    np.testing.assert_array_equal(pair_observable(np.eye(3)).data, 2 * np.eye(9))
    a = random_hermitian(3, rng)
    np.testing.assert_allclose(pair_observable(a).data, np.kron(a, np.eye(3)) + np.kron(np.eye(3), a))


def test_pair_expectation_matches_dense_operator(rng):
    psi = random_vector(5, rng)
    phi = random_vector(5, rng)
    a = random_hermitian(5, rng) + 1j * rng.normal(size=(5, 5))
    raw = StateVector.normalized(np.kron(psi.data, phi.data) + 0.3 * np.kron(phi.data, phi.data), (5, 5))
    assert abs(pair_expectation(a, raw) - expectation(pair_observable(a), raw)) <= 1e-12
    with pytest.raises(DimensionError):
        pair_expectation(np.eye(4), raw)


def test_position_additivity_for_disjoint_supports(rng):
    lat = LatticeSpace.uniform(12, spacing=0.7)
    psi = supported_vector(12, range(5), rng)
    phi = supported_vector(12, range(7, 12), rng)
    x = position_kernel(lat)
    oracle = sum(lat.sites[i] * abs(v.data[i]) ** 2 for v in (psi, phi) for i in range(12))
    for sign in (1, -1):
        value = expectation(pair_observable(x), pair_state(psi, phi, sign))
        assert value.real == pytest.approx(oracle, abs=1e-12)
        assert abs(value.imag) < 1e-12


def test_cluster_identity_both_statistics(rng):
    lat = LatticeSpace.uniform(10)
    dom = lat.domain(range(5))
    psi = supported_vector(10, range(5), rng)
    phi = supported_vector(10, range(5, 10), rng)
    a = random_hermitian(10, rng)
    alone = expectation(a, psi)
    values = [expectation(pair_observable(localize(a, dom)), pair_state(psi, phi, s)) for s in (1, -1)]
    for v in values:
        assert abs(v - alone) < 1e-12
    assert abs(values[0] - values[1]) < 1e-12


def test_cluster_identity_fails_without_localization(rng):
    lat = LatticeSpace.uniform(10)
    psi = supported_vector(10, range(5), rng)
    phi = supported_vector(10, range(5, 10), rng)
    x = position_kernel(lat)
    pair = pair_state(psi, phi, 1)
    assert abs(expectation(pair_observable(x), pair) - expectation(x, psi)) > 1.0


def test_separation_status_examples(rng):
    lat = LatticeSpace.uniform(8)
    dom = lat.domain(range(4))
    inside = supported_vector(8, range(4), rng)
    assert separation_status(inside, dom)
    assert separation_status(inside.projector(), dom)
    assert not separation_status(StateOperator.maximally_mixed(8), dom)
    assert separation_status(StateOperator.maximally_mixed(8), lat.domain(range(8)))


def test_separation_status_detects_leaking_packet():
    lat = LatticeSpace.uniform(40)
    dom = lat.domain(range(20))
    packet = gaussian_packet(lat, 8.0, 1.5, momentum=1.0, domain=dom)
    assert separation_status(packet, dom)
    for t in (0.5, 2.0, 8.0):
        evolved = StateVector(hopping_evolution(lat, t) @ packet.data)
        mass_outside = float(np.sum(np.abs(evolved.data[20:]) ** 2))
        if mass_outside > 1e-8:
            assert not separation_status(evolved, dom)
    late = StateVector(hopping_evolution(lat, 8.0) @ packet.data)
    assert np.sum(np.abs(late.data[20:]) ** 2) > 1e-3


def test_hopping_evolution_is_unitary():
    u = hopping_evolution(LatticeSpace.uniform(9), 1.3)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(9), atol=1e-12)


def test_shift_kernel_structure():
    s = shift_kernel(LatticeSpace.uniform(4), 2)
    expected = np.zeros((4, 4))
    expected[2, 0] = expected[3, 1] = expected[0, 2] = expected[1, 3] = 1
    np.testing.assert_array_equal(s, expected)


def test_status_change_boson_pair():
    psi = StateVector.basis(4, 0)
    other = StateVector.normalized([0, 0, 1, 1j])
    change = status_change(psi, other, 1)
    oracle = (np.kron(psi.data, other.data) + np.kron(other.data, psi.data)) / np.sqrt(2)
    np.testing.assert_allclose(change.after.data, oracle, atol=1e-15)
    assert change.overlap == pytest.approx(1 / np.sqrt(2), abs=1e-12)


def _explicit_symmetrization(factors_tensor, n, sign):
    acc = np.zeros_like(factors_tensor)
    for perm in itertools.permutations(range(n)):
        inversions = sum(perm[i] > perm[j] for i in range(n) for j in range(i + 1, n))
        acc = acc + (sign ** inversions) * np.transpose(factors_tensor, perm)
    return acc.reshape(-1) / np.linalg.norm(acc)


@pytest.mark.parametrize("sign", [1, -1])
def test_status_change_three_particles_against_permutation_sum(sign):
    n_sites = 6
    psi = StateVector.normalized([1, 1j, 0, 0, 0, 0])
    a = StateVector.normalized([0, 0, 1, 2, 0, 0])
    b = StateVector.normalized([0, 0, 0, 0, 1, -1])
    others = symmetrize(tensor(a, b), sign)
    change = status_change(psi, others, sign)
    before = np.kron(psi.data, others.data).reshape((n_sites,) * 3)
    after = _explicit_symmetrization(before, 3, sign)
    np.testing.assert_allclose(abs(np.vdot(change.after.data, after)), 1.0, atol=1e-12)
    assert change.overlap == pytest.approx(abs(np.vdot(before.reshape(-1), after)), abs=1e-12)
    assert change.overlap == pytest.approx(1 / np.sqrt(3), abs=1e-12)


def test_status_change_fermion_exclusion():
    psi = StateVector.normalized([1, 2, 0])
    with pytest.raises(ZeroProjectionError):
        status_change(psi, psi, -1)


def test_status_change_rejects_unsymmetric_surroundings():
    psi = StateVector.basis(3, 0)
    others = tensor(StateVector.basis(3, 1), StateVector.basis(3, 2))
    with pytest.raises(ValueError):
        status_change(psi, others, 1)


def test_status_change_overlap_below_one_when_overlapping(rng):
    psi = random_vector(4, rng)
    other = random_vector(4, rng)
    assert status_change(psi, other, 1).overlap < 1 - 1e-6


def test_superselection_examples(rng):
    lat = LatticeSpace.uniform(7)
    dom = lat.domain([1, 2, 5])
    rep = superselection_check(localize(random_hermitian(7, rng), dom), dom)
    assert rep.max_residual <= 1e-10
    assert rep.sets_checked == 5
    assert superselection_check(np.zeros((7, 7)), dom).max_residual == 0.0
    assert superselection_check(projection_pd(lat, dom), dom).max_residual == 0.0


def test_superselection_rejects_non_local_input():
    lat = LatticeSpace.uniform(5)
    with pytest.raises(NotLocalError):
        superselection_check(shift_kernel(lat), lat.domain([0, 1]))


@given(n=st.integers(1, 12), seed=st.integers(0, 2**32 - 1), data=st.data())
def test_localization_contracts_norm(n, seed, data):
    rng = np.random.default_rng(seed)
    sites = data.draw(st.sets(st.integers(0, n - 1)))
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    local = localize(a, sites)
    assert operator_norm(local) <= operator_norm(a) + 1e-12
    assert is_d_local(local, LatticeSpace.uniform(n).domain(sites))
    np.testing.assert_array_equal(localize(local, sites), local)


@given(n=st.integers(4, 16), seed=st.integers(0, 2**32 - 1))
def test_cluster_identity_property(n, seed):
    rng = np.random.default_rng(seed)
    cut = int(rng.integers(1, n))
    assume(cut < n)
    lat = LatticeSpace.uniform(n)
    dom = lat.domain(range(cut))
    psi = supported_vector(n, range(cut), rng)
    phi = supported_vector(n, range(cut, n), rng)
    a = random_hermitian(n, rng)
    for sign in (1, -1):
        pair = pair_state(psi, phi, sign)
        assert abs(expectation(pair_observable(localize(a, dom)), pair) - expectation(a, psi)) <= 1e-10
