"""Projector coordinates, Born rule, collapse, and branch-averaged statistics."""

import math

import numpy as np
import pytest

from blochsig.bloch import BlochState, joint_to_bloch
from blochsig.dynamics import linear_law
from blochsig.errors import (
    InvalidObservableError,
    InvalidProjectorError,
    ZeroProbabilityBranchError,
)
from blochsig.measurement import (
    computational_observable,
    conditional_state,
    fourier_observable,
    local_distribution,
    observable_from_basis,
    outcome_probabilities,
    projector_from_matrix,
    rotate_observable,
)
from blochsig.nosignal_audit import polesink_law
from blochsig.sampling import (
    random_density,
    random_orthonormal_basis,
    singlet_state,
)
from blochsig.su_basis import cached_basis, cached_constants

from helpers import collapse_reduced, unitary_evolve, trace_out


def test_qubit_up_projector_coordinates():
    p = projector_from_matrix(np.diag([1.0, 0.0]), cached_basis(2))
    assert p.u0 == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(p.u, [0.0, 0.0, 0.5], atol=1e-15)
    assert p.rank == 1


def test_identity_projector_coordinates():
    p = projector_from_matrix(np.eye(2), cached_basis(2))
    assert p.u0 == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(p.u, 0.0, atol=1e-15)
    assert p.rank == 2


def test_qutrit_rank2_projector_roundtrip():
    basis = cached_basis(3)
    mat = np.diag([1.0, 1.0, 0.0]).astype(complex)
    p = projector_from_matrix(mat, basis)
    assert p.u0 == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert np.max(np.abs(p.matrix(basis) - mat)) <= 1e-12


def test_invalid_projector_rejected():
    basis = cached_basis(2)
    with pytest.raises(InvalidProjectorError):
        projector_from_matrix(np.array([[0.5, 0.0], [0.0, 0.0]]), basis)  # not idempotent
    with pytest.raises(InvalidProjectorError):
        projector_from_matrix(np.array([[1.0, 0.2], [0.0, 0.0]]), basis)  # not Hermitian


@pytest.mark.parametrize("dim", [2, 3])
def test_coordinate_idempotence_identities(dim):
    # P**2 = P written in (u0, u) coordinates:
    #   u0 = u0**2 + (N/2) |u|**2
    #   (N/2) u_k = N u0 u_k + (N**2/4) sum_ij g_ijk u_i u_j
    rng = np.random.default_rng(dim)
    basis = cached_basis(dim)
    g = cached_constants(dim).g
    vectors = random_orthonormal_basis(rng, dim)
    for rank in range(1, dim):
        mat = sum(np.outer(v, v.conj()) for v in vectors[:rank])
        p = projector_from_matrix(mat, basis)
        lhs0 = p.u0
        rhs0 = p.u0**2 + 0.5 * dim * float(p.u @ p.u)
        assert lhs0 == pytest.approx(rhs0, abs=1e-12)
        quad = np.einsum("ijk,i,j->k", g, p.u, p.u)
        resid = 0.5 * dim * p.u - dim * p.u0 * p.u - 0.25 * dim**2 * quad
        assert np.max(np.abs(resid)) <= 1e-12


def test_computational_observable_qubit():
    obs = computational_observable(2)
    np.testing.assert_allclose(obs.u0_vector(), [0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(obs.u_matrix(), [[0, 0, 0.5], [0, 0, -0.5]], atol=1e-15)


def test_fourier_observable_qubit_is_hadamard_pair():
    obs = fourier_observable(2)
    np.testing.assert_allclose(obs.u0_vector(), [0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(
        np.sort(obs.u_matrix()[:, 0]), [-0.5, 0.5], atol=1e-12
    )
    np.testing.assert_allclose(obs.u_matrix()[:, 1:], 0.0, atol=1e-12)


def test_qutrit_observable_completeness():
    obs = computational_observable(3)
    assert len(obs) == 3
    assert sum(p.u0 for p in obs.outcomes) == pytest.approx(1.0, abs=1e-14)
    assert np.max(np.abs(np.sum(obs.u_matrix(), axis=0))) <= 1e-14


def test_non_orthonormal_vectors_rejected():
    with pytest.raises(InvalidObservableError):
        observable_from_basis(np.array([[1.0, 0.0], [1.0, 0.0]]), cached_basis(2))


def test_rotated_observable_stays_valid():
    basis = cached_basis(2)
    direction = 0.5 * basis.matrices[1]
    obs = rotate_observable(computational_observable(2), direction, 0.7)
    assert sum(p.u0 for p in obs.outcomes) == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(np.sum(obs.u_matrix(), axis=0))) <= 1e-12


def test_probabilities_maximally_mixed():
    probs = outcome_probabilities(computational_observable(2), BlochState(2, np.zeros(3)))
    np.testing.assert_allclose(probs, [0.5, 0.5], atol=1e-15)


def test_probabilities_polarized_state():
    probs = outcome_probabilities(computational_observable(2), BlochState(2, [0, 0, 1.0]))
    np.testing.assert_allclose(probs, [1.0, 0.0], atol=1e-15)


def test_probabilities_match_trace_oracle():
    rng = np.random.default_rng(9)
    basis = cached_basis(3)
    from blochsig.bloch import to_bloch

    for _ in range(20):
        rho = random_density(rng, 3)
        obs = observable_from_basis(random_orthonormal_basis(rng, 3), basis)
        probs = outcome_probabilities(obs, to_bloch(rho, basis))
        oracle = [float(np.real(np.trace(rho @ p.matrix(basis)))) for p in obs.outcomes]
        np.testing.assert_allclose(probs, oracle, atol=1e-12)
        assert float(np.sum(probs)) == pytest.approx(1.0, abs=1e-12)
        assert np.all(probs >= -1e-12) and np.all(probs <= 1.0 + 1e-12)


def test_singlet_conditionals_anticorrelate():
    joint = singlet_state()
    obs_z = computational_observable(2)
    p, cond = conditional_state(joint, obs_z, 0)
    assert p == pytest.approx(0.5, abs=1e-14)
    np.testing.assert_allclose(cond.r, [0.0, 0.0, -1.0], atol=1e-13)
    obs_x = fourier_observable(2)
    k_minus = int(np.argmin(obs_x.u_matrix()[:, 0]))
    p, cond = conditional_state(joint, obs_x, k_minus)
    assert p == pytest.approx(0.5, abs=1e-14)
    np.testing.assert_allclose(cond.r, [1.0, 0.0, 0.0], atol=1e-13)


def test_product_state_conditionals_are_unchanged():
    rng = np.random.default_rng(3)
    b = cached_basis(2)
    rho1, rho2 = random_density(rng, 2), random_density(rng, 2)
    joint = joint_to_bloch(np.kron(rho1, rho2), b, b)
    obs = observable_from_basis(random_orthonormal_basis(rng, 2), b)
    for k in range(2):
        _, cond = conditional_state(joint, obs, k)
        np.testing.assert_allclose(cond.r, joint.r1, atol=1e-12)


def test_zero_probability_branch_raises():
    b = cached_basis(2)
    ket00 = np.zeros((4, 4), dtype=complex)
    ket00[0, 0] = 1.0
    joint = joint_to_bloch(ket00, b, b)
    with pytest.raises(ZeroProbabilityBranchError):
        conditional_state(joint, computational_observable(2), 1)


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 3)])
def test_conditionals_match_collapse_oracle(dims):
    rng = np.random.default_rng(40 + dims[0] * dims[1])
    n1, n2 = dims
    b1, b2 = cached_basis(n1), cached_basis(n2)
    from blochsig.bloch import to_bloch

    for _ in range(20):
        rho = random_density(rng, n1 * n2)
        joint = joint_to_bloch(rho, b1, b2)
        obs = observable_from_basis(random_orthonormal_basis(rng, n2), b2)
        average = np.zeros(n1**2 - 1)
        for k in range(n2):
            p, cond = conditional_state(joint, obs, k)
            prob_oracle, reduced_oracle = collapse_reduced(rho, dims, obs.outcomes[k].matrix(b2))
            assert p == pytest.approx(prob_oracle, abs=1e-12)
            assert np.max(np.abs(cond.r - to_bloch(reduced_oracle, b1).r)) <= 1e-11
            average += p * cond.r
        # non-selective measurement leaves the remote marginal untouched
        assert np.max(np.abs(average - joint.r1)) <= 1e-12


def test_local_distribution_at_t0_is_born_marginal():
    rng = np.random.default_rng(21)
    b1, b2 = cached_basis(2), cached_basis(3)
    rho = random_density(rng, 6)
    joint = joint_to_bloch(rho, b1, b2)
    obs2 = observable_from_basis(random_orthonormal_basis(rng, 3), b2)
    obs1 = observable_from_basis(random_orthonormal_basis(rng, 2), b1)
    dist = local_distribution(joint, obs2, obs1, linear_law(), 0.0)
    marginal = [
        float(np.real(np.trace(trace_out(rho, (2, 3), 1) @ p.matrix(b1))))
        for p in obs1.outcomes
    ]
    np.testing.assert_allclose(dist, marginal, atol=1e-12)
    assert float(np.sum(dist)) == pytest.approx(1.0, abs=1e-10)


def test_local_distribution_linear_singlet_is_uniform():
    joint = singlet_state()
    h1 = np.array([0.3, -0.2, 0.8])
    for t in (0.0, 0.5, 1.0):
        dist = local_distribution(
            joint, fourier_observable(2), computational_observable(2),
            linear_law(), t, h_local=h1,
        )
        np.testing.assert_allclose(dist, [0.5, 0.5], atol=1e-12)


def test_local_distribution_qubit_precession_closed_form():
    # product state polarized along x, local Hamiltonian along z:
    # the x-basis statistics oscillate as (1 +/- cos 2ht)/2.
    b = cached_basis(2)
    joint = joint_to_bloch(
        np.kron(0.5 * (np.eye(2) + np.array([[0, 1], [1, 0]])), np.eye(2) / 2), b, b
    )
    h = 0.35
    t = 0.9
    dist = local_distribution(
        joint, computational_observable(2), fourier_observable(2),
        linear_law(), t, h_local=np.array([0.0, 0.0, h]),
    )
    plus = int(np.argmax(fourier_observable(2).u_matrix()[:, 0]))
    expected_plus = 0.5 * (1.0 + math.cos(2 * h * t))
    assert dist[plus] == pytest.approx(expected_plus, abs=1e-9)
    assert float(np.sum(dist)) == pytest.approx(1.0, abs=1e-12)


def test_local_distribution_polesink_closed_form():
    # singlet + x-basis remote measurement: both conditionals drift to
    # z(t) = tanh(eps t); the up-branch weight becomes (1 + tanh)/2.
    eps, t = 0.1, 1.0
    dist = local_distribution(
        singlet_state(), fourier_observable(2), computational_observable(2),
        polesink_law(eps), t,
    )
    expected_up = 0.5 * (1.0 + math.tanh(eps * t))
    assert dist[0] == pytest.approx(expected_up, abs=1e-8)


def test_local_distribution_matches_unitary_oracle_branches():
    rng = np.random.default_rng(55)
    b = cached_basis(2)
    rho = random_density(rng, 4)
    joint = joint_to_bloch(rho, b, b)
    obs2 = observable_from_basis(random_orthonormal_basis(rng, 2), b)
    obs1 = observable_from_basis(random_orthonormal_basis(rng, 2), b)
    h1 = np.array([0.4, 0.1, -0.3])
    h1_matrix = np.einsum("i,iab->ab", h1, b.matrices)
    t = 0.8
    dist = local_distribution(joint, obs2, obs1, linear_law(), t, h_local=h1)
    oracle = np.zeros(2)
    from blochsig.bloch import from_bloch

    for k in range(2):
        p, cond = conditional_state(joint, obs2, k)
        evolved = unitary_evolve(h1_matrix, from_bloch(cond, b), t)
        for idx, proj in enumerate(obs1.outcomes):
            oracle[idx] += p * float(np.real(np.trace(evolved @ proj.matrix(b))))
    np.testing.assert_allclose(dist, oracle, atol=1e-9)
