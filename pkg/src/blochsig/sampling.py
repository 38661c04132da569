"""Seeded random states, bases and Hamiltonians.

Everything here is driven by an explicit ``numpy.random.Generator`` so that
audits and tests are reproducible bit for bit.  Mixed states are drawn from
the Hilbert-Schmidt ensemble (Ginibre ``G``, ``rho = G G+ / Tr``); audits
additionally shrink them toward the maximally mixed state so that small
coordinate perturbations cannot fall off the physical set.
"""

from __future__ import annotations

import numpy as np

from .bloch import JointBlochState, joint_to_bloch
from .su_basis import cached_basis

__all__ = [
    "ginibre_matrix",
    "random_density",
    "random_pure_density",
    "haar_unitary",
    "random_orthonormal_basis",
    "random_hermitian_direction",
    "singlet_density",
    "singlet_state",
    "maximally_entangled_density",
    "interior_joint_state",
    "random_interior_joint",
]


def ginibre_matrix(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def random_density(rng: np.random.Generator, n: int) -> np.ndarray:
    """Hilbert-Schmidt random mixed state."""
    g = ginibre_matrix(rng, n)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure_density(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-distributed unitary via phase-fixed QR of a Ginibre matrix."""
    q, r = np.linalg.qr(ginibre_matrix(rng, n))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_orthonormal_basis(rng: np.random.Generator, n: int) -> np.ndarray:
    """Rows are the n vectors of a Haar-random orthonormal basis."""
    return haar_unitary(rng, n).T


def random_hermitian_direction(rng: np.random.Generator, n: int) -> np.ndarray:
    """Traceless Hermitian matrix of unit Frobenius norm (a rotation axis
    for observable families; the traceless part is what actually rotates)."""
    a = ginibre_matrix(rng, n)
    h = 0.5 * (a + a.conj().T)
    h -= np.trace(h) / n * np.eye(n)
    return h / np.linalg.norm(h)


def singlet_density() -> np.ndarray:
    """Two-qubit singlet (|01> - |10>)/sqrt(2) as a density matrix."""
    v = np.zeros(4, dtype=complex)
    v[1] = 1.0 / np.sqrt(2.0)
    v[2] = -1.0 / np.sqrt(2.0)
    return np.outer(v, v.conj())


def singlet_state() -> JointBlochState:
    """Singlet in coordinates: r1 = r2 = 0, r12 = -identity."""
    return joint_to_bloch(singlet_density(), cached_basis(2), cached_basis(2))


def maximally_entangled_density(n: int) -> np.ndarray:
    """|Phi><Phi| with |Phi> = sum_i |ii> / sqrt(n), for two n-level parties."""
    v = np.zeros(n * n, dtype=complex)
    for i in range(n):
        v[i * n + i] = 1.0 / np.sqrt(n)
    return np.outer(v, v.conj())


def interior_joint_state(rho: np.ndarray, dims: tuple[int, int], mix: float) -> JointBlochState:
    """Shrink a joint density matrix toward maximal mixedness and convert."""
    n1, n2 = dims
    nn = n1 * n2
    smoothed = (1.0 - mix) * np.asarray(rho) + mix * np.eye(nn) / nn
    return joint_to_bloch(smoothed, cached_basis(n1), cached_basis(n2))


def random_interior_joint(
    rng: np.random.Generator, dims: tuple[int, int], mix: float = 0.2
) -> JointBlochState:
    """Full-rank random joint state, safe to perturb coordinate-wise."""
    return interior_joint_state(random_density(rng, dims[0] * dims[1]), dims, mix)
