"""Bloch-coordinate representation of single and bipartite density matrices.

A single system of dimension N is written
``rho = (1/N) (I + r . s)`` with the real coordinate vector
``r_i = (N/2) Tr(rho s_i)``.  A bipartite system factors into the triple
``(r1, r2, r12)``:

    rho = (1/(N1 N2)) ( I  +  r1 . (s x I)  +  r2 . (I x l)
                          +  sum_ij r12_ij  s_i x l_j )

with ``r12_ij = (N1 N2 / 4) Tr(rho s_i x l_j)``.  Under this scaling the
Born rule and the collapse update used in :mod:`blochsig.measurement` hold
with no stray prefactors, and the two-qubit singlet gets the clean
coordinates r1 = r2 = 0, r12 = -I.

Physicality is always decided by eigenvalues of the reconstructed matrix;
for N > 2 the physical set is a proper subset of the coordinate ball, so
norm bounds alone prove nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, UnphysicalStateError
from .su_basis import GeneratorSet

__all__ = [
    "PSD_TOLERANCE",
    "BlochState",
    "JointBlochState",
    "to_bloch",
    "from_bloch",
    "joint_to_bloch",
    "joint_from_bloch",
    "reduce",
    "purity",
    "partial_trace",
    "min_eigenvalue",
    "validate_density_matrix",
]

# Smallest eigenvalue still counted as physical; absorbs integrator noise
# without masking genuine violations.
PSD_TOLERANCE = -1e-10

_HERM_TOL = 1e-12
_TRACE_TOL = 1e-12


def _asvector(r, length, what: str) -> np.ndarray:
    arr = np.asarray(r, dtype=float).reshape(-1)
    if arr.shape != (length,):
        raise DimensionMismatchError(f"{what} must have length {length}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BlochState:
    """Coordinate vector of a single system of dimension ``dim``."""

    dim: int
    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", _asvector(self.r, self.dim**2 - 1, "r"))


@dataclass(frozen=True)
class JointBlochState:
    """Coordinate triple (r1, r2, r12) of a bipartite system."""

    dims: tuple[int, int]
    r1: np.ndarray
    r2: np.ndarray
    r12: np.ndarray

    def __post_init__(self):
        n1, n2 = self.dims
        object.__setattr__(self, "dims", (int(n1), int(n2)))
        d1, d2 = n1**2 - 1, n2**2 - 1
        object.__setattr__(self, "r1", _asvector(self.r1, d1, "r1"))
        object.__setattr__(self, "r2", _asvector(self.r2, d2, "r2"))
        r12 = np.asarray(self.r12, dtype=float)
        if r12.shape != (d1, d2):
            raise DimensionMismatchError(f"r12 must have shape {(d1, d2)}, got {r12.shape}")
        r12.setflags(write=False)
        object.__setattr__(self, "r12", r12)

    def replace(self, **kwargs) -> "JointBlochState":
        data = {"dims": self.dims, "r1": self.r1, "r2": self.r2, "r12": self.r12}
        data.update(kwargs)
        return JointBlochState(**data)


def min_eigenvalue(rho: np.ndarray) -> float:
    """Smallest eigenvalue of a (numerically) Hermitian matrix."""
    return float(np.linalg.eigvalsh(rho)[0])


def validate_density_matrix(rho: np.ndarray, *, psd_tol: float = PSD_TOLERANCE) -> None:
    """Raise ``UnphysicalStateError`` unless rho is Hermitian, unit trace
    and positive semidefinite within tolerance."""
    rho = np.asarray(rho)
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > _HERM_TOL:
        raise UnphysicalStateError(f"matrix is not Hermitian (deviation {herm:.3e})")
    tr = abs(np.trace(rho) - 1.0)
    if tr > _TRACE_TOL:
        raise UnphysicalStateError(f"trace deviates from 1 by {tr:.3e}")
    low = min_eigenvalue(rho)
    if low < psd_tol:
        raise UnphysicalStateError(
            f"matrix is not positive semidefinite (min eigenvalue {low:.3e})",
            min_eigenvalue=low,
        )


def _check_dims(dim: int, basis: GeneratorSet) -> None:
    if basis.dim != dim:
        raise DimensionMismatchError(f"basis dimension {basis.dim} != system dimension {dim}")


def to_bloch(rho: np.ndarray, basis: GeneratorSet) -> BlochState:
    """Project a density matrix onto coordinates r_i = (N/2) Tr(rho s_i)."""
    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[0]
    _check_dims(n, basis)
    r = 0.5 * n * np.real(np.einsum("ab,iba->i", rho, basis.matrices))
    return BlochState(n, r)


def from_bloch(state: BlochState, basis: GeneratorSet, *, check: bool = True) -> np.ndarray:
    """Reconstruct ``(1/N)(I + r . s)``.

    With ``check`` (the default) the result must be positive semidefinite,
    otherwise ``UnphysicalStateError`` is raised with the offending
    eigenvalue attached.
    """
    _check_dims(state.dim, basis)
    n = state.dim
    rho = (np.eye(n, dtype=complex) + np.einsum("i,iab->ab", state.r, basis.matrices)) / n
    if check:
        low = min_eigenvalue(rho)
        if low < PSD_TOLERANCE:
            raise UnphysicalStateError(
                f"coordinates leave the physical set (min eigenvalue {low:.3e})",
                min_eigenvalue=low,
            )
    return rho


def partial_trace(rho: np.ndarray, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Trace out one factor of a bipartite matrix; ``keep`` is 1 or 2."""
    n1, n2 = dims
    rho4 = np.asarray(rho).reshape(n1, n2, n1, n2)
    if keep == 1:
        return np.einsum("abcb->ac", rho4)
    if keep == 2:
        return np.einsum("abad->bd", rho4)
    raise ValueError("keep must be 1 or 2")


def joint_to_bloch(rho12: np.ndarray, b1: GeneratorSet, b2: GeneratorSet) -> JointBlochState:
    """Project a bipartite density matrix onto the (r1, r2, r12) triple."""
    rho12 = np.asarray(rho12, dtype=complex)
    n1, n2 = b1.dim, b2.dim
    if rho12.shape != (n1 * n2, n1 * n2):
        raise DimensionMismatchError(
            f"joint matrix must be {(n1 * n2, n1 * n2)}, got {rho12.shape}"
        )
    r1 = to_bloch(partial_trace(rho12, (n1, n2), keep=1), b1).r
    r2 = to_bloch(partial_trace(rho12, (n1, n2), keep=2), b2).r
    rho4 = rho12.reshape(n1, n2, n1, n2)
    r12 = 0.25 * n1 * n2 * np.real(
        np.einsum("abcd,ica,jdb->ij", rho4, b1.matrices, b2.matrices)
    )
    return JointBlochState((n1, n2), r1, r2, r12)


def joint_from_bloch(
    state: JointBlochState, b1: GeneratorSet, b2: GeneratorSet, *, check: bool = True
) -> np.ndarray:
    """Inverse of :func:`joint_to_bloch`; optionally verifies physicality."""
    n1, n2 = state.dims
    _check_dims(n1, b1)
    _check_dims(n2, b2)
    eye1 = np.eye(n1, dtype=complex)
    eye2 = np.eye(n2, dtype=complex)
    m1 = np.einsum("i,iab->ab", state.r1, b1.matrices)
    m2 = np.einsum("j,jab->ab", state.r2, b2.matrices)
    cross = np.einsum("ij,iab,jcd->acbd", state.r12, b1.matrices, b2.matrices)
    rho = (
        np.kron(eye1, eye2)
        + np.kron(m1, eye2)
        + np.kron(eye1, m2)
        + cross.reshape(n1 * n2, n1 * n2)
    ) / (n1 * n2)
    if check:
        low = min_eigenvalue(rho)
        if low < PSD_TOLERANCE:
            raise UnphysicalStateError(
                f"joint coordinates leave the physical set (min eigenvalue {low:.3e})",
                min_eigenvalue=low,
            )
    return rho


def reduce(state: JointBlochState, subsystem: int) -> BlochState:
    """Reduced coordinates of one party; identical to tracing out the other
    factor of the reconstructed matrix."""
    if subsystem == 1:
        return BlochState(state.dims[0], state.r1)
    if subsystem == 2:
        return BlochState(state.dims[1], state.r2)
    raise ValueError("subsystem must be 1 or 2")


def purity(state: BlochState) -> float:
    """Tr(rho^2) = (1/N)(1 + 2|r|^2/N) without reconstructing the matrix."""
    n = state.dim
    return (1.0 + 2.0 * float(state.r @ state.r) / n) / n
