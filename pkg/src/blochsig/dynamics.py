"""Joint and reduced Bloch-space dynamics for bipartite systems.

The unitary law ``d(rho)/dt = -i [H, rho]`` acts linearly on the coordinate
triple (r1, r2, r12).  Two independent constructions of that flow coexist
here on purpose:

* :func:`linear_generator` pushes every coordinate direction through the
  matrix commutator and projects back — no structure constants involved.
  This is the authoritative linear flow.
* :func:`vector_field` assembles the same flow from the structure
  constants f and g.  Written out per coordinate (with local Hamiltonian
  coefficients h1/h2 and interaction block h12):

      dr1_k  = 2 f1_aik h1_a r1_i  +  (4/N2) f1_aik h12_ab r12_ib  * xi1
      dr2_l  = 2 f2_bjl h2_b r2_j  +  (4/N1) f2_bjl h12_ab r12_aj  * xi2
      dr12_pq = 2 f1_aip h1_a r12_iq + 2 f2_bjq h2_b r12_pj
              + 2 (g1_aip f2_bjq + f1_aip g2_bjq) h12_ab r12_ij    * xi_bilinear
              + 2 f1_aip r1_i h12_aq                               * xi_local1
              + 2 f2_bjq r2_j h12_pb                               * xi_local2

  (summation over repeated indices).  Every term carrying an interaction
  element h12 accepts a state-dependent scalar weight xi; with all weights
  equal to one the field coincides with :func:`linear_generator`, which the
  test suite asserts.  Nonconstant weights make the joint flow nonlinear
  while leaving the isolated-subsystem flow untouched — the construction
  probed by :mod:`blochsig.nosignal_audit`.

Physicality along trajectories is monitored, never enforced: projecting
back into the physical set would corrupt the audits that this module
feeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from . import integrate
from .bloch import (
    PSD_TOLERANCE,
    BlochState,
    JointBlochState,
    joint_from_bloch,
    min_eigenvalue,
    to_bloch,
)
from .errors import DimensionMismatchError, NonlinearityEvaluationError
from .integrate import DEFAULT_OPTIONS, IntegratorOptions, rk4_steps
from .sampling import random_density
from .su_basis import cached_basis, cached_constants

__all__ = [
    "BlochHamiltonian",
    "hamiltonian_from_matrix",
    "random_hamiltonian",
    "XiFunctions",
    "XI_PRESETS",
    "xi_preset",
    "EvolutionLaw",
    "linear_law",
    "xi_law",
    "custom_law",
    "linear_generator",
    "vector_field",
    "EvolutionResult",
    "evolve",
    "evolve_path",
    "reduced_generator",
    "reduced_flow",
    "evolve_reduced",
    "reduced_propagator_fit",
    "pack_coords",
    "unpack_coords",
]


# ---------------------------------------------------------------------------
# Hamiltonians


@dataclass(frozen=True)
class BlochHamiltonian:
    """Coefficient form ``H = h0 I + h1.(s x I) + h2.(I x l) + h12_ij s_i x l_j``.

    All coefficients are real, which makes the reconstructed matrix
    Hermitian by construction.  ``h12`` is the only part able to generate
    correlations; ``is_interaction_free`` tests for its exact vanishing.
    """

    dims: tuple[int, int]
    h0: float = 0.0
    h1: np.ndarray | None = None
    h2: np.ndarray | None = None
    h12: np.ndarray | None = None

    def __post_init__(self):
        n1, n2 = self.dims
        object.__setattr__(self, "dims", (int(n1), int(n2)))
        d1, d2 = n1**2 - 1, n2**2 - 1
        object.__setattr__(self, "h0", float(self.h0))
        for name, shape in (("h1", (d1,)), ("h2", (d2,)), ("h12", (d1, d2))):
            val = getattr(self, name)
            arr = np.zeros(shape) if val is None else np.asarray(val, dtype=float)
            if arr.shape != shape:
                raise DimensionMismatchError(f"{name} must have shape {shape}, got {arr.shape}")
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def is_interaction_free(self) -> bool:
        return not bool(np.any(self.h12 != 0.0))

    def interaction_free(self) -> "BlochHamiltonian":
        """Copy with the interaction block zeroed."""
        return replace(self, h12=np.zeros_like(self.h12))

    def matrix(self) -> np.ndarray:
        n1, n2 = self.dims
        b1, b2 = cached_basis(n1), cached_basis(n2)
        eye1, eye2 = np.eye(n1, dtype=complex), np.eye(n2, dtype=complex)
        h = self.h0 * np.kron(eye1, eye2)
        h += np.kron(np.einsum("i,iab->ab", self.h1, b1.matrices), eye2)
        h += np.kron(eye1, np.einsum("j,jab->ab", self.h2, b2.matrices))
        cross = np.einsum("ij,iab,jcd->acbd", self.h12, b1.matrices, b2.matrices)
        return h + cross.reshape(n1 * n2, n1 * n2)


def hamiltonian_from_matrix(h: np.ndarray, dims: tuple[int, int]) -> BlochHamiltonian:
    """Project a Hermitian matrix onto its coefficient form."""
    n1, n2 = dims
    h = np.asarray(h, dtype=complex)
    if h.shape != (n1 * n2, n1 * n2):
        raise DimensionMismatchError(f"matrix must be {(n1 * n2, n1 * n2)}, got {h.shape}")
    herm = np.max(np.abs(h - h.conj().T))
    if herm > 1e-12:
        raise ValueError(f"matrix is not Hermitian (deviation {herm:.3e})")
    b1, b2 = cached_basis(n1), cached_basis(n2)
    h4 = h.reshape(n1, n2, n1, n2)
    h0 = float(np.trace(h).real) / (n1 * n2)
    red1 = np.einsum("abcb->ac", h4)
    red2 = np.einsum("abad->bd", h4)
    h1 = np.real(np.einsum("ac,ica->i", red1, b1.matrices)) / (2.0 * n2)
    h2 = np.real(np.einsum("bd,jdb->j", red2, b2.matrices)) / (2.0 * n1)
    h12 = np.real(np.einsum("abcd,ica,jdb->ij", h4, b1.matrices, b2.matrices)) / 4.0
    return BlochHamiltonian(dims, h0, h1, h2, h12)


def random_hamiltonian(
    rng: np.random.Generator,
    dims: tuple[int, int],
    scale: float = 0.5,
    interaction: bool = True,
) -> BlochHamiltonian:
    """Gaussian random coefficients, optionally with an interaction block."""
    n1, n2 = dims
    d1, d2 = n1**2 - 1, n2**2 - 1
    h1 = scale * rng.standard_normal(d1)
    h2 = scale * rng.standard_normal(d2)
    h12 = scale * rng.standard_normal((d1, d2)) if interaction else np.zeros((d1, d2))
    return BlochHamiltonian(dims, 0.0, h1, h2, h12)


# ---------------------------------------------------------------------------
# State-dependent weights


def _is_finite(value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise NonlinearityEvaluationError(f"weight evaluated to non-finite value {value!r}")
    return value


@dataclass(frozen=True)
class XiFunctions:
    """State-dependent weights attached to interaction-mediated terms.

    The five indexed callables receive the flow-component index (or index
    pair), the indices of the interaction element they weight, and the
    state triple ``(r1, r2, r12)``; each must return a finite float:

    * ``xi1(i, a, b, r1, r2, r12)`` and ``xi2(i, a, b, ...)`` weight the
      contribution of ``h12[a, b]`` to the reduced components;
    * ``xi12_bilinear(p, q, a, b, ...)`` weights ``h12[a, b]`` in the
      correlation flow;
    * ``xi12_local1(p, q, a, ...)`` weights ``h12[a, q]`` and
      ``xi12_local2(p, q, b, ...)`` weights ``h12[p, b]``.

    ``uniform``, when set, replaces all five families with one scalar
    function of the state, evaluated once per field call — the built-in
    presets are of this form.
    """

    xi1: Callable | None = None
    xi2: Callable | None = None
    xi12_bilinear: Callable | None = None
    xi12_local1: Callable | None = None
    xi12_local2: Callable | None = None
    uniform: Callable | None = None
    name: str = "custom"

    def __post_init__(self):
        if self.uniform is None:
            fields = (self.xi1, self.xi2, self.xi12_bilinear, self.xi12_local1, self.xi12_local2)
            if any(fn is None for fn in fields):
                raise ValueError("either supply `uniform` or all five indexed weights")

    @classmethod
    def constant(cls, value: float = 1.0, name: str | None = None) -> "XiFunctions":
        value = float(value)
        return cls(uniform=lambda r1, r2, r12: value, name=name or f"constant({value:g})")

    @classmethod
    def from_scalar(cls, func: Callable, name: str = "scalar") -> "XiFunctions":
        return cls(uniform=func, name=name)

    def as_indexed(self) -> "XiFunctions":
        """Expand a uniform weight into the five per-index callbacks, to
        drive the general evaluation route (used by tests)."""
        if self.uniform is None:
            return self
        u = self.uniform
        return XiFunctions(
            xi1=lambda i, a, b, r1, r2, r12: u(r1, r2, r12),
            xi2=lambda i, a, b, r1, r2, r12: u(r1, r2, r12),
            xi12_bilinear=lambda p, q, a, b, r1, r2, r12: u(r1, r2, r12),
            xi12_local1=lambda p, q, a, r1, r2, r12: u(r1, r2, r12),
            xi12_local2=lambda p, q, b, r1, r2, r12: u(r1, r2, r12),
            name=self.name + ":indexed",
        )


def _purity_first(r1, r2, r12) -> float:
    n1 = round(math.sqrt(len(r1) + 1))
    return (1.0 + 2.0 * float(r1 @ r1) / n1) / n1


def _corrnorm(r1, r2, r12) -> float:
    return 1.0 / (1.0 + float(np.sum(r12 * r12)))


XI_PRESETS = {
    "one": lambda: XiFunctions.constant(1.0, name="one"),
    "purity1": lambda: XiFunctions.from_scalar(_purity_first, name="purity1"),
    "corrnorm": lambda: XiFunctions.from_scalar(_corrnorm, name="corrnorm"),
}


def xi_preset(name: str) -> XiFunctions:
    try:
        return XI_PRESETS[name]()
    except KeyError:
        raise ValueError(
            f"unknown weight preset {name!r}; available: {sorted(XI_PRESETS)}"
        ) from None


# ---------------------------------------------------------------------------
# Evolution laws


@dataclass(frozen=True)
class EvolutionLaw:
    """A rule for the joint flow plus the isolated-subsystem flow it induces.

    ``linear`` and ``xi`` laws derive their reduced flow from the local
    Hamiltonian (for them it is a state-independent rotation, weights never
    enter).  ``custom`` laws supply their own callables:
    ``joint_field_fn(H, r1, r2, r12) -> (dr1, dr2, dr12)`` and
    ``reduced_field_fn(h_local, r) -> dr``.
    """

    kind: str
    name: str
    xi: XiFunctions | None = None
    joint_field_fn: Callable | None = None
    reduced_field_fn: Callable | None = None


def linear_law() -> EvolutionLaw:
    return EvolutionLaw(kind="linear", name="linear")


def xi_law(xi: XiFunctions | str) -> EvolutionLaw:
    if isinstance(xi, str):
        xi = xi_preset(xi)
    return EvolutionLaw(kind="xi", name=f"xi:{xi.name}", xi=xi)


def custom_law(
    name: str,
    reduced_field: Callable | None = None,
    joint_field: Callable | None = None,
) -> EvolutionLaw:
    return EvolutionLaw(
        kind="custom", name=name, joint_field_fn=joint_field, reduced_field_fn=reduced_field
    )


# ---------------------------------------------------------------------------
# The authoritative linear flow (commutator route)


@lru_cache(maxsize=16)
def _coordinate_frames(dims: tuple[int, int]):
    """Direction matrices for each coordinate and the matching trace
    projections, stacked in coordinate order (r1, r2, row-major r12)."""
    n1, n2 = dims
    b1, b2 = cached_basis(n1), cached_basis(n2)
    eye1, eye2 = np.eye(n1, dtype=complex), np.eye(n2, dtype=complex)
    dirs, weights = [], []
    for s in b1.matrices:
        dirs.append(np.kron(s, eye2))
        weights.append(0.5 * n1)
    for l in b2.matrices:
        dirs.append(np.kron(eye1, l))
        weights.append(0.5 * n2)
    for s in b1.matrices:
        for l in b2.matrices:
            dirs.append(np.kron(s, l))
            weights.append(0.25 * n1 * n2)
    dirs = np.stack(dirs)
    projs = np.asarray(weights)[:, None, None] * dirs
    return dirs, projs


def linear_generator(hamiltonian: BlochHamiltonian) -> np.ndarray:
    """Matrix of the commutator flow on packed coordinates.

    Built numerically: each coordinate direction is pushed through
    ``-i [H, .]`` and projected back.  Serves as the ground truth that the
    structure-constant field must reproduce when all weights are one.
    """
    n1, n2 = hamiltonian.dims
    dirs, projs = _coordinate_frames(hamiltonian.dims)
    h = hamiltonian.matrix()
    comms = -1j * (h[None, :, :] @ dirs - dirs @ h)
    return np.real(np.einsum("uab,mba->um", projs, comms)) / (n1 * n2)


# ---------------------------------------------------------------------------
# Structure-constant field with weights


def _local_parts(hamiltonian, r1, r2, r12, f1, f2):
    loc1 = 2.0 * np.einsum("aik,a,i->k", f1, hamiltonian.h1, r1)
    loc2 = 2.0 * np.einsum("bjl,b,j->l", f2, hamiltonian.h2, r2)
    loc12 = 2.0 * (
        np.einsum("aip,a,iq->pq", f1, hamiltonian.h1, r12)
        + np.einsum("bjq,b,pj->pq", f2, hamiltonian.h2, r12)
    )
    return loc1, loc2, loc12


def _interaction_parts_scalar(hamiltonian, r1, r2, r12, f1, f2, g1, g2):
    n1, n2 = hamiltonian.dims
    h12 = hamiltonian.h12
    int1 = (4.0 / n2) * np.einsum("aik,ib,ab->k", f1, r12, h12, optimize=True)
    int2 = (4.0 / n1) * np.einsum("bjl,aj,ab->l", f2, r12, h12, optimize=True)
    int12 = 2.0 * (
        np.einsum("aip,bjq,ij,ab->pq", g1, f2, r12, h12, optimize=True)
        + np.einsum("aip,bjq,ij,ab->pq", f1, g2, r12, h12, optimize=True)
        + np.einsum("aip,i,aq->pq", f1, r1, h12, optimize=True)
        + np.einsum("bjq,j,pb->pq", f2, r2, h12, optimize=True)
    )
    return int1, int2, int12


def _interaction_parts_indexed(hamiltonian, r1, r2, r12, xi, f1, f2, g1, g2):
    """General route: one weight evaluation per (term, interaction element).

    Weights are only evaluated where their interaction cofactor is nonzero,
    so with a vanishing interaction block the weights are provably inert.
    """
    n1, n2 = hamiltonian.dims
    d1, d2 = n1**2 - 1, n2**2 - 1
    h12 = hamiltonian.h12
    t1 = (4.0 / n2) * np.einsum("aik,ib->kab", f1, r12)
    t2 = (4.0 / n1) * np.einsum("bjl,aj->lab", f2, r12)
    w = 2.0 * (
        np.einsum("aip,bjq,ij->pqab", g1, f2, r12, optimize=True)
        + np.einsum("aip,bjq,ij->pqab", f1, g2, r12, optimize=True)
    )
    c1 = 2.0 * np.einsum("aip,i->ap", f1, r1)
    c2 = 2.0 * np.einsum("bjq,j->bq", f2, r2)

    int1 = np.zeros(d1)
    int2 = np.zeros(d2)
    int12 = np.zeros((d1, d2))
    for a in range(d1):
        for b in range(d2):
            hab = h12[a, b]
            if hab == 0.0:
                continue
            for k in range(d1):
                int1[k] += t1[k, a, b] * hab * _is_finite(xi.xi1(k, a, b, r1, r2, r12))
            for l in range(d2):
                int2[l] += t2[l, a, b] * hab * _is_finite(xi.xi2(l, a, b, r1, r2, r12))
            for p in range(d1):
                for q in range(d2):
                    int12[p, q] += (
                        w[p, q, a, b] * hab * _is_finite(xi.xi12_bilinear(p, q, a, b, r1, r2, r12))
                    )
    for p in range(d1):
        for q in range(d2):
            for a in range(d1):
                if h12[a, q] != 0.0:
                    int12[p, q] += (
                        c1[a, p] * h12[a, q] * _is_finite(xi.xi12_local1(p, q, a, r1, r2, r12))
                    )
            for b in range(d2):
                if h12[p, b] != 0.0:
                    int12[p, q] += (
                        c2[b, q] * h12[p, b] * _is_finite(xi.xi12_local2(p, q, b, r1, r2, r12))
                    )
    return int1, int2, int12


def _vector_field_raw(law, hamiltonian, r1, r2, r12):
    if law.kind == "custom":
        if law.joint_field_fn is None:
            raise ValueError(f"law {law.name!r} provides no joint field")
        dr1, dr2, dr12 = law.joint_field_fn(hamiltonian, r1, r2, r12)
        return (
            np.asarray(dr1, dtype=float),
            np.asarray(dr2, dtype=float),
            np.asarray(dr12, dtype=float),
        )
    n1, n2 = hamiltonian.dims
    sc1, sc2 = cached_constants(n1), cached_constants(n2)
    f1, f2, g1, g2 = sc1.f, sc2.f, sc1.g, sc2.g
    loc1, loc2, loc12 = _local_parts(hamiltonian, r1, r2, r12, f1, f2)
    if hamiltonian.is_interaction_free:
        # No interaction: weights must not even be evaluated.
        return loc1, loc2, loc12
    if law.kind == "linear":
        scalar = 1.0
    elif law.xi.uniform is not None:
        scalar = _is_finite(law.xi.uniform(r1, r2, r12))
    else:
        int1, int2, int12 = _interaction_parts_indexed(
            hamiltonian, r1, r2, r12, law.xi, f1, f2, g1, g2
        )
        return loc1 + int1, loc2 + int2, loc12 + int12
    int1, int2, int12 = _interaction_parts_scalar(hamiltonian, r1, r2, r12, f1, f2, g1, g2)
    return loc1 + scalar * int1, loc2 + scalar * int2, loc12 + scalar * int12


def vector_field(law: EvolutionLaw, hamiltonian: BlochHamiltonian, state: JointBlochState):
    """Time derivative (dr1, dr2, dr12) of the given law at the given state."""
    if state.dims != hamiltonian.dims:
        raise DimensionMismatchError(
            f"state dims {state.dims} != Hamiltonian dims {hamiltonian.dims}"
        )
    return _vector_field_raw(law, hamiltonian, state.r1, state.r2, state.r12)


# ---------------------------------------------------------------------------
# Joint evolution


def pack_coords(state: JointBlochState) -> np.ndarray:
    return np.concatenate([state.r1, state.r2, state.r12.ravel()])


def unpack_coords(x: np.ndarray, dims: tuple[int, int]) -> JointBlochState:
    d1, d2 = dims[0] ** 2 - 1, dims[1] ** 2 - 1
    return JointBlochState(dims, x[:d1], x[d1 : d1 + d2], x[d1 + d2 :].reshape(d1, d2))


def _flat_field(law, hamiltonian):
    d1, d2 = hamiltonian.dims[0] ** 2 - 1, hamiltonian.dims[1] ** 2 - 1
    if law.kind == "linear":
        gen = linear_generator(hamiltonian)
        return lambda x: gen @ x

    def fn(x):
        r1 = x[:d1]
        r2 = x[d1 : d1 + d2]
        r12 = x[d1 + d2 :].reshape(d1, d2)
        dr1, dr2, dr12 = _vector_field_raw(law, hamiltonian, r1, r2, r12)
        return np.concatenate([dr1, dr2, dr12.ravel()])

    return fn


class EvolutionResult(NamedTuple):
    """Final state plus a physicality report (never silently clamped)."""

    state: JointBlochState
    physical: bool
    min_eigenvalue: float


def _result_for(state: JointBlochState) -> EvolutionResult:
    n1, n2 = state.dims
    rho = joint_from_bloch(state, cached_basis(n1), cached_basis(n2), check=False)
    low = min_eigenvalue(rho)
    return EvolutionResult(state, low >= PSD_TOLERANCE, low)


def evolve(
    law: EvolutionLaw,
    hamiltonian: BlochHamiltonian,
    state0: JointBlochState,
    t: float,
    options: IntegratorOptions | None = None,
) -> EvolutionResult:
    """Integrate the joint flow for time t >= 0 and report physicality."""
    if t < 0:
        raise ValueError("evolution time must be nonnegative")
    if state0.dims != hamiltonian.dims:
        raise DimensionMismatchError(
            f"state dims {state0.dims} != Hamiltonian dims {hamiltonian.dims}"
        )
    options = options or DEFAULT_OPTIONS
    if t == 0.0:
        return _result_for(state0)
    x = integrate.solve(_flat_field(law, hamiltonian), pack_coords(state0), t, options)
    return _result_for(unpack_coords(x, hamiltonian.dims))


def evolve_path(
    law: EvolutionLaw,
    hamiltonian: BlochHamiltonian,
    state0: JointBlochState,
    times,
    options: IntegratorOptions | None = None,
) -> list[tuple[float, EvolutionResult]]:
    """Sample the trajectory at ascending times (one continuous integration)."""
    times = [float(t) for t in times]
    if any(t < 0 for t in times) or any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("sample times must be nonnegative and ascending")
    options = options or DEFAULT_OPTIONS
    field = _flat_field(law, hamiltonian)
    out = []
    current = pack_coords(state0)
    t_prev = 0.0
    for t in times:
        if t > t_prev:
            current = integrate.solve(field, current, t - t_prev, options)
            t_prev = t
        out.append((t, _result_for(unpack_coords(current, hamiltonian.dims))))
    return out


# ---------------------------------------------------------------------------
# Reduced (isolated-subsystem) flows


def reduced_generator(h_local, dim: int) -> np.ndarray:
    """Rotation generator of an isolated subsystem: dr/dt = L r with
    ``L_ki = 2 sum_a f_aik h_a``."""
    f = cached_constants(dim).f
    h = np.asarray(h_local, dtype=float)
    if h.shape != (dim**2 - 1,):
        raise DimensionMismatchError(f"local Hamiltonian must have length {dim**2 - 1}")
    return 2.0 * np.einsum("aik,a->ki", f, h)


class LinearReducedFlow:
    """Branch propagation for laws whose isolated flow is state-independent.

    With the fixed-step method the one-step map of a linear field is itself
    a matrix, so it is assembled once per time span and reused; propagation
    is then exactly linear in the initial condition (what the audit's
    cancellation identities rely on), and cheap.
    """

    linear = True

    def __init__(self, generator: np.ndarray):
        self.generator = np.asarray(generator, dtype=float)
        self._step_cache: dict[tuple[int, float], np.ndarray] = {}

    def field(self, r: np.ndarray) -> np.ndarray:
        return self.generator @ r

    def _rk4_matrix(self, t: float, step: float) -> np.ndarray:
        n, h = rk4_steps(t, step)
        key = (n, h)
        cached = self._step_cache.get(key)
        if cached is None:
            hl = h * self.generator
            one_step = np.eye(hl.shape[0])
            term = np.eye(hl.shape[0])
            for factor in (1.0, 2.0, 3.0, 4.0):  # degree-4 Taylor = exact rk4 step map
                term = term @ hl / factor
                one_step = one_step + term
            cached = np.linalg.matrix_power(one_step, n)
            self._step_cache[key] = cached
        return cached

    def propagate(self, r0, t: float, options: IntegratorOptions | None = None) -> np.ndarray:
        options = options or DEFAULT_OPTIONS
        r0 = np.asarray(r0, dtype=float)
        if t == 0.0:
            return r0.copy()
        if options.method == "rk4":
            return self._rk4_matrix(t, options.step) @ r0
        return integrate.solve(self.field, r0, t, options)


class FuncReducedFlow:
    """Branch propagation for laws with an arbitrary reduced field."""

    linear = False

    def __init__(self, field_fn: Callable):
        self._fn = field_fn

    def field(self, r: np.ndarray) -> np.ndarray:
        return np.asarray(self._fn(r), dtype=float)

    def propagate(self, r0, t: float, options: IntegratorOptions | None = None) -> np.ndarray:
        return integrate.solve(self.field, np.asarray(r0, dtype=float), t, options)


def reduced_flow(law: EvolutionLaw, h_local, dim: int):
    """The isolated-subsystem flow a law induces, given the local
    Hamiltonian coefficients of that subsystem."""
    if law.kind in ("linear", "xi"):
        return LinearReducedFlow(reduced_generator(h_local, dim))
    if law.reduced_field_fn is None:
        raise ValueError(f"law {law.name!r} provides no reduced flow")
    h = np.zeros(dim**2 - 1) if h_local is None else np.asarray(h_local, dtype=float)
    return FuncReducedFlow(lambda r: law.reduced_field_fn(h, r))


def evolve_reduced(
    law: EvolutionLaw,
    h_local,
    r0: BlochState,
    t: float,
    options: IntegratorOptions | None = None,
) -> BlochState:
    """Integrate a single subsystem under the law's reduced flow."""
    if t < 0:
        raise ValueError("evolution time must be nonnegative")
    flow = reduced_flow(law, h_local, r0.dim)
    return BlochState(r0.dim, flow.propagate(r0.r, t, options))


FIT_OPTIONS = IntegratorOptions(method="rk4", step=0.01)


def reduced_propagator_fit(
    law: EvolutionLaw,
    hamiltonian: BlochHamiltonian,
    subsystem: int = 1,
    t: float = 1.0,
    probes: int = 20,
    seed: int = 1234,
    options: IntegratorOptions | None = None,
    scale: float = 0.5,
) -> tuple[np.ndarray, float]:
    """Fit a state-independent matrix to the reduced flow and measure how
    badly fresh probes break it.

    Columns come from evolving scaled coordinate axes (scale 0.5 keeps them
    inside the physical set for every dimension); the residual is the worst
    max-norm mismatch ``|r(t; r0) - A r0|`` over random probe states.  A
    small residual certifies that isolated subsystems evolve by a matrix —
    the structural property separating signaling from nonsignaling laws.
    """
    if not hamiltonian.is_interaction_free:
        raise ValueError("propagator fit requires a Hamiltonian with no interaction block")
    if subsystem not in (1, 2):
        raise ValueError("subsystem must be 1 or 2")
    n = hamiltonian.dims[subsystem - 1]
    h_local = hamiltonian.h1 if subsystem == 1 else hamiltonian.h2
    options = options or FIT_OPTIONS
    flow = reduced_flow(law, h_local, n)
    d = n**2 - 1
    a = np.empty((d, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = scale
        a[:, i] = flow.propagate(e, t, options) / scale
    rng = np.random.default_rng(seed)
    basis = cached_basis(n)
    residual = 0.0
    for _ in range(probes):
        r0 = to_bloch(random_density(rng, n), basis).r
        rt = flow.propagate(r0, t, options)
        residual = max(residual, float(np.max(np.abs(rt - a @ r0))))
    return a, residual
