"""Bloch-coordinate dynamics for bipartite quantum systems, with numerical
audits that decide whether an evolution law lets one party signal to the
other through measurement choices alone."""

from .version import __version__

from .su_basis import (
    GeneratorSet,
    StructureConstants,
    build_generators,
    structure_constants,
    cached_basis,
    cached_constants,
)
from .bloch import (
    BlochState,
    JointBlochState,
    to_bloch,
    from_bloch,
    joint_to_bloch,
    joint_from_bloch,
    reduce,
    purity,
    partial_trace,
)
from .measurement import (
    Projector,
    ProjectiveObservable,
    projector_from_matrix,
    observable_from_basis,
    observable_from_matrices,
    computational_observable,
    fourier_observable,
    rotate_observable,
    outcome_probabilities,
    conditional_state,
    local_distribution,
)
from .integrate import IntegratorOptions
from .dynamics import (
    BlochHamiltonian,
    hamiltonian_from_matrix,
    XiFunctions,
    xi_preset,
    EvolutionLaw,
    linear_law,
    xi_law,
    custom_law,
    linear_generator,
    vector_field,
    evolve,
    evolve_path,
    evolve_reduced,
    reduced_propagator_fit,
    EvolutionResult,
)
from .nosignal_audit import (
    AuditConfig,
    AuditReport,
    ObservableFamily,
    d_remote_state,
    d_correlations,
    d_remote_observable,
    audit,
    signaling_channel_demo,
    polesink_law,
)
from . import errors

__all__ = [
    "__version__",
    "GeneratorSet",
    "StructureConstants",
    "build_generators",
    "structure_constants",
    "cached_basis",
    "cached_constants",
    "BlochState",
    "JointBlochState",
    "to_bloch",
    "from_bloch",
    "joint_to_bloch",
    "joint_from_bloch",
    "reduce",
    "purity",
    "partial_trace",
    "Projector",
    "ProjectiveObservable",
    "projector_from_matrix",
    "observable_from_basis",
    "observable_from_matrices",
    "computational_observable",
    "fourier_observable",
    "rotate_observable",
    "outcome_probabilities",
    "conditional_state",
    "local_distribution",
    "IntegratorOptions",
    "BlochHamiltonian",
    "hamiltonian_from_matrix",
    "XiFunctions",
    "xi_preset",
    "EvolutionLaw",
    "linear_law",
    "xi_law",
    "custom_law",
    "linear_generator",
    "vector_field",
    "evolve",
    "evolve_path",
    "evolve_reduced",
    "reduced_propagator_fit",
    "EvolutionResult",
    "AuditConfig",
    "AuditReport",
    "ObservableFamily",
    "d_remote_state",
    "d_correlations",
    "d_remote_observable",
    "audit",
    "signaling_channel_demo",
    "polesink_law",
    "errors",
]
