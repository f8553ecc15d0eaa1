"""Theory-independent context incompatibility: quantifier, qubit analysis and optical simulation."""

from .incompat import (
    BlochCase,
    compatibility_check,
    eigenstate_closed_form,
    kl_divergence,
    quantum_relative_entropy,
    qubit_bloch_conditions,
    random_context,
    random_context_max_search,
    random_contexts,
    tici_context,
    tici_distributions,
    tici_quantum,
)
from .measurements import ProjectiveMeasurement, projective_from_observable, qubit_observable
from .states import Context, DensityMatrix

__all__ = [
    "BlochCase",
    "Context",
    "DensityMatrix",
    "ProjectiveMeasurement",
    "compatibility_check",
    "eigenstate_closed_form",
    "kl_divergence",
    "projective_from_observable",
    "quantum_relative_entropy",
    "qubit_bloch_conditions",
    "qubit_observable",
    "random_context",
    "random_context_max_search",
    "random_contexts",
    "tici_context",
    "tici_distributions",
    "tici_quantum",
]
