"""Correlation polytopes, classical and conditional Kolmogorovian
representations, common-cause explanations and their quantum counterparts."""

__version__ = "0.1.0"

from .scenario import (  # noqa: E402
    EXACT,
    FLOAT,
    CorrelationVector,
    Scenario,
    VertexVector,
    clauser_horne_scenario,
    make_scenario,
    two_event_scenario,
    vector_from_json,
)
from .polytope import evaluate_facets, membership  # noqa: E402
from .classical_rep import (  # noqa: E402
    build_conditional_rep,
    build_kolmogorov_rep,
    is_nonsignaling,
    verify_conditional_rep,
)
from .common_cause import (  # noqa: E402
    build_propensity_explanation,
    build_property_explanation,
    decompose_deterministic,
    decompose_indeterministic,
    extract_kolmogorov_from_property,
    verify_screening,
)

__all__ = [
    "__version__",
    "EXACT",
    "FLOAT",
    "CorrelationVector",
    "Scenario",
    "VertexVector",
    "clauser_horne_scenario",
    "make_scenario",
    "two_event_scenario",
    "vector_from_json",
    "evaluate_facets",
    "membership",
    "build_conditional_rep",
    "build_kolmogorov_rep",
    "is_nonsignaling",
    "verify_conditional_rep",
    "build_propensity_explanation",
    "build_property_explanation",
    "decompose_deterministic",
    "decompose_indeterministic",
    "extract_kolmogorov_from_property",
    "verify_screening",
]
