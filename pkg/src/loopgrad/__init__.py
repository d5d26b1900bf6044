"""Twisted loop Lie algebras at finite Fourier truncation.

Builds complex simple Lie algebras of type A, represents twisted loop
algebra elements as finite mode families, applies and diagonalizes grading
operators Q = -i X + i ad(eta), normalizes integrable gradations to the
standard form of a twisted algebra L_(a', K'), and classifies the
finite-order automorphism classes that label the outcomes.
"""

from . import errors
from .classify import (
    AffineDiagram,
    ClassificationReport,
    KacLabel,
    brute_force_class_count,
    classification_report,
    enumerate_kac_labels,
    kac_label_of,
    realize_automorphism,
)
from .gradation import (
    GradationTable,
    GradingOperator,
    VectorFieldK,
    apply_grading_operator,
    check_derivation,
    derivation_from_pair,
    flow,
    grading_components,
    grading_subspaces,
    validate_vector_field,
)
from .lie_core import (
    AlgebraAutomorphism,
    AlgebraElement,
    GroupElement,
    SimpleLieAlgebra,
    automorphism_order,
    basis_element,
    bracket,
    bracket_bound_constant,
    build_algebra,
    diagram_automorphism,
    eigenspace_gradation,
    inner_automorphism,
    norm_max,
)
from .loop_algebra import (
    CircleDiffeoLift,
    DecayProfile,
    LoopAutomorphism,
    LoopAutomorphismElement,
    LoopElement,
    TwistData,
    absolute_convergence_check,
    apply_loop_automorphism,
    check_bracket_bound,
    compose_loop_automorphisms,
    evaluate,
    fourier_project,
    invert_loop_automorphism,
    loop_bracket,
    make_loop_element,
    seminorm,
    untwisted,
)
from .normalizer import (
    MonodromyResult,
    NormalizationResult,
    RectificationResult,
    compare_normalizations,
    conjugate_operator,
    monodromy,
    normalize,
    orientation_fix,
    rectify_vector_field,
    solve_conjugation_ode,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
