"""qperm: numerics for finite-dimensional quantum permutation groups.

State convolution, idempotent states via Cesaro averaging, group-like and
support projections, quasi-subgroups, the random / truly-quantum
decomposition, and convolution phase dynamics, all at desk scale.
"""
from .algebra import (
    AlgebraElement,
    AlgebraError,
    LinearFunctional,
    Projection,
    StarAlgebra,
    State,
    gram_norm,
    is_positive_functional,
    meet,
    regular_representation,
    spectral_partition,
    spectral_projection,
    support_projection,
    tensor_algebra,
    tensor_element,
    tensor_functional,
)
from .cqg import (
    CompactQuantumGroup,
    QuantumGroupMorphism,
    ValidationReport,
    abelianization,
    characters,
    classical_group,
    convolve,
    dual_dihedral,
    dual_group,
    dual_symmetric_group,
    haar_idempotent,
    haar_state,
    kac_paljutkin,
    point_state,
    quotient_morphism,
    reverse,
    validate,
)
from .dynamics import (
    PhasePoint,
    RegionLabel,
    Trajectory,
    convergence_to_haar,
    convolution_bounds,
    detect_period,
    finite_quantum_formulas,
    idempotent_gap_check,
    phase_region,
    trajectory,
    verify_bounds_empirically,
)
from .idempotent import (
    CesaroResult,
    IdempotentClass,
    cesaro_idempotent,
    classify_idempotent,
    collapse_stability_probe,
    condition,
    dual_subgroup_idempotent,
    generated_idempotent,
    idempotent_census,
    is_group_like,
    is_idempotent,
    null_space,
    quasi_subgroup_member,
)
from .permutation import (
    ClassicalVersion,
    FixSpectrum,
    birkhoff_slice,
    classical_version,
    decompose,
    fix_spectrum,
    fixed_point_distribution,
    has_integer_fixed_points,
    is_central,
    is_character,
    quantum_fraction,
    stabiliser_idempotent,
    stabiliser_membership,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
