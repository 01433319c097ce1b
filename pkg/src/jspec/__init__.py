"""Joint spectra of commuting matrix tuples, Bernstein functional calculus
and stability of multiparameter semigroups."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BoundedSemigroupError,
    ConvergenceError,
    DomainError,
    JSpecError,
    MeasureOverflowError,
    StructuralError,
    ValidationError,
)
from .linalg_core import (  # noqa: E402
    DEFAULT_TOLERANCES,
    CommutingTuple,
    SpectrumPointSet,
    ToleranceConfig,
    candidate_points,
    commutation_residual,
    joint_eigenvalues,
    make_rng,
    numerical_rank,
    semigroup_value,
    simultaneous_schur,
)
from .joint_spectra import (  # noqa: E402
    CommutantBasis,
    DiagonalModel,
    MembershipVerdict,
    approximate_membership,
    approximate_spectrum,
    bicommutant_basis,
    bicommutant_spectrum,
    commutant_basis,
    commutant_spectrum,
    commutant_spectrum_membership,
    essential_range,
    hermitian_witness,
    in_essential_range,
    joint_spectrum_J,
    point_spectrum,
    residual_membership,
    residual_spectrum,
    shilov_characters,
    shilov_spectrum,
)
from .koszul import (  # noqa: E402
    KoszulComplex,
    LastDifferentialVerdict,
    build_complex,
    exactness_profile,
    is_exact,
    last_differential_classify,
    taylor_membership,
    taylor_spectrum,
)
from .bernstein import (  # noqa: E402
    BernsteinFunction,
    DiscreteMeasure,
    evaluate_psi,
    poisson_truncation_order,
    psi_at_minus_infinity,
    psi_of_tuple,
    spectral_mapping_report,
    subordinate_measure,
    subordinate_semigroup_value,
    validate,
)
from .stability import (  # noqa: E402
    Cone,
    cascade_solve,
    rolewicz_check,
    shilov_spectral_bound,
    spectral_radius_at,
    stability_report,
    strong_stability_conditions,
)
