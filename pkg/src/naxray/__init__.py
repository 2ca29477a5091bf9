"""Discrete and continuous non-abelian X-ray transforms on the integer lattice,
with exact layer-stripping reconstructions."""
from .errors import DomainError, MissingRay, NaxrayError, OffCenterIncidence, SingularError
from .fields import (
    ADDITIVE,
    MULTIPLICATIVE,
    DeltaFieldSpec,
    LatticeField,
    Sinogram,
    random_additive_field,
    random_multiplicative_field,
)
from .geometry import (
    CellChord,
    Ray,
    ball_lattice_points,
    cell_chords,
    irrational_direction_for,
    irrational_family,
    norm_layers,
    primitive_direction,
    ray_lattice_points,
    shadow_set,
    tangent_family,
    tangent_ray,
)
from .matrix_core import frobenius_norm, mat_exp, mat_inv, mat_log
from .pipeline import (
    check_coverage,
    consistency_report,
    forward,
    ray_family,
    reconstruct,
    residual_report,
    validate_reconstruction,
)
from .plan import PlanEntry, StarPlan, build_star_plan
from .reconstruction import (
    AnnulusSpec,
    MeasurementProvider,
    branch_counterexample,
    reconstruct_irrational,
    reconstruct_layers_discrete,
    reconstruct_star,
)
from .transforms import (
    attenuation_cell_factors,
    attenuation_cell_matrix,
    continuous_xray_delta,
    continuous_xray_numeric,
    discrete_scalar_xray,
    discrete_xray,
    factorize_weight,
    forward_project,
    induced_weight,
    lift_delta_field,
    star_transform,
    triangular_field,
    weighted_xray,
)

__version__ = "0.1.0"

__all__ = [
    "ADDITIVE",
    "AnnulusSpec",
    "CellChord",
    "DeltaFieldSpec",
    "DomainError",
    "LatticeField",
    "MULTIPLICATIVE",
    "MeasurementProvider",
    "MissingRay",
    "NaxrayError",
    "OffCenterIncidence",
    "PlanEntry",
    "Ray",
    "SingularError",
    "Sinogram",
    "StarPlan",
    "attenuation_cell_factors",
    "attenuation_cell_matrix",
    "ball_lattice_points",
    "branch_counterexample",
    "build_star_plan",
    "cell_chords",
    "check_coverage",
    "consistency_report",
    "continuous_xray_delta",
    "continuous_xray_numeric",
    "discrete_scalar_xray",
    "discrete_xray",
    "factorize_weight",
    "forward",
    "forward_project",
    "frobenius_norm",
    "induced_weight",
    "irrational_direction_for",
    "irrational_family",
    "lift_delta_field",
    "mat_exp",
    "mat_inv",
    "mat_log",
    "norm_layers",
    "primitive_direction",
    "random_additive_field",
    "random_multiplicative_field",
    "ray_family",
    "ray_lattice_points",
    "reconstruct",
    "reconstruct_irrational",
    "reconstruct_layers_discrete",
    "reconstruct_star",
    "residual_report",
    "shadow_set",
    "star_transform",
    "tangent_family",
    "tangent_ray",
    "triangular_field",
    "validate_reconstruction",
    "weighted_xray",
]
