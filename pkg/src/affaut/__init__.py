"""Composition groups of univariate polynomial maps over non-reduced rings.

The package turns three families of finite coefficient rings (Z/p^n,
Z/m, K[t]/(t^e)) plus a symbolic universal ring into a workbench for the
automorphisms of the affine line over them: composition and inversion,
degree-filtered subgroup membership, solvable filtrations, Witt-vector
coordinates, coordinatized group laws, and linearized conjugation
actions on congruence kernels.
"""

from .adjoint import (
    AdjointMatrix,
    ModuleDecomposition,
    ad,
    ad_matrix,
    h_part,
    kernel_element,
    module_decomposition,
    scalar_mul,
    specialize_matrix,
    universal_element,
)
from .autgroup import (
    SubgroupSpec,
    TruncPoly,
    atilde_coefficient_valuation,
    check_abelian_kernel,
    compose,
    composition_series,
    identity_map,
    iterate,
    member,
    nd_coordinates,
    nd_element,
    order,
    reduce_precision,
    sample_automorphism,
    sample_filtered,
    sample_kernel_element,
)
from .errors import (
    AlgebraError,
    InfiniteCoefficientRing,
    IntegralityViolation,
    KernelMismatch,
    NoSolution,
    NotAbelian,
    NotAnAutomorphism,
    NotAUnit,
    NotDivisible,
    PreconditionFailed,
    RingMismatch,
    ShapeMismatch,
)
from .greenberg import (
    ComponentSystem,
    GroupLaw,
    greenberg_transform,
    group_law_capped,
    group_law_shape,
    verify_group_axioms,
)
from .inversion import invert, invert_with_depth, lift_aut, oracle_invert
from .rings import (
    IntegerRing,
    IntModRing,
    RingElem,
    SymbolicRing,
    TruncSeriesRing,
    parse_ring_flag,
    ring_from_descriptor,
    universal_coefficient_ring,
)
from .witt import (
    UniversalWittLaw,
    WittVec,
    derive_witt_laws,
    ghost_map,
    residue_to_witt,
    witt_add,
    witt_mul,
    witt_to_residue,
)

__all__ = [
    "AdjointMatrix",
    "AlgebraError",
    "ComponentSystem",
    "GroupLaw",
    "InfiniteCoefficientRing",
    "IntegralityViolation",
    "IntegerRing",
    "IntModRing",
    "KernelMismatch",
    "ModuleDecomposition",
    "NoSolution",
    "NotAbelian",
    "NotAnAutomorphism",
    "NotAUnit",
    "NotDivisible",
    "PreconditionFailed",
    "RingElem",
    "RingMismatch",
    "ShapeMismatch",
    "SubgroupSpec",
    "SymbolicRing",
    "TruncPoly",
    "TruncSeriesRing",
    "UniversalWittLaw",
    "WittVec",
    "ad",
    "ad_matrix",
    "atilde_coefficient_valuation",
    "check_abelian_kernel",
    "compose",
    "composition_series",
    "derive_witt_laws",
    "ghost_map",
    "greenberg_transform",
    "group_law_capped",
    "group_law_shape",
    "h_part",
    "identity_map",
    "invert",
    "invert_with_depth",
    "iterate",
    "kernel_element",
    "lift_aut",
    "member",
    "module_decomposition",
    "nd_coordinates",
    "nd_element",
    "order",
    "oracle_invert",
    "parse_ring_flag",
    "reduce_precision",
    "residue_to_witt",
    "ring_from_descriptor",
    "sample_automorphism",
    "sample_filtered",
    "sample_kernel_element",
    "scalar_mul",
    "specialize_matrix",
    "universal_coefficient_ring",
    "universal_element",
    "verify_group_axioms",
    "witt_add",
    "witt_mul",
    "witt_to_residue",
]

__version__ = "0.1.0"
