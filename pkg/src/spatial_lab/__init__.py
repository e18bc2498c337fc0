"""Spatial Lab - numerical laboratory for spatial product systems of Hilbert bimodules"""

from .algebra import Algebra, AlgebraElement, SuperOperator, is_completely_positive, is_positive_element, superop_exp
from .bimodule import Bimodule, ModuleVector, center, direct_sum, inner_product, tensor_over_B
from .free_flow import decompose, free_index, free_inner_closed, free_inner_quadrature, free_unit_component
from .kernels import CPDKernel, ce_split, is_cpd, kolmogorov, semigroup_at
from .product import build_product, decompose_check, embed_unit, morphism_sum, project_unit, scalar_tensor_check
from .tof import (
    TofSystem,
    UnitParams,
    apply_morphism,
    automorphism_to,
    exponential_unit_component,
    generator,
    is_central_unital,
    is_isomorphism,
    quadrature_inner,
    unit_inner,
)
from .trotter import WeightedUnits, approximant_semigroup, boxplus, cross_approximant, exponentialize, trotter_product

__version__ = "0.1.0"

__all__ = [
    "Algebra",
    "AlgebraElement",
    "SuperOperator",
    "is_positive_element",
    "superop_exp",
    "is_completely_positive",
    "Bimodule",
    "ModuleVector",
    "inner_product",
    "tensor_over_B",
    "direct_sum",
    "center",
    "CPDKernel",
    "is_cpd",
    "kolmogorov",
    "semigroup_at",
    "ce_split",
    "TofSystem",
    "UnitParams",
    "generator",
    "unit_inner",
    "exponential_unit_component",
    "quadrature_inner",
    "apply_morphism",
    "is_central_unital",
    "automorphism_to",
    "is_isomorphism",
    "WeightedUnits",
    "boxplus",
    "trotter_product",
    "exponentialize",
    "approximant_semigroup",
    "cross_approximant",
    "build_product",
    "embed_unit",
    "project_unit",
    "decompose_check",
    "morphism_sum",
    "scalar_tensor_check",
    "decompose",
    "free_unit_component",
    "free_inner_quadrature",
    "free_inner_closed",
    "free_index",
]
