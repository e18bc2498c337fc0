"""The product of two time-ordered systems, realized as Pi(F1 + F2)"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import SuperOperator
from .bimodule import AdjointableMap, Bimodule, DirectSum, ModuleVector, direct_sum, gram
from .config import DEFAULT_TOLERANCES
from .errors import AlgebraMismatchError, BilinearityError, DimensionError, PreconditionError
from .tof import MorphismMatrix, TofSystem, UnitParams, generator, omega_beta, unit_inner
from .trotter import trotter_product

logger = logging.getLogger(__name__)

SIDES = (1, 2)


@dataclass(frozen=True, eq=False)
class ProductSystemPair:
    first: TofSystem
    second: TofSystem
    product: TofSystem
    index_sum: DirectSum

    def factor(self, side: int) -> TofSystem:
        return {1: self.first, 2: self.second}[_side(side)]

    def iota(self, side: int) -> AdjointableMap:
        return self.index_sum.iota(_side(side) - 1)

    def proj(self, side: int) -> AdjointableMap:
        return self.index_sum.proj(_side(side) - 1)

    def structure_residual(self) -> float:
        """Defects of: iota isometric, p o iota = id, p1 + p2 = id on the sum, orthogonal ranges"""
        P = self.product.index.projection
        i1, i2 = self.iota(1).matrix, self.iota(2).matrix
        residuals = [
            np.linalg.norm(i1.conj().T @ i1 - self.first.index.projection, 2),
            np.linalg.norm(i2.conj().T @ i2 - self.second.index.projection, 2),
            np.linalg.norm(i1 @ i1.conj().T + i2 @ i2.conj().T - P, 2),
            np.linalg.norm(i1.conj().T @ i2, 2),
        ]
        return float(max(residuals))


def _side(side: int) -> int:
    if side not in SIDES:
        raise ValueError(f"side must be 1 or 2, got {side}")
    return side


def build_product(F1: Bimodule, F2: Bimodule) -> ProductSystemPair:
    if F1.algebra != F2.algebra:
        raise AlgebraMismatchError(f"{F1.algebra} vs {F2.algebra}")
    index_sum = direct_sum(F1, F2)
    logger.debug(f"product index: ranks {F1.rank} + {F2.rank} -> {index_sum.module.rank}")
    return ProductSystemPair(TofSystem(F1), TofSystem(F2), TofSystem(index_sum.module), index_sum)


def embed_unit(pair: ProductSystemPair, side: int, p: UnitParams) -> UnitParams:
    """(beta, zeta) -> (beta, iota zeta)"""
    if not p.system.index.compatible(pair.factor(side).index):
        raise DimensionError(f"unit does not belong to factor {side}")
    return UnitParams(pair.product, p.beta, pair.iota(side).apply(p.zeta))


def project_unit(pair: ProductSystemPair, side: int, p: UnitParams) -> UnitParams:
    """(beta, zeta) -> (beta, p_side zeta)"""
    if not p.system.index.compatible(pair.product.index):
        raise DimensionError("unit does not belong to the product system")
    return UnitParams(pair.factor(side), p.beta, pair.proj(side).apply(p.zeta))


def recompose(pair: ProductSystemPair, p: UnitParams) -> UnitParams:
    """embed(1, p^1) (x) embed(2, p^2) (x) omega^{-beta}"""
    halves = trotter_product(embed_unit(pair, 1, project_unit(pair, 1, p)), embed_unit(pair, 2, project_unit(pair, 2, p)))
    return trotter_product(halves, omega_beta(pair.product, -p.beta))


def decomposition_residual(pair: ProductSystemPair, p: UnitParams) -> float:
    return recompose(pair, p).distance(p)


def decompose_check(pair: ProductSystemPair, p: UnitParams, tol: float = DEFAULT_TOLERANCES.algebraic) -> bool:
    return decomposition_residual(pair, p) <= tol * max(1.0, p.beta.norm() + p.zeta.norm())


def exponential_factors(pair: ProductSystemPair, p: UnitParams) -> tuple[UnitParams, UnitParams]:
    """The exponential units (0, p_1 zeta) and (0, p_2 zeta) of the two factors"""
    return (
        pair.first.unit(zeta=pair.proj(1).apply(p.zeta)),
        pair.second.unit(zeta=pair.proj(2).apply(p.zeta)),
    )


def factor_residual(pair: ProductSystemPair, p: UnitParams, e1: UnitParams, e2: UnitParams) -> float:
    """How far embed(1, e1) (x) embed(2, e2) (x) omega^beta is from p"""
    if not (e1.is_exponential() and e2.is_exponential()):
        raise PreconditionError("factors must be exponential units")
    combined = trotter_product(trotter_product(embed_unit(pair, 1, e1), embed_unit(pair, 2, e2)), omega_beta(pair.product, p.beta))
    return combined.distance(p)


def perturbation_rejected(
    pair: ProductSystemPair,
    p: UnitParams,
    rng: np.random.Generator,
    size: float = 1e-3,
    tol: float = DEFAULT_TOLERANCES.algebraic,
) -> bool:
    """True iff the exponential factors reproduce p and every perturbed pair does not"""
    e1, e2 = exponential_factors(pair, p)
    if factor_residual(pair, p, e1, e2) > tol * max(1.0, p.zeta.norm()):
        return False
    for side in SIDES:
        F = pair.factor(side).index
        if F.is_zero:
            continue
        delta = F.random_vector(rng, size)
        if side == 1:
            perturbed = factor_residual(pair, p, pair.first.unit(zeta=e1.zeta + delta), e2)
        else:
            perturbed = factor_residual(pair, p, e1, pair.second.unit(zeta=e2.zeta + delta))
        if perturbed <= tol:
            return False
    return True


def index_additivity_residual(
    pair: ProductSystemPair, zetas1: Sequence[ModuleVector], zetas2: Sequence[ModuleVector]
) -> float:
    """Generators of Trotter-composed embedded exponential units against Pi(F1 + F2) and against the factor sum

    For exponential units built from (z1_i, z2_i) the product unit is
    (0, z1_i + z2_i) in the sum, and its generators must equal both the
    product-system generators of those parameters and L^1 + L^2.
    """
    if len(zetas1) != len(zetas2):
        raise ValueError("one pair of index vectors per unit")
    composed, direct, firsts, seconds = [], [], [], []
    for z1, z2 in zip(zetas1, zetas2):
        u1, u2 = pair.first.unit(zeta=z1), pair.second.unit(zeta=z2)
        firsts.append(u1)
        seconds.append(u2)
        composed.append(trotter_product(embed_unit(pair, 1, u1), embed_unit(pair, 2, u2)))
        direct.append(pair.product.unit(zeta=pair.index_sum.combine([z1, z2])))
    worst = 0.0
    for i in range(len(composed)):
        for j in range(len(composed)):
            L = generator(composed[i], composed[j])
            worst = max(
                worst,
                L.distance(generator(direct[i], direct[j])),
                L.distance(generator(firsts[i], firsts[j]) + generator(seconds[i], seconds[j])),
            )
    return worst


def cross_generator_residual(pair: ProductSystemPair, p1: UnitParams, p2: UnitParams) -> float:
    """||L^{embed(1,p1), embed(2,p2)}(b) - (beta1* b + b beta2)||; the zeta cross term vanishes"""
    L = generator(embed_unit(pair, 1, p1), embed_unit(pair, 2, p2))
    return L.distance(SuperOperator.left(p1.beta.adjoint()) + SuperOperator.right(p2.beta))


def morphism_sum(pair: ProductSystemPair, a1: AdjointableMap, a2: AdjointableMap) -> tuple[AdjointableMap, AdjointableMap]:
    """w = iota_1 a_1 + iota_2 a_2 : F -> F1 + F2 and its adjoint a_1* p_1 + a_2* p_2"""
    if not a1.source.compatible(a2.source):
        raise DimensionError("both maps must start at the same module")
    if not (a1.target.compatible(pair.first.index) and a2.target.compatible(pair.second.index)):
        raise DimensionError("maps must land in the two factors")
    for a in (a1, a2):
        if not a.is_bilinear(DEFAULT_TOLERANCES.generic):
            raise BilinearityError(f"component map is not bilinear (residual {a.bilinearity_residual():.3e})")
    w = AdjointableMap(a1.source, pair.product.index, np.vstack([a1.matrix, a2.matrix]))
    return w, w.adjoint()


def projection_morphism(pair: ProductSystemPair, side: int) -> MorphismMatrix:
    return MorphismMatrix.from_map(pair.product, pair.factor(side), pair.proj(side))


def projection_is_spatial(pair: ProductSystemPair, side: int) -> bool:
    return projection_morphism(pair, side).fixes_vacuum()


def scalar_tensor_residual(
    pair: ProductSystemPair,
    units1: tuple[UnitParams, UnitParams],
    units2: tuple[UnitParams, UnitParams],
    t: float,
) -> float:
    """Relative gap between the product inner product and the product of factor inner products

    Only meaningful over the scalars, where the product system of the
    exponential units is the tensor product of the factors.
    """
    B = pair.product.algebra
    if B.block_sizes != (1,):
        raise PreconditionError("the tensor factorization is only available over the scalar algebra")
    one = B.unit()
    (p1, q1), (p2, q2) = units1, units2
    left = trotter_product(embed_unit(pair, 1, p1), embed_unit(pair, 2, p2))
    right = trotter_product(embed_unit(pair, 1, q1), embed_unit(pair, 2, q2))
    joint = unit_inner(left, right, t, one).matrix[0, 0]
    factored = unit_inner(p1, q1, t, one).matrix[0, 0] * unit_inner(p2, q2, t, one).matrix[0, 0]
    return float(abs(joint - factored) / max(1.0, abs(factored)))


def scalar_tensor_check(
    pair: ProductSystemPair,
    units1: tuple[UnitParams, UnitParams],
    units2: tuple[UnitParams, UnitParams],
    t: float,
    tol: float = DEFAULT_TOLERANCES.algebraic,
) -> bool:
    """Product inner products factor, and the vacuum goes to the vacuum tensor the vacuum"""
    vacua = (pair.first.vacuum(), pair.first.vacuum()), (pair.second.vacuum(), pair.second.vacuum())
    return scalar_tensor_residual(pair, units1, units2, t) <= tol and scalar_tensor_residual(pair, *vacua, t) <= tol


def associator_residual(F1: Bimodule, F2: Bimodule, F3: Bimodule, rng: np.random.Generator, samples: int = 3) -> float:
    """Gram mismatch between (F1 + F2) + F3 and F1 + (F2 + F3) on matching random vectors"""
    left_inner = direct_sum(F1, F2)
    left = direct_sum(left_inner.module, F3)
    right_inner = direct_sum(F2, F3)
    right = direct_sum(F1, right_inner.module)
    vectors_left, vectors_right = [], []
    for _ in range(samples):
        x1, x2, x3 = F1.random_vector(rng), F2.random_vector(rng), F3.random_vector(rng)
        vectors_left.append(left.combine([left_inner.combine([x1, x2]), x3]))
        vectors_right.append(right.combine([x1, right_inner.combine([x2, x3])]))
    return float(np.max(np.abs(gram(vectors_left) - gram(vectors_right))))
