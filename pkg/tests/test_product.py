import numpy as np
import pytest
from numpy.testing import assert_allclose

from spatial_lab.bimodule import AdjointableMap, Bimodule
from spatial_lab.errors import AlgebraMismatchError, BilinearityError, DimensionError, PreconditionError
from spatial_lab.product import (
    associator_residual,
    build_product,
    cross_generator_residual,
    decompose_check,
    embed_unit,
    exponential_factors,
    factor_residual,
    index_additivity_residual,
    morphism_sum,
    perturbation_rejected,
    project_unit,
    projection_is_spatial,
    recompose,
    scalar_tensor_check,
    scalar_tensor_residual,
)


@pytest.fixture
def pair(c_m2):
    return build_product(Bimodule.free(c_m2, 1), Bimodule.free(c_m2, 2))


def test_structure(pair):
    assert pair.product.index.rank == pair.first.index.rank + pair.second.index.rank
    assert pair.structure_residual() < 1e-14


def test_mixed_algebras(m2, c_m2):
    with pytest.raises(AlgebraMismatchError):
        build_product(Bimodule.regular(m2), Bimodule.regular(c_m2))


def test_sides_are_one_and_two(pair):
    with pytest.raises(ValueError):
        pair.factor(3)


class TestUnits:
    def test_embed_then_project(self, pair, rng):
        p = pair.first.random_unit(rng)
        embedded = embed_unit(pair, 1, p)
        assert project_unit(pair, 1, embedded).distance(p) < 1e-14
        assert project_unit(pair, 2, embedded).zeta.norm() == 0

    def test_embedding_requires_the_right_factor(self, pair, rng):
        with pytest.raises(DimensionError):
            embed_unit(pair, 2, pair.first.random_unit(rng))
        with pytest.raises(DimensionError):
            project_unit(pair, 1, pair.first.random_unit(rng))

    def test_every_unit_decomposes(self, pair, rng):
        for _ in range(5):
            p = pair.product.random_unit(rng)
            assert decompose_check(pair, p)
            assert recompose(pair, p).distance(p) < 1e-12

    def test_exponential_factors_are_unique(self, pair, rng):
        p = pair.product.random_unit(rng)
        e1, e2 = exponential_factors(pair, p)
        assert e1.is_exponential() and e2.is_exponential()
        assert factor_residual(pair, p, e1, e2) < 1e-12
        assert perturbation_rejected(pair, p, rng)

    def test_factors_must_be_exponential(self, pair, rng):
        p = pair.product.random_unit(rng)
        e1, e2 = exponential_factors(pair, p)
        with pytest.raises(PreconditionError):
            factor_residual(pair, p, pair.first.random_unit(rng), e2)


class TestIndex:
    def test_generators_add(self, pair, rng):
        zetas1 = [pair.first.index.random_vector(rng) for _ in range(3)]
        zetas2 = [pair.second.index.random_vector(rng) for _ in range(3)]
        assert index_additivity_residual(pair, zetas1, zetas2) < 1e-12

    def test_cross_generator_has_no_index_term(self, pair, rng):
        p1, p2 = pair.first.random_unit(rng), pair.second.random_unit(rng)
        assert cross_generator_residual(pair, p1, p2) < 1e-14

    def test_associator(self, c_m2, rng):
        F1, F2, F3 = (Bimodule.free(c_m2, k) for k in (1, 2, 1))
        assert associator_residual(F1, F2, F3, rng) < 1e-12


class TestMorphisms:
    def test_morphism_sum(self, pair, c_m2):
        F = pair.first.index
        F2 = pair.second.index
        a1 = AdjointableMap(F, pair.first.index, F.projection * 0.6)
        a2 = AdjointableMap(F, F2, np.vstack([np.eye(F.size) * 0.8, np.zeros((F.size, F.size))]))
        w, w_adjoint = morphism_sum(pair, a1, a2)
        expected = (a1.adjoint() @ a1 + a2.adjoint() @ a2).matrix
        assert_allclose((w_adjoint @ w).matrix, expected, atol=1e-14)
        assert w.is_isometric()
        assert w.is_bilinear()

    def test_morphism_sum_rejects_non_bilinear_maps(self, pair, rng):
        F = pair.first.index
        a1 = AdjointableMap(F, F, rng.standard_normal((F.size, F.size)))
        a2 = AdjointableMap.zero(F, pair.second.index)
        with pytest.raises(BilinearityError):
            morphism_sum(pair, a1, a2)

    @pytest.mark.parametrize("side", [1, 2])
    def test_projections_are_spatial(self, pair, side):
        assert projection_is_spatial(pair, side)


class TestScalarTensor:
    def test_product_of_inner_products(self, m1, rng):
        pair = build_product(Bimodule.free(m1, 2), Bimodule.free(m1, 3))
        units1 = (pair.first.random_unit(rng), pair.first.random_unit(rng))
        units2 = (pair.second.random_unit(rng), pair.second.random_unit(rng))
        assert scalar_tensor_residual(pair, units1, units2, 0.7) < 1e-12
        assert scalar_tensor_check(pair, units1, units2, 0.7)

    def test_only_over_the_scalars(self, pair, rng):
        units1 = (pair.first.random_unit(rng), pair.first.random_unit(rng))
        units2 = (pair.second.random_unit(rng), pair.second.random_unit(rng))
        with pytest.raises(PreconditionError):
            scalar_tensor_check(pair, units1, units2, 0.5)
