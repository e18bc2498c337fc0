import numpy as np
import pytest
from numpy.testing import assert_allclose

from spatial_lab.algebra import Algebra, is_positive_element
from spatial_lab.bimodule import (
    AdjointableMap,
    Bimodule,
    TensorWord,
    center,
    direct_sum,
    from_gram,
    gram,
    gram_is_psd,
    inner_map,
    inner_product,
    is_centered,
    tensor_over_B,
)
from spatial_lab.errors import AlgebraMismatchError, DimensionError


def test_regular_module_inner_product_is_multiplication(m2, rng):
    F = Bimodule.regular(m2)
    a, b = m2.random_element(rng), m2.random_element(rng)
    x, y = F.from_components([a]), F.from_components([b])
    assert inner_product(x, y).close_to(a.adjoint() * b, 1e-14)


def test_free_module_has_full_rank(c_m2):
    F = Bimodule.free(c_m2, 2)
    assert F.is_valid()
    assert F.rank == 2 * c_m2.N
    assert Bimodule.zero(c_m2).is_zero


class TestInnerProduct:
    def test_right_linearity(self, c_m2, rng):
        F = Bimodule.free(c_m2, 2)
        x, y = F.random_vector(rng), F.random_vector(rng)
        b = c_m2.random_element(rng)
        assert inner_product(x, y * b).close_to(inner_product(x, y) * b, 1e-13)

    def test_left_action_is_adjointable(self, c_m2, rng):
        F = Bimodule.free(c_m2, 2)
        x, y = F.random_vector(rng), F.random_vector(rng)
        b = c_m2.random_element(rng)
        assert inner_product(b * x, y).close_to(inner_product(x, b.adjoint() * y), 1e-13)

    def test_positivity(self, algebra, rng):
        F = Bimodule.free(algebra, 3)
        for _ in range(5):
            x = F.random_vector(rng)
            assert is_positive_element(inner_product(x, x))

    def test_gram_is_psd(self, algebra, rng):
        F = Bimodule.free(algebra, 2)
        assert gram_is_psd([F.random_vector(rng) for _ in range(4)])

    def test_inner_map_matches_pointwise(self, c_m2, rng):
        F = Bimodule.free(c_m2, 2)
        x, y = F.random_vector(rng), F.random_vector(rng)
        b = c_m2.random_element(rng)
        assert inner_map(x, y)(b).close_to(inner_product(x, b * y), 1e-13)

    def test_incompatible_modules(self, m2, rng):
        x = Bimodule.regular(m2).random_vector(rng)
        y = Bimodule.free(m2, 2).random_vector(rng)
        with pytest.raises(DimensionError):
            inner_product(x, y)


def test_vector_outside_the_projection_rejected(m2):
    with pytest.raises(DimensionError):
        Bimodule.zero(m2).vector(np.eye(2))


def test_wrong_number_of_components(m2):
    with pytest.raises(DimensionError):
        Bimodule.free(m2, 2).from_components([m2.unit()])


class TestTensorProduct:
    def test_algebra_is_a_left_unit(self, c_m2, rng):
        F = Bimodule.free(c_m2, 2)
        product = tensor_over_B(Bimodule.regular(c_m2), F)
        one = Bimodule.regular(c_m2).from_components([c_m2.unit()])
        assert product.module.rank == F.rank
        x, y = F.random_vector(rng), F.random_vector(rng)
        lhs = inner_product(product.embed(one, x), product.embed(one, y))
        assert lhs.close_to(inner_product(x, y), 1e-12)

    def test_scalar_dimensions_multiply(self, m1):
        product = tensor_over_B(Bimodule.free(m1, 2), Bimodule.free(m1, 3))
        assert product.module.rank == 6

    def test_balanced_over_the_algebra(self, c_m2, rng):
        F, G = Bimodule.free(c_m2, 2), Bimodule.free(c_m2, 1)
        product = tensor_over_B(F, G)
        x, y = F.random_vector(rng), G.random_vector(rng)
        b = c_m2.random_element(rng)
        assert product.embed(x * b, y).close_to(product.embed(x, b * y), 1e-12)

    def test_inner_product_of_elementary_tensors(self, c_m2, rng):
        F, G = Bimodule.free(c_m2, 2), Bimodule.free(c_m2, 2)
        product = tensor_over_B(F, G)
        x1, x2 = F.random_vector(rng), F.random_vector(rng)
        y1, y2 = G.random_vector(rng), G.random_vector(rng)
        expected = inner_product(y1, inner_product(x1, x2) * y2)
        assert inner_product(product.embed(x1, y1), product.embed(x2, y2)).close_to(expected, 1e-12)

    def test_associativity_on_gram_matrices(self, c_m2, rng):
        F, G, H = (Bimodule.free(c_m2, k) for k in (1, 2, 1))
        FG, GH = tensor_over_B(F, G), tensor_over_B(G, H)
        left, right = tensor_over_B(FG.module, H), tensor_over_B(F, GH.module)
        lefts, rights = [], []
        for _ in range(3):
            x, y, z = F.random_vector(rng), G.random_vector(rng), H.random_vector(rng)
            lefts.append(left.embed(FG.embed(x, y), z))
            rights.append(right.embed(x, GH.embed(y, z)))
        for i in range(3):
            for j in range(3):
                assert inner_product(lefts[i], lefts[j]).close_to(inner_product(rights[i], rights[j]), 1e-11)

    def test_left_action_on_tensors(self, c_m2, rng):
        F, G = Bimodule.free(c_m2, 2), Bimodule.free(c_m2, 1)
        product = tensor_over_B(F, G)
        x, y = F.random_vector(rng), G.random_vector(rng)
        b = c_m2.random_element(rng)
        assert (b * product.embed(x, y)).close_to(product.embed(b * x, y), 1e-12)

    def test_mixed_algebras(self, m2, c_m2):
        with pytest.raises(AlgebraMismatchError):
            tensor_over_B(Bimodule.regular(m2), Bimodule.regular(c_m2))


class TestTensorWord:
    def test_inner_matches_realized_vectors(self, c_m2, rng):
        F = Bimodule.free(c_m2, 2)
        x1, x2, y1, y2 = (F.random_vector(rng) for _ in range(4))
        w, v = TensorWord.elementary(x1, x2), TensorWord.elementary(y1, y2)
        b = c_m2.random_element(rng)
        realized = inner_product(w.realize(), b * v.realize())
        assert w.inner(v, b).close_to(realized, 1e-11)
        assert w.inner_map(v)(b).close_to(realized, 1e-11)

    def test_unit_word(self, m2, rng):
        F = Bimodule.free(m2, 2)
        one = TensorWord.unit(F)
        b = m2.random_element(rng)
        assert one.inner(one, b).close_to(b, 0)

    def test_concatenation_and_sums(self, m2, rng):
        F = Bimodule.free(m2, 1)
        x, y = F.random_vector(rng), F.random_vector(rng)
        w = TensorWord.elementary(x).tensor(TensorWord.elementary(y))
        assert w.length == 2
        doubled = w + w
        b = m2.random_element(rng)
        assert doubled.inner(w, b).close_to(2 * w.inner(w, b), 1e-12)
        assert (w + -w).inner(w, b).close_to(m2.zero(), 1e-13)

    def test_length_mismatch(self, m2, rng):
        F = Bimodule.free(m2, 1)
        x = F.random_vector(rng)
        with pytest.raises(DimensionError):
            TensorWord.elementary(x) + TensorWord.elementary(x, x)


class TestGramRealization:
    @pytest.fixture
    def central_generators(self, c_m2):
        F = Bimodule.regular(c_m2)
        z0, z1 = c_m2.center_basis()
        return [F.from_components([z0]), F.from_components([z0]), F.from_components([2 * z1])]

    def test_duplicates_collapse_and_gram_is_reproduced(self, c_m2, central_generators):
        N = c_m2.N
        G = gram(central_generators)
        # central generators commute with the action: u g_i = g_i u
        symbol_action = np.stack([np.kron(np.eye(3), u) for u in c_m2.basis_matrices])
        realization = from_gram(c_m2, G, symbol_action)
        assert realization.module.rank == N
        g = [realization.generator(i) for i in range(3)]
        assert g[0].close_to(g[1], 1e-12)
        for i in range(3):
            for j in range(3):
                assert_allclose(inner_product(g[i], g[j]).matrix, G[i * N:(i + 1) * N, j * N:(j + 1) * N], atol=1e-12)

    def test_zero_gram_gives_the_zero_module(self, c_m2):
        N = c_m2.N
        symbol_action = np.stack([np.kron(np.eye(2), u) for u in c_m2.basis_matrices])
        realization = from_gram(c_m2, np.zeros((2 * N, 2 * N)), symbol_action)
        assert realization.module.is_zero
        assert not realization.generator(1).matrix.any()


class TestDirectSum:
    def test_ranks_add(self, m2):
        total = direct_sum(Bimodule.free(m2, 2), Bimodule.free(m2, 3))
        assert total.module.rank == 4 + 6
        assert total.module.is_valid()

    def test_zero_summand_changes_nothing(self, c_m2):
        F = Bimodule.free(c_m2, 2)
        assert direct_sum(F, Bimodule.zero(c_m2)).module.rank == F.rank

    def test_summands_are_orthogonal(self, c_m2, rng):
        F, G = Bimodule.free(c_m2, 1), Bimodule.free(c_m2, 2)
        total = direct_sum(F, G)
        x, y = F.random_vector(rng), G.random_vector(rng)
        assert inner_product(total.embed(0, x), total.embed(1, y)).close_to(c_m2.zero(), 0)
        assert total.project(1, total.combine([x, y])).close_to(y, 1e-14)

    def test_embeddings_are_bilinear_isometries(self, c_m2):
        total = direct_sum(Bimodule.free(c_m2, 1), Bimodule.free(c_m2, 2))
        for i in range(2):
            assert total.iota(i).is_isometric()
            assert total.iota(i).is_bilinear()


class TestCenter:
    def test_scalars_are_all_central(self, m1):
        assert len(center(Bimodule.free(m1, 3))) == 3

    def test_regular_matrix_module(self, m2):
        basis = center(Bimodule.regular(m2))
        assert len(basis) == 1
        (z,) = basis
        component = z.components()[0].matrix
        assert_allclose(component, component[0, 0] * np.eye(2), atol=1e-12)

    def test_free_module_over_block_algebra(self, c_m2):
        basis = center(Bimodule.free(c_m2, 2))
        assert len(basis) == 4
        assert all(is_centered(z) for z in basis)

    def test_zero_module(self, m2):
        assert center(Bimodule.zero(m2)) == []

    def test_random_vector_is_not_centered(self, m2, rng):
        assert not is_centered(Bimodule.regular(m2).random_vector(rng))


class TestAdjointableMap:
    def test_identity_is_unitary_and_bilinear(self, c_m2):
        F = Bimodule.free(c_m2, 2)
        one = AdjointableMap.identity(F)
        assert one.is_unitary()
        assert one.is_bilinear()

    def test_adjoint(self, c_m2, rng):
        F, G = Bimodule.free(c_m2, 1), Bimodule.free(c_m2, 2)
        a = AdjointableMap(F, G, rng.standard_normal((G.size, F.size)))
        x, y = F.random_vector(rng), G.random_vector(rng)
        assert inner_product(a(x), y).close_to(inner_product(x, a.adjoint()(y)), 1e-12)

    def test_random_matrix_is_not_bilinear(self, m2, rng):
        F = Bimodule.free(m2, 2)
        a = AdjointableMap(F, F, rng.standard_normal((F.size, F.size)))
        assert not a.is_bilinear()

    def test_shape_is_checked(self, m2):
        F = Bimodule.free(m2, 2)
        with pytest.raises(DimensionError):
            AdjointableMap(F, F, np.eye(3))


def test_modules_over_different_algebras(m2):
    other = Algebra((1, 1))
    with pytest.raises(AlgebraMismatchError):
        direct_sum(Bimodule.regular(m2), Bimodule.regular(other))
