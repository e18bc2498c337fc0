import numpy as np
import pytest

from spatial_lab.algebra import SuperOperator
from spatial_lab.bimodule import AdjointableMap, Bimodule, inner_product
from spatial_lab.errors import BilinearityError, PreconditionError, TupleError
from spatial_lab.tof import (
    MorphismMatrix,
    TofSystem,
    apply_morphism,
    automorphism_to,
    covariance_residual,
    exponential_unit_component,
    exponential_unit_word,
    generator,
    integrand,
    is_central_unital,
    is_isomorphism,
    omega_beta,
    quadrature_inner,
    truncation_residual,
    unit_inner,
    vacuum,
)


@pytest.fixture
def system(c_m2) -> TofSystem:
    return TofSystem(Bimodule.free(c_m2, 2))


@pytest.fixture
def central_unit(m2):
    system = TofSystem(Bimodule.regular(m2))
    zeta = system.index.from_components([m2.unit() * 0.6])
    beta = m2.unit() * (-0.18 + 0.3j)
    return system.unit(beta, zeta)


def test_vacuum_generator_is_zero(system):
    omega = vacuum(system)
    assert generator(omega, omega).norm() == 0


def test_unit_inner_at_time_zero(system, rng):
    p, q = system.random_unit(rng), system.random_unit(rng)
    b = system.algebra.random_element(rng)
    assert unit_inner(p, q, 0, b).close_to(b, 0)


def test_unit_inner_rejects_negative_time(system, rng):
    p = system.random_unit(rng)
    with pytest.raises(PreconditionError):
        unit_inner(p, p, -1, system.algebra.unit())


def test_omega_beta_is_a_drift(system, rng):
    beta = system.algebra.random_element(rng)
    b = system.algebra.random_element(rng)
    value = unit_inner(omega_beta(system, beta), vacuum(system), 0.8, b)
    assert value.close_to(beta.exp(0.8).adjoint() * b, 1e-12)


class TestComponents:
    def test_zero_particle_sector(self, system, rng):
        p, q = system.random_unit(rng), system.random_unit(rng)
        b = system.algebra.random_element(rng)
        x, y = exponential_unit_component(p, 1.0, ()), exponential_unit_component(q, 1.0, ())
        assert inner_product(x, b * y).close_to(integrand(p, q, 1.0, (), b), 1e-12)

    @pytest.mark.parametrize("times", [(0.4,), (0.7, 0.3), (0.9, 0.5, 0.2)])
    def test_integrand_matches_realized_components(self, system, rng, times):
        p, q = system.random_unit(rng, 0.5), system.random_unit(rng, 0.5)
        b = system.algebra.random_element(rng)
        x, y = exponential_unit_component(p, 1.0, times), exponential_unit_component(q, 1.0, times)
        assert inner_product(x, b * y).close_to(integrand(p, q, 1.0, times, b), 1e-11)

    def test_exponential_unit_word_letters(self, system, rng):
        p = system.unit(zeta=system.index.random_vector(rng))
        word = exponential_unit_word(p, 1.0, (0.6, 0.1))
        assert word.length == 2
        (_, letters), = word.terms
        assert all(x.close_to(p.zeta, 1e-14) for x in letters)

    @pytest.mark.parametrize("times", [(0.3, 0.7), (1.2,), (0.5, 0.5), (0.0,)])
    def test_bad_tuples(self, system, rng, times):
        p = system.random_unit(rng)
        with pytest.raises(TupleError):
            exponential_unit_word(p, 1.0, times)


class TestQuadrature:
    def test_without_particles_the_sum_is_exact(self, system, rng):
        p = system.unit(beta=system.algebra.random_element(rng))
        q = system.unit(beta=system.algebra.random_element(rng))
        b = system.algebra.random_element(rng)
        assert quadrature_inner(p, q, 1.0, b, 4, 1 / 16).close_to(unit_inner(p, q, 1.0, b), 1e-12)

    def test_converges_to_the_semigroup(self, system, rng):
        p, q = system.random_unit(rng, 0.5, 0.5), system.random_unit(rng, 0.5, 0.5)
        b = system.algebra.random_element(rng)
        exact = unit_inner(p, q, 1.0, b)
        coarse = (quadrature_inner(p, q, 1.0, b, 6, 1 / 16) - exact).norm()
        fine = (quadrature_inner(p, q, 1.0, b, 6, 1 / 64) - exact).norm()
        assert fine < coarse
        assert fine < 1e-2

    def test_bad_parameters(self, system, rng):
        p = system.random_unit(rng)
        with pytest.raises(PreconditionError):
            quadrature_inner(p, p, 1.0, system.algebra.unit(), -1, 0.1)
        with pytest.raises(PreconditionError):
            quadrature_inner(p, p, 1.0, system.algebra.unit(), 2, 0)

    def test_truncation_residual_shrinks(self, system, rng):
        p, q = system.random_unit(rng), system.random_unit(rng)
        bounds = [truncation_residual(p, q, 1.0, n) for n in range(6)]
        assert all(a > b for a, b in zip(bounds, bounds[1:]))
        assert truncation_residual(vacuum(system), p, 1.0, 0) == 0


class TestMorphisms:
    def test_identity_fixes_units(self, system, rng):
        p = system.random_unit(rng)
        identity = MorphismMatrix.identity(system)
        assert apply_morphism(identity, p).distance(p) < 1e-14
        assert identity.fixes_vacuum()
        assert is_isomorphism(identity)

    def test_non_bilinear_map_rejected(self, m2, rng):
        system = TofSystem(Bimodule.free(m2, 2))
        F = system.index
        a = AdjointableMap(F, F, rng.standard_normal((F.size, F.size)))
        with pytest.raises(BilinearityError):
            MorphismMatrix.from_map(system, system, a)

    def test_central_unital_detection(self, central_unit, system, rng):
        assert is_central_unital(central_unit) == (True, True)
        assert is_central_unital(vacuum(system)) == (True, True)
        central, _ = is_central_unital(system.random_unit(rng))
        assert not central


class TestAutomorphism:
    def test_sends_vacuum_to_the_unit(self, central_unit):
        gamma = automorphism_to(central_unit)
        image = apply_morphism(gamma, vacuum(central_unit.system))
        assert image.distance(central_unit) < 1e-14
        assert gamma.satisfies_automorphism_constraints()
        assert is_isomorphism(gamma)
        assert not gamma.fixes_vacuum()

    def test_preserves_generators(self, central_unit, rng):
        system = central_unit.system
        units = [system.random_unit(rng) for _ in range(3)] + [vacuum(system)]
        assert covariance_residual(automorphism_to(central_unit), units) < 1e-12

    def test_inverse_direction(self, central_unit):
        gamma = automorphism_to(central_unit)
        back = apply_morphism(gamma.adjoint(), central_unit)
        assert back.zeta.norm() < 1e-14

    def test_requires_a_central_unit(self, system, rng):
        with pytest.raises(PreconditionError):
            automorphism_to(system.random_unit(rng))

    def test_block_algebra(self, c_m2):
        system = TofSystem(Bimodule.free(c_m2, 2))
        z1, z2 = c_m2.center_basis()
        zeta = system.index.from_components([z1 * 0.4 + z2 * 0.2j, z2 * 0.3])
        beta = inner_product(zeta, zeta) * -0.5 + (z1 * 0.7 - z2 * 0.1) * 1j
        p = system.unit(beta, zeta)
        assert is_central_unital(p) == (True, True)
        gamma = automorphism_to(p)
        assert covariance_residual(gamma, [p, vacuum(system)]) < 1e-12


def test_generator_is_sesquilinear_in_units(system, rng):
    p, q = system.random_unit(rng), system.random_unit(rng)
    L = generator(p, q)
    expected = (
        SuperOperator.left(p.beta.adjoint())
        + SuperOperator.right(q.beta)
        + SuperOperator.from_map(system.algebra, lambda b: inner_product(p.zeta, b * q.zeta))
    )
    assert L.distance(expected) < 1e-13
    assert np.isfinite(L.norm())
