import numpy as np
import pytest

from spatial_lab import free_flow
from spatial_lab.bimodule import Bimodule, TensorWord, inner_map
from spatial_lab.descriptors import load_free_units
from spatial_lab.errors import PreconditionError, TupleError
from spatial_lab.free_flow import (
    ComponentValue,
    FreeUnitParam,
    IndicatorTerm,
    component_map,
    decompose,
    exhaustive_check,
    expected_index_rank,
    format_decomposition,
    free_index,
    free_inner_closed,
    free_inner_quadrature,
    free_unit_component,
    grid_for,
    is_valid_segmentation,
    kolmogorov_index,
    lambda_derivative_component,
    offsets,
    overlap_kernel,
    overlap_map,
    quadrature_order,
    realize_in_index,
    recursion_residual,
    valid_segmentations,
)
from spatial_lab.kernels import is_cpd
from spatial_lab.random_instances import free_unit, time_tuple
from spatial_lab.tof import TofSystem, exponential_unit_component, unit_inner


@pytest.fixture
def fixture_units(fixtures_dir):
    return load_free_units(fixtures_dir / "free_units.json")


class TestDecompose:
    @pytest.mark.parametrize(
        "times,expected",
        [
            ((3, 1, 2, 2, 1), [(3,), (1, 2, 2, 1)]),
            ((1, 2, 3), [(1, 2, 3)]),
            ((3, 2, 1), [(3,), (2,), (1,)]),
            ((2, 2, 1, 4), [(2, 2), (1, 4)]),
            ((0.5,), [(0.5,)]),
        ],
    )
    def test_examples(self, times, expected):
        assert decompose(times) == expected
        assert valid_segmentations(times) == [expected]

    def test_empty_tuple(self):
        with pytest.raises(TupleError):
            decompose(())

    def test_format(self):
        assert format_decomposition(decompose((3, 1, 2, 2, 1))) == "[3][1 2 2 1]"
        assert format_decomposition([(0.25, 0.5)]) == "[0.25 0.5]"

    def test_offsets(self):
        assert offsets([(3,), (1, 2, 2, 1)]) == [[0], [1, 2, 3, 4]]

    def test_validity(self):
        assert is_valid_segmentation([(3,), (1, 2)])
        assert not is_valid_segmentation([(1,), (3,)])
        assert not is_valid_segmentation([(2, 1)])
        assert not is_valid_segmentation([])

    def test_small_exhaustive_check(self):
        count, failures = exhaustive_check(5)
        assert count == 4 + 16 + 64 + 256 + 1024
        assert failures == []

    def test_full_exhaustive_check(self):
        count, failures = exhaustive_check(7)
        assert count == 21844
        assert failures == []


class TestComponents:
    def test_empty_tuple_is_the_unit(self, fixture_units):
        _, units = fixture_units
        value = free_unit_component(units["zeta"], 1.0, ())
        assert value.word.length == 0
        assert not value.structural_zero

    def test_leader_beyond_the_horizon(self, fixture_units):
        _, units = fixture_units
        value = free_unit_component(units["zeta"], 1.0, (1.2, 0.3))
        assert value.structural_zero
        assert value.realize().norm() == 0

    def test_one_particle_unit_is_an_exponential_unit(self, m2, rng):
        F = Bimodule.regular(m2)
        x = F.random_vector(rng)
        zeta = FreeUnitParam.one_particle(x, truncation=3)
        exponential = TofSystem(F).unit(zeta=x)
        for times in [(0.5,), (0.7, 0.2), (0.9, 0.4, 0.1)]:
            free = free_unit_component(zeta, 1.0, times).realize()
            assert free.close_to(exponential_unit_component(exponential, 1.0, times), 1e-13)

    def test_increasing_pair_uses_the_two_particle_sector(self, m2, rng):
        F = Bimodule.regular(m2)
        zeta = FreeUnitParam.one_particle(F.random_vector(rng), truncation=3)
        assert free_unit_component(zeta, 1.0, (0.2, 0.5)).realize().norm() == 0

    def test_lambda_derivative(self, fixture_units):
        _, units = fixture_units
        zeta = units["zeta"]
        single = lambda_derivative_component(zeta, 1.0, (0.2, 0.5))
        assert single.realize().close_to(free_unit_component(zeta, 1.0, (0.2, 0.5)).realize(), 0)
        split = lambda_derivative_component(zeta, 1.0, (0.5, 0.2))
        assert split.realize().norm() == 0
        assert not split.structural_zero

    def test_recursion(self, fixture_units, rng):
        _, units = fixture_units
        s, t = 0.6, 0.5
        for length in range(1, 5):
            for _ in range(5):
                times = time_tuple(rng, length, s + t)
                for zeta in units.values():
                    residual, live = recursion_residual(zeta, s, t, times)
                    assert residual < 1e-12
                    assert live == 1


class TestIndicatorTerms:
    def test_bad_interval(self, m2, rng):
        F = Bimodule.regular(m2)
        word = TensorWord.elementary(F.random_vector(rng), F.random_vector(rng))
        with pytest.raises(ValueError):
            IndicatorTerm(((0.5, 0.5),), word)

    def test_sector_outside_truncation(self, m2, rng):
        F = Bimodule.regular(m2)
        x = F.random_vector(rng)
        term = IndicatorTerm(((0.0, 1.0),), TensorWord.elementary(x, x))
        with pytest.raises(ValueError):
            FreeUnitParam(F, 1, {2: (term,)})

    def test_evaluate(self, m2, rng):
        F = Bimodule.regular(m2)
        x = F.random_vector(rng)
        term = IndicatorTerm(((0.25, 0.5),), TensorWord.elementary(x, x))
        zeta = FreeUnitParam(F, 2, {2: (term,)})
        assert len(zeta.evaluate(2, [0.3]).terms) == 1
        assert zeta.evaluate(2, [0.5]).terms == ()
        assert zeta.breakpoints() == [0.0, 0.25, 0.5]


class TestInnerProducts:
    def test_overlap_kernel_is_cpd(self, fixture_units):
        _, units = fixture_units
        assert is_cpd(overlap_kernel(units["zeta"], units["zeta_prime"]))

    def test_one_particle_closed_form(self, m2, rng):
        F = Bimodule.regular(m2)
        x, y = F.random_vector(rng), F.random_vector(rng)
        b = m2.random_element(rng)
        system = TofSystem(F)
        closed = free_inner_closed(FreeUnitParam.one_particle(x), FreeUnitParam.one_particle(y), b, 0.8)
        assert overlap_map(FreeUnitParam.one_particle(x), FreeUnitParam.one_particle(y)).distance(inner_map(x, y)) < 1e-15
        assert closed.close_to(unit_inner(system.unit(zeta=x), system.unit(zeta=y), 0.8, b), 1e-12)

    def test_closed_form_matches_the_index(self, fixture_units, m2, rng):
        _, units = fixture_units
        zeta, zeta_prime = units["zeta"], units["zeta_prime"]
        decomposition = kolmogorov_index(zeta, zeta_prime)
        system = TofSystem(decomposition.module)
        p = system.unit(zeta=decomposition.vectors["zeta"])
        q = system.unit(zeta=decomposition.vectors["zeta_prime"])
        b = m2.random_element(rng)
        for t in (0.5, 1.0):
            assert free_inner_closed(zeta, zeta_prime, b, t).close_to(unit_inner(p, q, t, b), 1e-9)

    def test_quadrature_converges_at_first_order(self, m2, rng):
        F = Bimodule.regular(m2)
        zeta, zeta_prime = free_unit(F, rng), free_unit(F, rng)
        b = m2.random_element(rng)
        exact = free_inner_closed(zeta, zeta_prime, b, 1.0)
        steps = [1 / 8, 1 / 16, 1 / 32, 1 / 64]
        errors = [(free_inner_quadrature(zeta, zeta_prime, b, 1.0, 3, h) - exact).norm() for h in steps]
        assert all(a > c for a, c in zip(errors, errors[1:]))
        assert quadrature_order(errors, steps)[-1] > 0.8

    def test_component_map_matches_the_overlaps_on_aligned_grids(self, fixture_units, m2, rng):
        _, units = fixture_units
        zeta, zeta_prime = units["zeta"], units["zeta_prime"]
        b = m2.random_element(rng)
        phi = component_map(zeta, zeta_prime, 1.0, 3, 1 / 16)
        assert phi(b).close_to(overlap_map(zeta, zeta_prime)(b), 1e-12)

    def test_quadrature_integrates_the_unit_components(self, fixture_units, m2, rng, monkeypatch):
        _, units = fixture_units
        zeta, zeta_prime = units["zeta"], units["zeta_prime"]
        b = m2.random_element(rng)
        exact = free_inner_closed(zeta, zeta_prime, b, 1.0)
        error = (free_inner_quadrature(zeta, zeta_prime, b, 1.0, 3, 1 / 16) - exact).norm()

        components = free_flow.free_unit_component

        def doubled(z, t, times):
            value = components(z, t, times)
            return ComponentValue(value.word * 2, value.structural_zero)

        monkeypatch.setattr(free_flow, "free_unit_component", doubled)
        assert (free_inner_quadrature(zeta, zeta_prime, b, 1.0, 3, 1 / 16) - exact).norm() > 10 * error

        def vanishing(z, t, times):
            return ComponentValue(TensorWord.zero(z.module, len(times)), True)

        monkeypatch.setattr(free_flow, "free_unit_component", vanishing)
        assert free_inner_quadrature(zeta, zeta_prime, b, 1.0, 3, 1 / 16).close_to(b, 0)

    def test_quadrature_needs_positive_step(self, fixture_units, m2):
        _, units = fixture_units
        with pytest.raises(PreconditionError):
            free_inner_quadrature(units["zeta"], units["zeta"], m2.unit(), 1.0, 3, 0)


class TestFreeIndex:
    def test_rank(self, m2):
        F = Bimodule.regular(m2)
        index = free_index(F, [0, 0.5, 1.0], 3)
        assert index.module.rank == expected_index_rank(F, 2, 3)
        assert index.cells == 2

    def test_realized_vectors_reproduce_overlaps(self, fixture_units, m2, rng):
        F, units = fixture_units
        zeta, zeta_prime = units["zeta"], units["zeta_prime"]
        index = free_index(F, grid_for([zeta, zeta_prime], 1 / 8), 3)
        v, w = realize_in_index(zeta, index), realize_in_index(zeta_prime, index)
        b = m2.random_element(rng)
        assert inner_map(v, w)(b).close_to(overlap_map(zeta, zeta_prime)(b), 1e-12)

    def test_misaligned_interval(self, m2):
        index = free_index(Bimodule.regular(m2), [0, 0.25, 0.5], 2)
        with pytest.raises(PreconditionError):
            index.cells_of((0.1, 0.5))
        assert index.cells_of((0.0, 0.5)) == [0, 1]

    def test_bad_grids(self, m2):
        F = Bimodule.regular(m2)
        with pytest.raises(PreconditionError):
            free_index(F, [0.0], 2)
        with pytest.raises(PreconditionError):
            free_index(F, [0.0, 0.5, 0.5], 2)


def test_quadrature_order_skips_zero_errors():
    assert quadrature_order([0.0, 1.0], [0.1, 0.05]) == []
    assert np.isclose(quadrature_order([0.4, 0.2], [0.1, 0.05])[0], 1.0)
