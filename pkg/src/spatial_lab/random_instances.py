"""Seeded random instances

Every experiment draws from its own named stream so that adding or
reordering experiments never changes the numbers another one sees.
"""

from __future__ import annotations

import zlib
from typing import Sequence

import numpy as np

from .algebra import Algebra
from .bimodule import Bimodule, TensorWord
from .free_flow import FreeUnitParam, IndicatorTerm
from .kernels import CPDKernel, kernel_from_vectors
from .tof import TofSystem, UnitParams, unit_kernel


def rng(seed: int, name: str) -> np.random.Generator:
    """Generator for the stream `name` under the run seed"""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(zlib.crc32(name.encode()),)))


def labels(count: int) -> tuple[str, ...]:
    return tuple(f"s{i}" for i in range(count))


def kolmogorov_form_kernel(
    algebra: Algebra, gen: np.random.Generator, count: int = 3, free_rank: int = 2
) -> CPDKernel:
    """K(b) = <x_s, b x_t> for random vectors of B^free_rank"""
    F = Bimodule.free(algebra, free_rank)
    return kernel_from_vectors(labels(count), [F.random_vector(gen) for _ in range(count)])


def random_units(
    system: TofSystem, gen: np.random.Generator, count: int, beta_scale: float = 1.0, zeta_scale: float = 1.0
) -> list[UnitParams]:
    return [system.random_unit(gen, beta_scale, zeta_scale) for _ in range(count)]


def generator_kernel(
    algebra: Algebra, gen: np.random.Generator, count: int = 3, free_rank: int = 1
) -> CPDKernel:
    """Generator kernel of `count` random units of the time-ordered system over B^free_rank"""
    system = TofSystem(Bimodule.free(algebra, free_rank))
    units = random_units(system, gen, count)
    return unit_kernel(dict(zip(labels(count), units)))


def unit_family(
    system: TofSystem, gen: np.random.Generator, count: int = 3, beta_scale: float = 1.0, zeta_scale: float = 1.0
) -> dict[str, UnitParams]:
    """The vacuum under label "omega" followed by random units"""
    family = {"omega": system.vacuum()}
    family.update(zip(labels(count), random_units(system, gen, count, beta_scale, zeta_scale)))
    return family


def random_weights(gen: np.random.Generator, count: int, low: float = 0.2, high: float = 0.8) -> list[complex]:
    """Real weights summing to one; with two units the first lies in (low, high)"""
    if count == 1:
        return [1.0]
    head = list(gen.uniform(low, high, size=count - 1) / (count - 1))
    return head + [1.0 - sum(head)]


def aligned_interval(gen: np.random.Generator, unit: float = 1 / 8, cells: int = 8) -> tuple[float, float]:
    """[lo, hi) with endpoints on multiples of `unit` inside [0, cells * unit]"""
    lo, hi = sorted(gen.choice(cells + 1, size=2, replace=False))
    return float(lo * unit), float(hi * unit)


def free_unit(
    F: Bimodule,
    gen: np.random.Generator,
    truncation: int = 3,
    terms_per_sector: int = 2,
    scale: float = 0.2,
    unit: float = 1 / 8,
    cells: int = 8,
) -> FreeUnitParam:
    """A free unit with grid-aligned indicator terms in every sector up to `truncation`"""
    sectors = {}
    for n in range(1, truncation + 1):
        terms = []
        for _ in range(terms_per_sector if n > 1 else 1):
            intervals = tuple(aligned_interval(gen, unit, cells) for _ in range(n - 1))
            letters = [F.random_vector(gen, scale ** (1 / n)) for _ in range(n)]
            terms.append(IndicatorTerm(intervals, TensorWord.elementary(*letters, module=F)))
        sectors[n] = tuple(terms)
    return FreeUnitParam(F, truncation, sectors)


def time_tuple(gen: np.random.Generator, length: int, horizon: float) -> tuple[float, ...]:
    """Free-flow tuple: entries in [0, horizon) with a leading entry below the horizon"""
    return tuple(float(x) for x in gen.uniform(0, horizon, size=length))


def ordered_tuple(gen: np.random.Generator, length: int, horizon: float) -> tuple[float, ...]:
    """Strictly decreasing entries in (0, horizon)"""
    return tuple(float(x) for x in sorted(gen.uniform(0, horizon, size=length), reverse=True))


def alphabet_tuple(gen: np.random.Generator, length: int, alphabet: Sequence[int] = (1, 2, 3, 4)) -> tuple[int, ...]:
    return tuple(int(x) for x in gen.choice(alphabet, size=length))
