"""Means and Trotter products of units, with numerical convergence of their discretizations"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import AlgebraElement, SuperOperator, superop_exp
from .config import DEFAULT_TOLERANCES
from .errors import DimensionError, PreconditionError, WeightSumError
from .tof import UnitParams, generator, omega_beta, vacuum

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class WeightedUnits:
    """Units p_i with complex weights k_i summing to one"""

    items: tuple[tuple[complex, UnitParams], ...]

    def __post_init__(self) -> None:
        items = tuple((complex(k), p) for k, p in self.items)
        if not items:
            raise WeightSumError("a mean needs at least one unit")
        total = sum(k for k, _ in items)
        if abs(total - 1) > DEFAULT_TOLERANCES.algebraic:
            raise WeightSumError(f"weights sum to {total}, not 1")
        system = items[0][1].system
        for _, p in items[1:]:
            if not p.system.index.compatible(system.index):
                raise DimensionError("all units of a mean must live in one system")
        object.__setattr__(self, "items", items)

    @classmethod
    def of(cls, weights: Sequence[complex], units: Sequence[UnitParams]) -> "WeightedUnits":
        if len(weights) != len(units):
            raise ValueError("one weight per unit is required")
        return cls(tuple(zip(weights, units)))

    @property
    def weights(self) -> list[complex]:
        return [k for k, _ in self.items]

    @property
    def units(self) -> list[UnitParams]:
        return [p for _, p in self.items]

    @property
    def system(self):
        return self.items[0][1].system


def boxplus(w: WeightedUnits) -> UnitParams:
    """(sum k_i beta_i, sum k_i zeta_i)"""
    beta = w.system.algebra.zero()
    zeta = w.system.index.zero_vector()
    for k, p in w.items:
        beta = beta + k * p.beta
        zeta = zeta + k * p.zeta
    return UnitParams(w.system, beta, zeta)


def trotter_product(p1: UnitParams, p2: UnitParams) -> UnitParams:
    """p1 (x) p2 = p1 [+] p2 [-] vacuum"""
    return boxplus(WeightedUnits.of([1, 1, -1], [p1, p2, vacuum(p1.system)]))


def exponentialize(p: UnitParams) -> tuple[UnitParams, AlgebraElement]:
    """Split p into its exponential part (0, zeta) and the drift beta"""
    return p.system.unit(zeta=p.zeta), p.beta


def recombine(exp_part: UnitParams, drift: AlgebraElement) -> UnitParams:
    return trotter_product(exp_part, omega_beta(exp_part.system, drift))


def mixed_generator(w: WeightedUnits) -> SuperOperator:
    """sum conj(k_i) k_j L^{i,j}; the generator of the limit semigroup"""
    total = SuperOperator.zero(w.system.algebra)
    for ki, pi in w.items:
        for kj, pj in w.items:
            total = total + (np.conj(ki) * kj) * generator(pi, pj)
    return total


def _step_map(w: WeightedUnits, s: float) -> SuperOperator:
    """Y_s(b) = sum conj(k_i) k_j <xi^i_s, b xi^j_s>"""
    total = SuperOperator.zero(w.system.algebra)
    for ki, pi in w.items:
        for kj, pj in w.items:
            total = total + (np.conj(ki) * kj) * superop_exp(generator(pi, pj), s)
    return total


def approximant_map(w: WeightedUnits, t: float, n: int) -> SuperOperator:
    """Y_{t/n} composed n times"""
    if n < 1 or t < 0:
        raise PreconditionError("need n >= 1 and t >= 0")
    return _step_map(w, t / n).power(n)


def approximant_semigroup(w: WeightedUnits, t: float, n: int, b: AlgebraElement) -> AlgebraElement:
    return approximant_map(w, t, n)(b)


def partition_map(w: WeightedUnits, partition: Sequence[float]) -> SuperOperator:
    """Y_{t_1} o ... o Y_{t_m} for the interval lengths of a partition of [0, t]"""
    if len(partition) == 0 or any(s <= 0 for s in partition):
        raise PreconditionError("a partition consists of positive interval lengths")
    total = SuperOperator.identity(w.system.algebra)
    for s in partition:
        total = total @ _step_map(w, s)
    return total


def approximant_partition(w: WeightedUnits, partition: Sequence[float], b: AlgebraElement) -> AlgebraElement:
    return partition_map(w, partition)(b)


def cross_map(p: UnitParams, w: WeightedUnits, t: float, n: int) -> SuperOperator:
    """Z_{t/n} composed n times, Z_s(b) = sum k_i <xi'_s, b xi^i_s>"""
    if n < 1 or t < 0:
        raise PreconditionError("need n >= 1 and t >= 0")
    step = SuperOperator.zero(w.system.algebra)
    for k, q in w.items:
        step = step + k * superop_exp(generator(p, q), t / n)
    return step.power(n)


def cross_approximant(p: UnitParams, w: WeightedUnits, t: float, n: int, b: AlgebraElement) -> AlgebraElement:
    return cross_map(p, w, t, n)(b)


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    mesh: float
    error: float
    ratio: float | None


def convergence_table(w: WeightedUnits, t: float, ns: Sequence[int], cross: UnitParams | None = None) -> list[ConvergenceRow]:
    """Errors of the n-step approximants against the closed-form semigroup

    With `cross` given, the cross approximant Z against
    exp(t L^{cross, boxplus(w)}) is tabulated instead.
    """
    if cross is None:
        limit = superop_exp(mixed_generator(w), t)
    else:
        limit = superop_exp(generator(cross, boxplus(w)), t)
    rows: list[ConvergenceRow] = []
    for n in ns:
        approx = approximant_map(w, t, n) if cross is None else cross_map(cross, w, t, n)
        error = approx.distance(limit)
        ratio = error / rows[-1].error if rows and rows[-1].error > 0 else None
        rows.append(ConvergenceRow(n, t / n, error, ratio))
        logger.debug(f"n={n} error={error:.3e}")
    return rows


def rate_holds(rows: Sequence[ConvergenceRow], factor: float = 0.75, floor: float = 1e-13) -> bool:
    """error(2n) <= factor * error(n) along the table; errors below `floor` count as converged"""
    for prev, row in zip(rows, rows[1:]):
        if prev.error <= floor:
            if row.error > floor:
                return False
            continue
        if row.error > factor * prev.error:
            return False
    return True


def weighted_associativity_residual(w: WeightedUnits) -> float:
    """Compare the three-or-more-term mean with k_1 p_1 [+] (1 - k_1) (normalized mean of the rest)"""
    if len(w.items) < 3:
        raise PreconditionError("associativity needs at least three units")
    (k1, p1), rest = w.items[0], w.items[1:]
    remainder = 1 - k1
    if abs(remainder) < DEFAULT_TOLERANCES.generic:
        raise PreconditionError("the first weight must differ from one")
    inner = boxplus(WeightedUnits(tuple((k / remainder, p) for k, p in rest)))
    nested = boxplus(WeightedUnits(((k1, p1), (remainder, inner))))
    return nested.distance(boxplus(w))


def warning_identity_residual(p: UnitParams, p1: UnitParams, p2: UnitParams) -> float:
    """||L^{p, p1 (x) p2} - (L^{p, p1} + L^{p, p2} - L^{p, vacuum})||"""
    product = trotter_product(p1, p2)
    expected = generator(p, p1) + generator(p, p2) - generator(p, vacuum(p.system))
    return generator(p, product).distance(expected)


def boxplus_linearity_residual(p: UnitParams, w: WeightedUnits) -> float:
    """||L^{p, boxplus(w)} - sum k_i L^{p, p_i}||"""
    expected = SuperOperator.zero(p.system.algebra)
    for k, q in w.items:
        expected = expected + k * generator(p, q)
    return generator(p, boxplus(w)).distance(expected)
