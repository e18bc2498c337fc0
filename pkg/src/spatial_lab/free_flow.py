"""Exponential units of the free flow and their time-ordered index

A free unit is described by functions zeta^n on R_+^{n-1} with values in
F^{(x)n}, restricted here to finite sums of products of interval
indicators. Components of the unit at a time tuple are obtained from the
unique leader decomposition of the tuple; inner products are computed
either in closed form from exact overlap integrals or by midpoint
quadrature of the resummed iterated integrals.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from .algebra import AlgebraElement, SuperOperator
from .bimodule import Bimodule, DirectSum, ModuleVector, TensorWord, direct_sum, inner_map, tensor_power
from .errors import DimensionError, PreconditionError, TupleError
from .kernels import CPDKernel, KolmogorovDecomposition, kolmogorov

logger = logging.getLogger(__name__)

Interval = tuple[float, float]


def decompose(times: Sequence[float]) -> list[tuple[float, ...]]:
    """Split (t_n, ..., t_1) into leader-led subtuples

    The leftmost remaining entry leads; its subtuple absorbs the following
    entries while they are >= the leader, and the first strictly smaller
    entry leads the next subtuple.
    """
    times = tuple(times)
    if not times:
        raise TupleError("cannot decompose an empty tuple")
    parts: list[list[float]] = []
    for s in times:
        if parts and s >= parts[-1][0]:
            parts[-1].append(s)
        else:
            parts.append([s])
    return [tuple(p) for p in parts]


def is_valid_segmentation(parts: Sequence[Sequence[float]]) -> bool:
    """Every entry >= its subtuple's leader, leaders strictly decreasing"""
    if not parts or any(not p for p in parts):
        return False
    if any(s < p[0] for p in parts for s in p):
        return False
    return all(a[0] > b[0] for a, b in zip(parts, parts[1:]))


def segmentations(times: Sequence[float]) -> Iterator[list[tuple[float, ...]]]:
    """All 2^(n-1) splittings of the tuple into contiguous nonempty pieces"""
    times = tuple(times)
    n = len(times)
    for cuts in itertools.product((False, True), repeat=max(n - 1, 0)):
        parts, start = [], 0
        for i, cut in enumerate(cuts, start=1):
            if cut:
                parts.append(times[start:i])
                start = i
        parts.append(times[start:])
        yield parts


def valid_segmentations(times: Sequence[float]) -> list[list[tuple[float, ...]]]:
    return [parts for parts in segmentations(times) if is_valid_segmentation(parts)]


def format_decomposition(parts: Sequence[Sequence[float]]) -> str:
    """[3][1 2 2 1]"""
    return "".join("[" + " ".join(f"{s:g}" for s in p) + "]" for p in parts)


def offsets(parts: Sequence[Sequence[float]]) -> list[list[int]]:
    """Positions of the entries of each subtuple in the original tuple"""
    out, position = [], 0
    for p in parts:
        out.append(list(range(position, position + len(p))))
        position += len(p)
    return out


def exhaustive_check(max_length: int = 7, alphabet: Sequence[int] = (1, 2, 3, 4)) -> tuple[int, list[tuple[int, ...]]]:
    """Compare decompose with the brute-force oracle on every tuple; returns (count, failures)"""
    failures = []
    count = 0
    for n in range(1, max_length + 1):
        for times in itertools.product(alphabet, repeat=n):
            count += 1
            found = valid_segmentations(times)
            if len(found) != 1 or found[0] != decompose(times):
                failures.append(times)
    logger.debug(f"segmentation oracle: {count} tuples, {len(failures)} failures")
    return count, failures


@dataclass(frozen=True, eq=False)
class IndicatorTerm:
    """prod_j 1_[lo_j, hi_j)(u_j) * coefficient, with coefficient a word of length len(intervals) + 1"""

    intervals: tuple[Interval, ...]
    coefficient: TensorWord

    def __post_init__(self) -> None:
        intervals = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        for lo, hi in intervals:
            if not (0 <= lo < hi < math.inf):
                raise ValueError(f"interval [{lo}, {hi}) must have finite positive length inside R_+")
        if self.coefficient.length != len(intervals) + 1:
            raise DimensionError("coefficient length must exceed the number of intervals by one")
        object.__setattr__(self, "intervals", intervals)

    def indicator(self, arguments: Sequence[float]) -> bool:
        return all(lo <= u < hi for (lo, hi), u in zip(self.intervals, arguments))


@dataclass(frozen=True, eq=False)
class FreeUnitParam:
    """zeta = (zeta^n)_{n <= truncation}, each zeta^n a finite indicator sum"""

    module: Bimodule
    truncation: int
    sectors: Mapping[int, tuple[IndicatorTerm, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.truncation < 1:
            raise ValueError("truncation must be >= 1")
        sectors = {}
        for n, terms in self.sectors.items():
            if not 1 <= n <= self.truncation:
                raise ValueError(f"sector {n} lies outside 1..{self.truncation}")
            for term in terms:
                if term.coefficient.length != n or not term.coefficient.module.compatible(self.module):
                    raise DimensionError(f"sector {n} term does not live in F^(x){n}")
            sectors[n] = tuple(terms)
        object.__setattr__(self, "sectors", sectors)

    @classmethod
    def zero(cls, module: Bimodule, truncation: int) -> "FreeUnitParam":
        return cls(module, truncation, {})

    @classmethod
    def one_particle(cls, x: ModuleVector, truncation: int = 1) -> "FreeUnitParam":
        """zeta^1 = x, all higher sectors zero"""
        return cls(x.module, truncation, {1: (IndicatorTerm((), TensorWord.elementary(x)),)})

    def terms(self, n: int) -> tuple[IndicatorTerm, ...]:
        return self.sectors.get(n, ())

    def scaled(self, factor: complex) -> "FreeUnitParam":
        return FreeUnitParam(
            self.module,
            self.truncation,
            {n: tuple(IndicatorTerm(t.intervals, t.coefficient * factor) for t in terms) for n, terms in self.sectors.items()},
        )

    def evaluate(self, n: int, arguments: Sequence[float]) -> TensorWord:
        """zeta^n(u_{n-1}, ..., u_1)"""
        word = TensorWord.zero(self.module, n)
        for term in self.terms(n):
            if term.indicator(arguments):
                word = word + term.coefficient
        return word

    def breakpoints(self) -> list[float]:
        points = {0.0}
        for terms in self.sectors.values():
            for term in terms:
                for lo, hi in term.intervals:
                    points.update((lo, hi))
        return sorted(points)


@dataclass(frozen=True, eq=False)
class ComponentValue:
    """A component of a free unit; structural zeros come from the support, not from cancellation"""

    word: TensorWord
    structural_zero: bool

    def realize(self) -> ModuleVector:
        return self.word.realize()


def free_unit_component(zeta: FreeUnitParam, t: float, times: Sequence[float]) -> ComponentValue:
    """xi_t^n(t_n, ..., t_1) = zeta^{k_m}(shifted subtuple m) (x) ... (x) zeta^{k_1}(shifted subtuple 1)"""
    times = tuple(float(s) for s in times)
    F = zeta.module
    if not times:
        return ComponentValue(TensorWord.unit(F), False)
    n = len(times)
    if times[0] >= t or any(s < 0 for s in times):
        return ComponentValue(TensorWord.zero(F, n), True)
    word = TensorWord.unit(F)
    for part in decompose(times):
        leader = part[0]
        word = word.tensor(zeta.evaluate(len(part), [s - leader for s in part[1:]]))
    return ComponentValue(word, False)


def lambda_derivative_component(zeta: FreeUnitParam, t: float, times: Sequence[float]) -> ComponentValue:
    """d/d lambda at 0 of the component of the unit for lambda * zeta

    The component is homogeneous of degree m (number of subtuples) in
    lambda, so the derivative keeps exactly the single-subtuple components.
    """
    value = free_unit_component(zeta, t, times)
    if value.structural_zero or not times:
        return ComponentValue(TensorWord.zero(zeta.module, len(tuple(times))), value.structural_zero)
    if len(decompose(times)) == 1:
        return value
    return ComponentValue(TensorWord.zero(zeta.module, len(tuple(times))), False)


def recursion_terms(zeta: FreeUnitParam, s: float, t: float, times: Sequence[float]) -> list[ComponentValue]:
    """The summands s_t xi_s^k (x) xi_t^{n-k}, k = 0..n, of the unit recursion at horizon s + t

    The first k entries are shifted back by t and evaluated at horizon s;
    the remaining n - k entries at horizon t.
    """
    times = tuple(float(x) for x in times)
    n = len(times)
    terms = []
    for k in range(n + 1):
        prefix = tuple(x - t for x in times[:k])
        head = free_unit_component(zeta, s, prefix)
        tail = free_unit_component(zeta, t, times[k:])
        structural = head.structural_zero or tail.structural_zero
        word = TensorWord.zero(zeta.module, n) if structural else head.word.tensor(tail.word)
        terms.append(ComponentValue(word, structural))
    return terms


def recursion_residual(zeta: FreeUnitParam, s: float, t: float, times: Sequence[float]) -> tuple[float, int]:
    """(||xi_{s+t}^n - sum_k terms||, number of structurally nonzero terms)"""
    lhs = free_unit_component(zeta, s + t, times)
    terms = recursion_terms(zeta, s, t, times)
    live = [term for term in terms if not term.structural_zero]
    total = lhs.realize().matrix.copy()
    for term in live:
        total -= term.realize().matrix
    return float(np.linalg.norm(total, 2)), len(live)


def _overlap(a: Sequence[Interval], b: Sequence[Interval]) -> float:
    return math.prod(max(0.0, min(x[1], y[1]) - max(x[0], y[0])) for x, y in zip(a, b))


def overlap_map(zeta: FreeUnitParam, zeta_prime: FreeUnitParam, truncation: int | None = None) -> SuperOperator:
    """b -> <zeta, b zeta'> in the index module, from overlap integrals of the indicator terms"""
    if not zeta.module.compatible(zeta_prime.module):
        raise DimensionError("free units over different modules")
    top = min(zeta.truncation, zeta_prime.truncation) if truncation is None else truncation
    total = SuperOperator.zero(zeta.module.algebra)
    for n in range(1, top + 1):
        for a in zeta.terms(n):
            for c in zeta_prime.terms(n):
                weight = _overlap(a.intervals, c.intervals)
                if weight:
                    total = total + weight * a.coefficient.inner_map(c.coefficient)
    return total


def free_inner_closed(
    zeta: FreeUnitParam, zeta_prime: FreeUnitParam, b: AlgebraElement, t: float, truncation: int | None = None
) -> AlgebraElement:
    """1 + sum_m t^m/m! <zeta^(x)m, b zeta'^(x)m>, summed until the terms reach rounding level"""
    phi = overlap_map(zeta, zeta_prime, truncation)
    total = b
    term = b
    for m in range(1, 1000):
        term = phi(term) * (t / m)
        total = total + term
        if term.norm() <= 1e-17 * max(1.0, total.norm()):
            logger.debug(f"free_inner_closed: series stopped at m={m}")
            break
    return total


def component_map(zeta: FreeUnitParam, zeta_prime: FreeUnitParam, t: float, truncation: int, h: float) -> SuperOperator:
    """Midpoint quadrature over the relative arguments of one subtuple

    b -> sum_n h^(n-1) sum_u <xi_t^n(l, l + u), b xi'_t^n(l, l + u)>, the
    components taken from free_unit_component and realized in F^(x)n. The
    leader l sits at the first midpoint of the step-h grid and u runs over
    the midpoints of [0, R)^(n-1), R the last breakpoint of either unit.
    Tuples that decompose into more than one subtuple are left to the outer
    sum over leaders.
    """
    if not zeta.module.compatible(zeta_prime.module):
        raise DimensionError("free units over different modules")
    leader = h / 2
    reach = max(zeta.breakpoints() + zeta_prime.breakpoints())
    midpoints = [leader + (j + 0.5) * h for j in range(math.ceil(reach / h - 1e-9))]
    total = SuperOperator.zero(zeta.module.algebra)
    evaluated = 0
    for n in range(1, truncation + 1):
        for tail in itertools.product(midpoints, repeat=n - 1):
            times = (leader, *tail)
            if len(decompose(times)) != 1:
                continue
            x = free_unit_component(zeta, t, times)
            y = free_unit_component(zeta_prime, t, times)
            evaluated += 1
            if x.structural_zero or y.structural_zero or not x.word.terms or not y.word.terms:
                continue
            total = total + inner_map(x.realize(), y.realize()) * h ** (n - 1)
    logger.debug(f"component_map: {evaluated} single-subtuple tuples at h={h:g}")
    return total


def free_inner_quadrature(
    zeta: FreeUnitParam, zeta_prime: FreeUnitParam, b: AlgebraElement, t: float, truncation: int, h: float
) -> AlgebraElement:
    """Midpoint quadrature of the resummed iterated integrals

    A tuple with m subtuples contributes the nested inner product of its m
    single-subtuple pieces, which component_map integrates over the
    relative arguments. Leaders t_1 < ... < t_m run over distinct cells of
    the grid of [0, t), giving the weight h^m C(M, m).
    """
    if truncation < 1 or not h > 0:
        raise PreconditionError("truncation must be >= 1 and h > 0")
    M = max(1, int(round(t / h)))
    step = t / M
    phi = component_map(zeta, zeta_prime, t, truncation, step)
    growth = max(1.0, phi.norm())
    total = b
    term = b
    for m in range(1, M + 1):
        term = phi(term)
        weight = step**m * math.comb(M, m)
        total = total + term * weight
        if t**m / math.factorial(m) * growth**m * max(1.0, b.norm()) < 1e-14:
            break
    logger.debug(f"free_inner_quadrature: {M} cells")
    return total


def overlap_kernel(zeta: FreeUnitParam, zeta_prime: FreeUnitParam, labels: tuple[str, str] = ("zeta", "zeta_prime")) -> CPDKernel:
    """The kernel of index inner products between the two free units"""
    table = {labels[0]: zeta, labels[1]: zeta_prime}
    return CPDKernel.from_function(zeta.module.algebra, labels, lambda s, u: overlap_map(table[s], table[u]))


def kolmogorov_index(zeta: FreeUnitParam, zeta_prime: FreeUnitParam) -> KolmogorovDecomposition:
    return kolmogorov(overlap_kernel(zeta, zeta_prime))


def uniform_grid(length: float, h: float) -> tuple[float, ...]:
    cells = max(1, int(round(length / h)))
    return tuple(length * j / cells for j in range(cells + 1))


def grid_for(params: Sequence[FreeUnitParam], h: float) -> tuple[float, ...]:
    """Uniform grid of step h covering every interval of the given units"""
    top = max((max(p.breakpoints()) for p in params), default=0.0)
    cells = max(1, math.ceil(top / h - 1e-9))
    return tuple(h * j for j in range(cells + 1))


@dataclass(frozen=True, eq=False)
class FreeIndex:
    """Step functions on a grid with values in F^(x)n, n <= truncation, as one Bimodule"""

    base: Bimodule
    grid: tuple[float, ...]
    truncation: int
    index_sum: DirectSum
    slots: dict[tuple[int, tuple[int, ...]], int]

    @property
    def module(self) -> Bimodule:
        return self.index_sum.module

    @property
    def cells(self) -> int:
        return len(self.grid) - 1

    def cells_of(self, interval: Interval, tol: float = 1e-12) -> list[int]:
        """Cells whose union is the interval; the interval must be grid aligned"""
        lo, hi = interval
        grid = np.asarray(self.grid)
        i = int(np.argmin(np.abs(grid - lo)))
        j = int(np.argmin(np.abs(grid - hi)))
        if abs(grid[i] - lo) > tol or abs(grid[j] - hi) > tol:
            raise PreconditionError(f"interval [{lo}, {hi}) is not aligned with the grid")
        return list(range(i, j))

    def volume(self, cells: Sequence[int]) -> float:
        return math.prod(self.grid[c + 1] - self.grid[c] for c in cells)


def free_index(F: Bimodule, grid: Sequence[float], truncation: int) -> FreeIndex:
    """Direct sum over n <= truncation and cell tuples in cells^(n-1) of F^(x)n"""
    grid = tuple(float(g) for g in grid)
    if len(grid) < 2:
        raise PreconditionError("the interval grid needs at least one cell")
    if any(a >= b for a, b in zip(grid, grid[1:])):
        raise PreconditionError("grid points must increase")
    if truncation < 1:
        raise PreconditionError("truncation must be >= 1")
    cells = len(grid) - 1
    summands, slots = [], {}
    for n in range(1, truncation + 1):
        power = tensor_power(F, n)
        for cell_tuple in itertools.product(range(cells), repeat=n - 1):
            slots[(n, cell_tuple)] = len(summands)
            summands.append(power)
    logger.debug(f"free index: {len(summands)} summands over {cells} cells")
    return FreeIndex(F, grid, truncation, direct_sum(*summands), slots)


def realize_in_index(zeta: FreeUnitParam, index: FreeIndex) -> ModuleVector:
    """The vector of the free index representing zeta; indicator terms must be grid aligned"""
    if not zeta.module.compatible(index.base):
        raise DimensionError("free unit and index live over different modules")
    total = index.module.zero_vector()
    for n in range(1, index.truncation + 1):
        for term in zeta.terms(n):
            coefficient = term.coefficient.realize()
            for cell_tuple in itertools.product(*(index.cells_of(iv) for iv in term.intervals)):
                slot = index.slots[(n, tuple(cell_tuple))]
                weight = math.sqrt(index.volume(cell_tuple))
                total = total + index.index_sum.embed(slot, coefficient * weight)
    return total


def expected_index_rank(F: Bimodule, cells: int, truncation: int) -> int:
    return sum(cells ** (n - 1) * tensor_power(F, n).rank for n in range(1, truncation + 1))


def quadrature_order(errors: Sequence[float], steps: Sequence[float]) -> list[float]:
    """Observed orders log(e_i / e_{i+1}) / log(h_i / h_{i+1})"""
    return [
        math.log(e0 / e1) / math.log(h0 / h1)
        for (e0, e1), (h0, h1) in zip(zip(errors, errors[1:]), zip(steps, steps[1:]))
        if e0 > 0 and e1 > 0
    ]

