"""Units and morphisms of the time-ordered Fock system over an index module F

A continuous unit is parametrized by a pair (beta, zeta) in B x F. Inner
products of units are computed in closed form from the generator
L(b) = <zeta, b zeta'> + beta* b + b beta' and, independently, by midpoint
quadrature over the ordered simplices of the Fock decomposition.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import gammainc

from .algebra import AlgebraElement, SuperOperator, superop_exp
from .bimodule import (
    AdjointableMap,
    Bimodule,
    ModuleVector,
    TensorWord,
    inner_map,
    inner_product,
    is_centered,
    tensor_power,
)
from .config import DEFAULT_TOLERANCES
from .errors import AlgebraMismatchError, BilinearityError, DimensionError, PreconditionError, TupleError
from .kernels import CPDKernel

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TofSystem:
    index: Bimodule

    @property
    def algebra(self):
        return self.index.algebra

    def vacuum(self) -> "UnitParams":
        return vacuum(self)

    def unit(self, beta: AlgebraElement | None = None, zeta: ModuleVector | None = None) -> "UnitParams":
        return UnitParams(
            self,
            beta if beta is not None else self.algebra.zero(),
            zeta if zeta is not None else self.index.zero_vector(),
        )

    def random_unit(self, rng: np.random.Generator, beta_scale: float = 1.0, zeta_scale: float = 1.0) -> "UnitParams":
        return UnitParams(self, self.algebra.random_element(rng, beta_scale), self.index.random_vector(rng, zeta_scale))


@dataclass(frozen=True, eq=False)
class UnitParams:
    system: TofSystem
    beta: AlgebraElement
    zeta: ModuleVector

    def __post_init__(self) -> None:
        if self.beta.algebra != self.system.algebra:
            raise AlgebraMismatchError(f"beta lives over {self.beta.algebra}")
        if not self.zeta.module.compatible(self.system.index):
            raise DimensionError("zeta is not a vector of the index module")

    def distance(self, other: "UnitParams") -> float:
        """||beta - beta'|| + ||zeta - zeta'||"""
        _same_system(self, other)
        return (self.beta - other.beta).norm() + (self.zeta - other.zeta).norm()

    def is_exponential(self, tol: float = DEFAULT_TOLERANCES.algebraic) -> bool:
        return self.beta.norm() <= tol

    def __repr__(self) -> str:
        return f"UnitParams(|beta|={self.beta.norm():.3g}, |zeta|={self.zeta.norm():.3g})"


def _same_system(p: UnitParams, q: UnitParams) -> None:
    if p.system is not q.system and not p.system.index.compatible(q.system.index):
        raise DimensionError("units belong to different time-ordered systems")


def vacuum(system: TofSystem) -> UnitParams:
    """The reference unit (0, 0)"""
    return system.unit()


def omega_beta(system: TofSystem, beta: AlgebraElement) -> UnitParams:
    """The unit (beta, 0) with components e^{t beta} in the zero-particle sector"""
    return system.unit(beta=beta)


def generator(p: UnitParams, q: UnitParams) -> SuperOperator:
    """b -> <zeta, b zeta'> + beta* b + b beta'"""
    _same_system(p, q)
    return inner_map(p.zeta, q.zeta) + SuperOperator.left(p.beta.adjoint()) + SuperOperator.right(q.beta)


def unit_inner(p: UnitParams, q: UnitParams, t: float, b: AlgebraElement) -> AlgebraElement:
    """<xi_t, b xi'_t> = exp(t L)(b)"""
    if t < 0:
        raise PreconditionError(f"time must be >= 0, got {t}")
    return superop_exp(generator(p, q), t)(b)


def unit_kernel(units: Mapping[str, UnitParams]) -> CPDKernel:
    """Generator kernel of a labelled family of units"""
    labels = tuple(units)
    B = next(iter(units.values())).system.algebra
    return CPDKernel.from_function(B, labels, lambda s, t: generator(units[s], units[t]))


def _check_tuple(t: float, times: Sequence[float]) -> tuple[float, ...]:
    times = tuple(float(s) for s in times)
    if any(not (0 < s < t) for s in times):
        raise TupleError(f"tuple {times} leaves the interval (0, {t})")
    if any(a <= b for a, b in zip(times, times[1:])):
        raise TupleError(f"tuple {times} is not strictly decreasing")
    return times


def exponential_unit_word(p: UnitParams, t: float, times: Sequence[float]) -> TensorWord:
    """xi_t^n(t_n, ..., t_1) = e^{(t - t_n) beta} zeta (x) e^{(t_n - t_{n-1}) beta} zeta (x) ... (x) zeta e^{t_1 beta}"""
    times = _check_tuple(t, times)
    F = p.system.index
    if not times:
        raise TupleError("the zero-particle component e^{t beta} is not a word; use exponential_unit_component")
    edges = (t,) + times
    letters = [p.beta.exp(edges[j] - edges[j + 1]) * p.zeta for j in range(len(times))]
    letters[-1] = letters[-1] * p.beta.exp(times[-1])
    return TensorWord.elementary(*letters, module=F)


def exponential_unit_component(p: UnitParams, t: float, times: Sequence[float]) -> ModuleVector:
    """The n-particle component of the unit at the given time tuple, as a vector of F^{(x)n}"""
    if not tuple(times):
        _check_tuple(t, times)
        return ModuleVector(tensor_power(p.system.index, 0), p.beta.exp(t).matrix)
    return exponential_unit_word(p, t, times).realize()


def _drift(p: UnitParams, q: UnitParams) -> SuperOperator:
    """Generator of E_s(c) = e^{s beta}* c e^{s beta'}"""
    return SuperOperator.left(p.beta.adjoint()) + SuperOperator.right(q.beta)


def integrand(p: UnitParams, q: UnitParams, t: float, times: Sequence[float], b: AlgebraElement) -> AlgebraElement:
    """<xi_t^n, b xi'_t^n> at one point of the simplex

    Equals E_{t_1} Phi E_{t_2 - t_1} ... Phi E_{t - t_n}(b) with
    Phi(c) = <zeta, c zeta'>.
    """
    times = _check_tuple(t, times)
    G = _drift(p, q)
    phi = inner_map(p.zeta, q.zeta)
    edges = (t,) + times + (0.0,)
    value = b
    for j in range(len(times)):
        value = phi(superop_exp(G, edges[j] - edges[j + 1])(value))
    return superop_exp(G, edges[-2] - edges[-1])(value)


def quadrature_inner(
    p: UnitParams, q: UnitParams, t: float, b: AlgebraElement, n_max: int, h: float
) -> AlgebraElement:
    """Midpoint rule over the ordered simplices t > t_n > ... > t_1 > 0, summed for n <= n_max

    The grid has M = max(1, round(t/h)) cells with midpoints tau_k; points
    with two coordinates in the same cell are dropped. The nested integrand
    is accumulated from the outermost time inwards by dynamic programming.
    """
    if n_max < 0 or not h > 0:
        raise PreconditionError("n_max must be >= 0 and h > 0")
    if t < 0:
        raise PreconditionError(f"time must be >= 0, got {t}")
    B = b.algebra
    G = _drift(p, q).matrix
    phi = inner_map(p.zeta, q.zeta).matrix
    M = max(1, int(round(t / h)))
    step = t / M
    half = superop_exp(SuperOperator(B, G), step / 2).matrix
    full = superop_exp(SuperOperator(B, G), step).matrix
    powers = [np.eye(B.D, dtype=complex)]
    for _ in range(M):
        powers.append(full @ powers[-1])
    at_midpoint = np.stack([half @ powers[k] for k in range(M)])

    coords = b.coords()
    total = powers[M] @ coords
    # W[k] = contribution with the current innermost time at midpoint k
    W = np.einsum("ij,kjl,l->ki", phi, at_midpoint[::-1], coords)
    for n in range(1, n_max + 1):
        total = total + step**n * np.einsum("kij,kj->i", at_midpoint, W)
        if n == n_max:
            break
        shifted = np.zeros_like(W)
        for m in range(1, M):
            shifted[:M - m] += W[m:] @ powers[m].T
        W = shifted @ phi.T
    logger.debug(f"quadrature_inner: {M} cells, n_max={n_max}")
    return B.element_from_coords(total)


def truncation_residual(p: UnitParams, q: UnitParams, t: float, n_max: int, b_norm: float = 1.0) -> float:
    """Bound on the sum of the dropped sectors n > n_max"""
    x = t * p.zeta.norm() * q.zeta.norm()
    growth = np.exp(t * (p.beta.norm() + q.beta.norm()))
    if x == 0:
        return 0.0
    return float(b_norm * growth * np.exp(x) * gammainc(n_max + 1, x))


@dataclass(frozen=True, eq=False)
class MorphismMatrix:
    """Gamma = (gamma, eta*; eta', a) acting on units of Pi(F) -> Pi(F')"""

    source: TofSystem
    target: TofSystem
    gamma: AlgebraElement
    eta: ModuleVector
    eta_prime: ModuleVector
    a: AdjointableMap

    def __post_init__(self) -> None:
        if not self.eta.module.compatible(self.source.index):
            raise DimensionError("eta must lie in the source index")
        if not self.eta_prime.module.compatible(self.target.index):
            raise DimensionError("eta' must lie in the target index")
        if not (self.a.source.compatible(self.source.index) and self.a.target.compatible(self.target.index)):
            raise DimensionError("a must map the source index to the target index")
        if not self.a.is_bilinear(DEFAULT_TOLERANCES.generic):
            raise BilinearityError(f"a is not bilinear (residual {self.a.bilinearity_residual():.3e})")

    @classmethod
    def identity(cls, system: TofSystem) -> "MorphismMatrix":
        F = system.index
        return cls(system, system, system.algebra.zero(), F.zero_vector(), F.zero_vector(), AdjointableMap.identity(F))

    @classmethod
    def from_map(cls, source: TofSystem, target: TofSystem, a: AdjointableMap) -> "MorphismMatrix":
        """The spatial morphism (0, 0; 0, a)"""
        return cls(source, target, source.algebra.zero(), source.index.zero_vector(), target.index.zero_vector(), a)

    def adjoint(self) -> "MorphismMatrix":
        """Gamma* = (gamma*, eta'*; eta, a*)"""
        return MorphismMatrix(self.target, self.source, self.gamma.adjoint(), self.eta_prime, self.eta, self.a.adjoint())

    def fixes_vacuum(self, tol: float = DEFAULT_TOLERANCES.algebraic) -> bool:
        """True iff Gamma and Gamma* both send the vacuum to the vacuum"""
        forward = apply_morphism(self, vacuum(self.source))
        backward = apply_morphism(self.adjoint(), vacuum(self.target))
        return forward.distance(vacuum(self.target)) <= tol and backward.distance(vacuum(self.source)) <= tol

    def automorphism_residual(self) -> float:
        """Defect of: eta' central, eta = -a* eta', Re gamma = -<eta', eta'>/2, Im gamma central"""
        B = self.source.algebra
        centered = 0.0 if is_centered(self.eta_prime) else 1.0
        eta_defect = (self.eta + self.a.adjoint().apply(self.eta_prime)).norm()
        real = (self.gamma + self.gamma.adjoint()) * 0.5 + inner_product(self.eta_prime, self.eta_prime) * 0.5
        imaginary = (self.gamma - self.gamma.adjoint()) * (-0.5j)
        return centered + eta_defect + real.norm() + (0.0 if B.is_central(imaginary) else 1.0)

    def satisfies_automorphism_constraints(self, tol: float = DEFAULT_TOLERANCES.generic) -> bool:
        return self.automorphism_residual() <= tol


def apply_morphism(gamma: MorphismMatrix, p: UnitParams) -> UnitParams:
    """(beta, zeta) -> (gamma + beta + <eta, zeta>, eta' + a zeta)"""
    if not p.system.index.compatible(gamma.source.index):
        raise DimensionError("unit does not belong to the source of the morphism")
    beta = gamma.gamma + p.beta + inner_product(gamma.eta, p.zeta)
    zeta = gamma.eta_prime + gamma.a.apply(p.zeta)
    return UnitParams(gamma.target, beta, zeta)


def is_central_unital(p: UnitParams, tol: float = DEFAULT_TOLERANCES.generic) -> tuple[bool, bool]:
    central = p.system.algebra.is_central(p.beta, tol) and is_centered(p.zeta, tol)
    defect = inner_product(p.zeta, p.zeta) + p.beta.adjoint() + p.beta
    return central, defect.norm() <= tol


def automorphism_to(p: UnitParams, tol: float = DEFAULT_TOLERANCES.generic) -> MorphismMatrix:
    """Automorphism of Pi(F) sending the vacuum to the central unital unit p"""
    central, unital = is_central_unital(p, tol)
    if not (central and unital):
        raise PreconditionError(f"unit is not central and unital (central={central}, unital={unital})")
    system = p.system
    a = AdjointableMap.identity(system.index)
    eta_prime = p.zeta
    return MorphismMatrix(system, system, p.beta, -a.adjoint().apply(eta_prime), eta_prime, a)


def is_isomorphism(gamma: MorphismMatrix, tol: float = DEFAULT_TOLERANCES.generic) -> bool:
    return gamma.a.is_bilinear(tol) and gamma.a.is_unitary(tol)


def covariance_residual(gamma: MorphismMatrix, units: Sequence[UnitParams]) -> float:
    """max ||L(Gamma p, Gamma q) - L(p, q)|| over pairs"""
    images = [apply_morphism(gamma, p) for p in units]
    return max(
        generator(gp, gq).distance(generator(p, q))
        for p, gp in zip(units, images)
        for q, gq in zip(units, images)
    )
