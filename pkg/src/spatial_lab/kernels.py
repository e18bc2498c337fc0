"""Operator-valued kernels on finite label sets

A kernel assigns a SuperOperator K^{s,s'} to every ordered pair of labels.
Complete positive definiteness is certified by one flattened matrix over
labels x matrix units; Kolmogorov decompositions are realized through
`bimodule.from_gram`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .algebra import Algebra, AlgebraElement, SuperOperator, is_psd_matrix, superop_exp
from .bimodule import Bimodule, ModuleVector, from_gram, inner_map
from .config import DEFAULT_TOLERANCES
from .errors import (
    AlgebraMismatchError,
    NotCEGeneratorError,
    NotCPDError,
    PreconditionError,
    ReferenceNotCentralError,
    SymmetryError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CPDKernel:
    algebra: Algebra
    labels: tuple[str, ...]
    entries: Mapping[tuple[str, str], SuperOperator]

    def __post_init__(self) -> None:
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise ValueError(f"kernel labels must be distinct: {labels}")
        entries = dict(self.entries)
        for s in labels:
            for s2 in labels:
                entry = entries.get((s, s2))
                if entry is None:
                    raise KeyError(f"missing kernel entry ({s}, {s2})")
                if entry.algebra != self.algebra:
                    raise AlgebraMismatchError(f"entry ({s}, {s2}) lives over {entry.algebra}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_function(
        cls, algebra: Algebra, labels: Sequence[str], entry: Callable[[str, str], SuperOperator]
    ) -> "CPDKernel":
        return cls(algebra, tuple(labels), {(s, t): entry(s, t) for s in labels for t in labels})

    @classmethod
    def identity(cls, algebra: Algebra, labels: Sequence[str]) -> "CPDKernel":
        one = SuperOperator.identity(algebra)
        return cls.from_function(algebra, labels, lambda s, t: one)

    def __getitem__(self, pair: tuple[str, str]) -> SuperOperator:
        return self.entries[pair]

    def __len__(self) -> int:
        return len(self.labels)

    def pairs(self) -> Iterator[tuple[str, str]]:
        for s in self.labels:
            for t in self.labels:
                yield s, t

    def map_entries(self, f: Callable[[SuperOperator], SuperOperator]) -> "CPDKernel":
        return CPDKernel(self.algebra, self.labels, {pair: f(T) for pair, T in self.entries.items()})

    def restrict(self, labels: Sequence[str]) -> "CPDKernel":
        return CPDKernel.from_function(self.algebra, labels, lambda s, t: self[s, t])

    def norm(self) -> float:
        return max(T.norm() for T in self.entries.values())

    def distance(self, other: "CPDKernel") -> float:
        if self.labels != other.labels:
            raise KeyError("kernels are indexed by different labels")
        return max(self[pair].distance(other[pair]) for pair in self.pairs())

    def symmetry_residual(self) -> float:
        """max ||K^{s,t}(b)* - K^{t,s}(b*)|| on coordinates"""
        return max(self[s, t].adjoint_map().distance(self[t, s]) for s, t in self.pairs())

    def check_symmetry(self, tol: float = DEFAULT_TOLERANCES.symmetry) -> None:
        residual = self.symmetry_residual()
        if residual > tol * max(1.0, self.norm()):
            raise SymmetryError(f"kernel is not hermitian (residual {residual:.3e})")

    def __repr__(self) -> str:
        return f"CPDKernel(labels={self.labels}, blocks={self.algebra.block_sizes})"


def cpd_matrix(K: CPDKernel) -> np.ndarray:
    """Scalar matrix with blocks K^{s,t}(u_p* u_q), rows indexed by (s, p) and columns by (t, q)"""
    B = K.algebra
    S, D, N = len(K.labels), B.D, B.N
    big = np.zeros((S, D, N, S, D, N), dtype=complex)
    for i, s in enumerate(K.labels):
        for j, t in enumerate(K.labels):
            big[i, :, :, j, :, :] = K[s, t].choi_matrix().reshape(D, N, D, N)
    return big.reshape(S * D * N, S * D * N)


def is_cpd(K: CPDKernel, tol: float = DEFAULT_TOLERANCES.psd) -> bool:
    K.check_symmetry(max(DEFAULT_TOLERANCES.symmetry, tol * 1e-3))
    return is_psd_matrix(cpd_matrix(K), tol)


class KolmogorovDecomposition(NamedTuple):
    module: Bimodule
    vectors: dict[str, ModuleVector]


def kolmogorov(
    K: CPDKernel,
    tol: float = DEFAULT_TOLERANCES.psd,
    cutoff: float = DEFAULT_TOLERANCES.rank_cutoff,
) -> KolmogorovDecomposition:
    """Minimal module F with vectors z_s such that <z_s, b z_t> = K^{s,t}(b)

    Generators are the symbols u_p z_s; their Gram matrix is exactly the
    flattened CPD matrix, and u_p acts on symbols by left-regular
    multiplication of the u-index.
    """
    if not is_cpd(K, tol):
        raise NotCPDError(f"{K} is not completely positive definite")
    B = K.algebra
    S, D, N = len(K.labels), B.D, B.N
    regular = [SuperOperator.left(u).matrix for u in B.basis()]
    symbol_action = np.stack([np.kron(np.kron(np.eye(S), L), np.eye(N)) for L in regular])
    realization = from_gram(B, cpd_matrix(K), symbol_action, cutoff)
    vectors = {}
    for i, s in enumerate(K.labels):
        coefficients = np.zeros((S * D * N, N), dtype=complex)
        for p in B.diagonal_units:
            start = (i * D + p) * N
            coefficients[start:start + N] = np.eye(N)
        vectors[s] = realization.vector(coefficients)
    logger.debug(f"kolmogorov: {S} labels realized in {realization.module}")
    return KolmogorovDecomposition(realization.module, vectors)


def kernel_from_vectors(labels: Sequence[str], vectors: Sequence[ModuleVector]) -> CPDKernel:
    """K^{s,t}(b) = <x_s, b x_t>"""
    if len(labels) != len(vectors) or not vectors:
        raise ValueError("one vector per label is required")
    table = dict(zip(labels, vectors))
    B = vectors[0].algebra
    return CPDKernel.from_function(B, labels, lambda s, t: inner_map(table[s], table[t]))


def roundtrip_residual(K: CPDKernel, decomposition: KolmogorovDecomposition) -> float:
    rebuilt = kernel_from_vectors(K.labels, [decomposition.vectors[s] for s in K.labels])
    return K.distance(rebuilt)


def compose_kernels(outer: CPDKernel, inner: CPDKernel) -> CPDKernel:
    """Pointwise composition outer^{s,t} o inner^{s,t}"""
    if outer.labels != inner.labels:
        raise KeyError("kernels are indexed by different labels")
    return CPDKernel.from_function(outer.algebra, outer.labels, lambda s, t: outer[s, t] @ inner[s, t])


def semigroup_at(L: CPDKernel, t: float) -> CPDKernel:
    """Entrywise exp(t L^{s,t})"""
    if t < 0:
        raise PreconditionError(f"semigroup time must be >= 0, got {t}")
    return L.map_entries(lambda T: superop_exp(T, t))


def reference_row_residual(K: CPDKernel, reference: str) -> float:
    """max_s ||K^{w,s}(b) - b K^{w,s}(1)||, zero iff the reference row acts by right multiplication"""
    B = K.algebra
    return max(
        K[reference, s].distance(SuperOperator.right(K[reference, s](B.unit())))
        for s in K.labels
    )


@dataclass(frozen=True, eq=False)
class CESplit:
    """L^{s,t}(b) = L0^{s,t}(b) + beta_s* b + b beta_t"""

    reference: str
    beta: dict[str, AlgebraElement]
    L0: CPDKernel

    def reconstruct(self) -> CPDKernel:
        return CPDKernel.from_function(
            self.L0.algebra,
            self.L0.labels,
            lambda s, t: self.L0[s, t]
            + SuperOperator.left(self.beta[s].adjoint())
            + SuperOperator.right(self.beta[t]),
        )


def ce_split(
    L: CPDKernel,
    reference: str,
    tol: float = DEFAULT_TOLERANCES.generic,
    psd_tol: float = DEFAULT_TOLERANCES.psd,
) -> CESplit:
    if reference not in L.labels:
        raise KeyError(f"reference label {reference!r} is not in {L.labels}")
    residual = reference_row_residual(L, reference)
    if residual > tol * max(1.0, L.norm()):
        raise ReferenceNotCentralError(
            f"row {reference!r} does not act by right multiplication (residual {residual:.3e})"
        )
    B = L.algebra
    beta = {s: L[reference, s](B.unit()) for s in L.labels}
    L0 = CPDKernel.from_function(
        B,
        L.labels,
        lambda s, t: L[s, t] - SuperOperator.left(beta[s].adjoint()) - SuperOperator.right(beta[t]),
    )
    if not is_cpd(L0, psd_tol):
        raise NotCEGeneratorError(
            "the remainder after removing the drift terms is not completely positive definite; "
            "the kernel has no Christensen-Evans form with this reference and does not come "
            "from a spatial system through it"
        )
    logger.debug(f"ce_split: reference {reference!r}, {len(L.labels)} labels")
    return CESplit(reference, beta, L0)


def perturb_negative(K: CPDKernel, label: str, strength: float) -> CPDKernel:
    """Subtract strength * identity from the diagonal entry of `label`; breaks positivity for large strength"""
    shift = SuperOperator.identity(K.algebra) * strength
    return CPDKernel(
        K.algebra,
        K.labels,
        {pair: (T - shift if pair == (label, label) else T) for pair, T in K.entries.items()},
    )
