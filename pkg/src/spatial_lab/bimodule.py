"""Finite-dimensional Hilbert B-B-modules in the canonical form F = P B^k

A vector of F is a kN x N matrix whose N x N blocks lie in B and which is
fixed by P = pi(1). The left action is stored as the stack of images
pi(u_p) of the matrix units, an array of shape (D, kN, kN). Inner products
are <x, y> = x^H y.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from numbers import Number
from typing import Sequence

import numpy as np
from scipy.linalg import eigh, null_space

from .algebra import Algebra, AlgebraElement, SuperOperator, hermitian_part, is_psd_matrix
from .config import DEFAULT_TOLERANCES
from .errors import AlgebraMismatchError, DimensionError

logger = logging.getLogger(__name__)


def amplify(module: "Bimodule", matrix: np.ndarray) -> np.ndarray:
    """Apply the left action of `module` entrywise to a k x k' matrix over B"""
    B = module.algebra
    N = B.N
    k_out, k_in = matrix.shape[0] // N, matrix.shape[1] // N
    blocks = matrix.reshape(k_out, N, k_in, N).transpose(0, 2, 1, 3)
    images = np.tensordot(B.coords(blocks), module.action, axes=([2], [0]))
    m = module.free_rank * N
    return images.transpose(0, 2, 1, 3).reshape(k_out * m, k_in * m)


@dataclass(frozen=True, eq=False)
class Bimodule:
    algebra: Algebra
    free_rank: int
    action: np.ndarray

    def __post_init__(self) -> None:
        B = self.algebra
        size = self.free_rank * B.N
        action = np.array(self.action, dtype=complex)
        if self.free_rank < 1 or action.shape != (B.D, size, size):
            raise DimensionError(f"left action must have shape {(B.D, size, size)}, got {action.shape}")
        action = B.project(action)
        action.setflags(write=False)
        object.__setattr__(self, "action", action)

    @classmethod
    def regular(cls, algebra: Algebra) -> "Bimodule":
        """B as a module over itself"""
        return cls(algebra, 1, algebra.basis_matrices)

    @classmethod
    def free(cls, algebra: Algebra, k: int) -> "Bimodule":
        """B^k with the amplified left action"""
        action = np.stack([np.kron(np.eye(k), u) for u in algebra.basis_matrices])
        return cls(algebra, k, action)

    @classmethod
    def zero(cls, algebra: Algebra) -> "Bimodule":
        return cls(algebra, 1, np.zeros((algebra.D, algebra.N, algebra.N)))

    @cached_property
    def size(self) -> int:
        return self.free_rank * self.algebra.N

    @cached_property
    def projection(self) -> np.ndarray:
        """P = pi(1)"""
        return self.action[list(self.algebra.diagonal_units)].sum(axis=0)

    @cached_property
    def rank(self) -> int:
        """Complex rank of P"""
        P = self.projection
        if not np.any(P):
            return 0
        return int(np.linalg.matrix_rank(P, tol=DEFAULT_TOLERANCES.rank_cutoff * max(1.0, np.linalg.norm(P, 2))))

    @property
    def is_zero(self) -> bool:
        return self.rank == 0

    def compatible(self, other: "Bimodule") -> bool:
        return self is other or (
            self.algebra == other.algebra
            and self.free_rank == other.free_rank
            and np.array_equal(self.action, other.action)
        )

    def left(self, a: AlgebraElement) -> np.ndarray:
        """pi(a) as a kN x kN matrix"""
        if a.algebra != self.algebra:
            raise AlgebraMismatchError(f"{a.algebra} vs {self.algebra}")
        return np.tensordot(a.coords(), self.action, axes=1)

    def homomorphism_residual(self) -> float:
        """Largest defect of pi being a unital-on-P *-homomorphism, checked on matrix units"""
        B = self.algebra
        units = B.basis_matrices
        products = B.coords(np.einsum("pij,qjk->pqik", units, units))
        expected = np.tensordot(products, self.action, axes=1)
        actual = np.einsum("pij,qjk->pqik", self.action, self.action)
        multiplicative = np.max(np.abs(actual - expected)) if B.D else 0.0
        adjoints = B.coords(units.conj().transpose(0, 2, 1))
        star = np.tensordot(adjoints, self.action, axes=1) - self.action.conj().transpose(0, 2, 1)
        P = self.projection
        idempotent = np.max(np.abs(P @ P - P))
        return float(max(multiplicative, np.max(np.abs(star)), idempotent))

    def is_valid(self, tol: float = DEFAULT_TOLERANCES.algebraic) -> bool:
        return self.homomorphism_residual() <= tol * max(1.0, float(np.max(np.abs(self.action))))

    def vector(self, matrix: np.ndarray, tol: float = DEFAULT_TOLERANCES.generic) -> "ModuleVector":
        """Wrap a kN x N matrix, rejecting it if it does not lie in P B^k"""
        matrix = self.algebra.project(np.asarray(matrix, dtype=complex))
        if matrix.shape != (self.size, self.algebra.N):
            raise DimensionError(f"expected a {self.size}x{self.algebra.N} matrix, got {matrix.shape}")
        defect = np.linalg.norm(self.projection @ matrix - matrix, 2)
        if defect > tol * max(1.0, np.linalg.norm(matrix, 2)):
            raise DimensionError(f"vector is not in the range of pi(1) (defect {defect:.3e})")
        return ModuleVector(self, matrix)

    def from_components(self, components: Sequence[AlgebraElement]) -> "ModuleVector":
        if len(components) != self.free_rank:
            raise DimensionError(f"expected {self.free_rank} components, got {len(components)}")
        return self.vector(np.vstack([c.matrix for c in components]))

    def zero_vector(self) -> "ModuleVector":
        return ModuleVector(self, np.zeros((self.size, self.algebra.N), dtype=complex))

    def random_vector(self, rng: np.random.Generator, scale: float = 1.0) -> "ModuleVector":
        shape = (self.size, self.algebra.N)
        raw = self.algebra.project(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        x = ModuleVector(self, self.projection @ raw)
        norm = x.norm()
        return x * (scale / norm) if norm > 0 else x

    def generators(self) -> list["ModuleVector"]:
        """Columns P e_i; every vector is sum_i g_i x_i"""
        N = self.algebra.N
        return [ModuleVector(self, self.projection[:, i * N:(i + 1) * N]) for i in range(self.free_rank)]

    def __repr__(self) -> str:
        return f"Bimodule(blocks={self.algebra.block_sizes}, free_rank={self.free_rank}, rank={self.rank})"


@dataclass(frozen=True, eq=False)
class ModuleVector:
    __array_ufunc__ = None

    module: Bimodule
    matrix: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.shape != (self.module.size, self.module.algebra.N):
            raise DimensionError(f"vector shape {matrix.shape} does not fit {self.module}")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def algebra(self) -> Algebra:
        return self.module.algebra

    def _check(self, other: "ModuleVector") -> None:
        if not self.module.compatible(other.module):
            raise DimensionError(f"{self.module} vs {other.module}")

    def __add__(self, other: "ModuleVector") -> "ModuleVector":
        self._check(other)
        return ModuleVector(self.module, self.matrix + other.matrix)

    def __sub__(self, other: "ModuleVector") -> "ModuleVector":
        self._check(other)
        return ModuleVector(self.module, self.matrix - other.matrix)

    def __neg__(self) -> "ModuleVector":
        return ModuleVector(self.module, -self.matrix)

    def __mul__(self, other):
        """Right action x b, or scalar multiple"""
        if isinstance(other, AlgebraElement):
            if other.algebra != self.algebra:
                raise AlgebraMismatchError(f"{other.algebra} vs {self.algebra}")
            return ModuleVector(self.module, self.matrix @ other.matrix)
        if isinstance(other, Number):
            return ModuleVector(self.module, self.matrix * other)
        return NotImplemented

    def __rmul__(self, other):
        """Left action b x, or scalar multiple"""
        if isinstance(other, AlgebraElement):
            return ModuleVector(self.module, self.module.left(other) @ self.matrix)
        if isinstance(other, Number):
            return ModuleVector(self.module, other * self.matrix)
        return NotImplemented

    def components(self) -> list[AlgebraElement]:
        N = self.algebra.N
        return [AlgebraElement(self.algebra, self.matrix[i * N:(i + 1) * N]) for i in range(self.module.free_rank)]

    def inner(self, other: "ModuleVector") -> AlgebraElement:
        return inner_product(self, other)

    def norm(self) -> float:
        """||<x, x>||^(1/2)"""
        return float(np.linalg.norm(self.matrix, 2))

    def close_to(self, other: "ModuleVector", tol: float) -> bool:
        self._check(other)
        return bool(np.linalg.norm(self.matrix - other.matrix, 2) <= tol)


def inner_product(x: ModuleVector, y: ModuleVector) -> AlgebraElement:
    x._check(y)
    return AlgebraElement(x.algebra, x.algebra.project(x.matrix.conj().T @ y.matrix))


def inner_map(x: ModuleVector, y: ModuleVector) -> SuperOperator:
    """The map b -> <x, b y>"""
    x._check(y)
    B = x.algebra
    images = np.einsum("ia,pij,jb->pab", x.matrix.conj(), x.module.action, y.matrix)
    return SuperOperator(B, B.coords(images).T)


def gram(vectors: Sequence[ModuleVector]) -> np.ndarray:
    """Flattened B-valued Gram matrix [<x_i, x_j>] as an nN x nN scalar matrix"""
    if not vectors:
        return np.zeros((0, 0), dtype=complex)
    stacked = np.hstack([v.matrix for v in vectors])
    for v in vectors[1:]:
        vectors[0]._check(v)
    return stacked.conj().T @ stacked


def is_centered(x: ModuleVector, tol: float = DEFAULT_TOLERANCES.generic) -> bool:
    """True iff b x = x b for every b in B"""
    defect = max(
        np.linalg.norm(pi_u @ x.matrix - x.matrix @ u, 2)
        for pi_u, u in zip(x.module.action, x.algebra.basis_matrices)
    )
    return bool(defect <= tol * max(1.0, x.norm()))


def center(module: Bimodule, tol: float = DEFAULT_TOLERANCES.rank_cutoff) -> list[ModuleVector]:
    """Basis of C_B(F) = {x : b x = x b for all b}

    Solves (P - 1) x = 0 together with pi(u_p) x = x u_p for all matrix
    units, in the coordinates of B^k.
    """
    B = module.algebra
    k, N, D = module.free_rank, B.N, B.D
    P = module.projection
    columns = []
    for i in range(k):
        for q in range(D):
            x = np.zeros((k * N, N), dtype=complex)
            x[i * N:(i + 1) * N] = B.basis_matrices[q]
            constraints = [P @ x - x] + [pi_u @ x - x @ u for pi_u, u in zip(module.action, B.basis_matrices)]
            columns.append(np.concatenate([c.ravel() for c in constraints]))
    system = np.stack(columns, axis=1)
    solutions = null_space(system, rcond=tol)
    logger.debug(f"center of {module}: dimension {solutions.shape[1]}")
    basis = []
    for s in solutions.T:
        coefficients = s.reshape(k, D)
        matrix = np.vstack([B.from_coords(c) for c in coefficients])
        basis.append(ModuleVector(module, matrix))
    return basis


@dataclass(frozen=True, eq=False)
class AdjointableMap:
    """Right-linear map between modules, given as a k'N x kN matrix over B"""

    __array_ufunc__ = None

    source: Bimodule
    target: Bimodule
    matrix: np.ndarray

    def __post_init__(self) -> None:
        if self.source.algebra != self.target.algebra:
            raise AlgebraMismatchError("source and target live over different algebras")
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.shape != (self.target.size, self.source.size):
            raise DimensionError(f"expected shape {(self.target.size, self.source.size)}, got {matrix.shape}")
        matrix = self.source.algebra.project(matrix)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def identity(cls, module: Bimodule) -> "AdjointableMap":
        return cls(module, module, module.projection)

    @classmethod
    def zero(cls, source: Bimodule, target: Bimodule) -> "AdjointableMap":
        return cls(source, target, np.zeros((target.size, source.size)))

    def __call__(self, x: ModuleVector) -> ModuleVector:
        return self.apply(x)

    def apply(self, x: ModuleVector) -> ModuleVector:
        if not x.module.compatible(self.source):
            raise DimensionError(f"{x.module} is not the source {self.source}")
        return ModuleVector(self.target, self.matrix @ x.matrix)

    def adjoint(self) -> "AdjointableMap":
        return AdjointableMap(self.target, self.source, self.matrix.conj().T)

    def __matmul__(self, other: "AdjointableMap") -> "AdjointableMap":
        """(self @ other)(x) = self(other(x))"""
        if not other.target.compatible(self.source):
            raise DimensionError("maps do not compose")
        return AdjointableMap(other.source, self.target, self.matrix @ other.matrix)

    def __add__(self, other: "AdjointableMap") -> "AdjointableMap":
        return AdjointableMap(self.source, self.target, self.matrix + other.matrix)

    def __mul__(self, scalar):
        if isinstance(scalar, Number):
            return AdjointableMap(self.source, self.target, self.matrix * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def bilinearity_residual(self) -> float:
        """max_p ||a pi(u_p) - pi'(u_p) a|| plus the leak out of P' a P"""
        a = self.matrix
        intertwining = max(
            np.linalg.norm(a @ s - t @ a, 2)
            for s, t in zip(self.source.action, self.target.action)
        )
        leak = np.linalg.norm(self.target.projection @ a @ self.source.projection - a, 2)
        return float(intertwining + leak)

    def is_bilinear(self, tol: float = DEFAULT_TOLERANCES.algebraic) -> bool:
        return self.bilinearity_residual() <= tol * max(1.0, np.linalg.norm(self.matrix, 2))

    def is_isometric(self, tol: float = DEFAULT_TOLERANCES.generic) -> bool:
        a = self.matrix
        return bool(np.linalg.norm(a.conj().T @ a - self.source.projection, 2) <= tol)

    def is_unitary(self, tol: float = DEFAULT_TOLERANCES.generic) -> bool:
        a = self.matrix
        return self.is_isometric(tol) and bool(np.linalg.norm(a @ a.conj().T - self.target.projection, 2) <= tol)


@dataclass(frozen=True, eq=False)
class GramRealization:
    """A module realized from generators with a positive B-valued Gram matrix

    Formal combinations sum_i g_i c_i (c an nN x N coefficient matrix) are
    sent to M^{1/2} c in P B^n, where P is the support projection of M.
    """

    module: Bimodule
    root: np.ndarray
    generator_count: int

    def vector(self, coefficients: np.ndarray) -> ModuleVector:
        if self.module.is_zero:
            return self.module.zero_vector()
        return ModuleVector(self.module, self.module.algebra.project(self.root @ coefficients))

    def generator(self, i: int) -> ModuleVector:
        N = self.module.algebra.N
        c = np.zeros((self.generator_count * N, N), dtype=complex)
        c[i * N:(i + 1) * N] = np.eye(N)
        return self.vector(c)


def from_gram(
    algebra: Algebra,
    gram_matrix: np.ndarray,
    symbol_action: np.ndarray,
    cutoff: float = DEFAULT_TOLERANCES.rank_cutoff,
) -> GramRealization:
    """Quotient a semi-inner-product module by its null space

    `gram_matrix` is the nN x nN matrix [<g_i, g_j>] in M_n(B) and
    `symbol_action[p]` is the nN x nN matrix of u_p on the generators, so
    that u_p g_i = sum_j g_j symbol_action[p][j, i].
    """
    N = algebra.N
    n = gram_matrix.shape[0] // N
    M = algebra.project(hermitian_part(np.asarray(gram_matrix, dtype=complex)))
    eigenvalues, vectors = eigh(M)
    top = eigenvalues[-1] if eigenvalues.size else 0.0
    keep = eigenvalues > cutoff * top if top > 0 else np.zeros_like(eigenvalues, dtype=bool)
    logger.debug(f"gram realization: {n} generators, rank {int(keep.sum())} of {M.shape[0]}")
    if not keep.any():
        return GramRealization(Bimodule.zero(algebra), np.zeros_like(M), n)

    V = vectors[:, keep]
    lam = eigenvalues[keep]
    root = algebra.project((V * np.sqrt(lam)) @ V.conj().T)
    inverse_root = algebra.project((V / np.sqrt(lam)) @ V.conj().T)
    action = np.stack([root @ s @ inverse_root for s in symbol_action])
    return GramRealization(Bimodule(algebra, n, action), root, n)


@dataclass(frozen=True, eq=False)
class TensorProduct:
    """F (x)_B G with the map sending x (x) y to its class"""

    left: Bimodule
    right: Bimodule
    realization: GramRealization

    @property
    def module(self) -> Bimodule:
        return self.realization.module

    def embed(self, x: ModuleVector, y: ModuleVector) -> ModuleVector:
        if not x.module.compatible(self.left) or not y.module.compatible(self.right):
            raise DimensionError("elementary tensor factors do not match the product")
        coefficients = np.vstack([self.right.left(xi) @ y.matrix for xi in x.components()])
        return self.realization.vector(coefficients)


def tensor_over_B(F: Bimodule, G: Bimodule) -> TensorProduct:
    """Interior tensor product; generators are g_i (x) y with g_i the columns of P_F"""
    if F.algebra != G.algebra:
        raise AlgebraMismatchError(f"{F.algebra} vs {G.algebra}")
    B = F.algebra
    gram_matrix = amplify(G, F.projection)
    symbol_action = np.stack([amplify(G, pi_u) for pi_u in F.action])
    return TensorProduct(F, G, from_gram(B, gram_matrix, symbol_action))


@lru_cache(maxsize=None)
def _tensor_step(F: Bimodule, n: int) -> TensorProduct:
    """F^{(x)n} = F^{(x)(n-1)} (x) F for n >= 2"""
    return tensor_over_B(tensor_power(F, n - 1), F)


def tensor_power(F: Bimodule, n: int) -> Bimodule:
    if n < 0:
        raise ValueError("tensor powers are indexed by n >= 0")
    if n == 0:
        return _regular(F.algebra)
    if n == 1:
        return F
    return _tensor_step(F, n).module


@lru_cache(maxsize=None)
def _regular(algebra: Algebra) -> Bimodule:
    return Bimodule.regular(algebra)


def embed_word(F: Bimodule, vectors: Sequence[ModuleVector]) -> ModuleVector:
    """x_1 (x) ... (x) x_n as a vector of tensor_power(F, n)"""
    if not vectors:
        B = F.algebra
        return ModuleVector(_regular(B), np.eye(B.N, dtype=complex))
    result = vectors[0]
    if not result.module.compatible(F):
        raise DimensionError("word letters must lie in the base module")
    for j, x in enumerate(vectors[1:], start=2):
        result = _tensor_step(F, j).embed(result, x)
    return result


@dataclass(frozen=True, eq=False)
class TensorWord:
    """Finite sum of elementary tensors c * x_1 (x) ... (x) x_n over one module"""

    __array_ufunc__ = None

    module: Bimodule
    length: int
    terms: tuple[tuple[complex, tuple[ModuleVector, ...]], ...] = ()

    def __post_init__(self) -> None:
        for _, letters in self.terms:
            if len(letters) != self.length:
                raise DimensionError(f"term of length {len(letters)} in a word of length {self.length}")
            for x in letters:
                if not x.module.compatible(self.module):
                    raise DimensionError("word letters must lie in the base module")

    @classmethod
    def elementary(cls, *letters: ModuleVector, module: Bimodule | None = None) -> "TensorWord":
        if module is None:
            if not letters:
                raise DimensionError("an empty word needs an explicit module")
            module = letters[0].module
        return cls(module, len(letters), ((1.0, tuple(letters)),))

    @classmethod
    def unit(cls, module: Bimodule) -> "TensorWord":
        """The empty word 1 in tensor_power(F, 0) = B"""
        return cls(module, 0, ((1.0, ()),))

    @classmethod
    def zero(cls, module: Bimodule, length: int) -> "TensorWord":
        return cls(module, length, ())

    def _check(self, other: "TensorWord") -> None:
        if self.length != other.length or not self.module.compatible(other.module):
            raise DimensionError("words live in different tensor powers")

    def __add__(self, other: "TensorWord") -> "TensorWord":
        self._check(other)
        return TensorWord(self.module, self.length, self.terms + other.terms)

    def __mul__(self, scalar):
        if isinstance(scalar, Number):
            return TensorWord(self.module, self.length, tuple((c * scalar, xs) for c, xs in self.terms))
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self) -> "TensorWord":
        return self * -1

    def tensor(self, other: "TensorWord") -> "TensorWord":
        """Concatenation self (x) other"""
        if not self.module.compatible(other.module):
            raise DimensionError("words over different modules")
        terms = tuple((c * d, xs + ys) for c, xs in self.terms for d, ys in other.terms)
        return TensorWord(self.module, self.length + other.length, terms)

    def inner(self, other: "TensorWord", b: AlgebraElement) -> AlgebraElement:
        """<self, b other> = sum of <x_n, ... <x_1, b y_1> ... y_n>"""
        self._check(other)
        total = b.algebra.zero()
        for c, xs in self.terms:
            for d, ys in other.terms:
                r = b
                for x, y in zip(xs, ys):
                    r = inner_product(x, r * y)
                total = total + (np.conj(c) * d) * r
        return total

    def inner_map(self, other: "TensorWord") -> SuperOperator:
        """The map b -> <self, b other>"""
        self._check(other)
        B = self.module.algebra
        total = SuperOperator.zero(B)
        for c, xs in self.terms:
            for d, ys in other.terms:
                m = SuperOperator.identity(B)
                for x, y in zip(xs, ys):
                    m = inner_map(x, y) @ m
                total = total + (np.conj(c) * d) * m
        return total

    def realize(self) -> ModuleVector:
        target = tensor_power(self.module, self.length)
        result = ModuleVector(target, np.zeros((target.size, self.module.algebra.N), dtype=complex))
        for c, xs in self.terms:
            v = embed_word(self.module, xs)
            result = result + ModuleVector(target, c * v.matrix)
        return result

    def norm_bound(self) -> float:
        """Triangle-inequality bound on the norm"""
        return float(sum(abs(c) * np.prod([x.norm() for x in xs]) for c, xs in self.terms))


@dataclass(frozen=True, eq=False)
class DirectSum:
    """F_1 + ... + F_m with canonical embeddings and projections"""

    summands: tuple[Bimodule, ...]
    module: Bimodule

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out, offset = [], 0
        for F in self.summands:
            out.append(offset)
            offset += F.size
        return tuple(out)

    def iota(self, index: int) -> AdjointableMap:
        F = self.summands[index]
        matrix = np.zeros((self.module.size, F.size), dtype=complex)
        start = self.offsets[index]
        matrix[start:start + F.size] = F.projection
        return AdjointableMap(F, self.module, matrix)

    def proj(self, index: int) -> AdjointableMap:
        return self.iota(index).adjoint()

    def embed(self, index: int, x: ModuleVector) -> ModuleVector:
        return self.iota(index).apply(x)

    def project(self, index: int, x: ModuleVector) -> ModuleVector:
        return self.proj(index).apply(x)

    def combine(self, vectors: Sequence[ModuleVector]) -> ModuleVector:
        """x_1 + ... + x_m as one vector of the sum"""
        if len(vectors) != len(self.summands):
            raise DimensionError("one vector per summand is required")
        total = self.module.zero_vector()
        for i, x in enumerate(vectors):
            total = total + self.embed(i, x)
        return total


def direct_sum(*modules: Bimodule) -> DirectSum:
    if not modules:
        raise DimensionError("a direct sum needs at least one summand")
    B = modules[0].algebra
    for F in modules[1:]:
        if F.algebra != B:
            raise AlgebraMismatchError(f"{F.algebra} vs {B}")
    k = sum(F.free_rank for F in modules)
    action = np.zeros((B.D, k * B.N, k * B.N), dtype=complex)
    offset = 0
    for F in modules:
        action[:, offset:offset + F.size, offset:offset + F.size] = F.action
        offset += F.size
    return DirectSum(tuple(modules), Bimodule(B, k, action))


def gram_is_psd(vectors: Sequence[ModuleVector], tol: float = DEFAULT_TOLERANCES.psd) -> bool:
    return is_psd_matrix(gram(vectors), tol)
