"""Finite-dimensional C*-algebras B = M_{d_1} + ... + M_{d_m} and superoperators on them

Elements are stored as block-diagonal N x N matrices (N = sum of the block
sizes). Coordinates refer to the matrix units ordered block by block,
row-major inside each block; every SuperOperator matrix uses this basis.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from numbers import Number
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .config import DEFAULT_TOLERANCES
from .errors import AlgebraMismatchError, HermiticityError, SymmetryError

logger = logging.getLogger(__name__)


def hermitian_part(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.conj().T) / 2


def is_psd_matrix(matrix: np.ndarray, tol: float = DEFAULT_TOLERANCES.psd) -> bool:
    """True iff the hermitian matrix has no eigenvalue below -tol * (largest magnitude)"""
    if matrix.size == 0:
        return True
    eigenvalues = np.linalg.eigvalsh(hermitian_part(matrix))
    scale = np.max(np.abs(eigenvalues))
    if scale == 0:
        return True
    return bool(eigenvalues[0] >= -tol * scale)


@dataclass(frozen=True)
class Algebra:
    """The algebra of block-diagonal matrices with the given block sizes"""

    block_sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        sizes = tuple(int(d) for d in self.block_sizes)
        if not sizes or any(d < 1 for d in sizes):
            raise ValueError("an algebra needs at least one block of positive size")
        object.__setattr__(self, "block_sizes", sizes)

    @classmethod
    def scalar(cls) -> "Algebra":
        return cls((1,))

    @classmethod
    def matrix(cls, d: int) -> "Algebra":
        return cls((d,))

    @cached_property
    def N(self) -> int:
        """Size of the ambient matrices"""
        return sum(self.block_sizes)

    @cached_property
    def D(self) -> int:
        """Complex dimension of the algebra"""
        return sum(d * d for d in self.block_sizes)

    @cached_property
    def _positions(self) -> tuple[np.ndarray, np.ndarray]:
        rows, cols = [], []
        offset = 0
        for d in self.block_sizes:
            for i in range(d):
                for j in range(d):
                    rows.append(offset + i)
                    cols.append(offset + j)
            offset += d
        return np.array(rows), np.array(cols)

    @cached_property
    def mask(self) -> np.ndarray:
        """Boolean N x N pattern of the block-diagonal support"""
        mask = np.zeros((self.N, self.N), dtype=bool)
        rows, cols = self._positions
        mask[rows, cols] = True
        mask.setflags(write=False)
        return mask

    @cached_property
    def basis_matrices(self) -> np.ndarray:
        """The D matrix units as an array of shape (D, N, N)"""
        units = np.zeros((self.D, self.N, self.N), dtype=complex)
        rows, cols = self._positions
        units[np.arange(self.D), rows, cols] = 1
        units.setflags(write=False)
        return units

    @cached_property
    def diagonal_units(self) -> tuple[int, ...]:
        """Indices of the matrix units e_ii; they sum to the unit"""
        rows, cols = self._positions
        return tuple(int(p) for p in np.flatnonzero(rows == cols))

    def coords(self, matrix: np.ndarray) -> np.ndarray:
        rows, cols = self._positions
        return matrix[..., rows, cols]

    def from_coords(self, vector: np.ndarray) -> np.ndarray:
        vector = np.asarray(vector, dtype=complex)
        matrix = np.zeros(vector.shape[:-1] + (self.N, self.N), dtype=complex)
        rows, cols = self._positions
        matrix[..., rows, cols] = vector
        return matrix

    def project(self, matrix: np.ndarray) -> np.ndarray:
        """Zero all entries of (a stack of) k N x k' N matrices outside M_{k,k'}(B)"""
        reps = (matrix.shape[-2] // self.N, matrix.shape[-1] // self.N)
        return np.where(np.tile(self.mask, reps), matrix, 0)

    def element(self, data: np.ndarray | Sequence[np.ndarray]) -> "AlgebraElement":
        """Build an element from an N x N matrix or from a list of blocks"""
        if isinstance(data, np.ndarray) and data.shape == (self.N, self.N):
            matrix = np.asarray(data, dtype=complex)
        else:
            blocks = [np.atleast_2d(np.asarray(b, dtype=complex)) for b in data]
            if tuple(b.shape[0] for b in blocks) != self.block_sizes:
                raise AlgebraMismatchError(f"blocks do not match sizes {self.block_sizes}")
            matrix = np.zeros((self.N, self.N), dtype=complex)
            offset = 0
            for block in blocks:
                d = block.shape[0]
                matrix[offset:offset + d, offset:offset + d] = block
                offset += d
        return AlgebraElement(self, self.project(matrix))

    def element_from_coords(self, vector: np.ndarray) -> "AlgebraElement":
        return AlgebraElement(self, self.from_coords(vector))

    def unit(self) -> "AlgebraElement":
        return AlgebraElement(self, np.eye(self.N, dtype=complex))

    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, np.zeros((self.N, self.N), dtype=complex))

    def basis(self) -> list["AlgebraElement"]:
        return [AlgebraElement(self, u) for u in self.basis_matrices]

    def random_element(self, rng: np.random.Generator, scale: float = 1.0) -> "AlgebraElement":
        z = rng.standard_normal(self.D) + 1j * rng.standard_normal(self.D)
        b = self.element_from_coords(z)
        return b * (scale / b.norm())

    @cached_property
    def _block_units(self) -> tuple["AlgebraElement", ...]:
        elements = []
        offset = 0
        for d in self.block_sizes:
            matrix = np.zeros((self.N, self.N), dtype=complex)
            matrix[offset:offset + d, offset:offset + d] = np.eye(d)
            elements.append(AlgebraElement(self, matrix))
            offset += d
        return tuple(elements)

    def center_basis(self) -> tuple["AlgebraElement", ...]:
        """Unit of each block; they span the center C_B(B)"""
        return self._block_units

    def is_central(self, b: "AlgebraElement", tol: float = DEFAULT_TOLERANCES.generic) -> bool:
        scale = max(1.0, b.norm())
        return all(
            np.linalg.norm(b.matrix @ u - u @ b.matrix) <= tol * scale
            for u in self.basis_matrices
        )


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """Element of B held as its block-diagonal matrix"""

    __array_ufunc__ = None

    algebra: Algebra
    matrix: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.shape != (self.algebra.N, self.algebra.N):
            raise AlgebraMismatchError(f"expected a {self.algebra.N}x{self.algebra.N} matrix, got {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("algebra elements must have finite entries")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    def _check(self, other: "AlgebraElement") -> None:
        if other.algebra != self.algebra:
            raise AlgebraMismatchError(f"{self.algebra} vs {other.algebra}")

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        return AlgebraElement(self.algebra, self.matrix + other.matrix)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        return AlgebraElement(self.algebra, self.matrix - other.matrix)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(self.algebra, -self.matrix)

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            self._check(other)
            return AlgebraElement(self.algebra, self.matrix @ other.matrix)
        if isinstance(other, Number):
            return AlgebraElement(self.algebra, self.matrix * other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Number):
            return AlgebraElement(self.algebra, other * self.matrix)
        return NotImplemented

    def adjoint(self) -> "AlgebraElement":
        return AlgebraElement(self.algebra, self.matrix.conj().T)

    def coords(self) -> np.ndarray:
        return self.algebra.coords(self.matrix)

    def blocks(self) -> list[np.ndarray]:
        out, offset = [], 0
        for d in self.algebra.block_sizes:
            out.append(self.matrix[offset:offset + d, offset:offset + d].copy())
            offset += d
        return out

    def norm(self) -> float:
        """C*-norm (largest singular value)"""
        return float(np.linalg.norm(self.matrix, 2))

    def exp(self, t: float = 1.0) -> "AlgebraElement":
        return AlgebraElement(self.algebra, self.algebra.project(expm(t * self.matrix)))

    def is_self_adjoint(self, tol: float = DEFAULT_TOLERANCES.symmetry) -> bool:
        return bool(np.linalg.norm(self.matrix - self.matrix.conj().T, 2) <= tol * max(1.0, self.norm()))

    def close_to(self, other: "AlgebraElement", tol: float) -> bool:
        self._check(other)
        return bool(np.linalg.norm(self.matrix - other.matrix, 2) <= tol)

    def __repr__(self) -> str:
        return f"AlgebraElement({self.algebra.block_sizes}, {np.round(self.matrix, 6).tolist()})"


def is_positive_element(b: AlgebraElement, tol: float = DEFAULT_TOLERANCES.psd) -> bool:
    """True iff every blockwise eigenvalue of the self-adjoint b is >= -tol*||b||"""
    scale = b.norm()
    asymmetry = np.linalg.norm(b.matrix - b.matrix.conj().T, 2)
    if asymmetry > tol * max(scale, 1.0):
        raise SymmetryError(f"element is not self-adjoint (residual {asymmetry:.3e})")
    if scale == 0:
        return True
    eigenvalues = np.linalg.eigvalsh(hermitian_part(b.matrix))
    return bool(eigenvalues[0] >= -tol * scale)


@dataclass(frozen=True, eq=False)
class SuperOperator:
    """Linear map B -> B as a D x D matrix on coordinates"""

    __array_ufunc__ = None

    algebra: Algebra
    matrix: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=complex)
        D = self.algebra.D
        if matrix.shape != (D, D):
            raise AlgebraMismatchError(f"expected a {D}x{D} matrix, got {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("superoperators must have finite entries")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_map(cls, algebra: Algebra, f: Callable[[AlgebraElement], AlgebraElement]) -> "SuperOperator":
        columns = [f(u).coords() for u in algebra.basis()]
        return cls(algebra, np.stack(columns, axis=1))

    @classmethod
    def identity(cls, algebra: Algebra) -> "SuperOperator":
        return cls(algebra, np.eye(algebra.D))

    @classmethod
    def zero(cls, algebra: Algebra) -> "SuperOperator":
        return cls(algebra, np.zeros((algebra.D, algebra.D)))

    @classmethod
    def left(cls, a: AlgebraElement) -> "SuperOperator":
        """b -> a b"""
        B = a.algebra
        return cls(B, B.coords(a.matrix @ B.basis_matrices).T)

    @classmethod
    def right(cls, a: AlgebraElement) -> "SuperOperator":
        """b -> b a"""
        B = a.algebra
        return cls(B, B.coords(B.basis_matrices @ a.matrix).T)

    @classmethod
    def conjugation(cls, x: AlgebraElement) -> "SuperOperator":
        """b -> x* b x"""
        return cls.left(x.adjoint()) @ cls.right(x)

    def __call__(self, b: AlgebraElement) -> AlgebraElement:
        if b.algebra != self.algebra:
            raise AlgebraMismatchError(f"{b.algebra} vs {self.algebra}")
        return self.algebra.element_from_coords(self.matrix @ b.coords())

    def _check(self, other: "SuperOperator") -> None:
        if other.algebra != self.algebra:
            raise AlgebraMismatchError(f"{self.algebra} vs {other.algebra}")

    def __matmul__(self, other: "SuperOperator") -> "SuperOperator":
        """Composition: (S @ T)(b) = S(T(b))"""
        self._check(other)
        return SuperOperator(self.algebra, self.matrix @ other.matrix)

    def __add__(self, other: "SuperOperator") -> "SuperOperator":
        self._check(other)
        return SuperOperator(self.algebra, self.matrix + other.matrix)

    def __sub__(self, other: "SuperOperator") -> "SuperOperator":
        self._check(other)
        return SuperOperator(self.algebra, self.matrix - other.matrix)

    def __neg__(self) -> "SuperOperator":
        return SuperOperator(self.algebra, -self.matrix)

    def __mul__(self, scalar):
        if isinstance(scalar, Number):
            return SuperOperator(self.algebra, self.matrix * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def exp(self, t: float = 1.0) -> "SuperOperator":
        return superop_exp(self, t)

    def power(self, n: int) -> "SuperOperator":
        return SuperOperator(self.algebra, np.linalg.matrix_power(self.matrix, n))

    def norm(self) -> float:
        """Operator 2-norm of the coordinate matrix"""
        return float(np.linalg.norm(self.matrix, 2))

    def distance(self, other: "SuperOperator") -> float:
        self._check(other)
        return float(np.linalg.norm(self.matrix - other.matrix, 2))

    def adjoint_map(self) -> "SuperOperator":
        """b -> T(b*)*"""
        B = self.algebra
        images = B.from_coords((self.matrix @ B.coords(B.basis_matrices.conj().transpose(0, 2, 1)).T).T)
        return SuperOperator(B, B.coords(images.conj().transpose(0, 2, 1)).T)

    def hermiticity_residual(self) -> float:
        return float(np.linalg.norm(self.matrix - self.adjoint_map().matrix, 2))

    def is_hermiticity_preserving(self, tol: float = DEFAULT_TOLERANCES.symmetry) -> bool:
        return self.hermiticity_residual() <= tol * max(1.0, self.norm())

    def choi_matrix(self) -> np.ndarray:
        """The block matrix [T(u_p* u_q)]_{p,q} flattened into a (D N) x (D N) scalar matrix"""
        B = self.algebra
        units = B.basis_matrices
        products = np.einsum("pji,qjk->pqik", units.conj(), units)
        images = B.from_coords(B.coords(products) @ self.matrix.T)
        D, N = B.D, B.N
        return images.transpose(0, 2, 1, 3).reshape(D * N, D * N)


def superop_exp(L: SuperOperator, t: float) -> SuperOperator:
    """exp(tL) by scaling and squaring"""
    if not np.isfinite(t):
        raise ValueError("time must be finite")
    return SuperOperator(L.algebra, expm(t * L.matrix))


def is_completely_positive(T: SuperOperator, tol: float = DEFAULT_TOLERANCES.psd) -> bool:
    """Choi-type positivity of the hermiticity-preserving map T"""
    if not T.is_hermiticity_preserving(max(tol, DEFAULT_TOLERANCES.symmetry)):
        raise HermiticityError(f"map does not preserve adjoints (residual {T.hermiticity_residual():.3e})")
    return is_psd_matrix(T.choi_matrix(), tol)


def transpose_map(algebra: Algebra) -> SuperOperator:
    """Blockwise transpose; positive but not completely positive once a block has size > 1"""
    def transpose(b: AlgebraElement) -> AlgebraElement:
        return AlgebraElement(algebra, b.matrix.T)

    return SuperOperator.from_map(algebra, transpose)
