from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SparseSymOperator:
    """A finalized symmetric sparse matrix.

    Duplicates are summed and indices sorted on construction; ``symmetric``
    records the check |A - A^T|_max <= 1e-12 |A|_max.
    """

    matrix: sp.csr_matrix
    symmetric: bool

    @classmethod
    def from_matrix(cls, matrix, check: bool = True) -> "SparseSymOperator":
        mat = sp.csr_matrix(matrix, dtype=float)
        mat.sum_duplicates()
        mat.sort_indices()
        if mat.shape[0] != mat.shape[1]:
            raise ValueError(f"Operator must be square, got {mat.shape}.")
        symmetric = is_symmetric(mat)
        if check and not symmetric:
            raise ValueError("Operator is not symmetric to 1e-12 relative.")
        return cls(matrix=mat, symmetric=symmetric)

    @classmethod
    def from_triplets(
        cls,
        rows: np.ndarray,
        cols: np.ndarray,
        data: np.ndarray,
        n: int,
        check: bool = True,
    ) -> "SparseSymOperator":
        coo = sp.coo_matrix((np.asarray(data, dtype=float), (rows, cols)), shape=(n, n))
        return cls.from_matrix(coo.tocsr(), check=check)

    @property
    def dimension(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def __matmul__(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def quadratic_form(self, x: np.ndarray, y: Optional[np.ndarray] = None) -> float:
        """x^T A y (y defaults to x)."""
        y = x if y is None else y
        return float(np.dot(x, self.matrix @ y))

    def restrict(self, free: np.ndarray) -> "SparseSymOperator":
        sub = self.matrix[free][:, free]
        return SparseSymOperator(matrix=sp.csr_matrix(sub), symmetric=self.symmetric)

    def __add__(self, other: "SparseSymOperator") -> "SparseSymOperator":
        return SparseSymOperator.from_matrix(self.matrix + other.matrix, check=False)

    def scaled(self, factor: float) -> "SparseSymOperator":
        return SparseSymOperator(matrix=(factor * self.matrix).tocsr(), symmetric=self.symmetric)


def is_symmetric(mat: sp.spmatrix, tol: float = SYMMETRY_TOL) -> bool:
    if mat.nnz == 0:
        return True
    scale = float(np.abs(mat.data).max())
    diff = (mat - mat.T).tocsr()
    if diff.nnz == 0:
        return True
    return float(np.abs(diff.data).max()) <= tol * scale


def free_dofs(n: int, fixed: Sequence[int]) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[np.asarray(fixed, dtype=np.int64)] = False
    return np.flatnonzero(mask)


def eliminate_dirichlet(
    op: SparseSymOperator,
    rhs: np.ndarray,
    fixed: np.ndarray,
    fixed_values: np.ndarray,
) -> Tuple[SparseSymOperator, np.ndarray, np.ndarray]:
    """Reduce A x = b to the free dofs given x[fixed] = fixed_values.

    Returns the restricted operator, the reduced right-hand side
    b_f - A_fd x_d and the free dof indices.
    """
    fixed = np.asarray(fixed, dtype=np.int64)
    free = free_dofs(op.dimension, fixed)
    reduced_rhs = np.asarray(rhs, dtype=float)[free]
    if fixed.size:
        coupling = op.matrix[free][:, fixed]
        reduced_rhs = reduced_rhs - coupling @ np.asarray(fixed_values, dtype=float)
    return op.restrict(free), reduced_rhs, free


def expand_solution(
    n: int,
    free: np.ndarray,
    free_values: np.ndarray,
    fixed: np.ndarray,
    fixed_values: np.ndarray,
) -> np.ndarray:
    x = np.empty(n)
    x[free] = free_values
    if len(fixed):
        x[np.asarray(fixed, dtype=np.int64)] = fixed_values
    return x
