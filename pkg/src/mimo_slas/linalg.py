"""Dense complex linear algebra with per-operation flop instrumentation.

Matrices are 2-D ``numpy.ndarray`` (complex128), vectors 1-D.  Every
arithmetic operation charges a deterministic number of real floating-point
operations to an optional :class:`FlopCounter` under the convention

* one real addition or multiplication  = 1 flop,
* one complex addition                 = 2 flops,
* one complex multiplication           = 6 flops (4 mul + 2 add),
* data movement (transpose, conjugation, real-part extraction) = 0 flops.

A matrix product (m x p)(p x n) therefore charges ``6*m*n*p`` multiplication
flops and ``2*m*n*(p-1)`` addition flops.  Matrix inversion is Gauss-Jordan
elimination with partial pivoting and is charged the textbook lump cost
``ceil(2/3 * n^3)`` so that instrumented totals line up with the closed-form
detector cost models in :mod:`mimo_slas.complexity`.

No BLAS-style blocking or solve-instead-of-invert shortcuts: countability and
clarity win over raw speed here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FlopCounter",
    "DimensionMismatchError",
    "SingularMatrixError",
    "hermitian_transpose",
    "mat_mul",
    "mat_vec",
    "gauss_invert",
    "real_part_scaled",
    "mat_mul_flops",
    "mat_vec_flops",
    "gauss_invert_flops",
]


class DimensionMismatchError(ValueError):
    """Operand shapes are incompatible for the requested operation."""


class SingularMatrixError(ValueError):
    """Gauss elimination met a pivot below tolerance.

    ``column`` is the 0-based pivot column at which elimination failed.
    """

    def __init__(self, column: int, magnitude: float):
        self.column = column
        self.magnitude = magnitude
        super().__init__(
            f"matrix is numerically singular: pivot column {column} has "
            f"magnitude {magnitude:.3e} < 1e-12 after partial pivoting"
        )


@dataclass
class FlopCounter:
    """Accumulator for real additions and multiplications.

    Counts are monotonically non-decreasing; ``reset`` starts a new scope.
    """

    real_additions: int = 0
    real_multiplications: int = 0

    @property
    def total(self) -> int:
        return self.real_additions + self.real_multiplications

    def charge(self, additions: int = 0, multiplications: int = 0) -> None:
        if additions < 0 or multiplications < 0:
            raise ValueError(
                f"flop charges must be non-negative, got additions={additions} "
                f"multiplications={multiplications}"
            )
        self.real_additions += additions
        self.real_multiplications += multiplications

    def reset(self) -> None:
        self.real_additions = 0
        self.real_multiplications = 0


def _as_matrix(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got shape {a.shape}")
    return a


def _as_vector(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 1:
        raise DimensionMismatchError(f"{name} must be 1-D, got shape {a.shape}")
    return a


def mat_mul_flops(m: int, n: int, p: int) -> tuple[int, int]:
    """(additions, multiplications) charged for an (m x p)(p x n) product."""
    return 2 * m * n * (p - 1), 6 * m * n * p


def mat_vec_flops(m: int, p: int) -> tuple[int, int]:
    """(additions, multiplications) charged for an (m x p) matrix-vector product."""
    return 2 * m * (p - 1), 6 * m * p


def gauss_invert_flops(n: int) -> int:
    """Lump charge ceil(2*n^3/3) for inverting an n x n matrix."""
    return (2 * n**3 + 2) // 3


def hermitian_transpose(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose.  Free: pure data movement."""
    return _as_matrix(a, "a").conj().T


def mat_mul(a: np.ndarray, b: np.ndarray, counter: FlopCounter | None = None) -> np.ndarray:
    """Complex matrix product charging 6*m*n*p mults and 2*m*n*(p-1) adds."""
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatchError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}"
        )
    if counter is not None:
        m, p = a.shape
        n = b.shape[1]
        adds, mults = mat_mul_flops(m, n, p)
        counter.charge(additions=adds, multiplications=mults)
    return a @ b


def mat_vec(a: np.ndarray, x: np.ndarray, counter: FlopCounter | None = None) -> np.ndarray:
    """Complex matrix-vector product charging 6*m*p mults and 2*m*(p-1) adds."""
    a = _as_matrix(a, "a")
    x = _as_vector(x, "x")
    if a.shape[1] != x.shape[0]:
        raise DimensionMismatchError(
            f"cannot apply {a.shape[0]}x{a.shape[1]} matrix to length-{x.shape[0]} vector"
        )
    if counter is not None:
        adds, mults = mat_vec_flops(a.shape[0], a.shape[1])
        counter.charge(additions=adds, multiplications=mults)
    return a @ x


def gauss_invert(
    a: np.ndarray, counter: FlopCounter | None = None, pivot_tol: float = 1e-12
) -> np.ndarray:
    """Explicit inverse by Gauss-Jordan elimination with partial pivoting.

    Charges the lump cost ceil(2/3 * n^3).  Raises
    :class:`SingularMatrixError` naming the pivot column when the best
    available pivot magnitude falls below ``pivot_tol``.
    """
    a = _as_matrix(a, "a")
    n, m = a.shape
    if n != m:
        raise DimensionMismatchError(f"cannot invert non-square {n}x{m} matrix")
    aug = np.hstack([a.astype(np.complex128, copy=True), np.eye(n, dtype=np.complex128)])
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(aug[col:, col])))
        pivot_mag = float(np.abs(aug[pivot_row, col]))
        if pivot_mag < pivot_tol:
            raise SingularMatrixError(col, pivot_mag)
        if pivot_row != col:
            aug[[col, pivot_row]] = aug[[pivot_row, col]]
        aug[col] = aug[col] / aug[col, col]
        factors = aug[:, col].copy()
        factors[col] = 0.0
        aug -= np.outer(factors, aug[col])
    if counter is not None:
        counter.charge(multiplications=gauss_invert_flops(n))
    return np.ascontiguousarray(aug[:, n:])


def real_part_scaled(
    a: np.ndarray, factor: float, counter: FlopCounter | None = None
) -> np.ndarray:
    """``factor * Re(a)`` as a real array; extraction is free, scaling charges one
    multiplication per entry."""
    a = np.asarray(a)
    if counter is not None:
        counter.charge(multiplications=a.size)
    return factor * a.real.astype(np.float64, copy=False)
