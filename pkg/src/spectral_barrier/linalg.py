"""Dense symmetric linear algebra: shifted solves, the Q and q functionals,
rank-one updates, and the exact smallest-eigenvalue reference.

Everything here is reference-grade and pure: factorizations are recomputed
per call, traces of the squared shifted inverse come from the explicit
inverse (O(p^3)), and nothing is cached across calls except inside a
ShiftedFactorization instance. This module is the independent oracle that
the fast barrier kernels are tested against.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    InvalidParameter,
    NotPositiveDefinite,
)

#: Relative positive-definiteness cutoff: a Cholesky pivot below
#: PD_TOL * max(1, largest diagonal magnitude) counts as "not PD".
PD_TOL = 1e-10


def as_sym_matrix(A, name: str = "A") -> np.ndarray:
    """Validate and canonicalize a dense symmetric matrix.

    Accepts anything array-like; enforces squareness and symmetry up to
    1e-8 relative, and returns an exactly symmetric float64 copy
    (M + M.T) / 2.
    """
    M = np.asarray(A, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {M.shape}")
    if M.shape[0] < 1:
        raise InvalidParameter(f"{name} must have dimension >= 1")
    if not np.all(np.isfinite(M)):
        raise InvalidParameter(f"{name} contains non-finite entries")
    scale = max(1.0, float(np.abs(M).max()))
    if float(np.abs(M - M.T).max()) > 1e-8 * scale:
        raise InvalidParameter(f"{name} is not symmetric")
    return (M + M.T) / 2.0


def as_vector(v, dim: int | None = None, name: str = "v") -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatch(f"{name} has dimension {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise InvalidParameter(f"{name} contains non-finite entries")
    return v


class ShiftedFactorization:
    """Cholesky factorization of M = A - l*I with A symmetric and M PD.

    Construction fails with NotPositiveDefinite unless every Cholesky pivot
    clears PD_TOL * max(1, max |M_ii|). The explicit inverse of M (needed
    for trace computations) is formed lazily and cached.
    """

    def __init__(self, A, shift: float):
        A = as_sym_matrix(A)
        l = float(shift)
        p = A.shape[0]
        M = A - l * np.eye(p)
        scale = max(1.0, float(np.abs(np.diag(M)).max()))
        try:
            chol, lower = scipy.linalg.cho_factor(M, lower=True, check_finite=False)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise NotPositiveDefinite(
                f"A - {l!r}*I is not positive definite"
            ) from exc
        pivots = np.diag(chol) ** 2
        if float(pivots.min()) < PD_TOL * scale:
            raise NotPositiveDefinite(
                f"A - {l!r}*I has a Cholesky pivot below tolerance"
            )
        self.matrix = A
        self.shift = l
        self.dim = p
        self._chol = (chol, lower)
        self._inverse: np.ndarray | None = None

    @property
    def inverse(self) -> np.ndarray:
        """Explicit (A - l*I)^{-1}, cached after the first request."""
        if self._inverse is None:
            self._inverse = scipy.linalg.cho_solve(
                self._chol, np.eye(self.dim), check_finite=False
            )
        return self._inverse

    def solve(self, v: np.ndarray) -> np.ndarray:
        """(A - l*I)^{-1} v via triangular solves."""
        return scipy.linalg.cho_solve(self._chol, v, check_finite=False)


def shifted_factorize(A, l: float) -> ShiftedFactorization:
    """Factor A - l*I, failing with NotPositiveDefinite iff l is not safely
    below the smallest eigenvalue of A."""
    return ShiftedFactorization(A, l)


def big_Q(f: ShiftedFactorization, v) -> float:
    """Q(l, v) = v' (A - l I)^{-1} v >= 0."""
    v = as_vector(v, f.dim)
    return float(v @ f.solve(v))


def small_q(f: ShiftedFactorization, v) -> float:
    """q(l, v) = v' (A - l I)^{-2} v / tr (A - l I)^{-2} >= 0."""
    v = as_vector(v, f.dim)
    w = f.solve(v)
    G = f.inverse
    tr2 = float(np.sum(G * G))
    return float(w @ w) / tr2


def shifted_inverse_trace(f: ShiftedFactorization) -> float:
    """tr (A - l I)^{-1} > 0."""
    return float(np.trace(f.inverse))


def shifted_inverse_trace2(f: ShiftedFactorization) -> float:
    """tr (A - l I)^{-2}, computed as the squared Frobenius norm of the
    explicit inverse."""
    G = f.inverse
    return float(np.sum(G * G))


def rank_one_update(A, v) -> np.ndarray:
    """A + v v', exactly symmetric. Does not modify A."""
    A = as_sym_matrix(A)
    v = as_vector(v, A.shape[0])
    return A + np.outer(v, v)


def min_eigenvalue(A) -> float:
    """Smallest eigenvalue of a dense symmetric matrix (reference oracle)."""
    A = as_sym_matrix(A)
    try:
        vals = np.linalg.eigvalsh(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return float(vals[0])
