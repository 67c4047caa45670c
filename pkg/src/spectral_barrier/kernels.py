"""Barrier kernel backend selection.

The barrier stream is the hot loop of the package (O(p^3) per absorbed
vector, typically run over 10^4..10^7 vectors in a campaign). Two
interchangeable kernels exist:

* ``cython`` - compiled extension (LAPACK dpotrf/dpotri in nogil loops),
* ``python`` - numpy/scipy fallback with identical step semantics.

The compiled kernel is preferred when importable. Set
``SPECTRAL_BARRIER_BACKEND=python|cython|auto`` before import to override;
requesting ``cython`` without the built extension raises ImportError.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernel_py
from .errors import DimensionMismatch, InvariantViolation

#: Absolute slack allowed on the potential cap before a step fails loudly.
CAP_SLACK = 1e-8

_IMPLS = {"python": _kernel_py}
try:
    from . import _kernel_cy

    _IMPLS["cython"] = _kernel_cy
except ImportError:
    _kernel_cy = None

_requested = os.environ.get("SPECTRAL_BARRIER_BACKEND", "auto").strip().lower()
if _requested == "auto":
    _active = "cython" if "cython" in _IMPLS else "python"
elif _requested in _IMPLS:
    _active = _requested
elif _requested == "cython":
    raise ImportError(
        "SPECTRAL_BARRIER_BACKEND=cython but the compiled kernel is not built"
    )
else:
    raise ValueError(f"unknown SPECTRAL_BARRIER_BACKEND {_requested!r}")


def backend_name() -> str:
    """Name of the active kernel backend ('cython' or 'python')."""
    return _active


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_IMPLS))


def run_stream(A, l, phi, X, pd_tol=1e-10, cap_slack=CAP_SLACK, backend=None):
    """Advance the barrier over the rows of X, mutating A in place.

    A: (p, p) C-contiguous float64, the current accumulated matrix.
    X: (n, p) C-contiguous float64, one vector per row.
    Returns (l_final, deltas). Raises InvariantViolation if a step finds the
    shifted matrix indefinite or the potential above phi + cap_slack.
    """
    impl = _IMPLS[backend or _active]
    if A.shape[0] != A.shape[1] or X.ndim != 2 or X.shape[1] != A.shape[0]:
        raise DimensionMismatch(
            f"A has shape {A.shape}, vector rows have shape {X.shape}"
        )
    rc, k, l_out, deltas = impl.run_stream(A, float(l), float(phi), X,
                                           float(pd_tol), float(cap_slack))
    if rc == 1:
        raise InvariantViolation(
            f"shifted matrix A - l*I lost positive definiteness at step {k}"
        )
    if rc == 2:
        raise InvariantViolation(
            f"barrier potential exceeded phi + {cap_slack:g} at step {k}"
        )
    return l_out, deltas


def prepare_vectors(X, p) -> np.ndarray:
    """Normalize stream input to a C-contiguous (n, p) row matrix.

    Accepts a (p, n) array whose columns are the vectors, or a sequence of
    1-D length-p vectors.
    """
    if isinstance(X, np.ndarray) and X.ndim == 2:
        if X.shape[0] != p:
            raise DimensionMismatch(
                f"expected a ({p}, n) matrix of column vectors, got {X.shape}"
            )
        return np.ascontiguousarray(X.T, dtype=np.float64)
    rows = [np.asarray(v, dtype=np.float64) for v in X]
    for v in rows:
        if v.shape != (p,):
            raise DimensionMismatch(
                f"stream vector has shape {v.shape}, expected ({p},)"
            )
    if not rows:
        return np.empty((0, p), dtype=np.float64)
    return np.ascontiguousarray(np.vstack(rows))
