"""Streaming barrier certificates for the smallest eigenvalue of a Gram
matrix.

A tracker starts at A = 0 with shift l_0 = -p/phi, which makes the barrier
potential tr(A - l I)^{-1} equal to phi exactly. Each incoming vector v is
absorbed as a rank-one update A += v v' while the shift rises by

    delta = q / (1 + 3*phi*q + Q),

with Q = v'(A - l I)^{-1} v and q = v'(A - l I)^{-2} v / tr(A - l I)^{-2}
evaluated at the pre-update state. This keeps A - l I positive definite and
the potential at or below phi after every step, so the final shift l_n is a
certified lower bound on the smallest eigenvalue of the accumulated Gram
matrix A_n.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels, linalg
from .errors import DimensionMismatch, InvalidParameter, InvariantViolation

#: Absolute float-drift slack on the potential cap invariant.
CAP_SLACK = kernels.CAP_SLACK


@dataclass
class BarrierState:
    """Tracker state after k absorbed vectors.

    Invariants: A - l*I is positive definite, tr(A - l*I)^{-1} <= phi (up to
    CAP_SLACK), l is nondecreasing in k and every delta lies in
    [0, 1/(3*phi)).
    """

    p: int
    phi: float
    A: np.ndarray
    l: float
    k: int
    deltas: list[float] = field(default_factory=list)


@dataclass
class CertifiedBound:
    """Result of a completed stream: lambda_min(A_n) >= l_n."""

    p: int
    n: int
    phi: float
    l_n: float
    l_n_over_n: float
    deltas: np.ndarray
    state: BarrierState


def barrier_new(p: int, phi: float) -> BarrierState:
    """Fresh tracker: A = 0, l = -p/phi, potential exactly phi."""
    if not isinstance(p, (int, np.integer)) or p < 1:
        raise InvalidParameter(f"dimension p must be a positive integer, got {p!r}")
    phi = float(phi)
    if not np.isfinite(phi) or phi <= 0.0:
        raise InvalidParameter(f"potential cap phi must be positive, got {phi!r}")
    return BarrierState(p=int(p), phi=phi, A=np.zeros((p, p)), l=-p / phi, k=0)


def verify_state(s: BarrierState) -> None:
    """Re-check the state invariants with the reference linear algebra.

    Raises InvariantViolation on any failure. O(p^3); intended for debug
    runs, the kernels enforce the same conditions cheaply every step.
    """
    if s.A.shape != (s.p, s.p):
        raise InvariantViolation(f"A has shape {s.A.shape}, expected ({s.p}, {s.p})")
    if linalg.min_eigenvalue(s.A) <= s.l:
        raise InvariantViolation("A - l*I is not positive definite")
    f = linalg.shifted_factorize(s.A, s.l)
    tr = linalg.shifted_inverse_trace(f)
    if tr > s.phi + CAP_SLACK:
        raise InvariantViolation(
            f"potential {tr!r} exceeds phi={s.phi!r} beyond the allowed drift"
        )
    one_third = 1.0 / (3.0 * s.phi)
    for d in s.deltas:
        if not (0.0 <= d < one_third + 1e-15):
            raise InvariantViolation(f"recorded delta {d!r} outside [0, 1/(3 phi))")


def barrier_step(s: BarrierState, v, verify: bool = False):
    """Absorb one vector; returns (new_state, delta). The input state is not
    modified."""
    v = linalg.as_vector(v, s.p)
    if verify:
        verify_state(s)
    A = np.ascontiguousarray(s.A, dtype=np.float64).copy()
    X = np.ascontiguousarray(v[None, :])
    l_new, deltas = kernels.run_stream(A, s.l, s.phi, X)
    delta = float(deltas[0])
    new = BarrierState(p=s.p, phi=s.phi, A=A, l=l_new, k=s.k + 1,
                       deltas=s.deltas + [delta])
    return new, delta


def certify_stream(p: int, phi: float, vectors, n: int | None = None,
                   verify: bool = False) -> CertifiedBound:
    """Run the tracker over a whole stream and certify
    lambda_min(A_n) >= l_n.

    vectors: a (p, n) array whose columns are the stream, or any sequence of
    length-p vectors. n, when given, must match the stream length.
    With verify=True every step is recomputed with the reference
    linear algebra and cross-checked (slow; for debugging drift).
    """
    s0 = barrier_new(p, phi)
    X = kernels.prepare_vectors(vectors, s0.p)
    if n is None:
        n = X.shape[0]
    if n != X.shape[0]:
        raise InvalidParameter(f"n={n} but the stream holds {X.shape[0]} vectors")
    if n < 1:
        raise InvalidParameter("a stream must contain at least one vector")
    A = s0.A
    l_n, deltas = kernels.run_stream(A, s0.l, s0.phi, X)
    if verify:
        _reference_check(s0.p, s0.phi, -s0.p / s0.phi, X, l_n, deltas)
    state = BarrierState(p=s0.p, phi=s0.phi, A=A, l=l_n, k=int(n),
                         deltas=[float(d) for d in deltas])
    return CertifiedBound(p=s0.p, n=int(n), phi=s0.phi, l_n=float(l_n),
                          l_n_over_n=float(l_n) / n, deltas=deltas, state=state)


def _reference_check(p: int, phi: float, l0: float, X: np.ndarray,
                     l_n: float, deltas: np.ndarray) -> None:
    """Replay the stream with the reference ops and compare every delta."""
    A = np.zeros((p, p))
    l = l0
    for k, v in enumerate(X):
        f = linalg.shifted_factorize(A, l)
        if linalg.shifted_inverse_trace(f) > phi + CAP_SLACK:
            raise InvariantViolation(f"reference replay: cap exceeded at step {k}")
        Q = linalg.big_Q(f, v)
        q = linalg.small_q(f, v)
        d = q / (1.0 + 3.0 * phi * q + Q)
        if abs(d - deltas[k]) > 1e-9 * max(1.0, abs(d)):
            raise InvariantViolation(
                f"kernel delta {deltas[k]!r} disagrees with reference {d!r} "
                f"at step {k}"
            )
        A = A + np.outer(v, v)
        l += d
    if abs(l - l_n) > 1e-9 * max(1.0, abs(l)):
        raise InvariantViolation(
            f"kernel bound {l_n!r} disagrees with reference {l!r}"
        )


def choose_phi(mode: str, **params) -> float:
    """Potential cap prescribed by the proof branch backing each bound.

    mode 'theorem1'     requires a > 0, returns 1/(5a).
    mode 'theorem2_l2'  requires L2 >= 1 and y in (0,1), returns
                        sqrt(y) / (2 sqrt(L2)).
    mode 'theorem2_kp'  returns 1/4.
    """
    key = mode.strip().lower().replace("-", "_")
    if key == "theorem1":
        a = _positive_param(params, "a")
        return 1.0 / (5.0 * a)
    if key == "theorem2_l2":
        L2 = _positive_param(params, "L2")
        y = _positive_param(params, "y")
        if L2 < 1.0:
            raise InvalidParameter(f"L2 must be >= 1 (isotropy), got {L2!r}")
        if not y < 1.0:
            raise InvalidParameter(f"y must lie in (0,1), got {y!r}")
        return np.sqrt(y) / (2.0 * np.sqrt(L2))
    if key == "theorem2_kp":
        return 0.25
    raise InvalidParameter(f"unknown phi mode {mode!r}")


def _positive_param(params: dict, name: str) -> float:
    if name not in params:
        raise InvalidParameter(f"phi mode requires parameter {name!r}")
    x = float(params[name])
    if not np.isfinite(x) or x <= 0.0:
        raise InvalidParameter(f"parameter {name!r} must be positive, got {x!r}")
    return x
