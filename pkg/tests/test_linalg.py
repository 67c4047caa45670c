import numpy as np
import pytest

from spectral_barrier import (
    DimensionMismatch,
    NotPositiveDefinite,
    big_Q,
    min_eigenvalue,
    rank_one_update,
    shifted_factorize,
    shifted_inverse_trace,
    small_q,
)
from spectral_barrier.linalg import PD_TOL


def random_pd(rng, p, lo=0.5, hi=3.0):
    """PD matrix with eigenvalues in [lo, hi] and a Haar-random basis."""
    spec = rng.uniform(lo, hi, size=p)
    Q, R = np.linalg.qr(rng.standard_normal((p, p)))
    A = (Q * spec) @ Q.T
    return (A + A.T) / 2.0, np.sort(spec)


def test_factorize_identity_shift_zero():
    f = shifted_factorize(np.eye(2), 0.0)
    assert f.dim == 2


def test_factorize_identity_shift_one_fails():
    with pytest.raises(NotPositiveDefinite):
        shifted_factorize(np.eye(2), 1.0)


def test_factorize_diag_solve():
    f = shifted_factorize(np.diag([2.0, 3.0]), 1.0)
    x = f.solve(np.array([1.0, 0.0]))
    assert np.allclose(x, [1.0, 0.0], atol=1e-14)


def test_big_Q_examples():
    assert big_Q(shifted_factorize(np.eye(2), 0.0), [1.0, 0.0]) == pytest.approx(1.0)
    v = np.array([1.0, 1.0]) / np.sqrt(2.0)
    assert big_Q(shifted_factorize(np.diag([2.0, 3.0]), 1.0), v) == pytest.approx(0.75)
    assert big_Q(shifted_factorize(np.zeros((1, 1)), -1.0), [1.0]) == pytest.approx(1.0)
    assert big_Q(shifted_factorize(np.eye(2), 0.0), [0.0, 0.0]) == 0.0


def test_small_q_examples():
    assert small_q(shifted_factorize(np.eye(2), 0.0), [1.0, 0.0]) == pytest.approx(0.5)
    assert small_q(
        shifted_factorize(np.diag([2.0, 3.0]), 1.0), [1.0, 0.0]
    ) == pytest.approx(0.8)
    assert small_q(shifted_factorize(np.zeros((1, 1)), -1.0), [1.0]) == pytest.approx(1.0)


def test_shifted_inverse_trace_examples():
    assert shifted_inverse_trace(shifted_factorize(np.eye(2), 0.0)) == pytest.approx(2.0)
    assert shifted_inverse_trace(shifted_factorize(np.zeros((3, 3)), -3.0)) == pytest.approx(1.0)
    assert shifted_inverse_trace(shifted_factorize(np.diag([2.0, 3.0]), 1.0)) == pytest.approx(1.5)


def test_rank_one_update_examples():
    assert np.array_equal(rank_one_update(np.zeros((2, 2)), [1.0, 0.0]),
                          np.diag([1.0, 0.0]))
    assert np.array_equal(rank_one_update(np.eye(2), [1.0, 1.0]),
                          np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.array_equal(rank_one_update(np.diag([1.0, 0.0]), [0.0, 0.0]),
                          np.diag([1.0, 0.0]))


def test_min_eigenvalue_examples():
    assert min_eigenvalue(np.eye(5)) == pytest.approx(1.0)
    assert min_eigenvalue(np.diag([2.0, 3.0])) == pytest.approx(2.0)
    # characteristic polynomial roots of [[2,1],[1,2]] are 1 and 3
    assert min_eigenvalue([[2.0, 1.0], [1.0, 2.0]]) == pytest.approx(1.0)


def test_functionals_nonnegative():
    rng = np.random.default_rng(101)
    for _ in range(50):
        p = int(rng.integers(1, 21))
        A, spec = random_pd(rng, p)
        f = shifted_factorize(A, spec[0] - rng.uniform(0.1, 2.0))
        v = rng.standard_normal(p) * rng.uniform(0.0, 5.0)
        assert big_Q(f, v) >= 0.0
        assert small_q(f, v) >= 0.0


def test_small_q_normalization():
    # sum over the standard basis of q(l, e_i) is exactly tr M^{-2} / tr M^{-2}
    rng = np.random.default_rng(102)
    for _ in range(25):
        p = int(rng.integers(1, 16))
        A, spec = random_pd(rng, p)
        f = shifted_factorize(A, spec[0] - rng.uniform(0.1, 2.0))
        total = sum(small_q(f, np.eye(p)[i]) for i in range(p))
        assert abs(total - 1.0) < 1e-10


def test_agreement_with_dense_inverse():
    # independent oracle: LU-based explicit inverse
    rng = np.random.default_rng(103)
    for _ in range(20):
        p = int(rng.integers(2, 51))
        A, spec = random_pd(rng, p, lo=0.5, hi=4.0)
        l = spec[0] - rng.uniform(0.2, 1.0)
        f = shifted_factorize(A, l)
        G = np.linalg.inv(A - l * np.eye(p))
        v = rng.standard_normal(p)
        assert big_Q(f, v) == pytest.approx(v @ G @ v, rel=1e-8)
        assert small_q(f, v) == pytest.approx(
            (v @ G @ G @ v) / np.sum(G * G), rel=1e-8
        )
        assert shifted_inverse_trace(f) == pytest.approx(np.trace(G), rel=1e-8)


def test_factorize_succeeds_iff_shift_below_spectrum():
    rng = np.random.default_rng(104)
    for _ in range(30):
        p = int(rng.integers(1, 21))
        A, spec = random_pd(rng, p)
        lam = min_eigenvalue(A)
        # comfortably below: must succeed
        shifted_factorize(A, lam - 1e-6)
        # at or above the spectrum: must fail
        with pytest.raises(NotPositiveDefinite):
            shifted_factorize(A, lam + 1e-6)
        # indistinguishable gap (far below the pivot tolerance): must fail
        with pytest.raises(NotPositiveDefinite):
            shifted_factorize(A, lam - PD_TOL * 1e-4)


def test_rank_one_update_never_decreases_min_eigenvalue():
    rng = np.random.default_rng(105)
    for _ in range(50):
        p = int(rng.integers(1, 21))
        A, _ = random_pd(rng, p)
        v = rng.standard_normal(p) * rng.uniform(0.0, 3.0)
        assert min_eigenvalue(rank_one_update(A, v)) >= min_eigenvalue(A) - 1e-10


def test_dimension_errors():
    f = shifted_factorize(np.eye(3), 0.0)
    with pytest.raises(DimensionMismatch):
        big_Q(f, [1.0, 0.0])
    with pytest.raises(DimensionMismatch):
        small_q(f, np.ones(4))
    with pytest.raises(DimensionMismatch):
        rank_one_update(np.eye(3), np.ones(2))
    with pytest.raises(DimensionMismatch):
        shifted_factorize(np.ones((2, 3)), 0.0)
