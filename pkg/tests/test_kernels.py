"""Backend equivalence: the compiled kernel, the numpy kernel, and the
reference linear algebra must tell the same story."""

import numpy as np
import pytest

from spectral_barrier import InvariantViolation, big_Q, shifted_factorize, small_q
from spectral_barrier import kernels
from spectral_barrier.kernels import available_backends, prepare_vectors, run_stream

HAVE_CYTHON = "cython" in available_backends()

needs_cython = pytest.mark.skipif(not HAVE_CYTHON,
                                  reason="compiled kernel not built")


def _stream(p, n, seed):
    rng = np.random.default_rng(seed)
    return np.ascontiguousarray(rng.standard_normal((n, p)))


@needs_cython
@pytest.mark.parametrize("p,n,phi", [(1, 40, 1.0), (5, 120, 0.1), (23, 60, 0.7)])
def test_backends_agree(p, n, phi):
    X = _stream(p, n, seed=p * 1000 + n)
    A1 = np.zeros((p, p))
    A2 = np.zeros((p, p))
    l1, d1 = run_stream(A1, -p / phi, phi, X, backend="python")
    l2, d2 = run_stream(A2, -p / phi, phi, X, backend="cython")
    assert l1 == pytest.approx(l2, rel=1e-10, abs=1e-12)
    assert np.allclose(d1, d2, rtol=1e-9, atol=1e-13)
    assert np.allclose(A1, A2, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("backend", sorted(available_backends()))
def test_kernel_matches_reference_ops(backend):
    # dual route: one kernel step against shifted_factorize + Q + q
    rng = np.random.default_rng(42)
    for _ in range(20):
        p = int(rng.integers(1, 12))
        B = rng.standard_normal((p, p))
        A0 = B @ B.T + 0.5 * np.eye(p)
        A0 = (A0 + A0.T) / 2.0
        lam = float(np.linalg.eigvalsh(A0)[0])
        l = lam - rng.uniform(0.3, 2.0)
        f = shifted_factorize(A0, l)
        trace = float(np.trace(f.inverse))
        phi = trace * (1.0 + rng.uniform(0.0, 1.0))
        v = rng.standard_normal(p)
        Q = big_Q(f, v)
        q = small_q(f, v)
        want = q / (1.0 + 3.0 * phi * q + Q)
        A = np.ascontiguousarray(A0.copy())
        l_new, deltas = run_stream(A, l, phi, np.ascontiguousarray(v[None, :]),
                                   backend=backend)
        assert deltas[0] == pytest.approx(want, rel=1e-9)
        assert l_new == pytest.approx(l + want, rel=1e-12)
        assert np.allclose(A, A0 + np.outer(v, v), atol=1e-12)


@pytest.mark.parametrize("backend", sorted(available_backends()))
def test_kernel_rejects_indefinite_entry(backend):
    A = np.zeros((3, 3))
    with pytest.raises(InvariantViolation, match="positive definiteness"):
        run_stream(A, 1.0, 1.0, np.ones((1, 3)), backend=backend)


@pytest.mark.parametrize("backend", sorted(available_backends()))
def test_kernel_rejects_cap_drift(backend):
    # entry potential is 2/1 = 2 > phi + slack
    A = np.zeros((2, 2))
    with pytest.raises(InvariantViolation, match="potential"):
        run_stream(A, -1.0, 1.0, np.ones((1, 2)), backend=backend)


def test_kernel_error_reports_step_index():
    # second vector collapses the gap? craft: run with phi smaller than the
    # entry potential only after a manual l bump is impossible mid-stream,
    # so check the index via an indefinite entry at step 0 instead
    with pytest.raises(InvariantViolation, match="step 0"):
        run_stream(np.zeros((2, 2)), 0.5, 1.0, np.ones((1, 2)))


def test_prepare_vectors_shapes():
    cols = np.arange(6.0).reshape(2, 3)  # p=2, n=3 columns
    rows = prepare_vectors(cols, 2)
    assert rows.shape == (3, 2)
    assert np.array_equal(rows[0], cols[:, 0])
    seq = prepare_vectors([np.ones(2), np.zeros(2)], 2)
    assert seq.shape == (2, 2)
    with pytest.raises(Exception):
        prepare_vectors(np.ones((3, 4)), 2)


def test_backend_name_is_known():
    assert kernels.backend_name() in available_backends()
