import numpy as np
import pytest

from spectral_barrier import (
    DimensionMismatch,
    InvalidParameter,
    barrier_new,
    barrier_step,
    certify_stream,
    choose_phi,
    min_eigenvalue,
    sample,
    shifted_factorize,
    shifted_inverse_trace,
)
from spectral_barrier.barrier import CAP_SLACK, verify_state
from spectral_barrier.ensembles import EnsembleSpec


def test_barrier_new_examples():
    assert barrier_new(1, 1.0).l == -1.0
    assert barrier_new(10, 0.25).l == -40.0
    s = barrier_new(2, 2.0)
    assert s.l == -1.0
    assert np.array_equal(s.A, np.zeros((2, 2)))
    assert s.k == 0


def test_barrier_new_rejects_bad_parameters():
    with pytest.raises(InvalidParameter):
        barrier_new(0, 1.0)
    with pytest.raises(InvalidParameter):
        barrier_new(3, 0.0)
    with pytest.raises(InvalidParameter):
        barrier_new(3, -2.0)


def test_initial_potential_equals_phi():
    for p, phi in [(1, 1.0), (7, 0.3), (40, 2.5)]:
        s = barrier_new(p, phi)
        tr = shifted_inverse_trace(shifted_factorize(s.A, s.l))
        assert tr == pytest.approx(phi, rel=1e-12)


def test_step_example_p1():
    s, d = barrier_step(barrier_new(1, 1.0), [1.0])
    assert d == pytest.approx(0.2, abs=1e-15)
    assert s.l == pytest.approx(-0.8, abs=1e-15)
    assert s.k == 1 and s.deltas == [d]


def test_step_zero_vector_is_identity():
    s0 = barrier_new(3, 0.5)
    s1, d = barrier_step(s0, np.zeros(3))
    assert d == 0.0
    assert s1.l == s0.l
    assert np.array_equal(s1.A, s0.A)


def test_step_example_p2():
    s, d = barrier_step(barrier_new(2, 2.0), [1.0, 0.0])
    assert d == pytest.approx(0.1, abs=1e-15)
    assert s.l == pytest.approx(-0.9, abs=1e-15)


def test_step_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        barrier_step(barrier_new(3, 1.0), [1.0, 2.0])


def test_certify_stream_single_vector():
    cert = certify_stream(1, 1.0, [np.array([1.0])])
    assert cert.l_n == pytest.approx(-0.8)
    assert cert.l_n <= min_eigenvalue(cert.state.A)


def test_certify_stream_zero_vectors():
    cert = certify_stream(2, 1.0, np.zeros((2, 2)))
    assert cert.l_n == -2.0
    assert cert.l_n_over_n == -1.0


def test_certify_stream_gaussian_seed42_sound():
    rng = np.random.default_rng(42)
    X = rng.standard_normal((5, 100))
    cert = certify_stream(5, 0.1, X, n=100, verify=True)
    lam = min_eigenvalue(cert.state.A)
    assert cert.l_n <= lam + 1e-9
    assert cert.l_n_over_n == cert.l_n / 100


def test_certify_stream_input_validation():
    with pytest.raises(InvalidParameter):
        certify_stream(2, 1.0, np.zeros((2, 3)), n=5)
    with pytest.raises(InvalidParameter):
        certify_stream(2, 1.0, [])
    with pytest.raises(DimensionMismatch):
        certify_stream(2, 1.0, np.zeros((3, 4)))


def test_deltas_below_cap_and_shift_monotone():
    rng = np.random.default_rng(7)
    for phi in (0.05, 0.4, 2.0):
        X = rng.standard_normal((4, 80))
        cert = certify_stream(4, phi, X)
        d = cert.deltas
        assert np.all(d >= 0.0)
        assert np.all(d < 1.0 / (3.0 * phi))
        l_path = -4.0 / phi + np.cumsum(d)
        assert np.all(np.diff(l_path) >= 0.0)


def test_state_invariants_after_stream():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((6, 50))
    cert = certify_stream(6, 0.3, X)
    verify_state(cert.state)  # PD, cap, delta range
    tr = shifted_inverse_trace(shifted_factorize(cert.state.A, cert.state.l))
    assert tr <= 0.3 + CAP_SLACK


def test_determinism_bit_identical():
    rng = np.random.default_rng(9)
    X = rng.standard_normal((5, 60))
    c1 = certify_stream(5, 0.2, X)
    c2 = certify_stream(5, 0.2, X.copy())
    assert c1.l_n == c2.l_n
    assert np.array_equal(c1.deltas, c2.deltas)
    # step-by-step replay gives the same trajectory as the stream kernel
    s = barrier_new(5, 0.2)
    for k in range(60):
        s, _ = barrier_step(s, X[:, k])
    assert s.l == c1.l_n


def test_step_lemma_random_instances():
    # post-step PD and post-update potential cap on random admissible states
    rng = np.random.default_rng(13)
    for _ in range(300):
        p = int(rng.integers(1, 16))
        spec = np.exp(rng.uniform(np.log(0.05), np.log(20.0), size=p))
        Q, _ = np.linalg.qr(rng.standard_normal((p, p)))
        A = (Q * spec) @ Q.T
        A = (A + A.T) / 2.0
        lam = float(np.linalg.eigvalsh(A)[0])
        l = lam - 10.0 ** rng.uniform(-3.0, 0.5)
        trace = float(np.sum(1.0 / (np.linalg.eigvalsh(A) - l)))
        phi = trace if rng.random() < 0.25 else trace * (1.0 + rng.uniform(0.0, 2.0))
        v = rng.standard_normal(p) * 10.0 ** rng.uniform(-2.0, 1.0)

        f = shifted_factorize(A, l)
        from spectral_barrier import big_Q, small_q

        q = small_q(f, v)
        delta = q / (1.0 + 3.0 * phi * q + big_Q(f, v))
        assert 0.0 <= delta < 1.0 / (3.0 * phi)
        assert lam - (l + delta) > -1e-10 * max(1.0, abs(lam))
        eigs = np.linalg.eigvalsh(A + np.outer(v, v)) - (l + delta)
        assert eigs.min() > 0.0
        assert float(np.sum(1.0 / eigs)) <= phi + 1e-8


def test_soundness_small_mixed_ensembles():
    specs = [
        EnsembleSpec("gaussian", p=6, seed=1),
        EnsembleSpec("rademacher", p=6, seed=2),
        EnsembleSpec("student_t", p=6, seed=3, nu=5.0),
        EnsembleSpec("sparse", p=6, seed=4),
        EnsembleSpec("kashin", p=6, seed=5, N=16, delta=0.5),
    ]
    for i, spec in enumerate(specs):
        X = sample(spec, 60)
        cert = certify_stream(6, (0.1, 0.5, 1.0)[i % 3], X)
        assert cert.l_n <= min_eigenvalue(cert.state.A) + 1e-9


def test_choose_phi_prescriptions():
    assert choose_phi("theorem2_l2", L2=3.0, y=0.09) == pytest.approx(
        0.3 / (2.0 * np.sqrt(3.0))
    )
    assert choose_phi("theorem2_kp") == 0.25
    assert choose_phi("theorem1", a=2.0) == pytest.approx(0.1)
    assert choose_phi("theorem2-l2", L2=1.0, y=0.25) == pytest.approx(0.25)


def test_choose_phi_rejects_bad_input():
    with pytest.raises(InvalidParameter):
        choose_phi("theorem1")
    with pytest.raises(InvalidParameter):
        choose_phi("theorem1", a=-1.0)
    with pytest.raises(InvalidParameter):
        choose_phi("theorem2_l2", L2=0.5, y=0.1)
    with pytest.raises(InvalidParameter):
        choose_phi("theorem2_l2", L2=3.0, y=1.5)
    with pytest.raises(InvalidParameter):
        choose_phi("newton")
