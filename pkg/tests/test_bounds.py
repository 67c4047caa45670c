import math

import numpy as np
import pytest
from scipy import integrate

from spectral_barrier import (
    EnsembleSpec,
    InvalidParameter,
    KpConstants,
    MartingaleSpec,
    PreconditionViolated,
    cor1_bound,
    cor2_min_n,
    cor3_bound,
    lemma1_step_check,
    lemma2_delta_sample,
    lemma2_random_pair,
    lemma2_verify,
    lemma3_tail_check,
    sample,
    simulate_martingale_Z,
    thm1_bound,
    thm2_Kp_bound,
    thm2_L2_bound,
)
from spectral_barrier import moments as mo


def test_thm1_examples():
    r = thm1_bound(c_a=1.0, C_a=0.0, C_2a=0.0, a=1.0, y=0.1, n=100, t=0.0)
    assert r.lower_bound == pytest.approx(0.5)
    assert r.failure_probability == 1.0
    assert not r.vacuous
    assert thm1_bound(1, 0, 0, 1, 0.1, 100, 50.0).failure_probability < 1e-300


def test_thm1_gaussian_design_point():
    # moment inputs from quadrature, cross-checked against closed forms
    c10, C10, C20 = mo.gaussian_c(10.0), mo.gaussian_C(10.0), mo.gaussian_C(20.0)
    assert c10 == pytest.approx(0.99708789, abs=1e-7)
    assert C10 == pytest.approx(2.95995562, abs=1e-7)
    assert C20 == pytest.approx(2.99964566, abs=1e-7)
    r = thm1_bound(c10, C10, C20, a=10.0, y=0.001, n=10_000, t=2.146)
    assert r.lower_bound == pytest.approx(0.613925, abs=1e-5)
    assert r.failure_probability == pytest.approx(0.1, abs=1e-4)


def test_thm2_l2_examples():
    assert thm2_L2_bound(1.0, 0.01, 100, 0.0).lower_bound == pytest.approx(0.6)
    assert thm2_L2_bound(1.0, 1e-12, 100, 0.0).lower_bound == pytest.approx(1.0, abs=1e-5)
    r = thm2_L2_bound(3.0, 0.001, 10_000, 2.146)
    want = 1.0 - 4.0 * math.sqrt(3.0) * math.sqrt(0.001) - math.sqrt(3.0) * 2.146 / 100.0
    assert r.lower_bound == pytest.approx(want)
    assert r.lower_bound == pytest.approx(0.74374, abs=1e-4)


def test_thm2_kp_examples():
    assert thm2_Kp_bound(1.0, 1.0 / 16.0, 100, 0.0).lower_bound == pytest.approx(0.25)
    with pytest.raises(PreconditionViolated):
        thm2_Kp_bound(1.0, 0.1, 100, 0.0)
    r = thm2_Kp_bound(0.5, 0.01, 10 ** 6, 1.0)
    assert r.lower_bound == pytest.approx(0.0625 - math.sqrt(4.0 / 3.0) / 1000.0)
    assert r.lower_bound == pytest.approx(0.06135, abs=1e-5)


def test_cor1_examples():
    r = cor1_bound(2.0, 3.0, 0.001)
    assert r.lower_bound == pytest.approx(
        1.0 - (4.0 + math.sqrt(2.0)) * math.sqrt(3.0) * math.sqrt(0.001)
    )
    assert r.lower_bound == pytest.approx(0.70345, abs=1e-4)
    assert r.failure_probability is None
    assert r.symbolic_failure == "exp(-y*n)"
    assert cor1_bound(2.0, 3.0, 0.001, n=10_000).failure_probability == pytest.approx(
        math.exp(-10.0)
    )
    assert cor1_bound(2.0, 3.0, 1e-10).lower_bound == pytest.approx(1.0, abs=1e-4)
    assert cor1_bound(1.0, 1.0, 1e-6).lower_bound == pytest.approx(0.91)


def test_cor2_examples():
    assert cor2_min_n(None, 3.0, 0.5, 10) == 1920
    assert cor2_min_n(None, 1.0, 1.0, 1) == 16
    assert cor2_min_n(1.0, 1.0, 0.5, 1) == 1280
    assert cor2_min_n(None, 1.0, 0.9, 10) == 198
    with pytest.raises(InvalidParameter):
        cor2_min_n(2.0, 1.0, 0.5, 1)  # alpha branch needs alpha < 2
    with pytest.raises(InvalidParameter):
        cor2_min_n(None, 1.0, 1.5, 1)


def test_kp_constants_relations_exact():
    k = KpConstants()
    assert k.c0_star == k.c0 / 2.0
    assert k.c1_star == k.c0 ** 2 / (8.0 * k.c1 ** 2)
    assert k.c2_star == k.c2
    assert (k.c0_star, k.c2_star) == (0.125, 1.0 / 16.0)
    assert k.c1_star == pytest.approx(3.0 / 512.0, rel=1e-12)
    custom = KpConstants(c0=0.5, c1=2.0, c2=0.1)
    assert custom.c1_star == 0.25 / 32.0


def test_cor3_examples():
    r = cor3_bound(1.0, 16, 1)
    assert r.lower_bound == pytest.approx(0.125)
    assert r.failure_probability == pytest.approx(math.exp(-3.0 * 16.0 / 512.0))
    assert r.failure_probability == pytest.approx(0.9105, abs=1e-4)
    with pytest.raises(PreconditionViolated):
        cor3_bound(1.0, 16, 2)


def test_bounds_monotone_in_y_and_t():
    ys = [0.001, 0.01, 0.05, 0.2]
    ts = [0.0, 0.5, 1.0, 3.0]
    thm1_y = [thm1_bound(0.9, 1.0, 1.2, 2.0, y, 100, 1.0).lower_bound for y in ys]
    assert all(a > b for a, b in zip(thm1_y, thm1_y[1:]))
    thm1_t = [thm1_bound(0.9, 1.0, 1.2, 2.0, 0.01, 100, t).lower_bound for t in ts]
    assert all(a > b for a, b in zip(thm1_t, thm1_t[1:]))
    l2_y = [thm2_L2_bound(3.0, y, 100, 1.0).lower_bound for y in ys]
    assert all(a > b for a, b in zip(l2_y, l2_y[1:]))
    c1_y = [cor1_bound(2.0, 3.0, y).lower_bound for y in ys]
    assert all(a > b for a, b in zip(c1_y, c1_y[1:]))
    ns_p = [cor2_min_n(None, 3.0, 0.5, p) for p in (1, 5, 20)]
    assert ns_p == sorted(ns_p)
    ns_eps = [cor2_min_n(None, 3.0, eps, 10) for eps in (0.9, 0.5, 0.1)]
    assert ns_eps == sorted(ns_eps)


def test_failure_probability_range():
    for t in (0.0, 0.3, 1.0, 2.5, 6.0):
        fp = thm2_L2_bound(2.0, 0.01, 50, t).failure_probability
        assert 0.0 < fp <= 1.0
        assert (fp == 1.0) == (t == 0.0)


def test_vacuous_flagging():
    r = thm2_L2_bound(3.0, 0.25, 100, 0.0)  # 1 - 4 sqrt(0.75) < 0
    assert r.vacuous and r.lower_bound < 0.0
    assert not thm2_L2_bound(1.0, 0.001, 100, 0.0).vacuous


def test_lemma2_delta_sample_examples():
    assert lemma2_delta_sample([1.0], [[1.0]], [[1.0]], 3.0) == pytest.approx(9.0 / 13.0)
    assert lemma2_delta_sample([0.0, 0.0], np.eye(2) / 2.0, np.eye(2) / 2.0, 1.0) == 0.0
    d = lemma2_delta_sample([2.0], [[1.0]], [[1.0]], 1e12)
    assert d == pytest.approx(4.0, rel=1e-9)  # b -> inf recovers x'Ax
    with pytest.raises(InvalidParameter):
        lemma2_delta_sample([1.0], [[2.0]], [[1.0]], 1.0)  # tr A != 1
    with pytest.raises(InvalidParameter):
        lemma2_delta_sample([1.0], [[1.0]], [[1.5]], 1.0)  # tr B > 1


def test_lemma2_random_pair_admissible():
    rng = np.random.default_rng(21)
    for p in (1, 4, 9):
        A, B, V, sa, sb = lemma2_random_pair(p, rng)
        assert np.trace(A) == pytest.approx(1.0, abs=1e-12)
        assert np.trace(B) <= 1.0 + 1e-12
        assert np.linalg.eigvalsh(A)[0] > 0.0
        assert np.linalg.eigvalsh(B)[0] > 0.0
        # shared eigenbasis: A and B commute
        assert np.abs(A @ B - B @ A).max() < 1e-12


@pytest.mark.parametrize("text,ab", [
    ("gaussian:p=4", (0.2, 4.0 / 3.0)),
    ("gaussian:p=4", (5.0, 50.0)),
    ("student_t:p=4,nu=8", (5.0, 50.0)),
])
def test_lemma2_verify_passes(text, ab):
    from spectral_barrier import parse_spec

    a, b = ab
    spec = parse_spec(text, seed=31)
    rep = lemma2_verify(spec, trials=20_000, b=b, a=a, seed=32,
                        budget=mo.McBudget(samples=30_000, seed=33))
    assert rep.passed, [c.to_json_dict() for c in rep.checks if not c.passed]
    assert rep.suite == "lemma2"


def test_lemma2_degenerate_limit_mean_one():
    # B -> 0 and b -> inf: E Delta -> E x'Ax = tr A = 1
    rng = np.random.default_rng(41)
    spec = EnsembleSpec("gaussian", p=5, seed=42)
    X = sample(spec, 50_000)
    A, _, V, sa, _ = lemma2_random_pair(5, rng)
    zA = ((X.T @ V) ** 2) @ sa
    delta = zA / (1.0 + (zA + 0.0) / 1e12)
    assert delta.mean() == pytest.approx(1.0, abs=0.02)


def test_lemma2_p1_quadrature_oracle():
    # A = B = (1), b = 4/3: Delta = x^2 / (1 + x^2), E Delta by quadrature
    want, _ = integrate.quad(
        lambda x: x * x / (1.0 + x * x) * math.exp(-x * x / 2.0) / math.sqrt(2.0 * math.pi),
        -12.0, 12.0, epsabs=1e-12,
    )
    rng = np.random.default_rng(7)
    x = rng.standard_normal(400_000)
    mc = float(np.mean(x * x / (1.0 + x * x)))
    assert mc == pytest.approx(want, abs=4.0 * 0.33 / math.sqrt(400_000))
    one = lemma2_delta_sample([1.3], [[1.0]], [[1.0]], 4.0 / 3.0)
    assert one == pytest.approx(1.69 / 2.69)


def test_lemma3_deterministic_and_uniform():
    gen = MartingaleSpec("deterministic", n_steps=16)
    rep = lemma3_tail_check(gen, 10_000, [0.5, 1.0, 2.0, 3.0], seed=51)
    assert rep.passed
    assert all(c.observed == 0.0 for c in rep.checks)

    gen = MartingaleSpec("uniform", n_steps=64)
    rep = lemma3_tail_check(gen, 10_000, [0.5, 1.0, 2.0, 3.0], seed=52)
    assert rep.passed
    # uniform on [0, sqrt(3)] has second moment exactly 1
    rng = np.random.default_rng(0)
    d = rng.uniform(0.0, math.sqrt(3.0), 200_000)
    assert np.mean(d * d) == pytest.approx(1.0, abs=0.01)


def test_lemma3_barrier_generator():
    gen = MartingaleSpec("barrier", n_steps=32, a=0.5)
    rep = lemma3_tail_check(gen, 10_000, [0.5, 1.0, 2.0, 3.0], seed=53)
    assert rep.passed, [c.to_json_dict() for c in rep.checks if not c.passed]
    cond = [c for c in rep.checks if c.name == "cond_second_moment_le_1"]
    assert cond and cond[0].observed <= 1.0


def test_lemma3_trials_precondition():
    with pytest.raises(InvalidParameter):
        lemma3_tail_check(MartingaleSpec("uniform"), 100, [1.0])


def test_martingale_Z_determinism():
    gen = MartingaleSpec("barrier", n_steps=16, a=0.3)
    z1, m1 = simulate_martingale_Z(gen, 2000, seed=3)
    z2, m2 = simulate_martingale_Z(gen, 2000, seed=3)
    assert np.array_equal(z1, z2) and m1 == m2


def test_lemma1_suite_small():
    rep = lemma1_step_check(800, seed=61)
    assert rep.passed
    assert rep.checks[0].observed == 1.0
    assert rep.meta["worst_cap_excess"] <= 1e-8


def test_bounds_below_observed_reality():
    # informative bounds never exceed the observed mean lambda_min
    rng = np.random.default_rng(71)
    p, n, trials = 10, 2000, 40
    lams = np.empty(trials)
    for i in range(trials):
        X = rng.standard_normal((p, n))
        lams[i] = np.linalg.eigvalsh(X @ X.T / n)[0]
    mean_lam = lams.mean()
    se = lams.std() / math.sqrt(trials)
    y = p / n
    assert thm2_L2_bound(3.0, y, n, 2.0).lower_bound <= mean_lam + 3.0 * se
    assert cor1_bound(2.0, 3.0, y).lower_bound <= mean_lam + 3.0 * se
    c_a, C_a, C_2a = mo.gaussian_c(10.0), mo.gaussian_C(10.0), mo.gaussian_C(20.0)
    assert thm1_bound(c_a, C_a, C_2a, 10.0, y, n, 2.0).lower_bound <= mean_lam + 3.0 * se
