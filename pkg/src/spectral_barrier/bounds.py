"""Closed-form lower bounds on lambda_min of the sample covariance matrix,
and the randomized verification suites for the inequalities behind them.

Bound evaluators are pure formulas: they take moment functionals (c, C, L,
M, K) as numbers and return a lower bound together with the probability
that it may fail. Bounds are reported even when vacuous (<= 0), flagged but
never clamped.

The verification suites stress the three supporting facts:

* the barrier step lemma (shift increment preserves positive definiteness
  and the potential cap),
* the conditional increment moment inequalities (lower bounds on E Delta,
  upper bound on E Delta^2),
* the sub-Gaussian lower tail of a normalized martingale with nonnegative
  increments of conditional second moment at most one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import ensembles, linalg, moments
from .errors import InvalidParameter, PreconditionViolated

_SEED_MASK = (1 << 64) - 1


# ---------------------------------------------------------------------------
# containers


@dataclass(frozen=True)
class KpConstants:
    """Universal constants of the small-ball (K_p) bounds.

    Base values are traced through the proofs: c0 = 1/4, c1 = sqrt(4/3),
    c2 = 1/16. The starred constants of the high-probability corollary are
    always derived, so the algebraic relations c0* = c0/2,
    c1* = c0^2 / (8 c1^2), c2* = c2 hold exactly by construction.
    """

    c0: float = 0.25
    c1: float = math.sqrt(4.0 / 3.0)
    c2: float = 1.0 / 16.0

    @property
    def c0_star(self) -> float:
        return self.c0 / 2.0

    @property
    def c1_star(self) -> float:
        return self.c0 ** 2 / (8.0 * self.c1 ** 2)

    @property
    def c2_star(self) -> float:
        return self.c2


DEFAULT_KP_CONSTANTS = KpConstants()


@dataclass(frozen=True)
class BoundResult:
    """A lower bound on lambda_min(Gram/n) and its failure probability.

    failure_probability is None when the caller did not pin the sample
    count; symbolic then carries the closed form.
    """

    lower_bound: float
    failure_probability: float | None
    vacuous: bool
    symbolic_failure: str | None = None

    @classmethod
    def build(cls, lower: float, fp: float | None, symbolic: str | None = None):
        return cls(lower_bound=float(lower),
                   failure_probability=None if fp is None else float(fp),
                   vacuous=bool(lower <= 0.0), symbolic_failure=symbolic)


@dataclass
class CheckResult:
    name: str
    observed: float
    threshold: float
    slack: float
    passed: bool

    def to_json_dict(self) -> dict:
        return {"name": self.name, "observed": float(self.observed),
                "threshold": float(self.threshold), "slack": float(self.slack),
                "pass": bool(self.passed)}


@dataclass
class VerificationReport:
    suite: str
    trials: int
    checks: list[CheckResult] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json_dict(self) -> dict:
        return {"suite": self.suite, "trials": self.trials,
                "checks": [c.to_json_dict() for c in self.checks],
                "meta": self.meta, "pass": self.passed}


# ---------------------------------------------------------------------------
# validation helpers


def _tail_prob(t: float) -> float:
    return math.exp(-t * t / 2.0)


def _check(cond: bool, msg: str):
    if not cond:
        raise InvalidParameter(msg)


def _check_t(t: float) -> float:
    t = float(t)
    _check(np.isfinite(t) and t >= 0.0, f"t must be >= 0, got {t!r}")
    return t


def _check_y(y: float) -> float:
    y = float(y)
    _check(0.0 < y < 1.0, f"aspect ratio y must lie in (0,1), got {y!r}")
    return y


def _check_n(n) -> int:
    _check(isinstance(n, (int, np.integer)) and n >= 1,
           f"n must be a positive integer, got {n!r}")
    return int(n)


# ---------------------------------------------------------------------------
# bound evaluators


def thm1_bound(c_a: float, C_a: float, C_2a: float, a: float, y: float,
               n: int, t: float) -> BoundResult:
    """Truncated-moment bound:
    c(a) - C(a)/a - 5 a y - sqrt(C(2a)) t / sqrt(n), failing with
    probability at most exp(-t^2/2)."""
    a = float(a)
    _check(a > 0.0, f"a must be positive, got {a!r}")
    y, n, t = _check_y(y), _check_n(n), _check_t(t)
    for name, v in (("c_a", c_a), ("C_a", C_a), ("C_2a", C_2a)):
        _check(np.isfinite(v) and v >= 0.0, f"{name} must be >= 0, got {v!r}")
    lower = c_a - C_a / a - 5.0 * a * y - math.sqrt(C_2a) * t / math.sqrt(n)
    return BoundResult.build(lower, _tail_prob(t))


def thm2_L2_bound(L2: float, y: float, n: int, t: float) -> BoundResult:
    """Fourth-moment bound: 1 - 4 sqrt(L2 y) - sqrt(L2) t / sqrt(n)."""
    L2 = float(L2)
    _check(L2 >= 1.0, f"L2 must be >= 1 (forced by isotropy), got {L2!r}")
    y, n, t = _check_y(y), _check_n(n), _check_t(t)
    C = math.sqrt(L2)
    lower = 1.0 - 4.0 * C * math.sqrt(y) - C * t / math.sqrt(n)
    return BoundResult.build(lower, _tail_prob(t))


def thm2_Kp_bound(K: float, y: float, n: int, t: float,
                  constants: KpConstants = DEFAULT_KP_CONSTANTS) -> BoundResult:
    """Small-ball bound: c0 K^2 - c1 t / sqrt(n), valid when y <= c2 K^2."""
    K = float(K)
    _check(0.0 < K <= 1.0, f"K must lie in (0,1], got {K!r}")
    y = float(y)
    _check(y > 0.0, f"y must be positive, got {y!r}")
    n, t = _check_n(n), _check_t(t)
    if y > constants.c2 * K * K:
        raise PreconditionViolated(
            f"y={y!r} exceeds c2*K^2={constants.c2 * K * K!r}; "
            "the bound says nothing there"
        )
    lower = constants.c0 * K * K - constants.c1 * t / math.sqrt(n)
    return BoundResult.build(lower, _tail_prob(t))


def cor1_bound(alpha: float, L: float, y: float,
               n: int | None = None) -> BoundResult:
    """High-probability bound 1 - C_alpha y^{alpha/(2+alpha)} with
    C_alpha = 9 L^{2/(2+alpha)} for alpha in (0,2) and (4+sqrt 2) sqrt(L)
    at alpha = 2; fails with probability exp(-y n)."""
    alpha = float(alpha)
    _check(0.0 < alpha <= 2.0, f"alpha must lie in (0,2], got {alpha!r}")
    L = float(L)
    _check(L >= 1.0, f"L must be >= 1 (forced by isotropy), got {L!r}")
    y = _check_y(y)
    if alpha == 2.0:
        C_alpha = (4.0 + math.sqrt(2.0)) * math.sqrt(L)
    else:
        C_alpha = 9.0 * L ** (2.0 / (2.0 + alpha))
    lower = 1.0 - C_alpha * y ** (alpha / (2.0 + alpha))
    if n is None:
        return BoundResult.build(lower, None, symbolic="exp(-y*n)")
    n = _check_n(n)
    return BoundResult.build(lower, math.exp(-y * n))


def cor2_min_n(alpha: float | None, L: float, epsilon: float, p: int) -> int:
    """Smallest n guaranteeing E lambda_min(Gram/n) >= 1 - epsilon.

    alpha given (in (0,2)): require p/n <= eps^{1+2/alpha} / (10 (4L)^{2/alpha}).
    alpha None: the fourth-moment branch n >= 16 L p / eps^2.
    """
    L = float(L)
    _check(L >= 1.0, f"L must be >= 1 (forced by isotropy), got {L!r}")
    epsilon = float(epsilon)
    _check(0.0 < epsilon <= 1.0, f"epsilon must lie in (0,1], got {epsilon!r}")
    _check(isinstance(p, (int, np.integer)) and p >= 1,
           f"p must be a positive integer, got {p!r}")
    if alpha is None:
        n = math.ceil(16.0 * L * p / epsilon ** 2)
    else:
        alpha = float(alpha)
        _check(0.0 < alpha < 2.0,
               f"the alpha branch needs alpha in (0,2), got {alpha!r}")
        y_max = epsilon ** (1.0 + 2.0 / alpha) / (10.0 * (4.0 * L) ** (2.0 / alpha))
        n = math.ceil(p / y_max)
    return max(int(n), int(p))


def cor3_bound(K: float, n: int, p: int,
               constants: KpConstants = DEFAULT_KP_CONSTANTS) -> BoundResult:
    """Constant-probability small-ball bound: lambda_min >= c0* K^2 with
    probability at least 1 - exp(-c1* K^4 n), valid when p/n <= c2* K^2."""
    K = float(K)
    _check(0.0 < K <= 1.0, f"K must lie in (0,1], got {K!r}")
    n = _check_n(n)
    _check(isinstance(p, (int, np.integer)) and 1 <= p <= n,
           f"need 1 <= p <= n, got p={p!r}, n={n!r}")
    if p / n > constants.c2_star * K * K:
        raise PreconditionViolated(
            f"p/n={p / n!r} exceeds c2*_K^2={constants.c2_star * K * K!r}"
        )
    lower = constants.c0_star * K * K
    fp = math.exp(-constants.c1_star * K ** 4 * n)
    return BoundResult.build(lower, fp)


# ---------------------------------------------------------------------------
# conditional increment moments (lemma 2 machinery)


def lemma2_delta_sample(X, A, B, b: float) -> float:
    """One increment sample Delta = x'Ax / (1 + (x'Ax + x'Bx/3)/b).

    A and B must be symmetric with tr A = 1 and tr B <= 1 (checked to
    1e-10); simultaneous diagonalizability is the generator's
    responsibility (pairs are built from one shared eigenbasis).
    """
    A = linalg.as_sym_matrix(A, "A")
    B = linalg.as_sym_matrix(B, "B")
    if A.shape != B.shape:
        raise InvalidParameter(f"A and B differ in shape: {A.shape} vs {B.shape}")
    x = linalg.as_vector(X, A.shape[0], "X")
    b = float(b)
    _check(b > 0.0, f"b must be positive, got {b!r}")
    if abs(float(np.trace(A)) - 1.0) > 1e-10:
        raise InvalidParameter(f"tr A = {float(np.trace(A))!r}, expected 1")
    if float(np.trace(B)) > 1.0 + 1e-10:
        raise InvalidParameter(f"tr B = {float(np.trace(B))!r}, expected <= 1")
    xax = float(x @ A @ x)
    xbx = float(x @ B @ x)
    return xax / (1.0 + (xax + xbx / 3.0) / b)


def lemma2_random_pair(p: int, rng: np.random.Generator):
    """Admissible (A, B): shared Haar eigenbasis, positive spectra with
    tr A = 1 and tr B <= 1. Returns (A, B, basis, spec_a, spec_b)."""
    V = ensembles.haar_orthogonal(p, rng)
    spec_a = rng.gamma(shape=1.5, size=p) + 1e-12
    spec_a /= spec_a.sum()
    spec_b = rng.gamma(shape=1.5, size=p) + 1e-12
    spec_b *= rng.uniform(0.3, 1.0) / spec_b.sum()
    A = (V * spec_a) @ V.T
    B = (V * spec_b) @ V.T
    return (A + A.T) / 2.0, (B + B.T) / 2.0, V, spec_a, spec_b


def lemma2_verify(e: ensembles.EnsembleSpec, trials: int, b: float, a: float,
                  seed: int = 0, n_pairs: int = 3,
                  reference: moments.MomentProfile | None = None,
                  budget: moments.McBudget | None = None) -> VerificationReport:
    """Monte Carlo check of the increment moment inequalities

        E Delta   >= c(a) - 5 C(a) / (3b)
        E Delta   >= K^2 / (1 + 4/(3b))
        E Delta^2 <= C(b)

    (plus the fourth-moment pair when L(2) is finite) for randomly drawn
    admissible (A, B), within 3x the combined standard errors. Reference
    moment values are exact for the Gaussian family and direction-search
    estimates otherwise.
    """
    _check(trials >= 1000, f"trials must be >= 1000, got {trials!r}")
    a, b = float(a), float(b)
    _check(a > 0.0 and b > 0.0, "a and b must be positive")
    ref, ref_se = _lemma2_reference(e, a, b, seed, reference, budget)

    sample_spec = e.with_seed(_derive(e.seed, 0x5A, seed))
    S = ensembles.sample(sample_spec, trials).T  # (trials, p)
    checks: list[CheckResult] = []
    k_thr = ref["K"] ** 2 / (1.0 + 4.0 / (3.0 * b))
    k_thr_se = 2.0 * ref["K"] * ref_se["K"] / (1.0 + 4.0 / (3.0 * b))
    c_thr = ref["c_a"] - 5.0 * ref["C_a"] / (3.0 * b)
    c_thr_se = ref_se["c_a"] + 5.0 * ref_se["C_a"] / (3.0 * b)
    for j in range(n_pairs):
        rng = np.random.default_rng(
            np.random.SeedSequence([seed & _SEED_MASK, 0xA2, j])
        )
        _, _, V, spec_a, spec_b = lemma2_random_pair(e.p, rng)
        Z2 = (S @ V) ** 2
        zA = Z2 @ spec_a
        zB = Z2 @ spec_b
        delta = zA / (1.0 + (zA + zB / 3.0) / b)
        m1 = float(delta.mean())
        se1 = float(delta.std() / math.sqrt(trials))
        d2 = delta * delta
        m2 = float(d2.mean())
        se2 = float(d2.std() / math.sqrt(trials))

        checks.append(_ge_check(f"pair{j}.mean_delta_ge_c_bound", m1, c_thr,
                                3.0 * (se1 + c_thr_se)))
        checks.append(_ge_check(f"pair{j}.mean_delta_ge_k_bound", m1, k_thr,
                                3.0 * (se1 + k_thr_se)))
        checks.append(_le_check(f"pair{j}.mean_delta_sq_le_C_b", m2, ref["C_b"],
                                3.0 * (se2 + ref_se["C_b"])))
        if ref.get("L2") is not None and math.isfinite(ref["L2"]):
            l2_thr = 1.0 - 4.0 * ref["L2"] / (3.0 * b)
            l2_se = 4.0 * ref_se["L2"] / (3.0 * b)
            checks.append(_ge_check(f"pair{j}.mean_delta_ge_l2_bound", m1,
                                    l2_thr, 3.0 * (se1 + l2_se)))
            checks.append(_le_check(f"pair{j}.mean_delta_sq_le_l2", m2,
                                    ref["L2"], 3.0 * (se2 + ref_se["L2"])))
    return VerificationReport(
        suite="lemma2", trials=trials, checks=checks,
        meta={"ensemble": e.label(), "a": a, "b": b, "seed": seed,
              "reference": {k: ref[k] for k in sorted(ref)}},
    )


def _lemma2_reference(e, a, b, seed, reference, budget):
    if e.family == "gaussian":
        ref = {"c_a": moments.gaussian_c(a), "C_a": moments.gaussian_C(a),
               "C_b": moments.gaussian_C(b), "K": moments.gaussian_K(),
               "L2": moments.gaussian_L(2.0)}
        return ref, {k: 0.0 for k in ref}
    prof = reference
    if prof is None:
        budget = budget or moments.McBudget(samples=min(100_000, 50_000),
                                            seed=_derive(seed, 0x9E))
        prof = moments.compute_profile(e, a_grid=[a, b], alpha_list=[2.0],
                                       budget=budget)
    ref = {"c_a": prof.c[a].value, "C_a": prof.C[a].value,
           "C_b": prof.C[b].value, "K": prof.K.value,
           "L2": prof.L[2.0].value if 2.0 in prof.L else None}
    ref_se = {"c_a": prof.c[a].se or 0.0, "C_a": prof.C[a].se or 0.0,
              "C_b": prof.C[b].se or 0.0, "K": prof.K.se or 0.0,
              "L2": (prof.L[2.0].se or 0.0) if 2.0 in prof.L else 0.0}
    return ref, ref_se


def _ge_check(name, observed, threshold, slack) -> CheckResult:
    return CheckResult(name=name, observed=observed, threshold=threshold,
                       slack=slack, passed=bool(observed >= threshold - slack))


def _le_check(name, observed, threshold, slack) -> CheckResult:
    return CheckResult(name=name, observed=observed, threshold=threshold,
                       slack=slack, passed=bool(observed <= threshold + slack))


# ---------------------------------------------------------------------------
# martingale tail (lemma 3 machinery)


@dataclass(frozen=True)
class MartingaleSpec:
    """Generator of nonnegative increments D_k with conditional second
    moment at most 1.

    kind 'deterministic': D_k = 1 (Z = 0 exactly).
    kind 'uniform':       D_k i.i.d. uniform on [0, sqrt(3)].
    kind 'barrier':       D_k = delta_k / sqrt(C(2a)) from a 1-D Gaussian
                          barrier stream at phi = 1/(5a); conditional means
                          are evaluated by Gauss-Hermite quadrature.
    """

    kind: str
    n_steps: int = 64
    a: float = 0.5

    def __post_init__(self):
        if self.kind not in ("deterministic", "uniform", "barrier"):
            raise InvalidParameter(f"unknown martingale kind {self.kind!r}")
        if self.n_steps < 1:
            raise InvalidParameter("n_steps must be >= 1")
        if self.a <= 0.0:
            raise InvalidParameter("a must be positive")


def simulate_martingale_Z(gen: MartingaleSpec, trials: int, seed: int = 0):
    """Z = n^{-1/2} sum_k (D_k - E[D_k | history]) for `trials` paths.

    Returns (Z, max_cond_second_moment) where the second entry is the
    largest conditional second moment of D_k seen along any path (NaN for
    the kinds where it equals 1 by construction).
    """
    n = gen.n_steps
    rng = np.random.default_rng(np.random.SeedSequence([seed & _SEED_MASK, 0x3A]))
    if gen.kind == "deterministic":
        return np.zeros(trials), float("nan")
    if gen.kind == "uniform":
        D = rng.uniform(0.0, math.sqrt(3.0), size=(trials, n))
        Z = (D - math.sqrt(3.0) / 2.0).sum(axis=1) / math.sqrt(n)
        return Z, float("nan")
    # barrier kind: scalar streams, all paths advanced in lockstep
    a = gen.a
    phi = 1.0 / (5.0 * a)
    scale = math.sqrt(moments.gaussian_C(2.0 * a))
    nodes, weights = np.polynomial.hermite.hermgauss(96)
    xg2 = 2.0 * nodes ** 2  # (sqrt(2) x)^2
    wg = weights / math.sqrt(math.pi)
    M = np.full(trials, 1.0 / phi)
    acc = np.zeros(trials)
    max_cond2 = 0.0
    for _ in range(n):
        x2 = rng.standard_normal(trials) ** 2
        delta = x2 / (1.0 + 3.0 * phi * x2 + x2 / M)
        node_delta = xg2[None, :] / (1.0 + 3.0 * phi * xg2[None, :]
                                     + xg2[None, :] / M[:, None])
        cond = node_delta @ wg
        cond2 = (node_delta * node_delta) @ wg / (scale * scale)
        max_cond2 = max(max_cond2, float(cond2.max()))
        acc += delta - cond
        M += x2 - delta
    return acc / (scale * math.sqrt(n)), max_cond2


def lemma3_tail_check(gen: MartingaleSpec, trials: int, t_grid,
                      seed: int = 0) -> VerificationReport:
    """Empirical P(Z < -t) against exp(-t^2/2) + binomial 3 sigma at every
    t in the grid."""
    _check(trials >= 10_000, f"trials must be >= 10000, got {trials!r}")
    t_grid = [float(t) for t in t_grid]
    _check(all(t > 0.0 for t in t_grid), "every t must be positive")
    Z, max_cond2 = simulate_martingale_Z(gen, trials, seed)
    checks = []
    for t in t_grid:
        bound = _tail_prob(t)
        freq = float(np.mean(Z < -t))
        slack = 3.0 * math.sqrt(bound * (1.0 - bound) / trials)
        checks.append(_le_check(f"tail_at_t={t:g}", freq, bound, slack))
    if gen.kind == "barrier":
        checks.append(_le_check("cond_second_moment_le_1", max_cond2, 1.0, 1e-9))
    return VerificationReport(
        suite="lemma3", trials=trials, checks=checks,
        meta={"kind": gen.kind, "n_steps": gen.n_steps, "seed": seed},
    )


# ---------------------------------------------------------------------------
# barrier step lemma suite (randomized instances)


def lemma1_step_check(trials: int, seed: int = 0, p_max: int = 20,
                      cap_slack: float = 1e-8) -> VerificationReport:
    """Randomized check of the step lemma: draw PD A, a shift l strictly
    below its spectrum, phi at or above the current potential, and any v;
    after the increment delta the shifted matrix stays PD and the updated
    matrix obeys the potential cap.

    Conclusions are verified through eigendecompositions, independent of
    the Cholesky path that computes delta.
    """
    _check(trials >= 1, "trials must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([seed & _SEED_MASK, 0x1A]))
    pd_ok = cap_ok = range_ok = 0
    worst_gap = math.inf
    worst_cap = -math.inf
    for _ in range(trials):
        p = int(rng.integers(1, p_max + 1))
        spec = np.exp(rng.uniform(math.log(0.05), math.log(20.0), size=p))
        V = ensembles.haar_orthogonal(p, rng)
        A = (V * spec) @ V.T
        A = (A + A.T) / 2.0
        lam_min = float(np.linalg.eigvalsh(A)[0])
        gap = 10.0 ** rng.uniform(-3.0, 0.5)
        l = lam_min - gap
        trace = float(np.sum(1.0 / (np.linalg.eigvalsh(A) - l)))
        phi = trace if rng.random() < 0.2 else trace * (1.0 + 10.0 ** rng.uniform(-3.0, 0.5))
        if rng.random() < 0.05:
            v = np.zeros(p)
        else:
            v = rng.standard_normal(p) * 10.0 ** rng.uniform(-2.0, 1.0)

        f = linalg.shifted_factorize(A, l)
        Q = linalg.big_Q(f, v)
        q = linalg.small_q(f, v)
        delta = q / (1.0 + 3.0 * phi * q + Q)

        if 0.0 <= delta < 1.0 / (3.0 * phi) + 1e-15:
            range_ok += 1
        post_gap = lam_min - (l + delta)
        worst_gap = min(worst_gap, post_gap)
        if post_gap > -1e-10 * max(1.0, abs(lam_min)):
            pd_ok += 1
        eigs2 = np.linalg.eigvalsh(A + np.outer(v, v)) - (l + delta)
        if float(eigs2.min()) > 0.0:
            post_trace = float(np.sum(1.0 / eigs2))
            excess = post_trace - phi
            worst_cap = max(worst_cap, excess)
            if post_trace <= phi + cap_slack:
                cap_ok += 1
    checks = [
        CheckResult("post_step_pd_fraction", pd_ok / trials, 1.0, 0.0,
                    pd_ok == trials),
        CheckResult("post_update_cap_fraction", cap_ok / trials, 1.0, 0.0,
                    cap_ok == trials),
        CheckResult("delta_in_range_fraction", range_ok / trials, 1.0, 0.0,
                    range_ok == trials),
    ]
    return VerificationReport(
        suite="lemma1", trials=trials, checks=checks,
        meta={"seed": seed, "p_max": p_max, "worst_post_gap": worst_gap,
              "worst_cap_excess": worst_cap},
    )


def _derive(*keys) -> int:
    ss = np.random.SeedSequence([int(k) & _SEED_MASK for k in keys])
    return int(ss.generate_state(1, np.uint64)[0])
