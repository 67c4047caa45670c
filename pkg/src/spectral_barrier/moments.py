"""Moment functionals of isotropic ensembles over unit directions v:

    c(a)  = inf_v  E min{<X,v>^2, a}
    C(a)  = sup_v  E <X,v>^2 min{<X,v>^2, a}
    L(al) = sup_v  E |<X,v>|^{2+al}
    M(al) = sup_v  sup_t  t^{2+al} P(|<X,v>| > t)
    K     = inf_v  E |<X,v>|

plus the bounds tying c and C to L and M.

For the rotationally invariant Gaussian family the direction dependence
drops and every functional reduces to a 1-D integral, evaluated by adaptive
quadrature (absolute tolerance 1e-10 on [-12, 12]) and tagged "exact".
Everything else is estimated by Monte Carlo over a candidate direction pool
with local subgradient refinement and tagged "mc_estimate" with a bootstrap
standard error (M uses a binomial standard error at the attaining tail
point). Estimated infima (suprema) are upper (lower) one-sided: the search
covers a finite subset of the sphere.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special, stats

from . import directions, ensembles
from .errors import EstimateUnstable, InvalidParameter, NotAvailable

_SEED_MASK = (1 << 64) - 1


# ---------------------------------------------------------------------------
# result containers


@dataclass
class Value:
    """One moment value with provenance."""

    value: float
    tag: str  # "exact" or "mc_estimate"
    se: float | None = None
    samples: int | None = None
    directions: int | None = None
    seed: int | None = None
    unstable: bool = False
    caveat: str | None = None

    def to_json_dict(self) -> dict:
        out: dict = {"value": _json_float(self.value), "tag": self.tag}
        if self.tag == "mc_estimate":
            out["se"] = _json_float(self.se)
            out["samples"] = self.samples
            out["directions"] = self.directions
            out["seed"] = self.seed
            out["unstable"] = self.unstable
        if self.caveat:
            out["caveat"] = self.caveat
        return out


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass
class MomentProfile:
    """Moment functionals of one ensemble on the requested grids."""

    ensemble: str
    c: dict[float, Value] = field(default_factory=dict)
    C: dict[float, Value] = field(default_factory=dict)
    L: dict[float, Value] = field(default_factory=dict)
    M: dict[float, Value] = field(default_factory=dict)
    K: Value | None = None

    def to_json_dict(self) -> dict:
        def curve(d):
            return {f"{k:g}": v.to_json_dict() for k, v in d.items()}

        return {
            "ensemble": self.ensemble,
            "c": curve(self.c),
            "C": curve(self.C),
            "L": curve(self.L),
            "M": curve(self.M),
            "K": self.K.to_json_dict() if self.K is not None else None,
        }


@dataclass(frozen=True)
class McBudget:
    """Monte Carlo budget for direction-searched estimates."""

    samples: int = 100_000
    directions: int | None = None  # random unit directions, default 2p
    sign_patterns: int = 64
    refine_steps: int = 100
    bootstrap: int = 200
    seed: int = 0

    def n_random(self, p: int) -> int:
        return 2 * p if self.directions is None else int(self.directions)


# ---------------------------------------------------------------------------
# Gaussian marginals (exact, 1-D quadrature)

_QUAD_LIM = 12.0


def _norm_pdf(x):
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)


def _norm_tail(t):
    # P(g > t), accurate far into the tail
    return 0.5 * special.erfc(t / np.sqrt(2.0))


def _quad(f, points=None):
    pts = None
    if points:
        pts = sorted(x for x in points if -_QUAD_LIM < x < _QUAD_LIM)
        pts = pts or None
    val, _ = integrate.quad(f, -_QUAD_LIM, _QUAD_LIM, points=pts,
                            epsabs=1e-10, limit=200)
    return float(val)


def gaussian_c(a: float) -> float:
    """E min(g^2, a) for g standard normal."""
    _check_positive(a=a)
    s = np.sqrt(a)
    return _quad(lambda x: min(x * x, a) * _norm_pdf(x), points=(-s, s))


def gaussian_C(a: float) -> float:
    """E g^2 min(g^2, a)."""
    _check_positive(a=a)
    s = np.sqrt(a)
    return _quad(lambda x: x * x * min(x * x, a) * _norm_pdf(x), points=(-s, s))


def gaussian_L(alpha: float) -> float:
    """E |g|^{2+alpha}."""
    _check_positive(alpha=alpha)
    return _quad(lambda x: abs(x) ** (2.0 + alpha) * _norm_pdf(x))


def gaussian_K() -> float:
    """E |g| (= sqrt(2/pi))."""
    return _quad(lambda x: abs(x) * _norm_pdf(x))


def gaussian_M(alpha: float) -> float:
    """sup_t t^{2+alpha} P(|g| > t)."""
    _check_positive(alpha=alpha)
    f = lambda t: float(t ** (2.0 + alpha) * 2.0 * _norm_tail(t))
    grid = np.geomspace(0.05, 15.0, 400)
    t0 = float(grid[int(np.argmax([f(t) for t in grid]))])
    res = optimize.minimize_scalar(lambda t: -f(t), bounds=(t0 / 2.0, t0 * 2.0),
                                   method="bounded", options={"xatol": 1e-12})
    return max(f(float(res.x)), f(t0))


# ---------------------------------------------------------------------------
# Student-t marginals along coordinate directions (variance-normalized)


def student_scale(nu: float) -> float:
    return math.sqrt((nu - 2.0) / nu)


def _student_dist(nu: float):
    if not nu > 2:
        raise InvalidParameter(f"student_t needs nu > 2, got {nu!r}")
    return stats.t(df=nu, scale=student_scale(nu))


def student_c(a: float, nu: float) -> float:
    """E min(V^2, a) for V a unit-variance scaled t(nu) variate."""
    _check_positive(a=a)
    d = _student_dist(nu)
    s = math.sqrt(a)
    core, _ = integrate.quad(lambda x: x * x * d.pdf(x), -s, s,
                             epsabs=1e-10, limit=200)
    return float(core) + a * 2.0 * float(d.sf(s))


def student_C(a: float, nu: float) -> float:
    """E V^2 min(V^2, a); uses E V^2 = 1 for the truncated tail term."""
    _check_positive(a=a)
    d = _student_dist(nu)
    s = math.sqrt(a)
    quart, _ = integrate.quad(lambda x: x ** 4 * d.pdf(x), -s, s,
                              epsabs=1e-10, limit=200)
    sq, _ = integrate.quad(lambda x: x * x * d.pdf(x), -s, s,
                           epsabs=1e-10, limit=200)
    return float(quart) + a * (1.0 - float(sq))


def student_abs_moment(m: float, nu: float) -> float:
    """E |T_nu|^m (unscaled); finite iff m < nu."""
    if m >= nu:
        return math.inf
    return float(
        nu ** (m / 2.0)
        * math.exp(special.gammaln((m + 1.0) / 2.0)
                   + special.gammaln((nu - m) / 2.0)
                   - special.gammaln(nu / 2.0))
        / math.sqrt(math.pi)
    )


def student_L(alpha: float, nu: float) -> float:
    """E |V|^{2+alpha} along a coordinate; infinite iff alpha >= nu - 2."""
    _check_positive(alpha=alpha)
    m = 2.0 + alpha
    if m >= nu:
        return math.inf
    return student_scale(nu) ** m * student_abs_moment(m, nu)


def student_K(nu: float) -> float:
    """E |V| along a coordinate."""
    return student_scale(nu) * student_abs_moment(1.0, nu)


def student_M(alpha: float, nu: float) -> float:
    """sup_t t^{2+alpha} P(|V| > t) along a coordinate; infinite iff
    alpha > nu - 2."""
    _check_positive(alpha=alpha)
    if 2.0 + alpha > nu:
        return math.inf
    d = _student_dist(nu)
    f = lambda t: float(t ** (2.0 + alpha) * 2.0 * d.sf(t))
    grid = np.geomspace(0.05, 1e6, 800)
    vals = [f(t) for t in grid]
    t0 = float(grid[int(np.argmax(vals))])
    res = optimize.minimize_scalar(lambda t: -f(t), bounds=(t0 / 3.0, t0 * 3.0),
                                   method="bounded", options={"xatol": 1e-10})
    return max(f(float(res.x)), max(vals))


# ---------------------------------------------------------------------------
# bounds relating c, C to L, M


def prop1_c_lower_from_L(a: float, alpha: float, L: float) -> float:
    """c(a) >= 1 - L / a^{alpha/2} (may be negative; never clamped)."""
    _check_positive(a=a, alpha=alpha, L=L)
    return 1.0 - L * a ** (-alpha / 2.0)


def prop1_c_lower_from_M(a: float, alpha: float, M: float) -> float:
    """c(a) >= 1 - (2/alpha) M / a^{alpha/2}."""
    _check_positive(a=a, alpha=alpha, M=M)
    return 1.0 - (2.0 / alpha) * M * a ** (-alpha / 2.0)


@dataclass(frozen=True)
class BoundPair:
    """Upper bounds on C(a) from the two available moment routes."""

    l_branch: float | None
    m_branch: float | None


def prop1_C_upper(a: float, alpha: float, L: float | None = None,
                  M: float | None = None) -> BoundPair:
    """C(a) <= a^{1-alpha/2} L  and, for alpha in (0, 2],
    C(a) <= (1 + 2/alpha) M a^{1-alpha/2} + tail term (log form at alpha=2).
    """
    _check_positive(a=a, alpha=alpha)
    if not alpha <= 2.0:
        raise InvalidParameter(f"alpha must lie in (0, 2], got {alpha!r}")
    if L is None and M is None:
        raise InvalidParameter("need at least one of L, M")
    l_branch = None
    m_branch = None
    if L is not None:
        _check_positive(L=L)
        l_branch = a ** (1.0 - alpha / 2.0) * L
    if M is not None:
        _check_positive(M=M)
        lead = (1.0 + 2.0 / alpha) * M * a ** (1.0 - alpha / 2.0)
        if alpha == 2.0:
            m_branch = lead + 2.0 * M * math.log(max(a, 1.0)) + 1.0
        else:
            m_branch = lead + 2.0 * M * a ** (1.0 - alpha / 2.0) / (1.0 - alpha / 2.0)
    return BoundPair(l_branch=l_branch, m_branch=m_branch)


def _check_positive(**kw):
    for name, x in kw.items():
        x = float(x)
        if not np.isfinite(x) or x <= 0.0:
            raise InvalidParameter(f"{name} must be positive and finite, got {x!r}")


# ---------------------------------------------------------------------------
# empirical estimation


def estimate_Kp(e: ensembles.EnsembleSpec, budget: McBudget = McBudget()) -> Value:
    """Search inf_v E|<X,v>| over candidate directions plus subgradient
    refinement. The result is an upper estimate of the true infimum."""
    if budget.samples < 1 or budget.n_random(e.p) < 1:
        raise InvalidParameter("budget.samples and budget.directions must be >= 1")
    S = ensembles.sample(e, budget.samples).T
    rng = np.random.default_rng(
        np.random.SeedSequence([budget.seed & _SEED_MASK, 0x4B])
    )
    value, v = directions.search_min_abs_mean(
        S, rng, n_random=budget.n_random(e.p), n_sign=budget.sign_patterns,
        refine_steps=budget.refine_steps,
    )
    z = np.abs(S @ v)
    se, unstable = _bootstrap_se(z, np.mean, budget, value)
    return Value(value=value, tag="mc_estimate", se=se, samples=budget.samples,
                 directions=budget.n_random(e.p), seed=budget.seed,
                 unstable=unstable)


def _abs_pow(absz: np.ndarray, m: float) -> np.ndarray:
    """|z|^m with fast paths for the small integer exponents that dominate
    the moment grids."""
    if m == 1.0:
        return absz
    if m == 2.0:
        return absz * absz
    if m == 3.0:
        return absz * absz * absz
    if m == 4.0:
        z2 = absz * absz
        return z2 * z2
    return absz ** m


def _bootstrap_se(z: np.ndarray, stat, budget: McBudget, value: float,
                  idx: np.ndarray | None = None):
    n = z.shape[0]
    if idx is None:
        rng = np.random.default_rng(
            np.random.SeedSequence([budget.seed & _SEED_MASK, 0xB0])
        )
        idx = rng.integers(0, n, size=(budget.bootstrap, n), dtype=np.uint32)
    reps = np.empty(idx.shape[0])
    for r in range(idx.shape[0]):
        reps[r] = stat(z[idx[r]])
    se = float(np.std(reps))
    lo, hi = np.percentile(reps, [2.5, 97.5])
    unstable = bool((hi - lo) > 0.2 * abs(value)) if value != 0.0 else False
    if unstable:
        warnings.warn(
            EstimateUnstable(f"bootstrap CI width {hi - lo:g} exceeds 20% of {value:g}")
        )
    return se, unstable


def compute_profile(e: ensembles.EnsembleSpec, a_grid, alpha_list,
                    budget: McBudget = McBudget()) -> MomentProfile:
    """Moment profile of an ensemble on the given grids.

    Gaussian profiles are exact (quadrature); all other families are
    direction-searched Monte Carlo estimates on one shared sample matrix,
    which keeps the estimated curves coherent: minima/maxima over a common
    candidate pool are monotone in a, and every reported extremum pairs with
    the direction attaining it.
    """
    a_grid = [float(a) for a in a_grid]
    alpha_list = [float(al) for al in alpha_list]
    if not a_grid or not alpha_list:
        raise InvalidParameter("a_grid and alpha_list must be nonempty")
    for a in a_grid:
        _check_positive(a=a)
    for al in alpha_list:
        _check_positive(alpha=al)
    if budget.samples < 1:
        raise InvalidParameter("budget.samples must be >= 1")
    if e.family == "gaussian":
        return _gaussian_profile(e, a_grid, alpha_list)
    return _empirical_profile(e, a_grid, alpha_list, budget)


def _gaussian_profile(e, a_grid, alpha_list) -> MomentProfile:
    prof = MomentProfile(ensemble=e.label())
    for a in a_grid:
        prof.c[a] = Value(gaussian_c(a), "exact")
        prof.C[a] = Value(gaussian_C(a), "exact")
    for al in alpha_list:
        prof.L[al] = Value(gaussian_L(al), "exact")
        prof.M[al] = Value(gaussian_M(al), "exact")
    prof.K = Value(gaussian_K(), "exact")
    return prof


def _empirical_profile(e, a_grid, alpha_list, budget) -> MomentProfile:
    p = e.p
    S = ensembles.sample(e, budget.samples).T  # (samples, p)
    rng = np.random.default_rng(
        np.random.SeedSequence([budget.seed & _SEED_MASK, 0xD1])
    )
    pool = directions.candidate_pool(p, rng, budget.n_random(p),
                                     budget.sign_patterns)
    pool = np.vstack([pool, _refined_directions(S, pool, a_grid, alpha_list,
                                                budget)])
    n_dir = pool.shape[0]
    n_a, n_al = len(a_grid), len(alpha_list)

    c_vals = np.empty((n_dir, n_a))
    C_vals = np.empty((n_dir, n_a))
    K_vals = np.empty(n_dir)
    L_vals = np.empty((n_dir, n_al))
    M_vals = np.empty((n_dir, n_al))
    M_attn = np.empty((n_dir, n_al, 2))  # attaining (t, tail freq)

    for d in range(n_dir):
        z = S @ pool[d]
        z2 = z * z
        absz = np.abs(z)
        for i, a in enumerate(a_grid):
            m = np.minimum(z2, a)
            c_vals[d, i] = m.mean()
            C_vals[d, i] = (z2 * m).mean()
        K_vals[d] = absz.mean()
        for j, al in enumerate(alpha_list):
            L_vals[d, j] = _abs_pow(absz, 2.0 + al).mean()
            M_vals[d, j], M_attn[d, j] = _tail_sup(absz, al)

    prof = MomentProfile(ensemble=e.label())
    boot = _BootstrapHelper(S, budget)
    for i, a in enumerate(a_grid):
        d = int(np.argmin(c_vals[:, i]))
        prof.c[a] = boot.value(c_vals[d, i], pool[d],
                               lambda z, a=a: np.minimum(z * z, a).mean())
        d = int(np.argmax(C_vals[:, i]))
        prof.C[a] = boot.value(C_vals[d, i], pool[d],
                               lambda z, a=a: (z * z * np.minimum(z * z, a)).mean())
    for j, al in enumerate(alpha_list):
        d = int(np.argmax(L_vals[:, j]))
        prof.L[al] = boot.value(L_vals[d, j], pool[d],
                                lambda z, al=al: _abs_pow(np.abs(z), 2.0 + al).mean())
        d = int(np.argmax(M_vals[:, j]))
        t_star, freq = M_attn[d, j]
        se = float(t_star ** (2.0 + al)
                   * math.sqrt(max(freq * (1.0 - freq), 0.0) / budget.samples))
        prof.M[al] = Value(float(M_vals[d, j]), "mc_estimate", se=se,
                           samples=budget.samples,
                           directions=budget.n_random(p), seed=budget.seed,
                           unstable=bool(12.0 * se > 0.2 * abs(M_vals[d, j])))
    d = int(np.argmin(K_vals))
    prof.K = boot.value(K_vals[d], pool[d], lambda z: np.abs(z).mean())
    return prof


class _BootstrapHelper:
    """Bootstraps standard errors; one resample-index matrix is shared by
    every value of the profile."""

    def __init__(self, S, budget):
        self.S = S
        self.budget = budget
        self._idx = None

    @property
    def idx(self) -> np.ndarray:
        if self._idx is None:
            rng = np.random.default_rng(
                np.random.SeedSequence([self.budget.seed & _SEED_MASK, 0xB0])
            )
            n = self.S.shape[0]
            self._idx = rng.integers(0, n, size=(self.budget.bootstrap, n),
                                     dtype=np.uint32)
        return self._idx

    def value(self, val, direction, stat) -> Value:
        z = self.S @ direction
        se, unstable = _bootstrap_se(z, stat, self.budget, float(val),
                                     idx=self.idx)
        return Value(float(val), "mc_estimate", se=se,
                     samples=self.budget.samples,
                     directions=self.budget.n_random(self.S.shape[1]),
                     seed=self.budget.seed, unstable=unstable)


def _tail_sup(absz: np.ndarray, alpha: float):
    """sup over a logarithmic t-grid of t^{2+alpha} * empirical
    P(|z| > t); the grid spans the median..0.9999 quantiles of |z|."""
    srt = np.sort(absz)
    n = srt.shape[0]
    lo = float(np.quantile(srt, 0.5))
    hi = float(np.quantile(srt, 0.9999))
    if hi <= 0.0:
        return 0.0, (0.0, 0.0)
    lo = max(lo, hi * 1e-6)
    grid = np.geomspace(lo, hi, 200)
    tail = (n - np.searchsorted(srt, grid, side="right")) / n
    vals = grid ** (2.0 + alpha) * tail
    k = int(np.argmax(vals))
    return float(vals[k]), (float(grid[k]), float(tail[k]))


#: Sample-set size the subgradient walk runs on; extremal values are always
#: re-evaluated on the full sample set afterwards.
_REFINE_SUBSAMPLE = 20_000


def _refined_directions(S, pool, a_grid, alpha_list, budget) -> np.ndarray:
    """Subgradient-refined directions for each searched functional, seeded
    from the best raw candidate. Added to the shared pool so every
    functional over every grid point is still extremized over one common
    candidate set."""
    if budget.refine_steps <= 0:
        return np.empty((0, S.shape[1]))
    picks = sorted({min(a_grid), a_grid[len(a_grid) // 2], max(a_grid)})
    out = []
    Z = S @ pool.T  # (samples, n_dir)
    absZ = np.abs(Z)
    S = S[:_REFINE_SUBSAMPLE]
    for a in picks:
        h = lambda z, a=a: np.minimum(z * z, a)
        hp = lambda z, a=a: 2.0 * z * (z * z < a)
        v0 = pool[int(np.argmin(np.minimum(Z * Z, a).mean(axis=0)))]
        out.append(directions.refine_direction(S, v0, h, hp,
                                               steps=budget.refine_steps,
                                               minimize=True))
        hC = lambda z, a=a: z * z * np.minimum(z * z, a)
        hCp = lambda z, a=a: np.where(z * z < a, 4.0 * z ** 3, 2.0 * a * z)
        v0 = pool[int(np.argmax((Z * Z * np.minimum(Z * Z, a)).mean(axis=0)))]
        out.append(directions.refine_direction(S, v0, hC, hCp,
                                               steps=budget.refine_steps,
                                               minimize=False))
    v0 = pool[int(np.argmin(absZ.mean(axis=0)))]
    out.append(directions.refine_direction(S, v0, np.abs, np.sign,
                                           steps=budget.refine_steps,
                                           minimize=True))
    for al in alpha_list:
        hL = lambda z, al=al: _abs_pow(np.abs(z), 2.0 + al)
        hLp = lambda z, al=al: (2.0 + al) * _abs_pow(np.abs(z), 1.0 + al) * np.sign(z)
        v0 = pool[int(np.argmax(_abs_pow(absZ, 2.0 + al).mean(axis=0)))]
        out.append(directions.refine_direction(S, v0, hL, hLp,
                                               steps=budget.refine_steps,
                                               minimize=False))
    return np.vstack(out)


# ---------------------------------------------------------------------------
# closed forms per family


def exact_moments(e: ensembles.EnsembleSpec, a_grid=(), alpha_list=()) -> MomentProfile:
    """Exact moment values where the family has closed-form marginals along
    its extremal directions.

    gaussian: every functional (rotation invariance). student_t: L(alpha)
    along a coordinate direction, finite iff alpha < nu - 2, with the
    direction_unverified caveat (the supremum over all directions is not
    determined here). sparse: K = 1/sqrt(p) exactly. Other families raise
    NotAvailable.
    """
    a_grid = [float(a) for a in a_grid]
    alpha_list = [float(al) for al in alpha_list]
    if e.family == "gaussian":
        prof = MomentProfile(ensemble=e.label())
        for a in a_grid:
            prof.c[a] = Value(gaussian_c(a), "exact")
            prof.C[a] = Value(gaussian_C(a), "exact")
        for al in alpha_list:
            prof.L[al] = Value(gaussian_L(al), "exact")
            prof.M[al] = Value(gaussian_M(al), "exact")
        prof.K = Value(gaussian_K(), "exact")
        return prof
    if e.family == "student_t":
        prof = MomentProfile(ensemble=e.label())
        for al in alpha_list:
            prof.L[al] = Value(student_L(al, e.nu), "exact",
                               caveat="direction_unverified")
        return prof
    if e.family == "sparse":
        prof = MomentProfile(ensemble=e.label())
        prof.K = Value(1.0 / math.sqrt(e.p), "exact")
        return prof
    raise NotAvailable(f"no closed-form marginals for family {e.family!r}")
