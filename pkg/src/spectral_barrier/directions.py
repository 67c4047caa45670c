"""Direction search over the unit sphere for empirical moment extrema.

The exact inf/sup over all unit directions is not computable in general, so
moment estimates scan a finite candidate pool (standard basis, random unit
vectors, sign patterns +-1/sqrt(p)) and locally refine the best candidate by
projected subgradient steps on the empirical objective. Values obtained this
way are one-sided: a minimum over candidates upper-bounds the true infimum,
a maximum lower-bounds the true supremum.
"""

from __future__ import annotations

import numpy as np


def normalize(v: np.ndarray) -> np.ndarray:
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return v / nrm


def candidate_pool(p: int, rng: np.random.Generator, n_random: int,
                   n_sign: int = 64) -> np.ndarray:
    """Rows are unit candidate directions: basis, random, sign patterns."""
    blocks = [np.eye(p)]
    if n_random > 0:
        g = rng.standard_normal((n_random, p))
        blocks.append(g / np.linalg.norm(g, axis=1, keepdims=True))
    if n_sign > 0:
        if p <= 6:
            # few enough patterns to enumerate outright (modulo v -> -v)
            m = 2 ** (p - 1)
            signs = np.array(
                [[1.0 if (i >> b) & 1 == 0 else -1.0 for b in range(p)]
                 for i in range(m)]
            )
        else:
            signs = rng.integers(0, 2, size=(n_sign, p)) * 2.0 - 1.0
        blocks.append(signs / np.sqrt(p))
    return np.vstack(blocks)


def refine_direction(S: np.ndarray, v0: np.ndarray, h, h_prime,
                     steps: int = 100, minimize: bool = True,
                     step0: float = 0.25) -> np.ndarray:
    """Projected subgradient walk for J(v) = mean h(S @ v) from v0.

    h maps projections z to per-sample objective values, h_prime to
    d h / d z. Returns the best direction visited (subgradient steps are not
    monotone, so every iterate is scored).
    """
    n = S.shape[0]
    sign = 1.0 if minimize else -1.0
    v = normalize(np.asarray(v0, dtype=np.float64).copy())
    best_v = v.copy()
    best_j = float(np.mean(h(S @ v)))
    for t in range(steps):
        z = S @ v
        g = S.T @ h_prime(z) / n
        g -= (g @ v) * v  # tangent component only
        ng = float(np.linalg.norm(g))
        if ng < 1e-14:
            break
        v = normalize(v - sign * (step0 / np.sqrt(t + 1.0)) * g / ng)
        j = float(np.mean(h(S @ v)))
        if (j < best_j) if minimize else (j > best_j):
            best_j, best_v = j, v.copy()
    return best_v


def search_min_abs_mean(S: np.ndarray, rng: np.random.Generator,
                        n_random: int | None = None, n_sign: int = 64,
                        refine_steps: int = 100):
    """Minimize v -> mean |S @ v| over unit v; returns (value, direction).

    Used both for K_p estimation from i.i.d. samples and for the exact
    finite-support objective of a discrete system (rows of S weighted
    uniformly).
    """
    p = S.shape[1]
    if n_random is None:
        n_random = 2 * p
    pool = candidate_pool(p, rng, n_random, n_sign)
    vals = np.abs(S @ pool.T).mean(axis=0)
    best = int(np.argmin(vals))
    v = refine_direction(S, pool[best], np.abs, np.sign, steps=refine_steps,
                         minimize=True)
    value = float(np.mean(np.abs(S @ v)))
    if vals[best] < value:
        value, v = float(vals[best]), pool[best]
    return value, v
