"""Pure numpy/scipy barrier stream kernel (fallback backend).

Mirrors the compiled kernel step for step: build M = A - l*I, Cholesky
factor it, form the explicit inverse G, check the potential cap, then
advance the shift by delta = q / (1 + 3*phi*q + Q) and absorb v v' into A.

Returns the same (rc, step, l, deltas) protocol as the compiled kernel:
rc 0 = ok, 1 = shifted matrix not positive definite, 2 = potential cap
exceeded beyond the allowed drift.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg


def run_stream(A, l, phi, X, pd_tol, cap_slack):
    p = A.shape[0]
    n = X.shape[0]
    eye = np.eye(p)
    deltas = np.empty(n, dtype=np.float64)
    for k in range(n):
        v = X[k]
        M = A - l * eye
        scale = max(1.0, float(np.abs(np.diag(M)).max()))
        try:
            chol, lower = scipy.linalg.cho_factor(M, lower=True, check_finite=False)
        except (scipy.linalg.LinAlgError, ValueError):
            return 1, k, l, deltas
        if float((np.diag(chol) ** 2).min()) < pd_tol * scale:
            return 1, k, l, deltas
        G = scipy.linalg.cho_solve((chol, lower), eye, check_finite=False)
        trinv = float(np.trace(G))
        if trinv > phi + cap_slack:
            return 2, k, l, deltas
        tr2 = float(np.sum(G * G))
        w = G @ v
        Q = float(v @ w)
        num = float(w @ w)
        q = num / tr2
        delta = q / (1.0 + 3.0 * phi * q + Q)
        deltas[k] = delta
        l = l + delta
        A += np.outer(v, v)
    return 0, n, l, deltas
