"""Isotropic random-vector ensembles.

Every family satisfies E X X' = I_p analytically, not just empirically:

* gaussian       - i.i.d. standard normal coordinates.
* rademacher     - i.i.d. uniform +-1 coordinates.
* student_t      - i.i.d. Student-t(nu) coordinates scaled by
                   sqrt((nu-2)/nu) so each has unit variance (nu > 2).
                   nu <= 4 leaves the fourth moment infinite, exercising the
                   heavy-tail regime.
* sparse         - sqrt(p) * e_J with J uniform on the coordinates; the
                   canonical small-K_p stress case (K_p = 1/sqrt(p)).
* kashin         - uniform draw from the N support columns of a discrete
                   system built from a Haar-random rotation; isotropy is an
                   exact linear-algebra identity of the construction.

Sampling is deterministic given (spec, seed): identical arguments produce
bit-identical streams.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import directions
from .errors import InvalidParameter

FAMILIES = ("gaussian", "rademacher", "student_t", "sparse", "kashin")

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class EnsembleSpec:
    family: str
    p: int
    seed: int = 0
    nu: float | None = None      # student_t only
    N: int | None = None         # kashin only
    delta: float | None = None   # kashin only

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParameter(
                f"unknown ensemble family {self.family!r}; expected one of {FAMILIES}"
            )
        if not isinstance(self.p, (int, np.integer)) or self.p < 1:
            raise InvalidParameter(f"dimension p must be a positive integer, got {self.p!r}")
        if self.family == "student_t":
            if self.nu is None or not self.nu > 2:
                raise InvalidParameter(
                    "student_t requires nu > 2 (unit variance must exist)"
                )
        if self.family == "kashin":
            if self.N is None or self.delta is None:
                raise InvalidParameter("kashin requires N and delta")
            if not (0.0 < self.delta < 1.0):
                raise InvalidParameter(f"delta must lie in (0,1), got {self.delta!r}")
            if self.p > int(np.floor((1.0 - self.delta) * self.N)):
                raise InvalidParameter(
                    f"kashin requires p <= floor((1-delta)*N) = "
                    f"{int(np.floor((1.0 - self.delta) * self.N))}, got p={self.p}"
                )

    def with_seed(self, seed: int) -> "EnsembleSpec":
        return replace(self, seed=int(seed))

    def label(self) -> str:
        return spec_to_text(self)


def parse_spec(text: str, seed: int = 0) -> EnsembleSpec:
    """Parse the CLI textual form, e.g. 'student_t:p=50,nu=5'."""
    head, _, tail = text.strip().partition(":")
    family = head.strip().lower()
    kv: dict[str, str] = {}
    if tail:
        for item in tail.split(","):
            if not item.strip():
                continue
            k, sep, v = item.partition("=")
            if not sep:
                raise InvalidParameter(f"malformed ensemble parameter {item!r}")
            kv[k.strip().lower()] = v.strip()
    try:
        p = int(kv.pop("p"))
    except KeyError:
        raise InvalidParameter(f"ensemble spec {text!r} is missing p") from None
    seed = int(kv.pop("seed", seed))
    nu = float(kv.pop("nu")) if "nu" in kv else None
    N = int(kv.pop("n")) if "n" in kv else None
    delta = float(kv.pop("delta")) if "delta" in kv else None
    if kv:
        raise InvalidParameter(f"unknown ensemble parameters {sorted(kv)} in {text!r}")
    return EnsembleSpec(family=family, p=p, seed=seed, nu=nu, N=N, delta=delta)


def spec_to_text(e: EnsembleSpec) -> str:
    parts = [f"p={e.p}"]
    if e.family == "student_t":
        parts.append(f"nu={e.nu:g}")
    if e.family == "kashin":
        parts.append(f"N={e.N}")
        parts.append(f"delta={e.delta:g}")
    return f"{e.family}:" + ",".join(parts)


def haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
    R diagonal sign folded into Q."""
    G = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0.0] = 1.0
    return Q * signs[None, :]


@dataclass(frozen=True)
class KashinSystem:
    """N support points in R^p whose uniform measure is exactly isotropic.

    k_hat is the realized l1/l2 constant found by direction search: the
    minimum over searched unit v of (1/N) sum_i |<x_i, v>|. It is an upper
    estimate of the true infimum; no universal constant is certified.
    """

    N: int
    p: int
    support_points: np.ndarray  # (p, N), columns are the x_i
    k_hat: float
    k_hat_direction: np.ndarray


def kashin_from_orthogonal(C: np.ndarray, p: int, search_seed: int = 0,
                           refine_steps: int = 100) -> KashinSystem:
    """Assemble the discrete system from an N x N orthogonal matrix C.

    The p rows of the system matrix are sqrt(N) times the first p columns of
    C transposed, which makes (1/N) sum_i x_i x_i' = I_p an exact identity.
    """
    C = np.asarray(C, dtype=np.float64)
    N = C.shape[0]
    if C.shape != (N, N):
        raise InvalidParameter(f"C must be square, got {C.shape}")
    if p < 1 or p > N:
        raise InvalidParameter(f"need 1 <= p <= N, got p={p}, N={N}")
    if float(np.abs(C.T @ C - np.eye(N)).max()) > 1e-8:
        raise InvalidParameter("C is not orthogonal")
    support = np.sqrt(N) * C[:, :p].T  # (p, N)
    rng = np.random.default_rng(np.random.SeedSequence([search_seed & _SEED_MASK]))
    k_hat, v = directions.search_min_abs_mean(support.T, rng,
                                              refine_steps=refine_steps)
    return KashinSystem(N=N, p=p, support_points=support, k_hat=float(k_hat),
                        k_hat_direction=v)


def build_kashin(N: int, delta: float, p: int, seed: int = 0,
                 refine_steps: int = 100) -> KashinSystem:
    """Draw a Haar-random rotation and assemble the discrete system.

    Requires p <= (1-delta) * N. The rotation randomizes the coordinate
    subspace; the realized k_hat is reported per draw.
    """
    if not (0.0 <= delta < 1.0):
        raise InvalidParameter(f"delta must lie in [0,1), got {delta!r}")
    if p > (1.0 - delta) * N:
        raise InvalidParameter(
            f"kashin requires p <= (1-delta)*N = {(1.0 - delta) * N:g}, got p={p}"
        )
    ss = np.random.SeedSequence([seed & _SEED_MASK])
    sys_ss, search_ss = ss.spawn(2)
    C = haar_orthogonal(N, np.random.default_rng(sys_ss))
    support = np.sqrt(N) * C[:, :p].T
    rng = np.random.default_rng(search_ss)
    k_hat, v = directions.search_min_abs_mean(support.T, rng,
                                              refine_steps=refine_steps)
    return KashinSystem(N=N, p=p, support_points=support, k_hat=float(k_hat),
                        k_hat_direction=v)


def sample(e: EnsembleSpec, count: int) -> np.ndarray:
    """count i.i.d. draws as the columns of a (p, count) matrix."""
    if not isinstance(count, (int, np.integer)) or count < 1:
        raise InvalidParameter(f"count must be a positive integer, got {count!r}")
    p = e.p
    ss = np.random.SeedSequence([e.seed & _SEED_MASK])
    if e.family == "kashin":
        sys_ss, draw_ss = ss.spawn(2)
        system = _kashin_system_for(e, sys_ss)
        rng = np.random.default_rng(draw_ss)
        idx = rng.integers(0, e.N, size=count)
        return np.ascontiguousarray(system.support_points[:, idx])
    rng = np.random.default_rng(ss)
    if e.family == "gaussian":
        return rng.standard_normal((p, count))
    if e.family == "rademacher":
        return (rng.integers(0, 2, size=(p, count)) * 2 - 1).astype(np.float64)
    if e.family == "student_t":
        scale = np.sqrt((e.nu - 2.0) / e.nu)
        return rng.standard_t(e.nu, size=(p, count)) * scale
    if e.family == "sparse":
        idx = rng.integers(0, p, size=count)
        X = np.zeros((p, count))
        X[idx, np.arange(count)] = np.sqrt(p)
        return X
    raise InvalidParameter(f"unknown family {e.family!r}")


def _kashin_system_for(e: EnsembleSpec, sys_ss: np.random.SeedSequence) -> KashinSystem:
    C = haar_orthogonal(e.N, np.random.default_rng(sys_ss))
    support = np.sqrt(e.N) * C[:, : e.p].T
    # sampling does not need k_hat; skip the direction search
    return KashinSystem(N=e.N, p=e.p, support_points=support, k_hat=float("nan"),
                        k_hat_direction=np.zeros(e.p))


def kashin_system(e: EnsembleSpec, refine_steps: int = 100) -> KashinSystem:
    """The exact support system a kashin spec samples from (with k_hat)."""
    if e.family != "kashin":
        raise InvalidParameter(f"not a kashin spec: {e.family!r}")
    ss = np.random.SeedSequence([e.seed & _SEED_MASK])
    sys_ss, _ = ss.spawn(2)
    C = haar_orthogonal(e.N, np.random.default_rng(sys_ss))
    system = kashin_from_orthogonal(C, e.p, search_seed=e.seed,
                                    refine_steps=refine_steps)
    return system
