"""Seeded Monte Carlo campaigns: empirical lambda_min versus certified
barrier bounds versus closed-form theoretical bounds.

Each trial samples n columns, optionally runs the barrier certificate over
the stream, and records the exact smallest eigenvalue of the sample
covariance matrix. Bound checks tally strict violations
lambda_min < bound(t) against the nominal failure probability plus binomial
3 sigma slack (mean-type bounds compare the trial mean instead).

Per-trial seeds derive from (seed, trial index), so reports are
byte-identical for any parallelism degree; trials are merged in index
order.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __about__, barrier, bounds, ensembles, kernels, linalg
from .errors import InvalidParameter

_SEED_MASK = (1 << 64) - 1

#: Default runtime caps; exceeding them requires override_caps=True.
CAPS = {"p": 200, "n": 20_000, "trials": 1000}

TAIL_KINDS = ("thm1", "thm2_l2", "thm2_kp")
FIXED_KINDS = ("cor1", "cor3")
MEAN_KINDS = ("cor2_alpha", "cor2_l2")
#: Absolute slack on the per-trial soundness comparison.
SOUND_SLACK = 1e-9


@dataclass(frozen=True)
class PhiMode:
    """How the potential cap is chosen: one of the proof prescriptions or a
    fixed value."""

    mode: str
    params: dict = field(default_factory=dict)

    def resolve(self) -> float:
        key = self.mode.strip().lower().replace("-", "_")
        if key == "fixed":
            phi = float(self.params.get("phi", 0.0))
            if phi <= 0.0:
                raise InvalidParameter("fixed phi mode needs phi > 0")
            return phi
        return float(barrier.choose_phi(key, **self.params))


@dataclass(frozen=True)
class BoundSpec:
    """One theoretical bound to tally, with its moment inputs as numbers."""

    kind: str
    params: dict = field(default_factory=dict)

    def normalized_kind(self) -> str:
        return self.kind.strip().lower().replace("-", "_")


@dataclass
class ExperimentConfig:
    ensemble: ensembles.EnsembleSpec
    p: int
    n: int
    trials: int
    phi_mode: PhiMode
    bounds_to_check: list[BoundSpec] = field(default_factory=list)
    t_grid: list[float] = field(default_factory=list)
    seed: int = 0
    parallelism: int = 1
    certify: bool = True
    override_caps: bool = False

    def validate(self) -> None:
        if self.ensemble.p != self.p:
            raise InvalidParameter(
                f"config p={self.p} disagrees with ensemble p={self.ensemble.p}"
            )
        if not (1 <= self.p <= self.n):
            raise InvalidParameter(f"need 1 <= p <= n, got p={self.p}, n={self.n}")
        if self.trials < 1:
            raise InvalidParameter("trials must be >= 1")
        if self.parallelism < 1:
            raise InvalidParameter("parallelism must be >= 1")
        if not self.override_caps:
            for name, cap in CAPS.items():
                if getattr(self, name) > cap:
                    raise InvalidParameter(
                        f"{name}={getattr(self, name)} exceeds the runtime cap "
                        f"{cap}; set override_caps to run anyway"
                    )
        for t in self.t_grid:
            if not (float(t) >= 0.0):
                raise InvalidParameter(f"t grid values must be >= 0, got {t!r}")
        self.phi_mode.resolve()
        for spec in self.bounds_to_check:
            _evaluators_for(spec, self)  # raises on bad kind/params/preconditions


def config_from_dict(doc: dict) -> ExperimentConfig:
    doc = dict(doc)
    ens = doc.pop("ensemble")
    seed = int(doc.get("seed", 0))
    if isinstance(ens, str):
        spec = ensembles.parse_spec(ens, seed=seed)
    else:
        spec = ensembles.EnsembleSpec(
            family=ens["family"], p=int(ens["p"]), seed=int(ens.get("seed", seed)),
            nu=ens.get("nu"), N=ens.get("N"), delta=ens.get("delta"),
        )
    phi = doc.pop("phi_mode")
    phi_mode = PhiMode(mode=phi["mode"],
                       params={k: v for k, v in phi.items() if k != "mode"})
    bspecs = [BoundSpec(kind=b["kind"], params=dict(b.get("params", {})))
              for b in doc.pop("bounds_to_check", [])]
    cfg = ExperimentConfig(
        ensemble=spec, p=int(doc["p"]), n=int(doc["n"]), trials=int(doc["trials"]),
        phi_mode=phi_mode, bounds_to_check=bspecs,
        t_grid=[float(t) for t in doc.get("t_grid", [])], seed=seed,
        parallelism=int(doc.get("parallelism", 1)),
        certify=bool(doc.get("certify", True)),
        override_caps=bool(doc.get("override_caps", False)),
    )
    cfg.validate()
    return cfg


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "ensemble": {
            "family": cfg.ensemble.family, "p": cfg.ensemble.p,
            "seed": cfg.ensemble.seed,
            **({"nu": cfg.ensemble.nu} if cfg.ensemble.nu is not None else {}),
            **({"N": cfg.ensemble.N} if cfg.ensemble.N is not None else {}),
            **({"delta": cfg.ensemble.delta} if cfg.ensemble.delta is not None else {}),
        },
        "p": cfg.p, "n": cfg.n, "trials": cfg.trials,
        "phi_mode": {"mode": cfg.phi_mode.mode, **cfg.phi_mode.params},
        "bounds_to_check": [{"kind": b.kind, "params": b.params}
                            for b in cfg.bounds_to_check],
        "t_grid": list(cfg.t_grid), "seed": cfg.seed,
        "parallelism": cfg.parallelism, "certify": cfg.certify,
        "override_caps": cfg.override_caps,
    }


@dataclass
class ExperimentReport:
    config: dict
    version: str
    backend: str
    trials: list[dict]
    bound_checks: list[dict]
    aggregates: dict

    def to_json_dict(self) -> dict:
        return {"config": self.config, "version": self.version,
                "backend": self.backend, "trials": self.trials,
                "bound_checks": self.bound_checks, "aggregates": self.aggregates}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        doc = json.loads(text)
        return cls(config=doc["config"], version=doc["version"],
                   backend=doc["backend"], trials=doc["trials"],
                   bound_checks=doc["bound_checks"], aggregates=doc["aggregates"])

    @property
    def soundness_failures(self) -> int:
        return sum(1 for t in self.trials if t["sound"] is False)

    @property
    def all_bounds_pass(self) -> bool:
        return all(b["pass"] for b in self.bound_checks)


def derive_trial_seed(seed: int, index: int) -> int:
    ss = np.random.SeedSequence([seed & _SEED_MASK, 0x01, int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def _run_trial(cfg: ExperimentConfig, phi: float, index: int) -> dict:
    trial_seed = derive_trial_seed(cfg.seed, index)
    try:
        spec = cfg.ensemble.with_seed(trial_seed)
        X = ensembles.sample(spec, cfg.n)
        if cfg.certify:
            cert = barrier.certify_stream(cfg.p, phi, X, n=cfg.n)
            gram = cert.state.A
            lam_min_gram = linalg.min_eigenvalue(gram)
            sound = bool(cert.l_n <= lam_min_gram + SOUND_SLACK)
            certified = cert.l_n_over_n
        else:
            rows = np.ascontiguousarray(X.T)
            gram = rows.T @ rows
            gram = (gram + gram.T) / 2.0
            lam_min_gram = linalg.min_eigenvalue(gram)
            sound = None
            certified = None
        return {"trial": index, "lambda_min": lam_min_gram / cfg.n,
                "certified": certified, "sound": sound}
    except Exception as exc:
        raise RuntimeError(
            f"trial {index} (seed {trial_seed}) failed: {exc}"
        ) from exc


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run all trials (possibly concurrently) and evaluate every configured
    bound; deterministic for a fixed config regardless of parallelism."""
    cfg.validate()
    phi = cfg.phi_mode.resolve()
    workers = cfg.parallelism
    env = os.environ.get("SPECTRAL_BARRIER_THREADS")
    if env:
        workers = max(1, int(env))
    if workers == 1:
        trials = [_run_trial(cfg, phi, i) for i in range(cfg.trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trials = list(pool.map(lambda i: _run_trial(cfg, phi, i),
                                   range(cfg.trials)))
    lam = np.array([t["lambda_min"] for t in trials])
    bound_checks = []
    for spec in cfg.bounds_to_check:
        bound_checks.extend(_check_bound(spec, cfg, lam))
    qs = np.quantile(lam, [0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0])
    aggregates = {
        "mean_lambda_min": float(lam.mean()),
        "quantiles_lambda_min": {
            "min": float(qs[0]), "p05": float(qs[1]), "p25": float(qs[2]),
            "median": float(qs[3]), "p75": float(qs[4]), "p95": float(qs[5]),
            "max": float(qs[6]),
        },
        "mean_certified": (float(np.mean([t["certified"] for t in trials]))
                           if cfg.certify else None),
        "mean_certificate_gap": (float(np.mean([t["lambda_min"] - t["certified"]
                                                for t in trials]))
                                 if cfg.certify else None),
        "soundness_failures": sum(1 for t in trials if t["sound"] is False),
        "phi": phi,
    }
    return ExperimentReport(config=config_to_dict(cfg),
                            version=__about__.__version__,
                            backend=kernels.backend_name(), trials=trials,
                            bound_checks=bound_checks, aggregates=aggregates)


def _evaluators_for(spec: BoundSpec, cfg: ExperimentConfig):
    """Resolve a BoundSpec into (kind, evaluate(t) or fixed result); raises
    InvalidParameter / PreconditionViolated eagerly."""
    kind = spec.normalized_kind()
    prm = dict(spec.params)
    constants = _constants_from(prm)
    if kind == "thm1":
        args = {k: float(prm[k]) for k in ("c_a", "C_a", "C_2a", "a", "y")}
        _require_y(args["y"], cfg)
        return kind, (lambda t: bounds.thm1_bound(n=cfg.n, t=t, **args))
    if kind == "thm2_l2":
        L2, y = float(prm["L2"]), float(prm["y"])
        _require_y(y, cfg)
        return kind, (lambda t: bounds.thm2_L2_bound(L2, y, cfg.n, t))
    if kind == "thm2_kp":
        K, y = float(prm["K"]), float(prm["y"])
        _require_y(y, cfg)
        return kind, (lambda t: bounds.thm2_Kp_bound(K, y, cfg.n, t, constants))
    if kind == "cor1":
        alpha, L, y = float(prm["alpha"]), float(prm["L"]), float(prm["y"])
        _require_y(y, cfg)
        return kind, bounds.cor1_bound(alpha, L, y, n=cfg.n)
    if kind == "cor3":
        K = float(prm["K"])
        return kind, bounds.cor3_bound(K, cfg.n, cfg.p, constants)
    if kind in MEAN_KINDS:
        alpha = float(prm["alpha"]) if kind == "cor2_alpha" else None
        L, eps = float(prm["L"]), float(prm["epsilon"])
        n_min = bounds.cor2_min_n(alpha, L, eps, cfg.p)
        if cfg.n < n_min:
            raise InvalidParameter(
                f"{spec.kind}: n={cfg.n} is below the required minimum {n_min}"
            )
        return kind, 1.0 - eps
    raise InvalidParameter(f"unknown bound kind {spec.kind!r}")


def _constants_from(prm: dict) -> bounds.KpConstants:
    if any(k in prm for k in ("c0", "c1", "c2")):
        base = bounds.DEFAULT_KP_CONSTANTS
        return bounds.KpConstants(c0=float(prm.get("c0", base.c0)),
                                  c1=float(prm.get("c1", base.c1)),
                                  c2=float(prm.get("c2", base.c2)))
    return bounds.DEFAULT_KP_CONSTANTS


def _require_y(y: float, cfg: ExperimentConfig):
    if y < cfg.p / cfg.n - 1e-12:
        raise InvalidParameter(
            f"bound parameter y={y} is below the actual aspect ratio "
            f"p/n={cfg.p / cfg.n}"
        )


def _check_bound(spec: BoundSpec, cfg: ExperimentConfig, lam: np.ndarray) -> list[dict]:
    kind, ev = _evaluators_for(spec, cfg)
    trials = lam.shape[0]
    records = []
    if kind in MEAN_KINDS:
        threshold = ev
        observed = float(lam.mean())
        records.append({
            "kind": kind, "params": spec.params, "check": "mean", "t": None,
            "bound_value": float(threshold), "nominal_failure_prob": 0.0,
            "violations": None, "empirical_violation_freq": None,
            "binomial_3sigma": None, "observed_mean": observed,
            "pass": bool(observed >= threshold),
        })
        return records
    if kind in FIXED_KINDS:
        results = [(None, ev)]
    else:
        results = [(float(t), ev(float(t))) for t in cfg.t_grid]
    for t, res in results:
        nominal = res.failure_probability
        viol = int(np.sum(lam < res.lower_bound))
        freq = viol / trials
        slack = 3.0 * math.sqrt(nominal * (1.0 - nominal) / trials)
        records.append({
            "kind": kind, "params": spec.params, "check": "tail", "t": t,
            "bound_value": res.lower_bound, "nominal_failure_prob": nominal,
            "violations": viol, "empirical_violation_freq": freq,
            "binomial_3sigma": slack, "observed_mean": float(lam.mean()),
            "pass": bool(freq <= nominal + slack + 1.0 / trials),
        })
    return records


# ---------------------------------------------------------------------------
# report emission


def emit_report(report: ExperimentReport, format: str, path) -> None:
    """json: one nested document. csv: a per-trial file at `path` plus a
    second file `<path stem>.bounds.csv` with one row per (bound, t); both
    carry the config echo and tool version as '#' header lines."""
    path = str(path)
    if format == "json":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
        return
    if format != "csv":
        raise InvalidParameter(f"unknown report format {format!r}")
    header = [
        f"# version={report.version}",
        f"# backend={report.backend}",
        f"# config={json.dumps(report.config, sort_keys=True)}",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        for line in header:
            fh.write(line + "\n")
        fh.write("trial,lambda_min,certified,sound\n")
        for t in report.trials:
            fh.write(f"{t['trial']},{t['lambda_min']!r},"
                     f"{'' if t['certified'] is None else repr(t['certified'])},"
                     f"{'' if t['sound'] is None else t['sound']}\n")
    bounds_path = _bounds_csv_path(path)
    cols = ["kind", "check", "t", "bound_value", "nominal_failure_prob",
            "violations", "empirical_violation_freq", "binomial_3sigma",
            "observed_mean", "pass"]
    with open(bounds_path, "w", encoding="utf-8") as fh:
        for line in header:
            fh.write(line + "\n")
        fh.write(",".join(cols) + "\n")
        for rec in report.bound_checks:
            cells = []
            for c in cols:
                v = rec[c]
                if v is None:
                    cells.append("")
                elif isinstance(v, float):
                    cells.append(repr(v))
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")


def _bounds_csv_path(path: str) -> str:
    stem, dot, ext = path.rpartition(".")
    if not dot:
        return path + ".bounds.csv"
    return f"{stem}.bounds.{ext}"


# ---------------------------------------------------------------------------
# parameter sweeps


SWEEP_AXES = ("y", "p", "phi", "t")


def sweep(base: ExperimentConfig, axis: str, values) -> list[ExperimentReport]:
    """Re-run the experiment along one axis with per-value derived seeds.

    axis 'y' resizes n to ceil(p / y); 'p' changes the dimension (and the
    ensemble); 'phi' switches to a fixed potential cap; 't' replaces the
    t grid with the single value.
    """
    if axis not in SWEEP_AXES:
        raise InvalidParameter(f"unknown sweep axis {axis!r}; expected {SWEEP_AXES}")
    reports = []
    for idx, value in enumerate(values):
        seed = int(np.random.SeedSequence(
            [base.seed & _SEED_MASK, 0x02, idx]
        ).generate_state(1, np.uint64)[0])
        cfg = replace(base, seed=seed)
        try:
            if axis == "y":
                y = float(value)
                if not (0.0 < y < 1.0):
                    raise InvalidParameter(f"y must lie in (0,1), got {y!r}")
                cfg = replace(cfg, n=max(cfg.p, math.ceil(cfg.p / y)))
            elif axis == "p":
                p = int(value)
                cfg = replace(cfg, p=p,
                              ensemble=replace(cfg.ensemble, p=p))
            elif axis == "phi":
                cfg = replace(cfg, phi_mode=PhiMode("fixed", {"phi": float(value)}))
            elif axis == "t":
                cfg = replace(cfg, t_grid=[float(value)])
            reports.append(run_experiment(cfg))
        except Exception as exc:
            raise RuntimeError(
                f"sweep axis {axis!r} value {value!r} (index {idx}) failed: {exc}"
            ) from exc
    return reports
