"""Command line interface.

Subcommands:
  certify   read a matrix of stream columns, print the certified bound
  sample    draw ensemble columns into a matrix file
  moments   moment profile of an ensemble as JSON
  bounds    evaluate one closed-form bound
  check     run a verification suite (lemma1 | lemma2 | lemma3)
  simulate  run an experiment config; exit 0/2/3 on pass/statistical
            failure/soundness failure
  sweep     repeat an experiment along one axis
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __about__, barrier, bounds, ensembles, harness, kernels, linalg
from . import matio, moments
from .errors import SpectralBarrierError

#: Absolute slack used when --verify compares l_n against lambda_min.
SOUND_SLACK = 1e-9


def _emit(doc) -> None:
    print(json.dumps(doc, indent=2))


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _params_dict(text: str) -> dict:
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        k, sep, v = item.partition("=")
        if not sep:
            raise SpectralBarrierError(f"malformed parameter {item!r}")
        out[k.strip()] = float(v)
    return out


def cmd_certify(args) -> int:
    X = matio.load_matrix(args.input)
    p, n = X.shape
    cert = barrier.certify_stream(p, args.phi, X, n=n)
    doc = {"p": p, "n": n, "phi": args.phi, "l_n": cert.l_n,
           "l_n_over_n": cert.l_n_over_n}
    if args.verify:
        lam = linalg.min_eigenvalue(cert.state.A)
        doc["lambda_min"] = lam
        doc["sound"] = bool(cert.l_n <= lam + SOUND_SLACK)
    else:
        doc["sound"] = True  # the stream completed without invariant drift
    _emit(doc)
    return 0 if doc["sound"] else 3


def cmd_sample(args) -> int:
    spec = ensembles.parse_spec(args.ensemble, seed=args.seed)
    X = ensembles.sample(spec, args.count)
    matio.save_matrix(args.out, X, fmt=args.format)
    return 0


def cmd_moments(args) -> int:
    spec = ensembles.parse_spec(args.ensemble, seed=args.seed)
    budget = moments.McBudget(samples=args.samples, directions=args.directions,
                              seed=args.seed)
    prof = moments.compute_profile(spec, _float_list(args.a_grid),
                                   _float_list(args.alpha), budget)
    _emit(prof.to_json_dict())
    return 0


def cmd_bounds(args) -> int:
    prm = _params_dict(args.params)
    kind = args.kind.strip().lower().replace("-", "_")
    constants = bounds.KpConstants(
        c0=prm.pop("c0", bounds.DEFAULT_KP_CONSTANTS.c0),
        c1=prm.pop("c1", bounds.DEFAULT_KP_CONSTANTS.c1),
        c2=prm.pop("c2", bounds.DEFAULT_KP_CONSTANTS.c2),
    )
    if kind == "thm1":
        res = bounds.thm1_bound(prm["c_a"], prm["C_a"], prm["C_2a"], prm["a"],
                                prm["y"], int(prm["n"]), prm["t"])
    elif kind == "thm2_l2":
        res = bounds.thm2_L2_bound(prm["L2"], prm["y"], int(prm["n"]), prm["t"])
    elif kind == "thm2_kp":
        res = bounds.thm2_Kp_bound(prm["K"], prm["y"], int(prm["n"]), prm["t"],
                                   constants)
    elif kind == "cor1":
        n = int(prm["n"]) if "n" in prm else None
        res = bounds.cor1_bound(prm["alpha"], prm["L"], prm["y"], n=n)
    elif kind == "cor2":
        n_min = bounds.cor2_min_n(prm.get("alpha"), prm["L"], prm["epsilon"],
                                  int(prm["p"]))
        _emit({"kind": kind, "min_n": n_min,
               "branch": "alpha" if "alpha" in prm else "l2"})
        return 0
    elif kind == "cor3":
        res = bounds.cor3_bound(prm["K"], int(prm["n"]), int(prm["p"]), constants)
    else:
        raise SpectralBarrierError(f"unknown bound kind {args.kind!r}")
    doc = {"kind": kind, "lower_bound": res.lower_bound,
           "failure_probability": res.failure_probability,
           "vacuous": res.vacuous}
    if res.symbolic_failure:
        doc["failure_probability_symbolic"] = res.symbolic_failure
    _emit(doc)
    return 0


def cmd_check(args) -> int:
    if args.suite == "lemma1":
        rep = bounds.lemma1_step_check(args.trials, seed=args.seed)
    elif args.suite == "lemma2":
        spec = ensembles.parse_spec(args.ensemble, seed=args.seed)
        rep = bounds.lemma2_verify(spec, args.trials, b=args.b, a=args.a,
                                   seed=args.seed)
    elif args.suite == "lemma3":
        t_grid = _float_list(args.t_grid)
        checks = []
        reports = []
        for kind in ("deterministic", "uniform", "barrier"):
            gen = bounds.MartingaleSpec(kind=kind, n_steps=args.steps)
            reports.append(bounds.lemma3_tail_check(gen, args.trials, t_grid,
                                                    seed=args.seed))
        checks = [c for r in reports for c in _prefixed(r)]
        rep = bounds.VerificationReport(suite="lemma3", trials=args.trials,
                                        checks=checks,
                                        meta={"t_grid": t_grid,
                                              "n_steps": args.steps,
                                              "seed": args.seed})
    else:
        raise SpectralBarrierError(f"unknown suite {args.suite!r}")
    _emit(rep.to_json_dict())
    return 0 if rep.passed else 2


def _prefixed(rep: bounds.VerificationReport):
    kind = rep.meta["kind"]
    out = []
    for c in rep.checks:
        out.append(bounds.CheckResult(name=f"{kind}.{c.name}", observed=c.observed,
                                      threshold=c.threshold, slack=c.slack,
                                      passed=c.passed))
    return out


def exit_code_for(report: harness.ExperimentReport) -> int:
    if report.soundness_failures > 0:
        return 3
    if not report.all_bounds_pass:
        return 2
    return 0


def _load_config(path) -> harness.ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return harness.config_from_dict(json.load(fh))


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    report = harness.run_experiment(cfg)
    if args.out:
        harness.emit_report(report, "json", args.out)
    if args.csv:
        harness.emit_report(report, "csv", args.csv)
    if not args.out and not args.csv:
        sys.stdout.write(report.to_json())
    else:
        agg = report.aggregates
        print(f"trials={cfg.trials} mean_lambda_min={agg['mean_lambda_min']:.6g} "
              f"soundness_failures={agg['soundness_failures']} "
              f"bounds_pass={report.all_bounds_pass}")
    return exit_code_for(report)


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    values = _float_list(args.values)
    reports = harness.sweep(cfg, args.axis, values)
    code = 0
    for value, rep in zip(values, reports):
        if args.out_dir:
            path = f"{args.out_dir}/sweep_{args.axis}_{value:g}.json"
            harness.emit_report(rep, "json", path)
        agg = rep.aggregates
        print(f"{args.axis}={value:g} mean_lambda_min={agg['mean_lambda_min']:.6g} "
              f"soundness_failures={agg['soundness_failures']} "
              f"bounds_pass={rep.all_bounds_pass}")
        code = max(code, exit_code_for(rep))
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="spectral-barrier",
        description="Certified lower bounds on the smallest eigenvalue of "
                    "streaming Gram matrices.",
    )
    ap.add_argument("--version", action="version",
                    version=f"%(prog)s {__about__.__version__} "
                            f"(kernel backend: {kernels.backend_name()})")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", help="certify a stream stored as a p x n matrix")
    c.add_argument("--input", required=True)
    c.add_argument("--phi", type=float, required=True)
    c.add_argument("--verify", action="store_true",
                   help="also eigensolve the accumulated Gram matrix")
    c.set_defaults(func=cmd_certify)

    s = sub.add_parser("sample", help="draw ensemble columns into a matrix file")
    s.add_argument("--ensemble", required=True)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--format", choices=("binary", "csv"), default="binary")
    s.set_defaults(func=cmd_sample)

    m = sub.add_parser("moments", help="moment profile of an ensemble")
    m.add_argument("--ensemble", required=True)
    m.add_argument("--a-grid", default="0.5,1,2,5,10")
    m.add_argument("--alpha", default="1,2")
    m.add_argument("--samples", type=int, default=100_000)
    m.add_argument("--directions", type=int, default=None)
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(func=cmd_moments)

    b = sub.add_parser("bounds", help="evaluate one closed-form bound")
    b.add_argument("--kind", required=True,
                   choices=("thm1", "thm2-l2", "thm2-kp", "cor1", "cor2", "cor3"))
    b.add_argument("--params", required=True,
                   help="comma separated k=v pairs")
    b.set_defaults(func=cmd_bounds)

    k = sub.add_parser("check", help="run a verification suite")
    k.add_argument("--suite", required=True, choices=("lemma1", "lemma2", "lemma3"))
    k.add_argument("--trials", type=int, required=True)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--ensemble", default="gaussian:p=5",
                   help="lemma2 only: ensemble under test")
    k.add_argument("--a", type=float, default=0.2, help="lemma2 truncation level")
    k.add_argument("--b", type=float, default=4.0 / 3.0, help="lemma2 damping")
    k.add_argument("--t-grid", default="0.5,1,2,3", help="lemma3 tail grid")
    k.add_argument("--steps", type=int, default=64, help="lemma3 path length")
    k.set_defaults(func=cmd_check)

    r = sub.add_parser("simulate", help="run an experiment config")
    r.add_argument("--config", required=True)
    r.add_argument("--out", help="write the JSON report here")
    r.add_argument("--csv", help="write CSV reports here")
    r.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="repeat an experiment along one axis")
    w.add_argument("--config", required=True)
    w.add_argument("--axis", required=True, choices=harness.SWEEP_AXES)
    w.add_argument("--values", required=True, help="comma separated values")
    w.add_argument("--out-dir", help="directory for per-value JSON reports")
    w.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; the harness contract wants 1
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (SpectralBarrierError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
