"""Batch command-line front end.

Subcommands: pmf, estimate, hpd, simulate, sample-limit, validate.  One
UTF-8 JSON document (or CSV table) goes to stdout; diagnostics go to
stderr.  Exit codes: 0 success, 1 usage error, 2 validation failure.
Identical configurations (including seed) produce byte-identical output.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import List, Optional

import numpy as np

from . import __version__, asymptotics, posterior, validate
from .models import Family, ModelParams, SampleSummary
from .numerics import DEFAULT_PRECISION
from .posterior import EXACT_M_LIMIT, ExactComputationLimit
from .samplers import RandomState, LimitLaw, sample_limit_ngg, sample_limit_pd, \
    simulate_additional_sample

#: Replications/draws are sharded over this many split RNG streams; shard
#: results are concatenated in stream order, so output is independent of
#: any parallel completion order.
N_STREAMS = 8


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="speciesvariety",
        description="Bayesian nonparametric estimation of the number of new "
                    "species in an additional sample (NGG and Pitman-Yor priors).")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, need_m=True, randomized=False):
        p.add_argument("--model", choices=["ngg", "pd"], required=True)
        p.add_argument("--sigma", type=float, required=True)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--theta", type=float, default=None)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--j", type=int, required=True)
        if need_m:
            p.add_argument("--m", type=int, required=True)
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--draws", type=int, default=100_000)
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--precision-bits", type=int, default=DEFAULT_PRECISION)
        p.add_argument("--output", choices=["json", "csv"], default="json")
        p.add_argument("--force-exact", action="store_true")
        p.add_argument("--force-asymptotic", action="store_true")

    add_common(sub.add_parser("pmf", help="exact posterior PMF of the new-species count"))
    add_common(sub.add_parser("estimate", help="posterior point estimate (exact or asymptotic)"))
    add_common(sub.add_parser("hpd", help="shortest credible interval from the exact PMF"))
    add_common(sub.add_parser("simulate", help="simulate new-species counts"), randomized=True)
    add_common(sub.add_parser("sample-limit", help="draws of the large-m limit variable"),
               need_m=False, randomized=True)
    v = sub.add_parser("validate", help="run the invariant suite")
    v.add_argument("--output", choices=["json", "csv"], default="json")
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--precision-bits", type=int, default=DEFAULT_PRECISION)
    return parser


def _model_from_args(args) -> ModelParams:
    try:
        if args.model == "ngg":
            if args.beta is None:
                raise UsageError("--beta is required for --model ngg")
            if args.theta is not None:
                raise UsageError("--theta is not a NGG flag (use --beta)")
            return ModelParams(Family.NGG, args.sigma, beta=args.beta)
        if args.theta is None:
            raise UsageError("--theta is required for --model pd")
        if args.beta is not None:
            raise UsageError("--beta is not a PD flag (use --theta)")
        return ModelParams(Family.PD, args.sigma, theta=args.theta)
    except ValueError as exc:
        flag = "--sigma" if "sigma" in str(exc) else ("--beta" if "beta" in str(exc) else "--theta")
        raise UsageError(f"invalid value for {flag}: {exc}") from exc


def _sample_from_args(args) -> SampleSummary:
    try:
        return SampleSummary(args.n, args.j)
    except ValueError as exc:
        raise UsageError(f"invalid value for --n/--j: {exc}") from exc


def _model_dict(params: ModelParams) -> dict:
    return {"family": params.family.value, "sigma": params.sigma,
            "beta": params.beta, "theta": params.theta}


def _document(command: str, result: dict, args, params=None, sample=None,
              m=None, method=None, draws=None, streams=None) -> dict:
    return {
        "command": command,
        "model": _model_dict(params) if params is not None else None,
        "sample": {"n": sample.n, "j": sample.j} if sample is not None else None,
        "m": m,
        "result": result,
        "metadata": {
            "seed": getattr(args, "seed", None),
            "draws": draws,
            "method": method,
            "precision_bits": getattr(args, "precision_bits", DEFAULT_PRECISION),
            "streams": streams,
        },
    }


def _sharded_draws(total: int) -> List[int]:
    base, extra = divmod(total, N_STREAMS)
    return [base + (1 if i < extra else 0) for i in range(N_STREAMS)]


def _cmd_pmf(args) -> dict:
    params, sample = _model_from_args(args), _sample_from_args(args)
    if args.m < 0:
        raise UsageError("--m must be >= 0")
    pmf = posterior.exact_pmf(params, sample, args.m, args.precision_bits)
    return _document("pmf", {"probs": [float(p) for p in pmf.probs]},
                     args, params, sample, args.m, method="exact")


def _cmd_estimate(args) -> dict:
    params, sample = _model_from_args(args), _sample_from_args(args)
    if args.m < 0:
        raise UsageError("--m must be >= 0")
    if args.force_exact and args.force_asymptotic:
        raise UsageError("--force-exact and --force-asymptotic are mutually exclusive")
    use_exact = args.m <= EXACT_M_LIMIT
    if args.force_exact:
        use_exact = True
    if args.force_asymptotic:
        use_exact = False
    if use_exact:
        try:
            pmf = posterior.exact_pmf(params, sample, args.m, args.precision_bits)
        except ExactComputationLimit as exc:
            raise UsageError(f"--force-exact: {exc}") from exc
        result = {"point": posterior.posterior_mean(pmf), "method": "exact",
                  "interval": None, "mc_stderr": None, "mc_samples": None,
                  "finite_m_bias": None}
        return _document("estimate", result, args, params, sample, args.m, method="exact")
    rng = RandomState(args.seed)
    est = asymptotics.approximate_posterior(params, sample, max(args.m, 1),
                                            args.alpha, args.draws, rng,
                                            args.precision_bits)
    result = {"point": est.point, "method": "asymptotic",
              "interval": [est.interval[0], est.interval[1]],
              "mc_stderr": est.mc_stderr, "mc_samples": est.mc_samples,
              "finite_m_bias": "uncorrected"}
    return _document("estimate", result, args, params, sample, args.m,
                     method="asymptotic", draws=args.draws)


def _cmd_hpd(args) -> dict:
    params, sample = _model_from_args(args), _sample_from_args(args)
    if not 0.0 < args.alpha < 1.0:
        raise UsageError("--alpha must lie in (0, 1)")
    pmf = posterior.exact_pmf(params, sample, args.m, args.precision_bits)
    iv = posterior.hpd_interval(pmf, 1.0 - args.alpha)
    result = {"lo": iv.lo, "hi": iv.hi, "mass": iv.mass, "alpha": iv.alpha}
    return _document("hpd", result, args, params, sample, args.m, method="exact")


def _cmd_simulate(args) -> dict:
    params, sample = _model_from_args(args), _sample_from_args(args)
    if args.m < 0:
        raise UsageError("--m must be >= 0")
    if args.draws < 1:
        raise UsageError("--draws must be >= 1")
    streams = RandomState(args.seed).split(N_STREAMS)
    chunks = []
    for rng, count in zip(streams, _sharded_draws(args.draws)):
        if count:
            chunks.append(simulate_additional_sample(
                params, sample, args.m, rng, replications=count,
                precision=args.precision_bits))
    ks = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
    return _document("simulate", {"replications": [int(k) for k in ks]},
                     args, params, sample, args.m, method="markov-chain",
                     draws=args.draws, streams=N_STREAMS)


def _cmd_sample_limit(args) -> dict:
    params, sample = _model_from_args(args), _sample_from_args(args)
    if args.draws < 1:
        raise UsageError("--draws must be >= 1")
    streams = RandomState(args.seed).split(N_STREAMS)
    law = LimitLaw.for_posterior(params, sample, args.precision_bits) \
        if params.family is Family.NGG else None
    chunks = []
    for rng, count in zip(streams, _sharded_draws(args.draws)):
        if not count:
            continue
        if params.family is Family.NGG:
            chunks.append(sample_limit_ngg(law, rng, size=count))
        else:
            chunks.append(sample_limit_pd(params, sample, rng, size=count))
    zs = np.concatenate(chunks) if chunks else np.zeros(0)
    return _document("sample-limit", {"draws": [float(z) for z in zs]},
                     args, params, sample, None, method="rejection",
                     draws=args.draws, streams=N_STREAMS)


def _cmd_validate(args) -> dict:
    checks = validate.run_all()
    result = {
        "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail}
                   for c in checks],
        "all_passed": all(c.passed for c in checks),
    }
    return _document("validate", result, args, method="invariant-suite")


_RUNNERS = {
    "pmf": _cmd_pmf,
    "estimate": _cmd_estimate,
    "hpd": _cmd_hpd,
    "simulate": _cmd_simulate,
    "sample-limit": _cmd_sample_limit,
    "validate": _cmd_validate,
}


def _to_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cmd, res = doc["command"], doc["result"]
    if cmd == "pmf":
        w.writerow(["k", "prob"])
        for k, p in enumerate(res["probs"]):
            w.writerow([k, repr(p)])
    elif cmd == "estimate":
        w.writerow(["point", "method", "interval_lo", "interval_hi", "mc_stderr", "mc_samples"])
        iv = res["interval"] or [None, None]
        w.writerow([repr(res["point"]), res["method"],
                    None if iv[0] is None else repr(iv[0]),
                    None if iv[1] is None else repr(iv[1]),
                    None if res["mc_stderr"] is None else repr(res["mc_stderr"]),
                    res["mc_samples"]])
    elif cmd == "hpd":
        w.writerow(["lo", "hi", "mass", "alpha"])
        w.writerow([res["lo"], res["hi"], repr(res["mass"]), repr(res["alpha"])])
    elif cmd == "simulate":
        w.writerow(["replication", "k"])
        for i, k in enumerate(res["replications"]):
            w.writerow([i, k])
    elif cmd == "sample-limit":
        w.writerow(["draw", "z"])
        for i, z in enumerate(res["draws"]):
            w.writerow([i, repr(z)])
    else:  # validate
        w.writerow(["check", "passed", "detail"])
        for c in res["checks"]:
            w.writerow([c["name"], c["passed"], c["detail"]])
    return buf.getvalue()


def run(argv: Optional[List[str]] = None, out=None) -> int:
    """Parse and execute; returns the process exit code."""
    out = out if out is not None else sys.stdout
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed a message; remap usage failures to 1
        return 0 if exc.code == 0 else 1
    try:
        doc = _RUNNERS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, ExactComputationLimit) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if getattr(args, "output", "json") == "csv":
        out.write(_to_csv(doc))
    else:
        json.dump(doc, out, indent=2, sort_keys=True)
        out.write("\n")
    if args.command == "validate" and not doc["result"]["all_passed"]:
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
