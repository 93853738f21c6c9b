"""Desk-scale invariant suite behind the CLI ``validate`` command.

Each check is quick (the whole suite runs in well under a minute) and
exercises one cross-cutting identity; the full grids live in the test
suite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from . import asymptotics, posterior, samplers
from .models import (
    ModelParams,
    SampleSummary,
    gibbs_vnk,
    ngg,
    pd,
    predictive_weights,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check_pmf_normalization() -> CheckResult:
    p = posterior.exact_pmf(ngg(0.5, 1.0), SampleSummary(5, 3), 25)
    err = abs(float(p.total_mass()) - 1.0)
    return CheckResult("pmf-normalization", err < 1e-9, f"|sum-1| = {err:.3e}")


def _check_oracle_equivalence() -> CheckResult:
    worst = 0.0
    for params in (ngg(0.5, 1.0), pd(0.5, 1.0)):
        sample = SampleSummary(5, 3)
        a = posterior.exact_pmf(params, sample, 15).as_floats()
        b = posterior.dp_oracle_pmf(params, sample, 15).as_floats()
        worst = max(worst, float(np.max(np.abs(a - b))))
    return CheckResult("oracle-equivalence", worst < 1e-10, f"max diff = {worst:.3e}")


def _check_gibbs_recursion() -> CheckResult:
    worst = 0.0
    for params in (ngg(0.6, 2.0), pd(0.35, 1.5)):
        for n in range(1, 12):
            for k in range(1, n + 1):
                v = gibbs_vnk(params, n, k)
                rhs = gibbs_vnk(params, n + 1, k + 1) + (n - k * params.sigma) * gibbs_vnk(params, n + 1, k)
                worst = max(worst, abs(float((v - rhs) / v)))
    return CheckResult("gibbs-recursion", worst < 1e-10, f"max rel residual = {worst:.3e}")


def _check_predictive_vs_gibbs() -> CheckResult:
    params = ngg(0.5, 2.0)
    n, j = 7, 4
    w = predictive_weights(params, n, j, [3, 2, 1, 1])
    ratio = float(gibbs_vnk(params, n + 1, j + 1) / gibbs_vnk(params, n, j))
    err = abs(w.p_new - ratio) / ratio
    norm = abs(w.total - 1.0)
    ok = err < 1e-10 and norm < 1e-12
    return CheckResult("predictive-vs-gibbs", ok,
                       f"ratio rel err = {err:.3e}, |sum-1| = {norm:.3e}")


def _check_stable_boundary() -> CheckResult:
    sample = SampleSummary(5, 3)
    a = posterior.exact_pmf(ngg(0.5, 1e-8), sample, 10).as_floats()
    b = posterior.exact_pmf(pd(0.5, 0.0), sample, 10).as_floats()
    err = float(np.max(np.abs(a - b)))
    return CheckResult("stable-boundary", err < 1e-5, f"max diff = {err:.3e}")


def _check_hpd() -> CheckResult:
    p = posterior.exact_pmf(ngg(0.5, 1.0), SampleSummary(4, 2), 12)
    iv = posterior.hpd_interval(p, 0.9)
    probs = p.as_floats()
    best = None
    for lo in range(13):
        for hi in range(lo, 13):
            if probs[lo:hi + 1].sum() >= 0.9:
                if best is None or hi - lo < best[1] - best[0]:
                    best = (lo, hi)
                break
    ok = best == (iv.lo, iv.hi) and iv.mass >= 0.9
    return CheckResult("hpd-minimality", ok, f"interval = [{iv.lo}, {iv.hi}], mass = {iv.mass:.4f}")


def _check_reproducibility() -> CheckResult:
    a = samplers.sample_positive_stable(0.5, samplers.RandomState(123), size=64)
    b = samplers.sample_positive_stable(0.5, samplers.RandomState(123), size=64)
    s1, s2 = samplers.RandomState(123).split(2)
    c = samplers.sample_positive_stable(0.5, s1, size=64)
    d = samplers.sample_positive_stable(0.5, s2, size=64)
    ok = bool(np.all(a == b)) and not np.allclose(c, d)
    return CheckResult("rng-reproducibility", ok, "identical seeds match, split streams differ")


def _check_simulate_bernoulli() -> CheckResult:
    params = ngg(0.5, 1.0)
    sample = SampleSummary(4, 2)
    w = predictive_weights(params, 4, 2, [3, 1])
    ks = samplers.simulate_additional_sample(params, sample, 1,
                                             samplers.RandomState(5), replications=20000)
    phat = float(np.mean(ks))
    se = math.sqrt(w.p_new * (1 - w.p_new) / 20000)
    ok = abs(phat - w.p_new) < 4 * se
    return CheckResult("simulate-one-step", ok,
                       f"freq = {phat:.4f} vs p_new = {w.p_new:.4f} (4se = {4 * se:.4f})")


def _check_limit_density() -> CheckResult:
    from scipy import integrate

    params = ngg(0.5, 1.0)
    sample = SampleSummary(3, 2)
    mass, _ = integrate.quad(lambda z: asymptotics.limit_density(z, params, sample),
                             0, np.inf, limit=300)
    zs = np.linspace(0.2, 6.0, 12)
    diffs = [abs(asymptotics.limit_density(z, params, sample)
                 - asymptotics.limit_density_quadrature(z, params, sample)) for z in zs]
    ok = abs(mass - 1.0) < 1e-6 and max(diffs) < 1e-6
    return CheckResult("limit-density", ok,
                       f"|mass-1| = {abs(mass - 1):.2e}, closed-vs-quad = {max(diffs):.2e}")


_CHECKS: List[Callable[[], CheckResult]] = [
    _check_pmf_normalization,
    _check_oracle_equivalence,
    _check_gibbs_recursion,
    _check_predictive_vs_gibbs,
    _check_stable_boundary,
    _check_hpd,
    _check_reproducibility,
    _check_simulate_bernoulli,
    _check_limit_density,
]


def run_all() -> List[CheckResult]:
    return [c() for c in _CHECKS]
