"""Exact conditional inference on the number of new species.

Everything here conditions on a basic sample of size ``n`` with ``j``
distinct species and asks about the number ``K`` of new species among ``m``
additional observations.

The NGG distribution is assembled from three exact ingredients: a row of
non-central generalized factorial coefficients, the rising factorial
``(n)_m``, and the alternating incomplete-gamma sums.  A forward dynamic
program over the (sample size, distinct count) Markov chain provides an
independent oracle for the same distribution.  The PD distribution is
computed by the dynamic program directly, driven by the closed-form
predictive weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import gmpy2
import numpy as np
from scipy import special

from . import _backend
from .models import Family, ModelParams, SampleSummary, gibbs_vnk
from .numerics import (
    DEFAULT_PRECISION,
    BigReal,
    GfcTable,
    TiltedGammaCache,
    bigreal,
    log_tilted_gamma_integral,
    rising_factorial,
)

__all__ = [
    "PosteriorPMF",
    "HpdInterval",
    "ExactComputationLimit",
    "EXACT_M_LIMIT",
    "exact_pmf",
    "dp_oracle_pmf",
    "posterior_mean",
    "hpd_interval",
    "ngg_transition_table",
]

#: Largest additional-sample size the exact engine accepts.
EXACT_M_LIMIT = 10_000

# Above these sizes the arbitrary-precision paths hand over to the
# cancellation-free float64 representations (scaled coefficient rows, the
# integral form of the gamma sums).
_MP_ROW_CUTOFF = 400
_MP_SUM_CUTOFF = 600


class ExactComputationLimit(ValueError):
    """Exact PMF refused; use the asymptotics module for large m."""


@dataclass(frozen=True)
class PosteriorPMF:
    """Exact distribution of the number of new species among m additional draws."""

    m: int
    probs: tuple  # BigReal, indexed k = 0..m
    params: ModelParams
    sample: SampleSummary

    def as_floats(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])

    def total_mass(self) -> BigReal:
        tot = bigreal(0)
        for p in self.probs:
            tot += p
        return tot


@dataclass(frozen=True)
class HpdInterval:
    lo: int
    hi: int
    mass: float
    alpha: float


def _gibbs_pmf_from_gfc(sample: SampleSummary, m: int, sigma: float,
                        dsums: TiltedGammaCache, precision: int) -> List[BigReal]:
    """NGG PMF: gfc(m, k) * S(n+m, j+k) / ((n)_m * S(n, j)) for k = 0..m."""
    n, j = sample.n, sample.j
    r = n - j * sigma
    if m <= _MP_ROW_CUTOFF and n + m <= _MP_SUM_CUTOFF:
        denom = dsums.value(n, j) * rising_factorial(n, m, precision)
        row = GfcTable(sigma, r, m, precision).row(m)
        return [row[k] * dsums.value(n + m, j + k) / denom for k in range(m + 1)]
    # float64 log-space path: the coefficient recurrence has nonnegative
    # coefficients for r >= 0 and the gamma sums use their positive integral
    # representation, so there is no cancellation left to protect against.
    if n <= _MP_SUM_CUTOFF:
        log_dn = float(gmpy2.log(dsums.value(n, j)))
    else:
        log_dn = float(log_tilted_gamma_integral(n, np.array([j]), sigma, dsums.beta)[0])
    logdenom = log_dn + float(special.gammaln(n + m) - special.gammaln(n))
    logrow = _backend.gfc_row_log(m, sigma, r)
    logd = log_tilted_gamma_integral(n + m, j + np.arange(m + 1), sigma, dsums.beta)
    logp = logrow + logd - logdenom
    return [gmpy2.exp(bigreal(lp, precision)) for lp in logp]


def _dp_pmf_linear(sample: SampleSummary, m: int, sigma: float, theta: float,
                   precision: int) -> List[BigReal]:
    """Forward DP with p_new = (theta + k*sigma)/(theta + n') (PD family)."""
    n, j = sample.n, sample.j
    if m <= _MP_ROW_CUTOFF:
        with gmpy2.context(precision=precision):
            sig, th = gmpy2.mpfr(sigma), gmpy2.mpfr(theta)
            probs = [gmpy2.mpfr(1)]
            for i in range(m):
                denom = th + n + i
                nxt = [gmpy2.mpfr(0)] * (len(probs) + 1)
                for kk, p in enumerate(probs):
                    pnew = (th + (j + kk) * sig) / denom
                    nxt[kk + 1] += p * pnew
                    nxt[kk] += p * (1 - pnew)
                probs = nxt
            return probs
    probs = np.zeros(m + 1)
    probs[0] = 1.0
    karr = j + np.arange(m + 1, dtype=np.float64)
    for i in range(m):
        pnew = (theta + karr[: i + 1] * sigma) / (theta + n + i)
        moved = probs[: i + 1] * pnew
        probs[: i + 1] -= moved
        probs[1: i + 2] += moved
    return [bigreal(p, precision) for p in probs]


def exact_pmf(params: ModelParams, sample: SampleSummary, m: int,
              precision: int = DEFAULT_PRECISION) -> PosteriorPMF:
    """Exact conditional PMF of the number of new species in m more draws."""
    if m < 0:
        raise ValueError("m must be >= 0")
    if m > EXACT_M_LIMIT:
        raise ExactComputationLimit(
            f"exact PMF supports m <= {EXACT_M_LIMIT}; use "
            "asymptotics.approximate_posterior for larger additional samples")
    if m == 0:
        return PosteriorPMF(0, (bigreal(1, precision),), params, sample)
    if params.family is Family.PD or params.is_stable_boundary:
        theta = 0.0 if params.is_stable_boundary else float(params.theta)
        probs = _dp_pmf_linear(sample, m, params.sigma, theta, precision)
    else:
        dsums = TiltedGammaCache(params.sigma, float(params.beta), precision)
        probs = _gibbs_pmf_from_gfc(sample, m, params.sigma, dsums, precision)
    return PosteriorPMF(m, tuple(probs), params, sample)


def ngg_transition_table(params: ModelParams, sample: SampleSummary, m: int,
                         precision: int = DEFAULT_PRECISION):
    """New-species probabilities p(i, k) for the NGG chain, plus the Gibbs rows.

    Row i covers sample size n+i; column kk covers k = j+kk distinct species,
    kk = 0..i.  Built by seeding the top Gibbs row directly from the
    alternating sums and recursing downward (an addition of positive terms,
    so stable at any precision).  Returns (table, vrows) where table is a
    float64 array of shape (m, m+1) and vrows[i][kk] is the V value at
    sample size n+i and k = j+kk (up to one global factor shared by all
    entries, which cancels in every ratio).
    """
    n, j = sample.n, sample.j
    sigma, beta = params.sigma, float(params.beta)
    cache = TiltedGammaCache(sigma, beta, precision)
    with gmpy2.context(precision=precision):
        sig = gmpy2.mpfr(sigma)
        # top row: k from 1 to j+m (global e^beta / Gamma(n+m) factor dropped)
        top = [sig ** (k - 1) * cache.value(n + m, k) for k in range(1, j + m + 1)]
        rows = [None] * (m + 1)
        rows[m] = top  # index kk: k = kk + 1
        cur = top
        for back in range(1, m + 1):
            nprime = n + m - back
            nxt = []
            for idx in range(len(cur) - 1):
                k = idx + 1
                nxt.append(cur[idx + 1] + (nprime - k * sig) * cur[idx])
            rows[m - back] = nxt
            cur = nxt
        table = np.zeros((m, m + 1))
        for i in range(m):
            row_lo, row_hi = rows[i], rows[i + 1]
            for kk in range(i + 1):
                k = j + kk
                table[i, kk] = float(row_hi[k] / row_lo[k - 1])  # V_{n+i+1,k+1}/V_{n+i,k}
        vrows = [[rows[i][j + kk - 1] for kk in range(i + 1)] for i in range(m + 1)]
    return table, vrows


def dp_oracle_pmf(params: ModelParams, sample: SampleSummary, m: int,
                  precision: int = DEFAULT_PRECISION) -> PosteriorPMF:
    """Forward dynamic program over the (n', k') chain; same law as exact_pmf.

    The NGG transition probabilities come from ratios of Gibbs rows built by
    the downward recursion (not from the PMF formula), so agreement with
    :func:`exact_pmf` pins both the coefficient convention and the gamma
    sums.  For PD the ratios come from the closed-form Gibbs weights.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    if m == 0:
        return PosteriorPMF(0, (bigreal(1, precision),), params, sample)
    n, j = sample.n, sample.j
    with gmpy2.context(precision=precision):
        if params.family is Family.NGG and not params.is_stable_boundary:
            _, vrows = ngg_transition_table(params, sample, m, precision)
            pnew = lambda i, kk: vrows[i + 1][kk + 1] / vrows[i][kk]
        else:
            vcache = {}

            def vval(nn, kk):
                if (nn, kk) not in vcache:
                    vcache[(nn, kk)] = gibbs_vnk(params, nn, kk, precision)
                return vcache[(nn, kk)]

            pnew = lambda i, kk: vval(n + i + 1, j + kk + 1) / vval(n + i, j + kk)
        probs = [gmpy2.mpfr(1)]
        for i in range(m):
            nxt = [gmpy2.mpfr(0)] * (len(probs) + 1)
            for kk, p in enumerate(probs):
                pn = pnew(i, kk)
                nxt[kk + 1] += p * pn
                nxt[kk] += p * (1 - pn)
            probs = nxt
    return PosteriorPMF(m, tuple(probs), params, sample)


def posterior_mean(pmf: PosteriorPMF) -> float:
    """Expected number of new species (the quadratic-loss point estimate)."""
    tot = bigreal(0)
    for k, p in enumerate(pmf.probs):
        tot += k * p
    return float(tot)


def hpd_interval(pmf: PosteriorPMF, alpha: float) -> HpdInterval:
    """Shortest contiguous interval [lo, hi] with posterior mass >= alpha.

    Ties are broken toward the smaller lower endpoint.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    probs = pmf.as_floats()
    cum = np.concatenate([[0.0], np.cumsum(probs)])
    m = pmf.m
    for length in range(1, m + 2):
        mass = cum[length:] - cum[:-length]
        idx = np.nonzero(mass >= alpha)[0]
        if idx.size:
            lo = int(idx[0])
            return HpdInterval(lo, lo + length - 1, float(mass[lo]), alpha)
    # full support, mass short of alpha only through rounding
    return HpdInterval(0, m, float(cum[-1]), alpha)
