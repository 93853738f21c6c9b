"""Exact random variate generation.

Building blocks:

* positive sigma-stable draws (Kanter's rejection-free construction),
* exponentially tilted stable draws (plain rejection for light tilts,
  Devroye-style double rejection for heavy ones),
* generalized Mittag-Leffler draws (gamma-randomized exponential tilting),

and on top of them the limiting variables of the normalized-generalized-gamma
and Poisson-Dirichlet posteriors, plus the species-sequence simulator for
the (sample size, distinct count) Markov chain.

All randomness flows through :class:`RandomState`, a counter-based
(Philox) generator with explicit stream splitting, so every sampler is
reproducible and parallel replications can use provably disjoint streams.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import gmpy2
import numpy as np
from scipy import integrate, optimize, special

from . import _backend
from .models import Family, ModelParams, SampleSummary
from .numerics import (
    DEFAULT_PRECISION,
    BigReal,
    TiltedGammaCache,
    bigreal,
    log_tilted_gamma_integral,
    stable_density,
    zolotarev_a,
)

__all__ = [
    "RandomState",
    "LimitLaw",
    "sample_positive_stable",
    "sample_exp_tilted_stable",
    "sample_mittag_leffler",
    "sample_limit_ngg",
    "sample_limit_ngg_with_stats",
    "sample_limit_pd",
    "simulate_additional_sample",
    "PLAIN_REJECTION_MAX_TILT",
    "SIMULATE_TABLE_LIMIT",
]

#: Tilting strengths up to this use plain rejection (acceptance e^-beta);
#: beyond it the double-rejection sampler, whose cost is bounded in beta.
PLAIN_REJECTION_MAX_TILT = 5.0

#: Largest m for which the NGG simulator uses per-step transition tables.
SIMULATE_TABLE_LIMIT = 512


class RandomState:
    """Reproducible counter-based random stream (Philox core).

    Identical (seed, stream history) produces identical draws.  ``split``
    derives independent child streams, each 2^128 steps apart in counter
    space, for parallel replication.
    """

    def __init__(self, seed: int = 0, _bit_generator=None):
        self.seed = int(seed)
        if _bit_generator is None:
            _bit_generator = np.random.Philox(key=np.uint64(self.seed & (2 ** 64 - 1)))
        self._bit_generator = _bit_generator
        self.generator = np.random.Generator(_bit_generator)

    def split(self, n: int):
        """n independent child states; the parent stream is left untouched."""
        return [RandomState(self.seed, self._bit_generator.jumped(i + 1))
                for i in range(n)]

    def __repr__(self):
        return f"RandomState(seed={self.seed})"


def _generator(rng) -> np.random.Generator:
    return rng.generator if isinstance(rng, RandomState) else rng


# ---------------------------------------------------------------------------
# Positive stable (Kanter / Zolotarev construction)
# ---------------------------------------------------------------------------

def sample_positive_stable(sigma: float, rng, size: Optional[int] = None):
    """Draws with Laplace transform exp(-lambda^sigma); exact, rejection-free."""
    if not 0.0 < sigma < 1.0:
        raise ValueError("sigma must lie in (0, 1)")
    gen = _generator(rng)
    n = 1 if size is None else size
    v = gen.uniform(0.0, math.pi, n)
    e = gen.standard_exponential(n)
    t = (zolotarev_a(v, sigma) / e) ** ((1.0 - sigma) / sigma)
    return float(t[0]) if size is None else t


# ---------------------------------------------------------------------------
# Exponentially tilted stable
# ---------------------------------------------------------------------------

def _sinc(x: float) -> float:
    if abs(x) < 1e-8:
        return 1.0 - x * x / 6.0
    return math.sin(x) / x


def _zolotarev_ratio(u: float, a: float) -> float:
    """sinc(u) / (sinc(a u)^a sinc((1-a) u)^(1-a)); the B/B0 ratio."""
    return _sinc(u) / (_sinc(a * u) ** a * _sinc((1.0 - a) * u) ** (1.0 - a))


def _double_rejection_tilted(alpha: float, lam: float, gen: np.random.Generator) -> float:
    """One exponentially tilted stable draw, tilt rate ``lam`` (density
    proportional to exp(-lam*t) f_alpha(t)).  Devroye's double-rejection
    scheme; expected cost is bounded uniformly in ``lam``."""
    b = (1.0 - alpha) / alpha
    lam_alpha = lam ** alpha
    gam = lam_alpha * alpha * (1.0 - alpha)
    sgam = math.sqrt(gam)
    c1 = math.sqrt(math.pi / 2.0)
    c3 = (2.0 + c1) * sgam
    xi = (1.0 + math.sqrt(2.0) * c3) / math.pi
    psi = c3 * math.exp(-gam * math.pi * math.pi / 8.0) / math.sqrt(math.pi)
    w1 = c1 * xi / sgam
    w2 = 2.0 * math.sqrt(math.pi) * psi
    w3 = xi * math.pi
    while True:
        # stage 1: proposal U on (0, pi) from a three-piece envelope
        while True:
            v = gen.random()
            if gam >= 1.0:
                if v < w1 / (w1 + w2):
                    u = abs(gen.standard_normal()) / sgam
                else:
                    w = gen.random()
                    u = math.pi * (1.0 - w * w)
            else:
                w = gen.random()
                if v < w3 / (w2 + w3):
                    u = math.pi * w
                else:
                    u = math.pi * (1.0 - w * w)
            if u >= math.pi:
                continue
            zeta = math.sqrt(_zolotarev_ratio(u, alpha))
            z = 1.0 / (1.0 - (1.0 + alpha * zeta / sgam) ** (-1.0 / alpha))
            d = 0.0
            if gam >= 1.0:
                d += xi * math.exp(-gam * u * u / 2.0)
            if 0.0 < u < math.pi:
                d += psi / math.sqrt(math.pi - u)
            if gam < 1.0:
                d += xi
            # acceptance ratio in logs: zeta -> 0 near u = pi overflows exp
            log_rho = (-lam_alpha * (1.0 - 1.0 / (zeta * zeta))
                       + math.log(math.pi) + math.log(d)
                       - math.log((1.0 + c1) * sgam / zeta + z))
            log_z = math.log(gen.random()) + log_rho
            if log_z <= 0.0:
                break
        # stage 2: X from the piecewise reference density conditioned on U
        a = zolotarev_a(u, alpha)
        mm = (b / a) ** alpha * lam_alpha
        delta = math.sqrt(mm * alpha / a)
        a1 = delta * c1
        a3 = z / a
        s = a1 + delta + a3
        v2 = gen.random()
        nrm = 0.0
        e1 = 0.0
        if v2 < a1 / s:
            nrm = gen.standard_normal()
            x = mm - delta * abs(nrm)
        elif v2 < (a1 + delta) / s:
            x = mm + delta * gen.random()
        else:
            e1 = -math.log(gen.random())
            x = mm + delta + e1 * a3
        if x <= 0.0:
            continue
        e2 = -log_z
        cost = a * (x - mm) + math.exp(math.log(lam_alpha) / alpha - b * math.log(mm)) \
            * ((mm / x) ** b - 1.0)
        if x < mm:
            cost -= nrm * nrm / 2.0
        elif x > mm + delta:
            cost -= e1
        if cost <= e2:
            return x ** (-b)


def _plain_rejection_tilted(sigma: float, beta: float, gen: np.random.Generator,
                            n: int) -> np.ndarray:
    """Vectorized plain rejection: propose stable, accept w.p. exp(-lam*T)."""
    lam = beta ** (1.0 / sigma)
    out = np.empty(n)
    have = 0
    while have < n:
        want = n - have
        batch = int(min(4_000_000, max(1000, want * math.exp(beta) * 1.4)))
        v = gen.uniform(0.0, math.pi, batch)
        e = gen.standard_exponential(batch)
        t = (zolotarev_a(v, sigma) / e) ** ((1.0 - sigma) / sigma)
        u = gen.random(batch)
        acc = t[u <= np.exp(-lam * t)]
        take = min(want, acc.size)
        out[have:have + take] = acc[:take]
        have += take
    return out


def sample_exp_tilted_stable(sigma: float, beta: float, rng,
                             size: Optional[int] = None):
    """Draws from the exponentially tilted stable law: density proportional
    to exp(-beta^(1/sigma) t) f_sigma(t)."""
    if not 0.0 < sigma < 1.0:
        raise ValueError("sigma must lie in (0, 1)")
    if beta <= 0.0:
        raise ValueError("beta must be > 0 (beta = 0 is the plain stable law)")
    gen = _generator(rng)
    n = 1 if size is None else size
    if beta <= PLAIN_REJECTION_MAX_TILT:
        t = _plain_rejection_tilted(sigma, beta, gen, n)
    else:
        lam = beta ** (1.0 / sigma)
        t = np.array([_double_rejection_tilted(sigma, lam, gen) for _ in range(n)])
    return float(t[0]) if size is None else t


# ---------------------------------------------------------------------------
# Generalized Mittag-Leffler
# ---------------------------------------------------------------------------

def sample_mittag_leffler(q: float, sigma: float, rng, size: Optional[int] = None):
    """Draws of the generalized Mittag-Leffler variable with index q > 0.

    Its reciprocal sigma-root is the polynomially tilted stable law with
    density proportional to t^(-q sigma) f_sigma(t); since the polynomial
    tilt is a gamma mixture of exponential tilts, an exact draw is
    T^(-sigma) with T exponentially tilted at random strength G ~ Gamma(q).
    """
    if q <= 0.0:
        raise ValueError("q must be > 0")
    if not 0.0 < sigma < 1.0:
        raise ValueError("sigma must lie in (0, 1)")
    gen = _generator(rng)
    n = 1 if size is None else size
    out = np.empty(n)
    for i in range(n):
        g = gen.standard_gamma(q)
        if g <= PLAIN_REJECTION_MAX_TILT:
            t = _plain_rejection_tilted(sigma, g, gen, 1)[0] if g > 0 else \
                sample_positive_stable(sigma, gen)
        else:
            t = _double_rejection_tilted(sigma, g ** (1.0 / sigma), gen)
        out[i] = t ** (-sigma)
    return float(out[0]) if size is None else out


def mittag_leffler_density(y, q: float, sigma: float):
    """Density of the generalized Mittag-Leffler variable (quadrature oracle)."""
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    pref = math.gamma(q * sigma + 1.0) / (sigma * math.gamma(q + 1.0))
    out = np.array([pref * yy ** (q - 1.0 - 1.0 / sigma)
                    * stable_density(yy ** (-1.0 / sigma), sigma) if yy > 0 else 0.0
                    for yy in y])
    return out if out.size > 1 else float(out[0])


def _mittag_leffler_inverse_cdf(q: float, sigma: float, rng,
                                size: Optional[int] = None, tol: float = 1e-10):
    """Quadrature-based inverse-CDF sampler (slow reference oracle).

    Also covers negative indices q in (-1, 0], which arise for PD priors
    with theta in (-sigma, 0] and have no tilting-based representation.
    """
    gen = _generator(rng)
    n = 1 if size is None else size
    if q == 0.0:
        t = sample_positive_stable(sigma, gen, size=n)
        out = np.asarray(t) ** -sigma
        return float(out[0]) if size is None else out
    pref = math.gamma(q * sigma + 1.0) / (sigma * math.gamma(q + 1.0))
    dens = lambda y: pref * y ** (q - 1.0 - 1.0 / sigma) * stable_density(y ** (-1.0 / sigma), sigma)

    def cdf(y):
        if y <= 0:
            return 0.0
        val, _ = integrate.quad(dens, 0.0, y, limit=300)
        return min(1.0, val)

    us = gen.random(n)
    out = np.empty(n)
    for i, u in enumerate(us):
        hi = 1.0
        while cdf(hi) < u and hi < 1e12:
            hi *= 2.0
        lo = 1e-12
        while cdf(lo) > u and lo > 1e-250:
            lo *= 1e-4
        out[i] = optimize.brentq(lambda y: cdf(y) - u, lo, hi, xtol=tol)
    return float(out[0]) if size is None else out


# ---------------------------------------------------------------------------
# Limiting variables of the conditional laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitLaw:
    """Limit of (new species count) / m^sigma given the basic sample.

    ``norm_const`` is the normalizing constant of the tilted density (and
    the acceptance rate of the rejection sampler): the alternating gamma sum
    at (n, j) divided by Gamma(j).  It is 1 when there is no tilt.
    """

    params: ModelParams
    sample: SampleSummary
    norm_const: BigReal

    @classmethod
    def for_posterior(cls, params: ModelParams, sample: SampleSummary,
                      precision: int = DEFAULT_PRECISION) -> "LimitLaw":
        if params.family is Family.NGG and not params.is_stable_boundary:
            cache = TiltedGammaCache(params.sigma, float(params.beta), precision)
            nc = cache.value(sample.n, sample.j) / gmpy2.gamma(bigreal(sample.j, precision))
        else:
            nc = bigreal(1, precision)
        return cls(params, sample, nc)


def _sample_scale_mixture(a: float, q: float, sigma: float,
                          gen: np.random.Generator, n: int) -> np.ndarray:
    """Beta(a, q - a) times an independent Mittag-Leffler with index q."""
    b = gen.beta(a, q - a, n)
    y = sample_mittag_leffler(q, sigma, gen, size=n)
    return b * y


def _limit_ngg_batches(law: LimitLaw, gen: np.random.Generator, n: int):
    """Returns (draws, proposals, acceptances); the last two count whole
    batches, so acceptances/proposals is an unbiased acceptance-rate
    estimate even though only the first n accepted draws are returned."""
    params, sm = law.params, law.sample
    sigma, beta = params.sigma, float(params.beta)
    q = sm.n / sigma
    out = np.empty(n)
    have = 0
    proposed = 0
    accepted = 0
    while have < n:
        want = n - have
        nc = max(float(law.norm_const), 1e-12)
        batch = int(min(2_000_000, max(200, want / nc * 1.3)))
        s = _sample_scale_mixture(sm.j, q, sigma, gen, batch)
        proposed += batch
        if beta == 0.0:
            acc = s
        else:
            u = gen.random(batch)
            acc = s[np.log(u) <= -((beta / s) ** (1.0 / sigma))]
        accepted += acc.size
        take = min(want, acc.size)
        out[have:have + take] = acc[:take]
        have += take
    return out, proposed, accepted


def sample_limit_ngg(law: LimitLaw, rng, size: Optional[int] = None):
    """Draws of the NGG limit variable by rejection from the untilted
    scale mixture, accepting with the exponential-tilt weight."""
    if law.params.family is not Family.NGG:
        raise ValueError("sample_limit_ngg requires an NGG limit law")
    gen = _generator(rng)
    n = 1 if size is None else size
    out, _, _ = _limit_ngg_batches(law, gen, n)
    return float(out[0]) if size is None else out


def sample_limit_ngg_with_stats(law: LimitLaw, rng, size: int) -> Tuple[np.ndarray, int, int]:
    """Draws plus whole-batch (proposals, acceptances) for rate checks."""
    if law.params.family is not Family.NGG:
        raise ValueError("sample_limit_ngg requires an NGG limit law")
    return _limit_ngg_batches(law, _generator(rng), size)


def sample_limit_pd(params: ModelParams, sample: SampleSummary, rng,
                    size: Optional[int] = None):
    """Draws of the PD limit variable: an independent beta times
    Mittag-Leffler product with posterior-updated parameters."""
    if params.family is not Family.PD:
        raise ValueError("sample_limit_pd requires a PD model")
    gen = _generator(rng)
    theta, sigma = float(params.theta), params.sigma
    n = 1 if size is None else size
    a = sample.j + theta / sigma
    q = (theta + sample.n) / sigma
    out = _sample_scale_mixture(a, q, sigma, gen, n)
    return float(out[0]) if size is None else out


# ---------------------------------------------------------------------------
# Species-sequence simulation
# ---------------------------------------------------------------------------

def _simulate_linear(theta: float, sigma: float, sample: SampleSummary, m: int,
                     gen: np.random.Generator, nreps: int) -> np.ndarray:
    k = _backend.chain_counts_linear(gen, sample.n, sample.j, m, sigma, theta, nreps)
    return np.asarray(k, dtype=np.int64) - sample.j


def _simulate_ngg_chain(params: ModelParams, sample: SampleSummary, m: int,
                        gen: np.random.Generator, nreps: int,
                        precision: int = DEFAULT_PRECISION) -> np.ndarray:
    """Exact chain with per-step tabulated transition probabilities."""
    from .posterior import ngg_transition_table

    table, _ = ngg_transition_table(params, sample, m, precision)
    k = _backend.chain_counts_table(gen, table, sample.j, nreps)
    return np.asarray(k, dtype=np.int64) - sample.j


def _simulate_ngg_tilt_rejection(params: ModelParams, sample: SampleSummary, m: int,
                                 gen: np.random.Generator, nreps: int) -> np.ndarray:
    """Exact NGG chain via change of measure from the stable chain.

    The NGG trajectory law is absolutely continuous with respect to the
    normalized-stable one with a likelihood ratio depending only on the
    final number of distinct species, so a stable trajectory accepted with
    probability S(n+m, j+k)/Gamma(j+k) is an exact NGG trajectory.  The
    expected acceptance rate is the limit law's normalizing constant.
    """
    n, j = sample.n, sample.j
    sigma, beta = params.sigma, float(params.beta)
    log_acc: dict = {}
    out = np.empty(nreps, dtype=np.int64)
    have = 0
    while have < nreps:
        want = nreps - have
        batch = int(min(2_000_000, max(200, want * 1.5)))
        k = _backend.chain_counts_linear(gen, n, j, m, sigma, 0.0, batch)
        k = np.asarray(k, dtype=np.int64)
        missing = sorted(set(int(v) for v in np.unique(k)) - set(log_acc))
        if missing:
            kv = np.array(missing, dtype=np.float64)
            la = (log_tilted_gamma_integral(n + m, kv, sigma, beta)
                  - special.gammaln(kv))
            log_acc.update(zip(missing, la))
        la = np.array([log_acc[int(v)] for v in k])
        u = gen.random(batch)
        acc = k[np.log(u) <= la]
        take = min(want, acc.size)
        out[have:have + take] = acc[:take]
        have += take
    return out - j


def simulate_additional_sample(params: ModelParams, sample: SampleSummary, m: int,
                               rng, replications: Optional[int] = None,
                               precision: int = DEFAULT_PRECISION):
    """Number of new species among m additional draws, by exact simulation
    of the (sample size, distinct count) Markov chain.

    Returns a single int, or an int64 array when ``replications`` is given.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    gen = _generator(rng)
    n = 1 if replications is None else replications
    if m == 0:
        out = np.zeros(n, dtype=np.int64)
    elif params.family is Family.PD or params.is_stable_boundary:
        theta = 0.0 if params.is_stable_boundary else float(params.theta)
        out = _simulate_linear(theta, params.sigma, sample, m, gen, n)
    elif m <= SIMULATE_TABLE_LIMIT:
        out = _simulate_ngg_chain(params, sample, m, gen, n, precision)
    else:
        out = _simulate_ngg_tilt_rejection(params, sample, m, gen, n)
    return int(out[0]) if replications is None else out
