"""Prior families and their predictive machinery.

Two species sampling models are supported, both of Gibbs type:

* ``NGG(sigma, beta)`` -- normalized generalized gamma process.  Its
  predictive weights involve alternating sums of incomplete gamma functions
  and are evaluated in arbitrary precision.
* ``PD(sigma, theta)`` -- two-parameter Poisson-Dirichlet process, with
  closed-form rational weights.

``beta = 0`` and ``theta = 0`` both describe the normalized sigma-stable
process; the NGG boundary case is routed through the PD closed form to avoid
0^(l/sigma) ambiguity in the sums.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import gmpy2
import numpy as np

from .numerics import (
    DEFAULT_PRECISION,
    BigReal,
    TiltedGammaCache,
    bigreal,
    rising_factorial,
)


class Family(enum.Enum):
    NGG = "ngg"
    PD = "pd"


class ConsistencyError(ValueError):
    """Raised when observed frequencies contradict the sample summary."""


@dataclass(frozen=True)
class ModelParams:
    """Prior configuration: family tag plus (sigma, beta) or (sigma, theta)."""

    family: Family
    sigma: float
    beta: Optional[float] = None
    theta: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.sigma < 1.0:
            raise ValueError(f"sigma must lie in (0, 1), got {self.sigma}")
        if self.family is Family.NGG:
            if self.beta is None or self.theta is not None:
                raise ValueError("NGG takes beta (and no theta)")
            if self.beta < 0:
                raise ValueError(f"beta must be >= 0, got {self.beta}")
        else:
            if self.theta is None or self.beta is not None:
                raise ValueError("PD takes theta (and no beta)")
            if self.theta <= -self.sigma:
                raise ValueError(f"theta must exceed -sigma, got {self.theta}")

    @property
    def is_stable_boundary(self) -> bool:
        """True when the prior degenerates to the normalized sigma-stable process."""
        return (self.beta == 0.0) if self.family is Family.NGG else (self.theta == 0.0)


def ngg(sigma: float, beta: float) -> ModelParams:
    return ModelParams(Family.NGG, sigma, beta=beta)


def pd(sigma: float, theta: float) -> ModelParams:
    return ModelParams(Family.PD, sigma, theta=theta)


@dataclass(frozen=True)
class SampleSummary:
    """Basic-sample summary (n, j): size and number of distinct species.

    The pair is predictively sufficient for everything this library
    computes, so species frequencies are not stored here.
    """

    n: int
    j: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 1 <= self.j <= self.n:
            raise ValueError(f"j must lie in [1, n], got j={self.j}, n={self.n}")


@dataclass(frozen=True)
class PredictiveWeights:
    """One-step predictive weights: new species, plus one weight per old species."""

    p_new: float
    p_old: np.ndarray

    @property
    def total(self) -> float:
        return self.p_new + float(self.p_old.sum())


def predictive_weights(params: ModelParams, n: int, j: int,
                       freqs: Sequence[int],
                       precision: int = DEFAULT_PRECISION) -> PredictiveWeights:
    """Predictive weights after a sample of size n with j species of the
    given frequencies.

    Only (n, j) and the individual frequency enter each weight, but the full
    frequency vector is required so the caller stays honest about the
    exchangeable-sequence semantics.
    """
    freqs = np.asarray(list(freqs), dtype=np.int64)
    if len(freqs) != j:
        raise ConsistencyError(f"expected {j} frequencies, got {len(freqs)}")
    if (freqs < 1).any():
        raise ConsistencyError("all species frequencies must be >= 1")
    if int(freqs.sum()) != n:
        raise ConsistencyError(f"frequencies sum to {int(freqs.sum())}, expected n={n}")

    sigma = params.sigma
    if params.family is Family.PD or params.is_stable_boundary:
        theta = 0.0 if params.is_stable_boundary else float(params.theta)
        p_new = (theta + j * sigma) / (theta + n)
        p_old = (freqs - sigma) / (theta + n)
        return PredictiveWeights(p_new, p_old)

    cache = TiltedGammaCache(sigma, float(params.beta), precision)
    denom = cache.value(n, j)
    p_new = float(bigreal(sigma, precision) / n * cache.value(n + 1, j + 1) / denom)
    old_ratio = float(cache.value(n + 1, j) / (n * denom))
    p_old = (freqs - sigma) * old_ratio
    return PredictiveWeights(p_new, p_old)


def gibbs_vnk(params: ModelParams, n: int, k: int,
              precision: int = DEFAULT_PRECISION) -> BigReal:
    """Gibbs-type weight V_{n,k} for the configured family (positive)."""
    if not 1 <= k <= n:
        raise IndexError(f"k must lie in [1, n], got k={k}, n={n}")
    with gmpy2.context(precision=precision):
        if params.family is Family.PD or params.is_stable_boundary:
            theta = bigreal(0.0 if params.is_stable_boundary else params.theta, precision)
            sigma = bigreal(params.sigma, precision)
            num = gmpy2.mpfr(1)
            for i in range(1, k):
                num *= theta + i * sigma
            return num / rising_factorial(theta + 1, n - 1, precision)
        cache = TiltedGammaCache(params.sigma, float(params.beta), precision)
        sigma = bigreal(params.sigma, precision)
        return (gmpy2.exp(bigreal(params.beta, precision)) * sigma ** (k - 1)
                * cache.value(n, k) / gmpy2.gamma(gmpy2.mpfr(n)))


def diversity_sample(params: ModelParams, rng, size: Optional[int] = None):
    """Draws of the prior's clustering-rate limit variable (K_n / n^sigma).

    NGG: T^(-sigma) with T exponentially tilted stable. PD with theta > 0:
    the generalized Mittag-Leffler variable with index theta/sigma.  The
    theta in (-sigma, 0) corner has no tilting-based sampler and falls back
    to numeric CDF inversion.
    """
    from . import samplers

    sigma = params.sigma
    if params.is_stable_boundary:
        t = samplers.sample_positive_stable(sigma, rng, size=size)
        return t ** -sigma if size is not None else float(t) ** -sigma
    if params.family is Family.NGG:
        t = samplers.sample_exp_tilted_stable(sigma, float(params.beta), rng, size=size)
        return t ** -sigma if size is not None else float(t) ** -sigma
    theta = float(params.theta)
    if theta > 0:
        return samplers.sample_mittag_leffler(theta / sigma, sigma, rng, size=size)
    return samplers._mittag_leffler_inverse_cdf(theta / sigma, sigma, rng, size=size)
