"""High-precision special functions and combinatorial coefficients.

Arbitrary-precision scalars ("BigReal") are MPFR floats from :mod:`gmpy2`;
each value carries its working precision in bits (``x.precision``) and
arithmetic is deterministic round-to-nearest for a fixed precision.  The
binomially weighted alternating sums of incomplete gamma functions that show
up in the predictive weights and the exact posterior PMF cancel
catastrophically in 64-bit floats once ``n + m`` reaches a few dozen, which
is why everything in this module defaults to 256-bit arithmetic and the sums
are re-evaluated at doubling precision until stable.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence, Tuple

import gmpy2
import numpy as np
from scipy import optimize

__all__ = [
    "BigReal",
    "DEFAULT_PRECISION",
    "bigreal",
    "upper_incomplete_gamma",
    "rising_factorial",
    "GfcTable",
    "gfc",
    "gfc_log_row",
    "signed_alternating_sum",
    "TiltedGammaCache",
    "tilted_gamma_sum",
    "log_tilted_gamma_integral",
    "zolotarev_a",
    "stable_density",
    "stable_density_quadrature",
    "stable_cdf",
]

#: Arbitrary-precision real scalar.  ``x.precision`` is the working precision
#: in bits; values are immutable.
BigReal = gmpy2.mpfr

DEFAULT_PRECISION = 256
MIN_PRECISION = 64


def _context(precision: int) -> gmpy2.context:
    if precision < MIN_PRECISION:
        raise ValueError(f"precision must be >= {MIN_PRECISION} bits, got {precision}")
    return gmpy2.context(precision=precision)


def bigreal(x, precision: int = DEFAULT_PRECISION) -> BigReal:
    """Convert ``x`` to an MPFR scalar with the given precision."""
    with _context(precision):
        return gmpy2.mpfr(x)


# ---------------------------------------------------------------------------
# Incomplete gamma
# ---------------------------------------------------------------------------

def upper_incomplete_gamma(a, x, precision: int = DEFAULT_PRECISION) -> BigReal:
    """Upper incomplete gamma integral from ``x`` to infinity.

    For ``a > 0`` this is evaluated directly.  For ``a <= 0`` it is obtained
    by the downward recurrence ``G(a) = (G(a+1) - x^a e^-x) / a`` started
    from a positive seed; nonpositive integer ``a`` is routed through the
    exponential-integral value at ``a = 0`` because the recurrence divides
    by ``a``.
    """
    with _context(precision):
        x = gmpy2.mpfr(x)
        if x <= 0:
            raise ValueError("upper_incomplete_gamma requires x > 0")
        a = gmpy2.mpfr(a)
        if a > 0:
            return gmpy2.gamma_inc(a, x)
        emx = gmpy2.exp(-x)
        if a == gmpy2.floor(a):
            # integer chain seeded at a=0 with E1(x) = -Ei(-x)
            val = -gmpy2.eint(-x)
            cur = gmpy2.mpfr(0)
            while cur > a:
                cur -= 1
                val = (val - x ** cur * emx) / cur
            return val
        shift = int(gmpy2.ceil(-a))
        seed = a + shift + 1  # in (1, 2): a positive seed
        val = gmpy2.gamma_inc(seed, x)
        cur = seed
        for _ in range(shift + 1):
            cur -= 1
            val = (val - x ** cur * emx) / cur
        return val


def rising_factorial(a, m: int, precision: int = DEFAULT_PRECISION) -> BigReal:
    """Rising factorial ``a (a+1) ... (a+m-1)``; the empty product is 1."""
    if m < 0:
        raise ValueError("rising_factorial requires m >= 0")
    with _context(precision):
        a = gmpy2.mpfr(a)
        out = gmpy2.mpfr(1)
        for i in range(m):
            out *= a + i
        return out


# ---------------------------------------------------------------------------
# Non-central generalized factorial coefficients
# ---------------------------------------------------------------------------

class GfcTable:
    """Triangular table of non-central generalized factorial coefficients.

    Row ``n`` holds the connection coefficients of ``(sigma*t + r)_n`` in the
    rising-factorial basis ``(t)_k``, built by the recurrence

        C(n+1, k) = sigma * C(n, k-1) + (r + n - k*sigma) * C(n, k)

    with ``C(0, 0) = 1``.  Entries are MPFR scalars at the table's precision.
    """

    def __init__(self, sigma: float, r, max_n: int, precision: int = DEFAULT_PRECISION):
        if not 0 < sigma < 1:
            raise ValueError("sigma must lie in (0, 1)")
        if max_n < 0:
            raise ValueError("max_n must be nonnegative")
        self.sigma = sigma
        self.r = r
        self.max_n = max_n
        self.precision = precision
        with _context(precision):
            s = gmpy2.mpfr(sigma)
            rr = gmpy2.mpfr(r)
            rows = [[gmpy2.mpfr(1)]]
            for n in range(max_n):
                prev = rows[-1]
                nxt = []
                for k in range(n + 2):
                    v = gmpy2.mpfr(0)
                    if 1 <= k <= n:
                        v = s * prev[k - 1] + (rr + n - k * s) * prev[k]
                    elif k == n + 1:
                        v = s * prev[k - 1]
                    else:  # k == 0
                        v = (rr + n) * prev[0]
                    nxt.append(v)
                rows.append(nxt)
        self._rows = rows

    def value(self, n: int, k: int) -> BigReal:
        if n < 0 or n > self.max_n:
            raise IndexError(f"n={n} outside table range 0..{self.max_n}")
        if k < 0 or k > n:
            raise IndexError(f"k={k} outside 0..{n}")
        return self._rows[n][k]

    def row(self, n: int) -> Sequence[BigReal]:
        if n < 0 or n > self.max_n:
            raise IndexError(f"n={n} outside table range 0..{self.max_n}")
        return list(self._rows[n])


def gfc(n: int, k: int, sigma: float, r, precision: int = DEFAULT_PRECISION) -> BigReal:
    """Single non-central generalized factorial coefficient."""
    if k < 0 or k > n:
        raise IndexError(f"k={k} outside 0..{n}")
    return GfcTable(sigma, r, n, precision).value(n, k)


def gfc_log_row(n: int, sigma: float, r: float) -> np.ndarray:
    """Log of row ``n`` of the coefficient triangle in float64.

    Only valid (without cancellation) when ``r >= 0`` so that every
    recurrence coefficient is nonnegative; callers with ``r < 0`` must use
    :class:`GfcTable`.
    """
    if r < 0:
        raise ValueError("gfc_log_row requires r >= 0 (positive recurrence)")
    from . import _backend

    return _backend.gfc_row_log(n, sigma, r)


# ---------------------------------------------------------------------------
# Signed high-precision accumulation
# ---------------------------------------------------------------------------

def signed_alternating_sum(
    terms: Iterable[Tuple[int, float]], precision: int = DEFAULT_PRECISION
) -> BigReal:
    """Accumulate ``sum_i sign_i * exp(logmag_i)`` at the given precision.

    ``terms`` yields ``(sign, log-magnitude)`` pairs; signs are interpreted
    by their sign bit (0 is treated as +).  The accumulation itself is exact
    at working precision, so an exactly cancelling sequence returns 0.
    """
    with _context(precision):
        total = gmpy2.mpfr(0)
        for sign, logmag in terms:
            mag = gmpy2.exp(gmpy2.mpfr(logmag))
            total = total - mag if sign < 0 else total + mag
        return total


# ---------------------------------------------------------------------------
# Binomially weighted alternating incomplete-gamma sums
# ---------------------------------------------------------------------------

class TiltedGammaCache:
    """Evaluator for the alternating sums

        S(N, K) = sum_{l=0}^{N-1} C(N-1, l) (-1)^l beta^{l/sigma}
                  * Gamma(K - l/sigma; beta)

    shared by the predictive weights, the Gibbs weights and the exact PMF.
    The incomplete-gamma values along each ``l``-chain (fixed fractional
    offset, integer steps in ``K``) are memoized, as are the binomials and
    the beta powers.  Each sum is evaluated at increasing precision until two
    successive evaluations agree to ``rtol`` (the terms can exceed the result
    by hundreds of orders of magnitude).
    """

    def __init__(self, sigma: float, beta: float, precision: int = DEFAULT_PRECISION,
                 rtol: float = 1e-12):
        if not 0 < sigma < 1:
            raise ValueError("sigma must lie in (0, 1)")
        if beta <= 0:
            raise ValueError("TiltedGammaCache requires beta > 0; beta == 0 reduces to plain gamma")
        self.sigma = sigma
        self.beta = beta
        self.precision = precision
        self.rtol = rtol
        # per-precision state: {prec: (gammas, powers, x, emx)}
        self._state: dict = {}

    def _layer(self, prec: int):
        st = self._state.get(prec)
        if st is None:
            with _context(prec):
                x = gmpy2.mpfr(self.beta)
                st = ({}, {}, x, gmpy2.exp(-x))
            self._state[prec] = st
        return st

    def _gamma(self, K: int, l: int, prec: int) -> BigReal:
        """Gamma(K - l/sigma; beta), filling the whole chain above (same l)."""
        gammas, _, x, emx = self._layer(prec)
        got = gammas.get((l, K))
        if got is not None:
            return got
        with _context(prec):
            off = gmpy2.mpfr(l) / gmpy2.mpfr(self.sigma)
            a = K - off
            if a > 0:
                val = gmpy2.gamma_inc(a, x)
                gammas[(l, K)] = val
                return val
            # positive (or exponential-integral) seed, then walk down,
            # memoizing every integer step as the value for (l, K + i)
            if off == gmpy2.floor(off):
                ktop = int(off) + 1  # a_top = Ktop - off = 1 > 0
                aval = gmpy2.gamma_inc(gmpy2.mpfr(1), x)
            else:
                ktop = int(gmpy2.ceil(off))  # a_top in (0, 1)
                aval = gmpy2.gamma_inc(ktop - off, x)
            gammas.setdefault((l, ktop), aval)
            cur = ktop - off
            kk = ktop
            while kk > K:
                kk -= 1
                cur -= 1
                if cur == 0:
                    aval = -gmpy2.eint(-x)
                else:
                    aval = (aval - x ** cur * emx) / cur
                gammas[(l, kk)] = aval
            return aval

    def _value_at(self, N: int, K: int, prec: int) -> BigReal:
        _, powers, x, _ = self._layer(prec)
        with _context(prec):
            inv_sigma = 1 / gmpy2.mpfr(self.sigma)
            total = gmpy2.mpfr(0)
            for l in range(N):
                p = powers.get(l)
                if p is None:
                    p = x ** (l * inv_sigma)
                    powers[l] = p
                term = gmpy2.bincoef(N - 1, l) * p * self._gamma(K, l, prec)
                total = total - term if l % 2 else total + term
            return total

    def value(self, N: int, K: int) -> BigReal:
        """S(N, K) at adaptively verified precision (at least ``self.precision``)."""
        if N < 1 or K < 1:
            raise ValueError("need N >= 1 and K >= 1")
        prec = self.precision
        prev = self._value_at(N, K, prec)
        while prec < 1 << 16:
            prec *= 2
            cur = self._value_at(N, K, prec)
            if cur == prev or abs(cur - prev) <= abs(cur) * gmpy2.mpfr(self.rtol):
                return cur
            prev = cur
        raise ArithmeticError(
            f"alternating gamma sum did not stabilize by {prec} bits (N={N}, K={K})")


def tilted_gamma_sum(N: int, K: int, sigma: float, beta: float,
                     precision: int = DEFAULT_PRECISION) -> BigReal:
    """One-shot evaluation of the alternating incomplete-gamma sum S(N, K)."""
    if beta == 0:
        return gmpy2.gamma(bigreal(K, precision))
    return TiltedGammaCache(sigma, beta, precision).value(N, K)


def log_tilted_gamma_integral(N: int, Ks, sigma: float, beta: float) -> np.ndarray:
    """``log S(N, K)`` for an array of K via the integral representation

        S(N, K) = int_beta^inf y^{K-1} (1 - beta^{1/sigma} / y^{1/sigma})^{N-1}
                  e^{-y} dy,

    which is a positive smooth integrand (no cancellation) and therefore
    usable in float64 for the large ``N`` where the alternating sum would
    need tens of thousands of bits.  Uses composite Gauss-Legendre panels in
    ``s = sqrt(y)``, under which every ``y^K e^{-y}`` peak has O(1) width.
    """
    Ks = np.atleast_1d(np.asarray(Ks, dtype=np.float64))
    if beta < 0 or not 0 < sigma < 1:
        raise ValueError("need beta >= 0 and sigma in (0, 1)")
    kmax = float(Ks.max())
    c = beta ** (1.0 / sigma) if beta > 0 else 0.0
    s_lo = math.sqrt(beta) if beta > 0 else 0.0
    s_hi = math.sqrt(kmax + N + 12.0 * math.sqrt(kmax + N) + 60.0)
    nodes, weights = np.polynomial.legendre.leggauss(10)
    panel_w = 0.25
    npanels = max(8, int(math.ceil((s_hi - s_lo) / panel_w)))
    edges = np.linspace(s_lo, s_hi, npanels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    ss = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    ww = (half[:, None] * weights[None, :]).ravel()
    y = ss * ss
    with np.errstate(divide="ignore", invalid="ignore"):
        logy = np.log(y)
        base = -y + np.log(2.0 * ss * ww)
        if beta > 0:
            t = 1.0 - c * np.power(y, -1.0 / sigma)
            tilt = np.where(t > 0, (N - 1) * np.log(np.maximum(t, 1e-300)), -np.inf)
        else:
            tilt = np.zeros_like(y)
        g = base + tilt
    good = np.isfinite(g)
    logy = logy[good]
    g = g[good]
    out = np.empty(Ks.shape)
    chunk = max(1, int(4e6 / max(len(g), 1)))
    for i in range(0, len(Ks), chunk):
        kblk = Ks[i:i + chunk][:, None]
        h = (kblk - 1.0) * logy[None, :] + g[None, :]
        hmax = h.max(axis=1, keepdims=True)
        out[i:i + chunk] = (np.log(np.exp(h - hmax).sum(axis=1)) + hmax[:, 0])
    return out


# ---------------------------------------------------------------------------
# Positive stable density / CDF (Zolotarev representation)
# ---------------------------------------------------------------------------

def zolotarev_a(u, sigma: float):
    """Zolotarev's function A(u) on (0, pi); increasing, A(0+) finite."""
    u = np.asarray(u, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        val = (np.sin(sigma * u) ** sigma
               * np.sin((1.0 - sigma) * u) ** (1.0 - sigma)
               / np.sin(u)) ** (1.0 / (1.0 - sigma))
    a0 = (sigma ** sigma * (1.0 - sigma) ** (1.0 - sigma)) ** (1.0 / (1.0 - sigma))
    val = np.where(u <= 0, a0, val)
    return val if val.ndim else float(val)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
_GL_NODES_HALF, _GL_WEIGHTS_HALF = np.polynomial.legendre.leggauss(10)


def _gl_panel(f, lo: float, hi: float):
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    full = half * float(np.dot(_GL_WEIGHTS, f(mid + half * _GL_NODES)))
    coarse = half * float(np.dot(_GL_WEIGHTS_HALF, f(mid + half * _GL_NODES_HALF)))
    return full, abs(full - coarse)


def adaptive_gauss_legendre(f, lo: float, hi: float, tol: float = 1e-10,
                            max_depth: int = 48) -> float:
    """Adaptive Gauss-Legendre on [lo, hi] with interval bisection."""
    total = 0.0
    stack = [(lo, hi, 0)]
    while stack:
        a, b, depth = stack.pop()
        val, err = _gl_panel(f, a, b)
        if err <= tol * (1.0 + abs(val)) or depth >= max_depth:
            total += val
        else:
            m = 0.5 * (a + b)
            stack.append((a, m, depth + 1))
            stack.append((m, b, depth + 1))
    return total


def _zolotarev_split(sigma: float, c: float):
    """Split points of (0, pi) tracking the level sets of A(u) * c.

    A is increasing and blows up like (pi - u)^(-1/(1-sigma)) at the right
    endpoint, so panels spaced geometrically in A keep the integrand's
    variation bounded per panel even for sigma near 1."""
    a0 = zolotarev_a(0.0, sigma)
    points = [0.0]

    def a_inv(target):
        if target <= a0:
            return 0.0
        lo, hi = 1e-12, math.pi - 1e-12
        f = lambda u: zolotarev_a(u, sigma) - target
        if f(hi) < 0:
            return math.pi
        return optimize.brentq(f, lo, hi, xtol=1e-13)

    if c > 0:
        amax = 745.0 / c
        ndecades = max(0, int(math.ceil(math.log10(amax / a0))))
        levels = [a0 * 10.0 ** k for k in range(1, min(ndecades, 360))]
        for level in levels + [amax]:
            p = a_inv(level)
            if 1e-12 < p < math.pi - 1e-12:
                points.append(p)
    points.append(math.pi)
    return sorted(set(points))


def stable_density_quadrature(x: float, sigma: float) -> float:
    """Zolotarev-integral evaluation of the positive stable density, with no
    sigma = 1/2 shortcut (kept callable as a cross-check oracle)."""
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    if x <= 0:
        raise ValueError("stable_density requires x > 0")
    c = x ** (-sigma / (1.0 - sigma))
    pts = _zolotarev_split(sigma, c)

    def f(u):
        a = zolotarev_a(u, sigma)
        with np.errstate(over="ignore", invalid="ignore"):
            val = a * np.exp(-a * c)
        return np.where(np.isfinite(val), val, 0.0)

    total = sum(adaptive_gauss_legendre(f, lo, hi) for lo, hi in zip(pts[:-1], pts[1:]))
    return sigma / (1.0 - sigma) / math.pi * x ** (-1.0 / (1.0 - sigma)) * total


def stable_density(x: float, sigma: float) -> float:
    """Density of the positive sigma-stable law (Laplace exponent t^sigma)."""
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    if x <= 0:
        raise ValueError("stable_density requires x > 0")
    if sigma == 0.5:
        return x ** -1.5 * math.exp(-0.25 / x) / (2.0 * math.sqrt(math.pi))
    return stable_density_quadrature(x, sigma)


def stable_cdf(x: float, sigma: float) -> float:
    """CDF of the positive sigma-stable law."""
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    if x <= 0:
        return 0.0
    if sigma == 0.5:
        return float(math.erfc(0.5 / math.sqrt(x)))
    c = x ** (-sigma / (1.0 - sigma))
    pts = _zolotarev_split(sigma, c)

    def f(u):
        a = zolotarev_a(u, sigma)
        with np.errstate(over="ignore", invalid="ignore"):
            val = np.exp(-a * c)
        return np.where(np.isfinite(val), val, 0.0)

    total = sum(adaptive_gauss_legendre(f, lo, hi) for lo, hi in zip(pts[:-1], pts[1:]))
    return min(1.0, total / math.pi)
