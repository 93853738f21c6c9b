"""NumPy fallback for the hot kernels.

Must consume randomness in exactly the same order as the compiled versions
(step-major: one uniform per replication per step) so that results are
bit-identical across backends for a given generator state.
"""
from __future__ import annotations

import numpy as np

COMPILED = False


def gfc_row_log(m: int, sigma: float, r: float):
    """Log of row m of the generalized-factorial-coefficient triangle.

    Valid in the positive-recurrence regime r >= 0 (all coefficients
    nonnegative), where the recurrence adds positive terms and can run in
    log space without cancellation.
    """
    logsig = np.log(sigma)
    L = np.full(m + 1, -np.inf)
    L[0] = 0.0
    for i in range(m):
        top = i + 1
        with np.errstate(divide="ignore"):
            logcoef = np.log(r + i - np.arange(top) * sigma)
        L[top] = logsig + L[top - 1]
        if top > 1:
            L[1:top] = np.logaddexp(logsig + L[0:top - 1], logcoef[1:top] + L[1:top])
        L[0] = logcoef[0] + L[0]
    return L


def chain_counts_linear(generator, n0: int, j0: int, m: int, sigma: float,
                        theta: float, nreps: int):
    """Species-count Markov chain with p_new = (theta + k*sigma)/(theta + n').

    Covers the Pitman-Yor family; theta = 0 gives the normalized stable
    chain.  Returns the vector of final distinct-species counts k.
    """
    k = np.full(nreps, float(j0))
    for i in range(m):
        denom = theta + n0 + i
        u = generator.random(nreps)
        k += u < (theta + k * sigma) / denom
    return k.astype(np.int64)


def chain_counts_table(generator, ptable: np.ndarray, j0: int, nreps: int):
    """Species-count Markov chain driven by a precomputed transition table.

    ptable[i, k - j0] is the probability of a new species at step i from
    state k; entries beyond the reachable range are never used.
    """
    m = ptable.shape[0]
    k = np.full(nreps, j0, dtype=np.int64)
    for i in range(m):
        u = generator.random(nreps)
        k += u < ptable[i, k - j0]
    return k
