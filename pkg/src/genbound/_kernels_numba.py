"""Numba kernel: one trajectory step at a time, explicit loops.

Same contract as the numpy twin in ``_kernels_numpy``; importing this
module requires numba.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def pair_stats(theta0, noises, batches, in_batch, xs, ys, c0x, c0y, c1x, c1y, ubits, etas, sigmas):
    r_n, d = theta0.shape
    t_n, k_n = batches.shape
    nj = ubits.shape[0]
    theta_last = np.empty((r_n, d))
    cvals = np.zeros((r_n, nj, t_n))
    dy = np.zeros((r_n, nj, t_n))
    theta = np.empty(d)
    theta_new = np.empty(d)
    gsum = np.empty(d)
    for r in range(r_n):
        for q in range(d):
            theta[q] = theta0[r, q]
        for t in range(t_n):
            eta = etas[t]
            sig = sigmas[t]
            for q in range(d):
                gsum[q] = 0.0
            for k in range(k_n):
                i = batches[t, k]
                m = 0.0
                for q in range(d):
                    m += theta[q] * xs[i, q]
                m *= ys[i]
                val = 0.5 * (1.0 - math.tanh(0.5 * m))
                coef = -ys[i] * val * (1.0 - val)
                for q in range(d):
                    gsum[q] += coef * xs[i, q]
            for q in range(d):
                theta_new[q] = theta[q] - (eta / k_n) * gsum[q] + sig * noises[r, t, q]
            inv2s2 = 1.0 / (2.0 * sig * sig)
            for jj in range(nj):
                if not in_batch[jj, t]:
                    continue
                m0 = 0.0
                m1 = 0.0
                for q in range(d):
                    m0 += theta[q] * c0x[jj, q]
                    m1 += theta[q] * c1x[jj, q]
                m0 *= c0y[jj]
                m1 *= c1y[jj]
                v0 = 0.5 * (1.0 - math.tanh(0.5 * m0))
                v1 = 0.5 * (1.0 - math.tanh(0.5 * m1))
                k0 = -c0y[jj] * v0 * (1.0 - v0)
                k1 = -c1y[jj] * v1 * (1.0 - v1)
                zsq = 0.0
                q0 = 0.0
                q1 = 0.0
                for q in range(d):
                    g0q = k0 * c0x[jj, q]
                    g1q = k1 * c1x[jj, q]
                    zq = g0q - g1q
                    zsq += zq * zq
                    if ubits[jj] == 0:
                        gtq = g0q
                    else:
                        gtq = g1q
                    resid = theta_new[q] - theta[q] + (eta / k_n) * (gsum[q] - gtq)
                    a0 = resid + (eta / k_n) * g0q
                    a1 = resid + (eta / k_n) * g1q
                    q0 += a0 * a0
                    q1 += a1 * a1
                cvals[r, jj, t] = eta * eta * zsq * inv2s2 / (k_n * k_n)
                dy[r, jj, t] = (q0 - q1) * inv2s2
            for q in range(d):
                theta[q] = theta_new[q]
        for q in range(d):
            theta_last[r, q] = theta[q]
    return theta_last, cvals, dy
