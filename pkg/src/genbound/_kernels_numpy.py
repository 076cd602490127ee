"""Pure-numpy kernel: vectorized across trajectories and batch members.

Same contract as the numba twin; selected via GENBOUND_BACKEND=numpy.
"""

from __future__ import annotations

import numpy as np


def _sigmoid_grad_coef(m, ys):
    # loss value 1/(1+exp(m)) through tanh, then d/dtheta coefficient
    val = 0.5 * (1.0 - np.tanh(0.5 * m))
    return -ys * val * (1.0 - val)


def pair_stats(theta0, noises, batches, in_batch, xs, ys, c0x, c0y, c1x, c1y, ubits, etas, sigmas):
    """Run R trajectories sharing the batch sequence and return, per
    scored slot and iteration where the slot was in the batch, the
    incoherence coefficient c and the log-likelihood increment Y0 - Y1.

    theta0 (R,d); noises (R,T,d); batches (T,K) ints into the dataset;
    in_batch (nj,T) bool per scored slot; xs/ys the composed dataset;
    c0*/c1* the two candidate samples per scored slot; ubits the true
    selection bits.  Returns (theta_last (R,d), c (R,nj,T), dy (R,nj,T)).
    """
    r_n, d = theta0.shape
    t_n, k_n = batches.shape
    nj = ubits.shape[0]
    cvals = np.zeros((r_n, nj, t_n))
    dy = np.zeros((r_n, nj, t_n))
    theta = theta0.astype(np.float64, copy=True)
    for t in range(t_n):
        eta = etas[t]
        sig = sigmas[t]
        bidx = batches[t]
        xb = xs[bidx]  # (K, d)
        yb = ys[bidx]
        coef = _sigmoid_grad_coef(yb[None, :] * (theta @ xb.T), yb[None, :])  # (R, K)
        gsum = np.einsum("rk,kq->rq", coef, xb)  # (R, d)
        theta_new = theta - (eta / k_n) * gsum + sig * noises[:, t, :]
        hit = np.nonzero(in_batch[:, t])[0]
        if hit.size:
            x0 = c0x[hit]
            x1 = c1x[hit]
            k0 = _sigmoid_grad_coef(c0y[hit][None, :] * (theta @ x0.T), c0y[hit][None, :])
            k1 = _sigmoid_grad_coef(c1y[hit][None, :] * (theta @ x1.T), c1y[hit][None, :])
            g0 = k0[:, :, None] * x0[None, :, :]  # (R, nj_t, d)
            g1 = k1[:, :, None] * x1[None, :, :]
            zeta = g0 - g1
            inv2s2 = 1.0 / (2.0 * sig * sig)
            cvals[:, hit, t] = (eta * eta / (k_n * k_n)) * inv2s2 * np.einsum(
                "rjq,rjq->rj", zeta, zeta
            )
            gtrue = np.where(ubits[hit][None, :, None] == 0, g0, g1)
            resid = (theta_new - theta)[:, None, :] + (eta / k_n) * (gsum[:, None, :] - gtrue)
            a0 = resid + (eta / k_n) * g0
            a1 = resid + (eta / k_n) * g1
            dy[:, hit, t] = inv2s2 * (
                np.einsum("rjq,rjq->rj", a0, a0) - np.einsum("rjq,rjq->rj", a1, a1)
            )
        theta = theta_new
    return theta, cvals, dy
