"""Exact information measures on finite joints, plus the isotropic
Gaussian KL formulas used by the trajectory bounds.

All quantities are in nats.  Conventions: 0 log(0/q) = 0, and
p log(p/0) is an absolute-continuity violation (an error for table KL,
an infinite sentinel for the mixture upper bound, where it means the
estimator was fully confident and wrong).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DistributionError,
    DivergenceUndefinedError,
    UnsupportedCaseError,
    UsageError,
)

__all__ = [
    "FiniteJoint",
    "kl",
    "mutual_information",
    "conditional_mutual_information",
    "disintegrated_product_kl",
    "conditional_refinement_kl",
    "IsotropicGaussian",
    "gaussian_kl_isotropic",
    "mixture_gaussian_kl_bound",
    "gaussian_vs_mixture_kl_mc",
]

PROB_ATOL = 1e-12


class FiniteJoint:
    """Exact joint probability table over named finite variables.

    ``probs`` has one axis per variable, in the order of ``names``.
    """

    def __init__(self, names, probs: np.ndarray):
        names = tuple(names)
        probs = np.asarray(probs, dtype=np.float64)
        if probs.ndim != len(names):
            raise DistributionError("one table axis required per variable")
        if len(set(names)) != len(names):
            raise DistributionError("variable names must be unique")
        if probs.size and probs.min() < 0:
            raise DistributionError("negative probability in table")
        if abs(probs.sum() - 1.0) > PROB_ATOL:
            raise DistributionError(f"table sums to {probs.sum()!r}, not 1")
        self.names = names
        self.probs = probs

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UsageError(f"unknown variable {name!r}") from None

    def marginal(self, keep) -> "FiniteJoint":
        """Marginal over the named variables (original axis order kept)."""
        keep_axes = sorted(self.axis(n) for n in keep)
        drop = tuple(i for i in range(len(self.names)) if i not in keep_axes)
        return FiniteJoint(
            tuple(self.names[i] for i in keep_axes),
            self.probs.sum(axis=drop) if drop else self.probs,
        )


def _collapse(joint: FiniteJoint, *groups) -> np.ndarray:
    """Marginalize onto the union of the groups and flatten each group to
    one axis, in the given group order.  Empty groups become axes of
    size 1 (trivial conditioning)."""
    flat = [n for g in groups for n in g]
    if len(set(flat)) != len(flat):
        raise UsageError("variable groups overlap")
    keep = [joint.axis(n) for n in flat]
    drop = tuple(i for i in range(len(joint.names)) if i not in keep)
    p = joint.probs.sum(axis=drop) if drop else joint.probs
    kept_sorted = sorted(keep)
    p = np.transpose(p, [kept_sorted.index(a) for a in keep])
    sizes = []
    start = 0
    for g in groups:
        k = len(g)
        sizes.append(int(np.prod(p.shape[start : start + k], dtype=np.int64)))
        start += k
    return p.reshape(sizes)


def _kl_terms(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Elementwise p log(p/q) with 0 log 0 = 0; errors if p > 0 where q = 0."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    mask = p > 0
    if np.any(q[mask] == 0):
        raise DivergenceUndefinedError("p is not absolutely continuous w.r.t. q")
    out = np.zeros_like(p)
    out[mask] = p[mask] * (np.log(p[mask]) - np.log(q[mask]))
    return out


def kl(p: FiniteJoint, q: FiniteJoint) -> float:
    """Relative entropy sum p log(p/q) between two tables on the same vars."""
    if p.names != q.names or p.probs.shape != q.probs.shape:
        raise UsageError("KL requires identical variables and domains")
    return float(_kl_terms(p.probs, q.probs).sum())


def mutual_information(joint: FiniteJoint, group_a, group_b) -> float:
    """I(A;B) = KL(P_AB || P_A x P_B) for disjoint variable groups."""
    pab = _collapse(joint, group_a, group_b)
    pa = pab.sum(axis=1)
    pb = pab.sum(axis=0)
    return float(_kl_terms(pab, np.outer(pa, pb)).sum())


def conditional_mutual_information(joint: FiniteJoint, group_a, group_b, group_c) -> float:
    """I(A;B|C): expected divergence from conditional independence.

    Conditioning states of zero probability contribute nothing; an empty
    or trivial C reduces to the unconditional mutual information.
    """
    pabc = _collapse(joint, group_a, group_b, group_c)
    pc = pabc.sum(axis=(0, 1))
    pac = pabc.sum(axis=1)
    pbc = pabc.sum(axis=0)
    mask = pabc > 0
    # p(a,b,c) > 0 implies all three marginals below are positive
    num = np.ones_like(pabc)
    den = np.ones_like(pabc)
    num[mask] = (pabc * pc[None, None, :])[mask]
    den[mask] = (pac[:, None, :] * pbc[None, :, :])[mask]
    return float(np.sum(pabc[mask] * (np.log(num[mask]) - np.log(den[mask]))))


def disintegrated_product_kl(joint: FiniteJoint, group_a, group_b, group_c):
    """Per conditioning state c: KL(P_{A,B|c} || P_{A|c} x P_B).

    The right factor is the unconditional marginal of B.  Returns the
    pair (weights, kls): the probability of each conditioning state and
    the divergence given that state (0 where the weight is 0).
    """
    pabc = _collapse(joint, group_a, group_b, group_c)
    pc = pabc.sum(axis=(0, 1))
    pac = pabc.sum(axis=1)
    pb = pabc.sum(axis=(0, 2))
    mask = pabc > 0
    # p(a,b,c) > 0 implies p(a,c) > 0 and p(b) > 0; the 1/p(c) factors of
    # the conditionals cancel inside the log, leaving p(a,b,c)/(p(a,c) p(b))
    num = np.ones_like(pabc)
    den = np.ones_like(pabc)
    num[mask] = pabc[mask]
    den[mask] = (pac[:, None, :] * pb[None, :, None])[mask]
    terms = np.zeros_like(pabc)
    terms[mask] = pabc[mask] * (np.log(num[mask]) - np.log(den[mask]))
    sums = terms.sum(axis=(0, 1))
    kls = np.zeros_like(pc)
    pos = pc > 0
    kls[pos] = sums[pos] / pc[pos]
    np.maximum(kls, 0.0, out=kls)  # each state's true KL is >= 0; clip rounding
    return pc, kls


def conditional_refinement_kl(joint: FiniteJoint, group_w, fine, coarse):
    """Per fine conditioning state: KL(P_{W|fine} || P_{W|coarse}).

    ``coarse`` must be a subset of ``fine``; the coarse state is the one
    induced by the fine state.  Returns (weights over fine states, kls).
    """
    coarse = list(coarse)
    fine = list(fine)
    if any(n not in fine for n in coarse):
        raise UsageError("coarse conditioning must refine to the fine one")
    rest = [n for n in fine if n not in coarse]
    pwcr = _collapse(joint, group_w, coarse, rest)  # (nw, nc, nr)
    p_cr = pwcr.sum(axis=0)  # (nc, nr)
    p_wc = pwcr.sum(axis=2)  # (nw, nc)
    p_c = p_cr.sum(axis=1)  # (nc,)
    mask = pwcr > 0
    num = np.ones_like(pwcr)
    den = np.ones_like(pwcr)
    num[mask] = (pwcr * p_c[None, :, None])[mask]
    den[mask] = (p_wc[:, :, None] * p_cr[None, :, :])[mask]
    terms = np.zeros_like(pwcr)
    terms[mask] = pwcr[mask] * (np.log(num[mask]) - np.log(den[mask]))
    sums = terms.sum(axis=0)  # (nc, nr)
    kls = np.zeros_like(p_cr)
    pos = p_cr > 0
    kls[pos] = sums[pos] / p_cr[pos]
    np.maximum(kls, 0.0, out=kls)  # clip rounding below 0
    return p_cr.ravel(), kls.ravel()


@dataclass(frozen=True)
class IsotropicGaussian:
    """Mean vector plus a single positive scale (covariance sigma^2 I)."""

    mean: np.ndarray
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        if not np.isfinite(self.mean).all():
            raise UsageError("Gaussian mean must be finite")
        if not self.sigma > 0:
            raise UsageError("Gaussian scale must be positive")


def gaussian_kl_isotropic(p: IsotropicGaussian, q: IsotropicGaussian) -> float:
    """KL between equal-scale isotropic Gaussians: ||mu - mu'||^2 / (2 sigma^2)."""
    if p.sigma != q.sigma:
        raise UnsupportedCaseError("closed form implemented for equal scales only")
    if p.mean.shape != q.mean.shape:
        raise UsageError("dimension mismatch")
    diff = p.mean - q.mean
    return float(diff @ diff) / (2.0 * p.sigma**2)


def mixture_gaussian_kl_bound(c: float, pi: float, u: int) -> float:
    """Upper bound -log(|u - pi| e^{-c} + |(1 - pi) - u|) on the KL between
    a Gaussian and the two-component equal-scale mixture weighted by pi.

    ``c`` is the squared mean separation over twice the variance (for the
    trajectory bounds, eta^2 ||zeta||^2 / (2 sigma^2 |V|^2)).  Returns
    ``inf`` exactly when the mixture puts no mass on the true component
    and c is infinite: the estimator is fully confident and wrong.
    """
    if not c >= 0:
        raise UsageError("c must be non-negative")
    if not 0.0 <= pi <= 1.0:
        raise UsageError("pi must lie in [0, 1]")
    if u not in (0, 1):
        raise UsageError("u must be a bit")
    inner = abs(u - pi) * math.exp(-c) + abs((1.0 - pi) - u)
    if inner == 0.0:
        return math.inf
    return -math.log(inner)


def gaussian_vs_mixture_kl_mc(
    p: IsotropicGaussian,
    q0: IsotropicGaussian,
    q1: IsotropicGaussian,
    pi: float,
    nsamples: int,
    seed: int,
):
    """Monte Carlo estimate of KL(p || (1-pi) q0 + pi q1) with its
    standard error; all three scales must match."""
    if not (p.sigma == q0.sigma == q1.sigma):
        raise UnsupportedCaseError("all scales must be equal")
    if nsamples < 1000:
        raise UsageError("need at least 1000 samples")
    if not 0.0 <= pi <= 1.0:
        raise UsageError("pi must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    x = p.mean[None, :] + p.sigma * rng.standard_normal((nsamples, p.mean.size))
    inv2s2 = 1.0 / (2.0 * p.sigma**2)

    def logq(mean):
        d = x - mean[None, :]
        return -np.einsum("ij,ij->i", d, d) * inv2s2

    lp = logq(p.mean)
    if pi == 0.0:
        lmix = logq(q0.mean)
    elif pi == 1.0:
        lmix = logq(q1.mean)
    else:
        lmix = np.logaddexp(math.log1p(-pi) + logq(q0.mean), math.log(pi) + logq(q1.mean))
    w = lp - lmix
    return float(w.mean()), float(w.std(ddof=1) / math.sqrt(nsamples))
