"""Losses, data distributions, hypotheses and risk functionals.

Two kinds of problems share this module.  Exact-oracle problems live on
finite spaces: a sample is an integer index into its domain and a
hypothesis is an integer index into a finite hypothesis set.  SGLD
problems are parametric: a hypothesis is a real vector theta and a sample
is a labelled feature vector.

A loss object is anything with float attributes ``a`` and ``b``
(``a < b``), an optional ``lipschitz`` attribute, an ``eval(w, z)``
method, and, when differentiable in the parameters, a ``grad(w, z)``
method returning a vector of the same dimension as ``w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DistributionError, UsageError

__all__ = [
    "LabeledExample",
    "LabeledSet",
    "TableLoss",
    "SigmoidLoss",
    "FiniteDistribution",
    "GaussianMixtureData",
    "population_risk",
    "empirical_risk",
    "grad_check",
    "hoeffding_sigma",
]

PMF_ATOL = 1e-12


@dataclass(frozen=True)
class LabeledExample:
    """A feature vector with a +-1 label."""

    x: np.ndarray
    y: float


class LabeledSet:
    """Column-stacked labelled examples: features (n, d) and labels (n,)."""

    def __init__(self, xs: np.ndarray, ys: np.ndarray):
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        if xs.ndim != 2 or ys.shape != (xs.shape[0],):
            raise UsageError("features must be (n, d) with matching labels (n,)")
        self.xs = xs
        self.ys = ys

    def __len__(self) -> int:
        return self.xs.shape[0]

    def __getitem__(self, i) -> LabeledExample:
        return LabeledExample(self.xs[i], float(self.ys[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def subset(self, indices) -> "LabeledSet":
        idx = np.asarray(indices, dtype=np.intp)
        return LabeledSet(self.xs[idx], self.ys[idx])

    @staticmethod
    def from_examples(examples) -> "LabeledSet":
        return LabeledSet(
            np.stack([e.x for e in examples]),
            np.array([e.y for e in examples], dtype=np.float64),
        )


class TableLoss:
    """Loss given by a lookup table over (hypothesis index, sample index)."""

    def __init__(self, table: np.ndarray, a: float, b: float):
        table = np.asarray(table, dtype=np.float64)
        if table.ndim != 2:
            raise UsageError("loss table must be 2-dimensional (w, z)")
        if not (a < b):
            raise UsageError("need a < b")
        if table.min() < a - 1e-15 or table.max() > b + 1e-15:
            raise UsageError("loss table leaves [a, b]")
        self.table = table
        self.a = float(a)
        self.b = float(b)
        self.lipschitz = None

    def eval(self, w: int, z: int) -> float:
        return float(self.table[w, z])


def _sigmoid(m):
    # logistic(-m) written through tanh so large |m| cannot overflow
    return 0.5 * (1.0 - np.tanh(0.5 * m))


class SigmoidLoss:
    """Bounded smooth classification loss 1 / (1 + exp(y <theta, x>)).

    Values lie in [0, 1]; the parameter gradient is -y x l (1 - l) whose
    norm is at most ||x|| / 4, so a feature-norm cap ``max_feature_norm``
    yields the Lipschitz constant max_feature_norm / 4.
    """

    a = 0.0
    b = 1.0

    def __init__(self, max_feature_norm: float):
        if max_feature_norm <= 0:
            raise UsageError("feature norm cap must be positive")
        self.max_feature_norm = float(max_feature_norm)
        self.lipschitz = self.max_feature_norm / 4.0

    def eval(self, theta: np.ndarray, z: LabeledExample) -> float:
        return float(_sigmoid(z.y * np.dot(theta, z.x)))

    def grad(self, theta: np.ndarray, z: LabeledExample) -> np.ndarray:
        val = _sigmoid(z.y * np.dot(theta, z.x))
        return (-z.y * val * (1.0 - val)) * z.x

    # vectorized forms used by the Monte Carlo estimators

    def eval_many(self, theta: np.ndarray, data: LabeledSet) -> np.ndarray:
        return _sigmoid(data.ys * (data.xs @ theta))

    def eval_grid(self, thetas: np.ndarray, data: LabeledSet) -> np.ndarray:
        """Loss values for a stack of parameters, shape (n_theta, n_data)."""
        return _sigmoid(data.ys[None, :] * (thetas @ data.xs.T))


class FiniteDistribution:
    """Exact finite sample distribution given by a pmf over {0..k-1}."""

    def __init__(self, pmf: np.ndarray):
        pmf = np.asarray(pmf, dtype=np.float64)
        if pmf.ndim != 1 or pmf.size == 0:
            raise DistributionError("pmf must be a non-empty vector")
        if pmf.min() < 0:
            raise DistributionError("pmf has negative mass")
        if abs(pmf.sum() - 1.0) > PMF_ATOL:
            raise DistributionError(f"pmf sums to {pmf.sum()!r}, not 1")
        self.pmf = pmf

    @property
    def size(self) -> int:
        return self.pmf.size

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(self.size, size=size, p=self.pmf)

    def population_risk(self, w, loss) -> float:
        return float(sum(p * loss.eval(w, z) for z, p in enumerate(self.pmf) if p > 0))


@dataclass(frozen=True)
class GaussianMixtureData:
    """Binary-label features x = y mu + noise, noise isotropic Gaussian
    truncated to ``noise_radius`` so that ||x|| <= ||mu|| + noise_radius.

    Population risk uses a fixed held-out sample drawn once from
    ``heldout_seed``; keep that seed disjoint from every training seed.
    """

    mu: tuple[float, ...]
    noise_radius: float = 3.0
    heldout_size: int = 100_000
    heldout_seed: int = 0x5EED_0FF

    @property
    def dim(self) -> int:
        return len(self.mu)

    @property
    def max_feature_norm(self) -> float:
        return float(np.linalg.norm(self.mu)) + self.noise_radius

    def make_loss(self) -> SigmoidLoss:
        return SigmoidLoss(self.max_feature_norm)

    def sample(self, rng: np.random.Generator, n: int) -> LabeledSet:
        ys = rng.choice([-1.0, 1.0], size=n)
        noise = rng.standard_normal((n, self.dim))
        # redraw the (rare) noise vectors outside the truncation radius
        while True:
            bad = np.linalg.norm(noise, axis=1) > self.noise_radius
            if not bad.any():
                break
            noise[bad] = rng.standard_normal((int(bad.sum()), self.dim))
        xs = ys[:, None] * np.asarray(self.mu)[None, :] + noise
        return LabeledSet(xs, ys)

    @cached_property
    def heldout(self) -> LabeledSet:
        rng = np.random.default_rng(self.heldout_seed)
        return self.sample(rng, self.heldout_size)

    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("heldout", None)  # workers redraw it from the seed
        return state

    def population_risk(self, w, loss) -> float:
        data = self.heldout
        if hasattr(loss, "eval_many"):
            return float(np.mean(loss.eval_many(np.asarray(w, dtype=np.float64), data)))
        return float(np.mean([loss.eval(w, z) for z in data]))


def population_risk(w, loss, dist) -> float:
    """Expected loss of hypothesis ``w`` under the sample distribution."""
    return dist.population_risk(w, loss)


def empirical_risk(w, loss, data) -> float:
    """Mean loss of ``w`` over a dataset (any non-empty sample sequence)."""
    vals = [loss.eval(w, z) for z in data]
    if not vals:
        raise UsageError("empirical risk of an empty dataset")
    return float(np.mean(vals))


def grad_check(loss, w: np.ndarray, z, h: float = 1e-5) -> float:
    """Max coordinate-wise gap between loss.grad and central differences."""
    if h <= 0:
        raise UsageError("step size must be positive")
    w = np.asarray(w, dtype=np.float64)
    g = np.asarray(loss.grad(w, z), dtype=np.float64)
    worst = 0.0
    for k in range(w.size):
        e = np.zeros_like(w)
        e[k] = h
        fd = (loss.eval(w + e, z) - loss.eval(w - e, z)) / (2.0 * h)
        worst = max(worst, abs(fd - g[k]))
    return worst


def hoeffding_sigma(loss) -> float:
    """Subgaussianity scale (b - a) / 2 of a loss bounded in [a, b]."""
    return (loss.b - loss.a) / 2.0
