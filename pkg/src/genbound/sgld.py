"""Stochastic gradient Langevin dynamics, trajectory records, and the
per-iteration statistics feeding the trajectory bounds.

The update is theta_t = theta_{t-1} - eta_t * grad of the mini-batch
empirical risk + sigma_t * standard Gaussian noise, for t = 1..T.
Iterations are 1-based throughout this module; ``thetas[t]`` is theta_t
and ``batches[t-1]`` is the batch used for step t.

Everything here is the loss-generic reference path; the Monte Carlo
estimators in :mod:`genbound.bounds` run the same computation through
vectorized kernels and are validated against this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import LabeledSet
from .errors import SgldDivergenceError, UsageError
from .info import mixture_gaussian_kl_bound
from .subsample import SuperSample

__all__ = [
    "ConstantSchedule",
    "StepDecaySchedule",
    "SGLDConfig",
    "Trajectory",
    "run_sgld",
    "run_sgld_from_arrays",
    "write_trajectory",
    "incoherence",
    "y_statistic",
    "EstimatorState",
    "pi_estimate",
    "per_iter_c",
    "per_iter_f",
    "per_iter_g",
    "crossover_curves",
    "crossover_root",
]


@dataclass(frozen=True)
class ConstantSchedule:
    value: float

    def __call__(self, t: int) -> float:
        return self.value


@dataclass(frozen=True)
class StepDecaySchedule:
    """base / ceil(t / every): halves-then-thirds style staircase decay."""

    base: float
    every: int = 50

    def __call__(self, t: int) -> float:
        return self.base / math.ceil(t / self.every)


@dataclass(frozen=True)
class SGLDConfig:
    """Iteration count, batch size, step/noise schedules and seeds.

    Seeds may stay None when the trajectory randomness is supplied
    externally (as the Monte Carlo estimators do)."""

    t_max: int
    batch_size: int
    eta: object  # callable t -> eta_t > 0, t in 1..t_max
    sigma: object  # callable t -> sigma_t > 0
    theta0_seed: int | None = None
    noise_seed: int | None = None
    batch_seed: int | None = None
    theta0_scale: float = 1.0

    def __post_init__(self):
        if self.t_max < 1 or self.batch_size < 1:
            raise UsageError("need t_max >= 1 and batch_size >= 1")

    def eta_array(self) -> np.ndarray:
        out = np.array([self.eta(t) for t in range(1, self.t_max + 1)], dtype=np.float64)
        if not (out > 0).all():
            raise UsageError("step sizes must be positive")
        return out

    def sigma_array(self) -> np.ndarray:
        out = np.array([self.sigma(t) for t in range(1, self.t_max + 1)], dtype=np.float64)
        if not (out > 0).all():
            raise UsageError("noise scales must be positive")
        return out


@dataclass(frozen=True)
class Trajectory:
    """Full record of one run: iterates, batches, noises and the
    per-sample gradients of the batch members at theta_{t-1}."""

    thetas: np.ndarray  # (T+1, d)
    batches: np.ndarray  # (T, K)
    noises: np.ndarray  # (T, d)
    grads: np.ndarray  # (T, K, d)
    etas: np.ndarray  # (T,)
    sigmas: np.ndarray  # (T,)

    @property
    def t_max(self) -> int:
        return self.batches.shape[0]

    @property
    def batch_size(self) -> int:
        return self.batches.shape[1]

    @property
    def dim(self) -> int:
        return self.thetas.shape[1]


def run_sgld_from_arrays(theta0, noises, batches, etas, sigmas, data: LabeledSet, loss) -> Trajectory:
    """Run the update rule with all randomness supplied as arrays."""
    theta0 = np.asarray(theta0, dtype=np.float64)
    t_max, k = batches.shape
    d = theta0.size
    thetas = np.empty((t_max + 1, d))
    grads = np.empty((t_max, k, d))
    thetas[0] = theta0
    theta = theta0
    for t in range(1, t_max + 1):
        for pos, i in enumerate(batches[t - 1]):
            grads[t - 1, pos] = loss.grad(theta, data[int(i)])
        theta = theta - (etas[t - 1] / k) * grads[t - 1].sum(axis=0) + sigmas[t - 1] * noises[t - 1]
        if not np.isfinite(theta).all():
            raise SgldDivergenceError(t)
        thetas[t] = theta
    return Trajectory(thetas, np.asarray(batches), np.asarray(noises), grads,
                      np.asarray(etas), np.asarray(sigmas))


def run_sgld(cfg: SGLDConfig, data: LabeledSet, loss) -> Trajectory:
    """Seeded run: bit-for-bit reproducible given the three config seeds."""
    if None in (cfg.theta0_seed, cfg.noise_seed, cfg.batch_seed):
        raise UsageError("run_sgld needs all three seeds set in the config")
    n = len(data)
    if cfg.batch_size > n:
        raise UsageError("batch size exceeds dataset size")
    d = data.xs.shape[1]
    theta0 = np.random.default_rng(cfg.theta0_seed).standard_normal(d) * cfg.theta0_scale
    noises = np.random.default_rng(cfg.noise_seed).standard_normal((cfg.t_max, d))
    keys = np.random.default_rng(cfg.batch_seed).random((cfg.t_max, n))
    batches = np.argsort(keys, axis=1)[:, : cfg.batch_size]
    return run_sgld_from_arrays(theta0, noises, batches, cfg.eta_array(), cfg.sigma_array(), data, loss)


def write_trajectory(traj: Trajectory, path) -> None:
    """Line-oriented text dump: one iteration per line with the iterate
    coordinates and the (1-based) batch indices."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# genbound trajectory v1\n")
        fh.write("# columns: t theta[0..d-1] batch[0..k-1] (batch indices 1-based)\n")
        coords = " ".join(format(v, ".17g") for v in traj.thetas[0])
        fh.write(f"0 {coords}\n")
        for t in range(1, traj.t_max + 1):
            coords = " ".join(format(v, ".17g") for v in traj.thetas[t])
            batch = " ".join(str(int(i) + 1) for i in traj.batches[t - 1])
            fh.write(f"{t} {coords} {batch}\n")


def _check_iteration(traj: Trajectory, t: int):
    if not 1 <= t <= traj.t_max:
        raise UsageError(f"iteration {t} outside 1..{traj.t_max}")


def incoherence(traj: Trajectory, ss: SuperSample, j: int, t: int, loss) -> np.ndarray:
    """Two-sample gradient gap at iteration t for slot j: the gradient of
    the first candidate minus the gradient of the second, both at
    theta_{t-1}.  Its norm is at most 2L for an L-Lipschitz loss."""
    _check_iteration(traj, t)
    theta = traj.thetas[t - 1]
    return np.asarray(loss.grad(theta, ss.ztilde[j])) - np.asarray(
        loss.grad(theta, ss.ztilde[j + ss.n])
    )


def y_statistic(traj: Trajectory, ss: SuperSample, j: int, t: int, u: int, loss) -> float:
    """Half the squared residual of the step under the hypothesis that
    slot j's bit equals u, in units of the step noise variance:

        (1/(2 sigma_t^2)) || theta_t - theta_{t-1}
            + (eta_t/K) (grad l(theta_{t-1}, cand_u) + sum_{i in V_t, i != j} grad l(theta_{t-1}, Z_i)) ||^2

    Only defined when j is in the batch of step t; elsewhere the two
    hypotheses give identical residuals and the term is dropped."""
    _check_iteration(traj, t)
    if u not in (0, 1):
        raise UsageError("u must be a bit")
    row = traj.batches[t - 1]
    hits = np.nonzero(row == j)[0]
    if hits.size == 0:
        raise UsageError(f"slot {j} not in the batch of iteration {t}")
    k = traj.batch_size
    theta = traj.thetas[t - 1]
    g_rest = traj.grads[t - 1].sum(axis=0) - traj.grads[t - 1, hits[0]]
    g_u = np.asarray(loss.grad(theta, ss.ztilde[j + u * ss.n]))
    resid = traj.thetas[t] - theta + (traj.etas[t - 1] / k) * (g_u + g_rest)
    return float(resid @ resid) / (2.0 * traj.sigmas[t - 1] ** 2)


@dataclass(frozen=True)
class EstimatorState:
    """Running log-odds of bit = 1 for one slot, accumulated over the
    iterations (strictly before the current one) whose batch held it."""

    log_odds: float = 0.0

    def advanced(self, y0: float, y1: float) -> "EstimatorState":
        return EstimatorState(self.log_odds + (y0 - y1))

    @property
    def pi(self) -> float:
        return 0.5 * (1.0 + math.tanh(0.5 * self.log_odds))


def pi_estimate(state: EstimatorState) -> float:
    """Logistic of the accumulated log-odds: with fair priors this is the
    exact posterior probability that the slot's bit is 1."""
    return state.pi


def per_iter_c(traj: Trajectory, ss: SuperSample, j: int, t: int, loss) -> float:
    """eta_t^2 ||zeta||^2 / (2 sigma_t^2 K^2), the shared scale of the
    two per-iteration summands."""
    zeta = incoherence(traj, ss, j, t, loss)
    k = traj.batch_size
    return float(traj.etas[t - 1] ** 2 * (zeta @ zeta)) / (
        2.0 * traj.sigmas[t - 1] ** 2 * k**2
    )


def per_iter_f(traj: Trajectory, ss: SuperSample, j: int, t: int, pi: float, loss) -> float:
    """Gaussian-reference summand c * (U_j - pi)^2."""
    return per_iter_c(traj, ss, j, t, loss) * (ss.u[j] - pi) ** 2


def per_iter_g(traj: Trajectory, ss: SuperSample, j: int, t: int, pi: float, loss) -> float:
    """Mixture-reference summand -log(|U_j - pi| e^{-c} + |(1-pi) - U_j|)."""
    return mixture_gaussian_kl_bound(per_iter_c(traj, ss, j, t, loss), pi, ss.u[j])


def crossover_curves(cs: np.ndarray, pi: float, u: int):
    """The two summands as functions of c at a fixed estimate pi."""
    cs = np.asarray(cs, dtype=np.float64)
    f = cs * (u - pi) ** 2
    g = -np.log(np.abs(u - pi) * np.exp(-cs) + abs((1.0 - pi) - u))
    return f, g


def crossover_root(pi: float = 0.5, u: int = 1, c_lo: float = 1e-3, c_hi: float = 50.0):
    """Positive root of f(c) = g(c), or None when the curves never cross.

    Returns (c_root, r_root) with r = sqrt(2 c), the crossover in the
    eta ||zeta|| / (sigma K) parametrization."""

    def h(c):
        f, g = crossover_curves(np.array([c]), pi, u)
        return float(f[0] - g[0])

    lo, hi = c_lo, c_hi
    if not (h(lo) < 0 < h(hi)):
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) < 0:
            lo = mid
        else:
            hi = mid
    c_root = 0.5 * (lo + hi)
    return c_root, math.sqrt(2.0 * c_root)
