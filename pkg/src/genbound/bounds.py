"""Monte Carlo estimators assembling the SGLD trajectory bounds.

Estimator structure, shared by all five bounds:

* outer replication: draw (supersample, bits, batch sequence, scored
  slots); when n <= 16 the slot average runs over every slot, otherwise
  one slot is sampled per draw;
* inner replication: ``n_inner`` trajectories sharing everything above
  but with fresh initialization and noise; per-iteration summands are
  averaged across them (the bit estimate is recomputed per trajectory,
  since it is a function of that trajectory's history);
* per draw: sum the inner means over the iterations whose batch held the
  slot, take the square root, apply the prefactor, average over slots;
* across draws: mean and standard error of the per-draw values.

The square root sits between the inner and outer means, so the reported
value inherits a downward bias of order 1/n_inner; raise ``n_inner``
to shrink it.  Divergent trajectories are excluded and counted.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from . import backends
from .core import GaussianMixtureData, LabeledSet, SigmoidLoss
from .errors import UsageError
from .sgld import SGLDConfig

__all__ = [
    "SgldProblem",
    "classification_problem",
    "BoundReport",
    "ExperimentResult",
    "run_experiment",
    "estimate_bound_f",
    "estimate_bound_g",
    "estimate_bound_min",
    "estimate_bound_lipschitz",
    "estimate_bound_negrea31",
    "estimate_gen_gap",
]

ENUMERATE_SLOTS_MAX = 16
BOUND_NAMES = ("f", "g", "min", "lipschitz", "negrea31")


@dataclass(frozen=True)
class SgldProblem:
    """Dataset size plus the sample distribution; the loss is the bounded
    sigmoid classification loss induced by the feature-norm cap."""

    n: int
    data: GaussianMixtureData

    @property
    def loss(self) -> SigmoidLoss:
        return self.data.make_loss()


def classification_problem(
    n: int,
    mu,
    noise_radius: float = 3.0,
    heldout_size: int = 100_000,
    heldout_seed: int = 0x5EED_0FF,
) -> SgldProblem:
    data = GaussianMixtureData(
        mu=tuple(float(v) for v in mu),
        noise_radius=noise_radius,
        heldout_size=heldout_size,
        heldout_seed=heldout_seed,
    )
    return SgldProblem(n=n, data=data)


@dataclass(frozen=True)
class BoundReport:
    name: str
    value: float
    stderr: float
    n_outer: int
    n_inner: int
    seed: int
    gen_gap_estimate: float
    gen_gap_stderr: float


@dataclass(frozen=True)
class ExperimentResult:
    reports: MappingProxyType
    gen_gap: float
    gen_gap_stderr: float
    emp_gen_gap: float
    emp_gen_gap_stderr: float
    per_iter: MappingProxyType
    mean_sq_pi_error: float
    diverged_trajectories: int
    total_trajectories: int
    skipped_draws: int

    @property
    def divergence_fraction(self) -> float:
        return self.diverged_trajectories / self.total_trajectories


def _one_draw(problem, etas, sigmas, k_n, theta0_scale, n_inner, master_seed, k, heldout):
    """All per-draw quantities; None-free dict, or a skip marker when
    every inner trajectory diverged."""
    n = problem.n
    t_n = etas.size
    loss = problem.loss
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(k,))
    s_data, s_u, s_batch, s_theta, s_noise, s_slot = seq.spawn(6)

    tilde = problem.data.sample(np.random.default_rng(s_data), 2 * n)
    u = np.random.default_rng(s_u).integers(0, 2, size=n)
    sel = np.arange(n) + u * n
    xs = tilde.xs[sel]
    ys = tilde.ys[sel]
    keys = np.random.default_rng(s_batch).random((t_n, n))
    batches = np.argsort(keys, axis=1)[:, :k_n].astype(np.int64)
    theta0 = np.random.default_rng(s_theta).standard_normal((n_inner, problem.data.dim))
    theta0 *= theta0_scale
    noises = np.random.default_rng(s_noise).standard_normal((n_inner, t_n, problem.data.dim))
    if n <= ENUMERATE_SLOTS_MAX:
        slots = np.arange(n, dtype=np.int64)
    else:
        slots = np.random.default_rng(s_slot).integers(0, n, size=1, dtype=np.int64)
    in_batch = (batches[None, :, :] == slots[:, None, None]).any(axis=2)
    ubits = u[slots].astype(np.int64)

    theta_last, cvals, dyvals = backends.pair_stats(
        theta0, noises, batches, in_batch,
        xs, ys,
        tilde.xs[slots], tilde.ys[slots],
        tilde.xs[slots + n], tilde.ys[slots + n],
        ubits, etas, sigmas,
    )
    flat = lambda a: a.reshape(a.shape[0], -1)
    ok = (
        np.isfinite(theta_last).all(axis=1)
        & np.isfinite(flat(cvals)).all(axis=1)
        & np.isfinite(flat(dyvals)).all(axis=1)
    )
    diverged = int(n_inner - ok.sum())
    if not ok.any():
        return {"skipped": True, "diverged": diverged}

    c = cvals[ok]
    dy = dyvals[ok]
    lam = np.zeros_like(dy)
    lam[:, :, 1:] = np.cumsum(dy, axis=2)[:, :, :-1]  # history strictly before t
    pi = 0.5 * (1.0 + np.tanh(0.5 * lam))
    err = ubits[None, :, None] - pi
    sq_err = err * err
    f = c * sq_err
    with np.errstate(divide="ignore"):
        g = -np.log(np.abs(err) * np.exp(-c) + np.abs(1.0 - pi - ubits[None, :, None]))
    g = np.maximum(g, 0.0)  # the argument is <= 1 up to rounding
    lip2 = (2.0 * loss.lipschitz) ** 2
    c_lip = etas**2 * lip2 / (2.0 * sigmas**2 * k_n**2)
    f_lip = c_lip[None, None, :] * sq_err

    mask = in_batch.astype(np.float64)
    summands = {
        "f": f * mask[None, :, :],
        "g": g * mask[None, :, :],
        "min": np.minimum(f, g) * mask[None, :, :],
        "lipschitz": f_lip * mask[None, :, :],
    }
    pref = math.sqrt(2.0) * (loss.b - loss.a)
    cums = {}
    sums = {}
    for name, arr in summands.items():
        inner_mean = arr.mean(axis=0)  # (nj, T)
        cums[name] = pref * np.sqrt(np.cumsum(inner_mean, axis=1)).mean(axis=0)
        sums[name] = arr.sum(axis=(0, 1))
    neg_w = (etas**2 / sigmas**2)[None, :] * mask
    neg_pref = loss.lipschitz * (loss.b - loss.a) / (math.sqrt(2.0) * k_n)
    cums["negrea31"] = neg_pref * np.sqrt(np.cumsum(neg_w, axis=1)).mean(axis=0)

    n_ok = int(ok.sum())
    theta_fin = theta_last[ok]
    pop = loss.eval_grid(theta_fin, heldout).mean(axis=1)
    emp = loss.eval_grid(theta_fin, LabeledSet(xs, ys)).mean(axis=1)
    tilde_losses = loss.eval_grid(theta_fin, tilde)
    unused = tilde_losses[:, np.arange(n) + (1 - u) * n].mean(axis=1)
    used = tilde_losses[:, sel].mean(axis=1)

    return {
        "skipped": False,
        "diverged": diverged,
        "cums": cums,
        "sums": sums,
        "cnt_batch": n_ok * mask.sum(axis=0),
        "sq_sum": sq_err.sum(axis=(0, 1)),
        "cnt_sq": float(n_ok * slots.size),
        "gen": float((pop - emp).mean()),
        "emp_gen": float((unused - used).mean()),
    }


def _draw_chunk(args):
    problem, etas, sigmas, k_n, theta0_scale, n_inner, master_seed, ks = args
    heldout = problem.data.heldout
    return [
        _one_draw(problem, etas, sigmas, k_n, theta0_scale, n_inner, master_seed, k, heldout)
        for k in ks
    ]


def _mean_stderr(values: np.ndarray, axis=0):
    mean = values.mean(axis=axis)
    if values.shape[axis] < 2:
        return mean, np.zeros_like(mean)
    return mean, values.std(axis=axis, ddof=1) / math.sqrt(values.shape[axis])


def run_experiment(
    problem: SgldProblem,
    cfg: SGLDConfig,
    n_outer: int,
    n_inner: int,
    master_seed: int,
    workers: int = 1,
) -> ExperimentResult:
    """Estimate all five bounds and the generalization gap on shared draws.

    Deterministic for fixed ``master_seed`` regardless of ``workers``:
    every draw's randomness comes from (master_seed, draw index) alone
    and draws are reduced in index order."""
    if n_outer < 2:
        raise UsageError("need at least two outer replications")
    if n_inner < 1:
        raise UsageError("need at least one inner trajectory")
    if cfg.batch_size > problem.n:
        raise UsageError("batch size exceeds dataset size")
    etas = cfg.eta_array()
    sigmas = cfg.sigma_array()
    base = (problem, etas, sigmas, cfg.batch_size, cfg.theta0_scale, n_inner, master_seed)

    chunk_size = 16
    chunks = [
        tuple(range(lo, min(lo + chunk_size, n_outer)))
        for lo in range(0, n_outer, chunk_size)
    ]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_draw_chunk, [base + (ks,) for ks in chunks]))
    else:
        parts = [_draw_chunk(base + (ks,)) for ks in chunks]
    results = [r for part in parts for r in part]

    t_n = etas.size
    diverged = sum(r["diverged"] for r in results)
    valid = [r for r in results if not r["skipped"]]
    skipped = len(results) - len(valid)
    if not valid:
        raise UsageError("every outer draw diverged; nothing to report")

    cum_stack = {
        name: np.stack([r["cums"][name] for r in valid]) for name in BOUND_NAMES
    }
    gens = np.array([r["gen"] for r in valid])
    emp_gens = np.array([r["emp_gen"] for r in valid])
    gen_gap, gen_gap_se = _mean_stderr(gens)
    emp_gen_gap, emp_gen_gap_se = _mean_stderr(emp_gens)

    per_iter = {
        "t": np.arange(1, t_n + 1, dtype=np.float64),
        "eta": etas,
        "sigma": sigmas,
    }
    cnt_batch = np.sum([r["cnt_batch"] for r in valid], axis=0)
    safe = np.maximum(cnt_batch, 1.0)
    for name in ("f", "g", "min"):
        per_iter[f"mean_{name}"] = np.sum([r["sums"][name] for r in valid], axis=0) / safe
    sq_mean_t = np.sum([r["sq_sum"] for r in valid], axis=0) / sum(r["cnt_sq"] for r in valid)
    per_iter["mean_sq_pi_error"] = sq_mean_t

    reports = {}
    for name in BOUND_NAMES:
        mean_t, se_t = _mean_stderr(cum_stack[name])
        per_iter[f"bound_{name}_cum"] = mean_t
        reports[name] = BoundReport(
            name=name,
            value=float(mean_t[-1]),
            stderr=float(se_t[-1]),
            n_outer=n_outer,
            n_inner=n_inner,
            seed=master_seed,
            gen_gap_estimate=float(gen_gap),
            gen_gap_stderr=float(gen_gap_se),
        )
    per_iter["gen_gap_estimate"] = np.full(t_n, float(gen_gap))
    per_iter["gen_gap_stderr"] = np.full(t_n, float(gen_gap_se))

    return ExperimentResult(
        reports=MappingProxyType(reports),
        gen_gap=float(gen_gap),
        gen_gap_stderr=float(gen_gap_se),
        emp_gen_gap=float(emp_gen_gap),
        emp_gen_gap_stderr=float(emp_gen_gap_se),
        per_iter=MappingProxyType(per_iter),
        mean_sq_pi_error=float(sq_mean_t.mean()),
        diverged_trajectories=diverged,
        total_trajectories=n_outer * n_inner,
        skipped_draws=skipped,
    )


def _single(problem, cfg, n_outer, n_inner, master_seed, workers, name):
    return run_experiment(problem, cfg, n_outer, n_inner, master_seed, workers).reports[name]


def estimate_bound_f(problem, cfg, n_outer, n_inner, master_seed, workers=1) -> BoundReport:
    """Gaussian-reference trajectory bound."""
    return _single(problem, cfg, n_outer, n_inner, master_seed, workers, "f")


def estimate_bound_g(problem, cfg, n_outer, n_inner, master_seed, workers=1) -> BoundReport:
    """Mixture-reference trajectory bound."""
    return _single(problem, cfg, n_outer, n_inner, master_seed, workers, "g")


def estimate_bound_min(problem, cfg, n_outer, n_inner, master_seed, workers=1) -> BoundReport:
    """Per-summand minimum of the two references (the tightest form)."""
    return _single(problem, cfg, n_outer, n_inner, master_seed, workers, "min")


def estimate_bound_lipschitz(problem, cfg, n_outer, n_inner, master_seed, workers=1) -> BoundReport:
    """Gaussian-reference bound with the incoherence replaced by 2L."""
    if problem.loss.lipschitz is None:
        raise UsageError("Lipschitz bound needs a loss with a Lipschitz constant")
    return _single(problem, cfg, n_outer, n_inner, master_seed, workers, "lipschitz")


def estimate_bound_negrea31(problem, cfg, n_outer, n_inner, master_seed, workers=1) -> BoundReport:
    """Comparison bound depending only on the slot/batch draws and the
    schedules: L(b-a)/(sqrt(2) K) E[sqrt(sum over hit iterations of
    eta_t^2/sigma_t^2)]."""
    return _single(problem, cfg, n_outer, n_inner, master_seed, workers, "negrea31")


def estimate_gen_gap(problem, cfg, n_outer, n_inner, master_seed, workers=1):
    """Monte Carlo generalization gap of the final iterate on the same
    draws the bounds use; returns (estimate, stderr)."""
    res = run_experiment(problem, cfg, n_outer, n_inner, master_seed, workers)
    return res.gen_gap, res.gen_gap_stderr
