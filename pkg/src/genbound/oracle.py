"""Exhaustive enumeration of tiny discrete learning problems.

A problem is a finite sample pmf, a dataset size n, a bounded loss table
and an algorithm kernel P(W | S).  Everything downstream is exact: the
joint over (supersample, selection bits, hypothesis) is materialized as
a table, and every divergence or mutual information is a finite sum.

Default algorithm family: Gibbs kernels P(w|s) proportional to
exp(-beta * sum_i loss(w, z_i)), which interpolate between a
data-independent learner (beta = 0) and a memorizer (beta -> inf).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import DistributionError, EnumerationSizeError, UsageError
from .info import (
    FiniteJoint,
    conditional_mutual_information,
    conditional_refinement_kl,
    disintegrated_product_kl,
    mutual_information,
)

__all__ = [
    "DiscreteProblem",
    "gibbs_problem",
    "memorizing_problem",
    "random_problem",
    "standard_joint",
    "enumerate_joint",
    "exact_expected_gen",
    "exact_expected_emp_gen",
    "exact_bound_prop1",
    "exact_bound_prop2",
    "exact_bound_prop3",
    "exact_bound_prop4",
    "exact_bound_negrea25",
    "exact_bound_prop5",
    "ordering_chain_standard",
    "ordering_chain_randomized",
]

MAX_STATES = 10_000_000
KERNEL_ATOL = 1e-12


@dataclass(frozen=True)
class DiscreteProblem:
    """Finite learning problem small enough for exact enumeration."""

    z_pmf: np.ndarray  # (nz,)
    n: int
    loss_table: np.ndarray  # (nw, nz), values in [a, b]
    kernel: np.ndarray  # (nz,) * n + (nw,), rows sum to 1
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "z_pmf", np.asarray(self.z_pmf, dtype=np.float64))
        object.__setattr__(self, "loss_table", np.asarray(self.loss_table, dtype=np.float64))
        object.__setattr__(self, "kernel", np.asarray(self.kernel, dtype=np.float64))
        if self.n < 1:
            raise UsageError("need n >= 1")
        if self.z_pmf.min() < 0 or abs(self.z_pmf.sum() - 1.0) > KERNEL_ATOL:
            raise DistributionError("sample pmf must be a probability vector")
        nz, nw = self.z_pmf.size, self.loss_table.shape[0]
        if self.loss_table.shape != (nw, nz):
            raise UsageError("loss table must be (n_w, n_z)")
        if not (self.a < self.b):
            raise UsageError("need a < b")
        if self.loss_table.min() < self.a - 1e-15 or self.loss_table.max() > self.b + 1e-15:
            raise UsageError("loss table leaves [a, b]")
        if self.kernel.shape != (nz,) * self.n + (nw,):
            raise UsageError("kernel must have shape (n_z,)*n + (n_w,)")
        if self.kernel.min() < 0:
            raise DistributionError("kernel has negative mass")
        rows = self.kernel.sum(axis=-1)
        if np.max(np.abs(rows - 1.0)) > KERNEL_ATOL:
            raise DistributionError("kernel rows must sum to 1")

    @property
    def nz(self) -> int:
        return self.z_pmf.size

    @property
    def nw(self) -> int:
        return self.loss_table.shape[0]

    @property
    def z_names(self):
        return [f"z{i + 1}" for i in range(self.n)]

    @property
    def zt_names(self):
        return [f"zt{i + 1}" for i in range(2 * self.n)]

    @property
    def u_names(self):
        return [f"u{i + 1}" for i in range(self.n)]

    def sigma_hoeffding(self) -> float:
        return (self.b - self.a) / 2.0


def _total_loss_grid(loss_table: np.ndarray, n: int) -> np.ndarray:
    """sum_i loss(w, z_i) over all datasets, shape (nz,)*n + (nw,)."""
    nw, nz = loss_table.shape
    acc = np.zeros((nz,) * n + (nw,))
    lt = loss_table.T  # (nz, nw)
    for i in range(n):
        shape = [1] * n + [nw]
        shape[i] = nz
        acc = acc + lt.reshape(shape)
    return acc


def gibbs_problem(z_pmf, loss_table, n, beta, a=0.0, b=1.0) -> DiscreteProblem:
    """Problem whose learner is the Gibbs kernel at inverse temperature beta."""
    logits = -beta * _total_loss_grid(np.asarray(loss_table, dtype=np.float64), n)
    logits -= logits.max(axis=-1, keepdims=True)
    kernel = np.exp(logits)
    kernel /= kernel.sum(axis=-1, keepdims=True)
    return DiscreteProblem(z_pmf=z_pmf, n=n, loss_table=loss_table, kernel=kernel, a=a, b=b)


def memorizing_problem() -> DiscreteProblem:
    """Two equally likely samples, n = 1, learner outputs the seen sample,
    zero-one loss: the canonical maximal-overfitting toy problem."""
    loss = np.array([[0.0, 1.0], [1.0, 0.0]])
    kernel = np.eye(2)  # kernel[z, w] = 1{w = z}
    return DiscreteProblem(z_pmf=np.array([0.5, 0.5]), n=1, loss_table=loss, kernel=kernel)


def random_problem(
    rng: np.random.Generator,
    n: int | None = None,
    nz: int | None = None,
    nw: int | None = None,
    kernel_kind: str = "gibbs",
) -> DiscreteProblem:
    """A random enumerable problem within the supported size limits."""
    n = int(n if n is not None else rng.integers(1, 4))
    nz = int(nz if nz is not None else rng.integers(2, 4))
    nw = int(nw if nw is not None else rng.integers(2, 9))
    z_pmf = rng.dirichlet(2.0 * np.ones(nz))
    loss_table = rng.uniform(size=(nw, nz))
    if kernel_kind == "gibbs":
        beta = float(rng.uniform(0.0, 4.0))
        return gibbs_problem(z_pmf, loss_table, n, beta)
    if kernel_kind == "dirichlet":
        kernel = rng.dirichlet(np.ones(nw), size=(nz,) * n)
        return DiscreteProblem(z_pmf=z_pmf, n=n, loss_table=loss_table, kernel=kernel)
    raise UsageError(f"unknown kernel kind {kernel_kind!r}")


def _outer_pmf(pmf: np.ndarray, k: int) -> np.ndarray:
    return reduce(np.multiply.outer, [pmf] * k)


def standard_joint(p: DiscreteProblem) -> FiniteJoint:
    """Exact joint over (Z_1..Z_n, W) in the standard setting."""
    probs = _outer_pmf(p.z_pmf, p.n)[..., None] * p.kernel
    return FiniteJoint(p.z_names + ["w"], probs)


def enumerate_joint(p: DiscreteProblem) -> FiniteJoint:
    """Exact joint over (supersample, selection bits, hypothesis).

    probs(zt, u, w) = prod_k pmf(zt_k) * 2^{-n} * kernel(w | dataset(zt, u)),
    where the dataset takes slot i from zt index i + u_i * n.
    """
    n, nz, nw = p.n, p.nz, p.nw
    states = nz ** (2 * n) * 2**n * nw
    if states > MAX_STATES:
        raise EnumerationSizeError(f"{states} states exceed the {MAX_STATES} cap")
    pm2 = _outer_pmf(p.z_pmf, 2 * n)
    out = np.zeros((nz,) * (2 * n) + (2,) * n + (nw,))
    letters = "abcdef"[: 2 * n]
    for u in itertools.product((0, 1), repeat=n):
        ker_sub = "".join(letters[i + u[i] * n] for i in range(n))
        joint_u = np.einsum(f"{letters},{ker_sub}w->{letters}w", pm2, p.kernel)
        out[(slice(None),) * (2 * n) + u] = joint_u * 0.5**n
    return FiniteJoint(p.zt_names + p.u_names + ["w"], out)


def _population_risks(p: DiscreteProblem) -> np.ndarray:
    return p.loss_table @ p.z_pmf  # (nw,)


def exact_expected_emp_gen(p: DiscreteProblem) -> float:
    """E over (supersample, bits, hypothesis) of the supersample risk gap."""
    n, nz, nw = p.n, p.nz, p.nw
    joint = enumerate_joint(p).probs
    lt = p.loss_table.T  # (nz, nw)

    def axis_loss(k: int) -> np.ndarray:
        shape = [1] * (2 * n) + [nw]
        shape[k] = nz
        return lt.reshape(shape)

    total = 0.0
    for u in itertools.product((0, 1), repeat=n):
        gap = np.zeros((nz,) * (2 * n) + (nw,))
        for i in range(n):
            gap += axis_loss(i + (1 - u[i]) * n) - axis_loss(i + u[i] * n)
        total += float(np.sum(joint[(slice(None),) * (2 * n) + u] * gap)) / n
    return total


def exact_expected_gen(p: DiscreteProblem) -> float:
    """Exact expected generalization error; self-checks against the exact
    expected supersample gap, which must coincide."""
    pop = _population_risks(p)
    emp = _total_loss_grid(p.loss_table, p.n) / p.n
    probs = standard_joint(p).probs
    e_gen = float(np.sum(probs * (pop.reshape((1,) * p.n + (p.nw,)) - emp)))
    e_emp = exact_expected_emp_gen(p)
    if abs(e_gen - e_emp) > 1e-12:
        raise AssertionError(
            f"enumeration self-check failed: E[gen]={e_gen!r} vs supersample {e_emp!r}"
        )
    return e_gen


def exact_bound_prop1(p: DiscreteProblem) -> float:
    """Per-sample mutual information bound (1/n) sum_i sqrt(2 s^2 I(W;Z_i)),
    with the Hoeffding scale s = (b-a)/2."""
    sj = standard_joint(p)
    s2 = p.sigma_hoeffding() ** 2
    vals = [mutual_information(sj, ["w"], [z]) for z in p.z_names]
    return float(np.mean([math.sqrt(2.0 * s2 * max(v, 0.0)) for v in vals]))


def exact_bound_prop3(p: DiscreteProblem) -> float:
    """Per-slot conditional MI bound
    (1/n) sum_i sqrt(2 (b-a)^2 I(W;U_i | Zt_i, Zt_{i+n}))."""
    ssj = enumerate_joint(p)
    scale = 2.0 * (p.b - p.a) ** 2
    vals = [
        conditional_mutual_information(
            ssj, ["w"], [f"u{i + 1}"], [f"zt{i + 1}", f"zt{i + 1 + p.n}"]
        )
        for i in range(p.n)
    ]
    return float(np.mean([math.sqrt(scale * max(v, 0.0)) for v in vals]))


def _subset_bound(joint, w_group, target_names, cond_rest, factor, m, n, mi_form):
    """Average over size-m subsets J of E_c[sqrt(factor/m * KL_c)] (or the
    form with the conditioning expectation inside the root)."""
    vals = []
    for subset in itertools.combinations(range(n), m):
        b_names = [target_names[j] for j in subset]
        c_names = [target_names[j] for j in range(n) if j not in subset] + cond_rest
        weights, kls = disintegrated_product_kl(joint, w_group, b_names, c_names)
        if mi_form:
            vals.append(math.sqrt(factor / m * max(float(weights @ kls), 0.0)))
        else:
            vals.append(float(weights @ np.sqrt(factor / m * kls)))
    return float(np.mean(vals))


def exact_bound_prop2(p: DiscreteProblem, m: int, mi_form: bool = False) -> float:
    """Random-subset KL bound in the standard setting, with the reference
    distribution taken as the exact conditional marginal of W.

    With ``mi_form`` the conditioning expectation moves inside the square
    root, turning each KL term into a conditional mutual information.
    """
    if not 1 <= m <= p.n:
        raise UsageError("subset size must satisfy 1 <= m <= n")
    sj = standard_joint(p)
    factor = 2.0 * p.sigma_hoeffding() ** 2
    return _subset_bound(sj, ["w"], p.z_names, [], factor, m, p.n, mi_form)


def exact_bound_prop4(p: DiscreteProblem, m: int, mi_form: bool = False) -> float:
    """Random-subset KL bound on the selection bits, conditioned on the
    supersample and the complementary bits; reference = exact marginal."""
    if not 1 <= m <= p.n:
        raise UsageError("subset size must satisfy 1 <= m <= n")
    ssj = enumerate_joint(p)
    factor = 2.0 * (p.b - p.a) ** 2
    return _subset_bound(ssj, ["w"], p.u_names, p.zt_names, factor, m, p.n, mi_form)


def exact_bound_negrea25(p: DiscreteProblem, m: int) -> float:
    """Comparison-only bound ((b-a)/sqrt(2)) E[sqrt(KL(P_W|S || P_W|S_Jc))]
    with trivial auxiliary randomness; one-sided (bounds E[gen], not its
    absolute value)."""
    if not 1 <= m <= p.n:
        raise UsageError("subset size must satisfy 1 <= m <= n")
    sj = standard_joint(p)
    vals = []
    for subset in itertools.combinations(range(p.n), m):
        coarse = [p.z_names[j] for j in range(p.n) if j not in subset]
        weights, kls = conditional_refinement_kl(sj, ["w"], p.z_names, coarse)
        vals.append(float(weights @ np.sqrt(kls)))
    return (p.b - p.a) / math.sqrt(2.0) * float(np.mean(vals))


def exact_bound_prop5(p: DiscreteProblem, m: int) -> float:
    """Disintegrated bound sqrt(2)(b-a) E[sqrt(KL(P_W|U,Zt || P_W|U_Jc,Zt))]
    with trivial auxiliary randomness; one-sided."""
    if not 1 <= m <= p.n:
        raise UsageError("subset size must satisfy 1 <= m <= n")
    ssj = enumerate_joint(p)
    fine = p.u_names + p.zt_names
    vals = []
    for subset in itertools.combinations(range(p.n), m):
        coarse = [p.u_names[j] for j in range(p.n) if j not in subset] + p.zt_names
        weights, kls = conditional_refinement_kl(ssj, ["w"], fine, coarse)
        vals.append(float(weights @ np.sqrt(kls)))
    return math.sqrt(2.0) * (p.b - p.a) * float(np.mean(vals))


def ordering_chain_standard(p: DiscreteProblem) -> list:
    """(sum_i I(W;Z_i), I(W;S), sum_i I(W;Z_i|S^{-i})), nondecreasing."""
    sj = standard_joint(p)
    per_sample = sum(mutual_information(sj, ["w"], [z]) for z in p.z_names)
    full = mutual_information(sj, ["w"], p.z_names)
    leave_one_out = sum(
        conditional_mutual_information(sj, ["w"], [z], [o for o in p.z_names if o != z])
        for z in p.z_names
    )
    return [per_sample, full, leave_one_out]


def ordering_chain_randomized(p: DiscreteProblem) -> list:
    """(sum_i I(W;U_i|Zt_i,Zt_{i+n}), sum_i I(W;U_i|Zt), I(W;U|Zt),
    sum_i I(W;U_i|Zt,U^{-i})), nondecreasing."""
    ssj = enumerate_joint(p)
    pairwise = sum(
        conditional_mutual_information(
            ssj, ["w"], [f"u{i + 1}"], [f"zt{i + 1}", f"zt{i + 1 + p.n}"]
        )
        for i in range(p.n)
    )
    per_bit = sum(
        conditional_mutual_information(ssj, ["w"], [u], p.zt_names) for u in p.u_names
    )
    all_bits = conditional_mutual_information(ssj, ["w"], p.u_names, p.zt_names)
    leave_one_out = sum(
        conditional_mutual_information(
            ssj, ["w"], [u], p.zt_names + [o for o in p.u_names if o != u]
        )
        for u in p.u_names
    )
    return [pairwise, per_bit, all_bits, leave_one_out]
