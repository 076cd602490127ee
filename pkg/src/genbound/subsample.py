"""Supersample construction and generalization-error functionals.

A supersample holds 2N samples; N fair selection bits pick, per slot i,
either sample i or sample i+N into the dataset.  Indices are 0-based in
code (slot i selects ``ztilde[i + u[i] * n]``); serialized output is
1-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import empirical_risk, population_risk
from .errors import UsageError

__all__ = [
    "SuperSample",
    "SubsetIndex",
    "compose_dataset",
    "heldout_dataset",
    "gen_error",
    "emp_gen_error",
    "gen_subset",
    "emp_gen_subset",
]


@dataclass(frozen=True)
class SuperSample:
    """2N samples plus the N selection bits."""

    ztilde: tuple
    u: tuple

    def __post_init__(self):
        if len(self.ztilde) != 2 * len(self.u) or not self.u:
            raise UsageError("need 2N samples for N selection bits, N >= 1")
        if any(b not in (0, 1) for b in self.u):
            raise UsageError("selection bits must be 0 or 1")

    @property
    def n(self) -> int:
        return len(self.u)

    def flipped(self) -> "SuperSample":
        return SuperSample(self.ztilde, tuple(1 - b for b in self.u))


@dataclass(frozen=True)
class SubsetIndex:
    """A non-empty subset of dataset slots {0..n-1}."""

    indices: tuple

    def __post_init__(self):
        if not self.indices:
            raise UsageError("subset must be non-empty")
        if len(set(self.indices)) != len(self.indices):
            raise UsageError("subset indices must be distinct")
        if tuple(sorted(self.indices)) != tuple(self.indices):
            raise UsageError("subset indices must be sorted")

    @property
    def m(self) -> int:
        return len(self.indices)


def compose_dataset(ss: SuperSample) -> list:
    """Dataset selected by the bits: slot i holds ztilde[i + u_i * n]."""
    n = ss.n
    return [ss.ztilde[i + ss.u[i] * n] for i in range(n)]


def heldout_dataset(ss: SuperSample) -> list:
    """The complementary half of the supersample (bits flipped)."""
    n = ss.n
    return [ss.ztilde[i + (1 - ss.u[i]) * n] for i in range(n)]


def gen_error(w, s, loss, dist) -> float:
    """Population risk minus empirical risk on the dataset s."""
    return population_risk(w, loss, dist) - empirical_risk(w, loss, s)


def emp_gen_error(w, ss: SuperSample, loss) -> float:
    """Risk gap between the unused and the used half of the supersample."""
    n = ss.n
    total = 0.0
    for i in range(n):
        total += loss.eval(w, ss.ztilde[i + (1 - ss.u[i]) * n])
        total -= loss.eval(w, ss.ztilde[i + ss.u[i] * n])
    return total / n


def _check_subset(subset: SubsetIndex, n: int):
    if subset.indices[-1] >= n or subset.indices[0] < 0:
        raise UsageError("subset indices out of range")


def gen_subset(w, s, subset: SubsetIndex, loss, dist) -> float:
    """Population risk minus empirical risk restricted to one subset."""
    _check_subset(subset, len(s))
    sub = [s[i] for i in subset.indices]
    return population_risk(w, loss, dist) - empirical_risk(w, loss, sub)


def emp_gen_subset(w, ss: SuperSample, subset: SubsetIndex, loss) -> float:
    """Supersample risk gap restricted to one subset of the slots."""
    _check_subset(subset, ss.n)
    n = ss.n
    total = 0.0
    for i in subset.indices:
        total += loss.eval(w, ss.ztilde[i + (1 - ss.u[i]) * n])
        total -= loss.eval(w, ss.ztilde[i + ss.u[i] * n])
    return total / subset.m
