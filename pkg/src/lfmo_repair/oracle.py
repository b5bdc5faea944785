"""Brute-force ground truth over all ``2**n`` failed sets.

Every nonempty subset ``V`` of the components is hit by its own Poisson
stream of shocks with rate ``lambda^{(n)}_{|V|}``.  A shock moves the failed set
``F`` to ``F | V``.  One repair cycle is the path from ``F = {}`` to the first
set that triggers a repair, and its first-step equations are solved densely.
Nothing here touches signatures or the aggregated failed-count chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NumericInstabilityError, ValidationError
from .policy import CostModel
from .structure import SystemStructure
from .subordinator import PsiTable

__all__ = ["FullStateModel", "CycleMetrics", "cycle_metrics", "MAX_ORACLE_N"]

MAX_ORACLE_N = 12


def _exact(psi: PsiTable, k: int) -> Fraction:
    if k == 0:
        return Fraction(0)
    man, exp = psi.mp(k).man_exp
    return Fraction(int(man)) * Fraction(2) ** int(exp)


def _subset_rate(psi: PsiTable, k: int) -> float:
    # lambda^{(n)}_k = sum_i C(k, i) (-1)^(i+1) Psi(n - k + i), exactly in rationals
    n = psi.n
    total = sum(math.comb(k, i) * (-1) ** (i + 1) * _exact(psi, n - k + i) for i in range(k + 1))
    return float(total)


class FullStateModel:
    """Shock-driven chain on failed sets for one structure and ``Psi`` table.

    Parameters
    ----------
    structure : SystemStructure
        Must have ``structure.n == psi.n <= 12``.
    psi : PsiTable
    """

    def __init__(self, structure: SystemStructure, psi: PsiTable):
        n = structure.n
        if n != psi.n:
            raise ValidationError(f"structure has n = {n} but the Psi table has n = {psi.n}")
        if n > MAX_ORACLE_N:
            raise ValidationError(f"full-state oracle is limited to n <= {MAX_ORACLE_N}, got n = {n}")
        self.n = n
        self.structure = structure
        self.psi = psi
        self.size_rates = np.array([0.0] + [_subset_rate(psi, k) for k in range(1, n + 1)])
        if np.any(self.size_rates < -1e-12):
            raise NumericInstabilityError("negative subset shock rate")
        self.size_rates = np.maximum(self.size_rates, 0.0)
        subsets = np.arange(1, 1 << n, dtype=np.int64)
        self.shock_sets = subsets
        self.shock_rates = self.size_rates[np.bitwise_count(subsets)]
        full = (1 << n) - 1
        failed = np.arange(1 << n, dtype=np.int64)
        self.up = structure.evaluate_masks(full ^ failed).astype(bool)
        out = self.outgoing_rate(0)
        if abs(out - psi[n]) > 1e-9 * max(1.0, psi[n]):
            raise NumericInstabilityError(f"total shock rate {out!r} differs from Psi(n) = {psi[n]!r}")

    def transitions(self, failed: int) -> np.ndarray:
        """Rates from ``failed`` to every failed set (self-loop included)."""
        return np.bincount(failed | self.shock_sets, weights=self.shock_rates, minlength=1 << self.n)

    def outgoing_rate(self, failed: int) -> float:
        """Rate of shocks that fail at least one more component."""
        hits = (self.shock_sets & ~np.int64(failed)) != 0
        return float(math.fsum(self.shock_rates[hits]))


@dataclass(frozen=True)
class CycleMetrics:
    r: int
    p: float
    e_t_rep: float
    n_rep_dist: np.ndarray
    n_fail_dist: np.ndarray
    e_n_rep: float
    e_c_rep: float
    ltmc: float
    ltmn: float


def cycle_metrics(model: FullStateModel, r: int, costs: CostModel) -> CycleMetrics:
    """First-step analysis of one repair cycle under the r-out-of-n:R policy."""
    n = model.n
    if not 1 <= r <= n:
        raise ValidationError(f"r must be in 1..n (n = {n}), got {r!r}")
    if costs.n != n:
        raise ValidationError(f"cost model has n = {costs.n} but the structure has n = {n}")
    sets = np.arange(1 << n, dtype=np.int64)
    size = np.bitwise_count(sets)
    transient = (size < r) & model.up
    t_idx = np.flatnonzero(transient)
    pos = np.full(1 << n, -1)
    pos[t_idx] = np.arange(len(t_idx))

    # right-hand sides: time, cost, then one column per (failed count, system down)
    n_cols = 2 + 2 * (n + 1)
    c_abs = np.zeros(1 << n)
    cls = np.zeros(1 << n, dtype=np.int64)
    absorbing = ~transient
    down = ~model.up
    c_cmp = np.array((0.0,) + costs.c_cmp)
    c_abs[absorbing] = c_cmp[size[absorbing]] + costs.c_sys * down[absorbing]
    cls[absorbing] = 2 + 2 * size[absorbing] + down[absorbing]

    m = len(t_idx)
    A = np.zeros((m, m))
    B = np.zeros((m, n_cols))
    for row, f in enumerate(t_idx):
        rates = model.transitions(int(f))
        rates[f] = 0.0
        A[row, row] = math.fsum(rates)
        targets = np.flatnonzero(rates)
        tr = targets[transient[targets]]
        A[row, pos[tr]] -= rates[tr]
        ab = targets[absorbing[targets]]
        B[row, 0] = 1.0
        B[row, 1] = float(np.dot(rates[ab], c_abs[ab]))
        np.add.at(B[row], cls[ab], rates[ab])
    X = np.linalg.solve(A, B)[0]
    e_t_rep, e_c_rep = float(X[0]), float(X[1])
    absorb = X[2:].reshape(n + 1, 2)
    n_rep = absorb[1:, 0] + absorb[1:, 1]
    n_fail = absorb[1:, 1]
    total = n_rep.sum()
    if abs(total - 1.0) > 1e-9:
        raise NumericInstabilityError(f"absorption probabilities sum to {total!r}")
    e_n_rep = float(np.dot(np.arange(1, n + 1), n_rep))
    return CycleMetrics(
        r=r,
        p=float(n_fail.sum()),
        e_t_rep=e_t_rep,
        n_rep_dist=n_rep,
        n_fail_dist=n_fail,
        e_n_rep=e_n_rep,
        e_c_rep=e_c_rep,
        ltmc=e_c_rep / e_t_rep,
        ltmn=e_n_rep / e_t_rep,
    )
