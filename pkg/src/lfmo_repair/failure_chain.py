"""Markov chains of the number of failed components under LFMO lifetimes.

The alternating binomial sums (shock rates, order-statistic laws, counts at
a fixed time) are evaluated in ``mpmath`` at :func:`working_precision` and
rounded once to float64.  The resulting probabilities are nonnegative, so the
``QQ`` recursion and everything downstream of it run in plain floats.
"""

from __future__ import annotations

import math
from functools import cached_property

import mpmath
import numpy as np

from .errors import NumericInstabilityError, ValidationError
from .subordinator import PsiTable

__all__ = [
    "FailureChain",
    "shock_rate",
    "transition_matrix",
    "qq_table",
    "qq_via_matrix_power",
    "clamp_probability",
]

_RATE_TOL = 1e-12


def clamp_probability(x: float, what: str, tol: float = _RATE_TOL, upper: float | None = 1.0) -> float:
    """Clip roundoff excursions outside ``[0, upper]``; raise on real ones."""
    if x < 0.0:
        if x < -tol:
            raise NumericInstabilityError(f"{what} = {x!r} is negative beyond roundoff")
        return 0.0
    if upper is not None and x > upper:
        if x > upper + tol:
            raise NumericInstabilityError(f"{what} = {x!r} exceeds {upper}")
        return upper
    return x


def _check_range(l: int, k: int, n: int) -> None:
    if not 1 <= k <= l <= n:
        raise ValidationError(f"shock rate needs 1 <= k <= l <= n, got k={k}, l={l}, n={n}")


def _shock_rate_mp(psi: PsiTable, l: int, k: int):
    # lambda^{(l)}_k = sum_i C(k-1, i) (-1)^i (Psi(l-k+i+1) - Psi(l-k+i))
    terms = []
    for i in range(k):
        c = math.comb(k - 1, i)
        d = psi.mp(l - k + i + 1) - psi.mp(l - k + i)
        terms.append(c * d if i % 2 == 0 else -c * d)
    return mpmath.fsum(terms)


def shock_rate(l: int, k: int, psi: PsiTable) -> float:
    """Rate of a shock hitting one given set of ``k`` out of ``l`` alive components."""
    _check_range(l, k, psi.n)
    with mpmath.workprec(psi.prec):
        value = float(_shock_rate_mp(psi, l, k))
    return clamp_probability(value, f"shock rate lambda^({l})_{k}", upper=None)


def transition_matrix(psi: PsiTable) -> np.ndarray:
    """One-step matrix ``P`` of the embedded failed-count chain on ``0..n``."""
    return FailureChain(psi).P.copy()


def qq_table(P: np.ndarray) -> np.ndarray:
    """``QQ[i, j]``: probability the chain jumps from ``{0..i}`` straight to ``j``."""
    n = P.shape[0] - 1
    QQ = np.zeros_like(P, dtype=np.float64)
    QQ[0, 1:] = P[0, 1:]
    for i in range(1, n):
        QQ[i, i + 1 :] = QQ[i - 1, i + 1 :] + QQ[i - 1, i] * P[i, i + 1 :]
    return QQ


def qq_via_matrix_power(P: np.ndarray, i: int, j: int) -> float:
    """``QQ[i, j]`` assembled from powers of ``P`` instead of the recursion."""
    n = P.shape[0] - 1
    if not 0 <= i < j <= n:
        raise ValidationError(f"need 0 <= i < j <= n, got i={i}, j={j}, n={n}")
    total = 0.0
    for l1 in range(i + 1):
        visits = 0.0
        Pl = np.eye(n + 1)
        for _ in range(l1 + 1):
            visits += Pl[0, l1]
            Pl = Pl @ P
        total += visits * P[l1, j]
    return total


class FailureChain:
    """Precomputed failed-count chain for a given ``Psi(1..n)`` table.

    Parameters
    ----------
    psi : PsiTable
        Laplace exponent at ``1..n``.
    check : bool
        Also build ``QQ`` by matrix powers and compare with the recursion.
    """

    def __init__(self, psi: PsiTable, check: bool = False):
        self.psi = psi
        self.n = n = psi.n
        rates = np.zeros((n + 1, n + 1))  # rates[l, k] = lambda^{(l)}_k
        agg = np.zeros((n + 1, n + 1))  # agg[i, j] = C(n-i, j-i) lambda^{(n-i)}_{j-i}
        P = np.zeros((n + 1, n + 1))
        with mpmath.workprec(psi.prec):
            mp_rates = {}
            for l in range(1, n + 1):
                for k in range(1, l + 1):
                    lam = _shock_rate_mp(psi, l, k)
                    mp_rates[l, k] = lam
                    rates[l, k] = clamp_probability(float(lam), f"shock rate lambda^({l})_{k}", upper=None)
            for i in range(n):
                out = psi.mp(n - i)
                for j in range(i + 1, n + 1):
                    a = math.comb(n - i, j - i) * mp_rates[n - i, j - i]
                    agg[i, j] = clamp_probability(float(a), f"aggregate rate {i}->{j}", upper=None)
                    P[i, j] = clamp_probability(float(a / out), f"P[{i},{j}]")
            self._et = [float(self._order_mean_mp(k)) for k in range(1, n + 1)]
        self.shock_rates = rates
        self.aggregate_rates = agg
        self.P = P
        self.QQ = qq_table(P)
        for i in range(n):
            row = P[i].sum()
            if abs(row - 1.0) > 1e-10:
                raise NumericInstabilityError(f"row {i} of P sums to {row!r}")
        if check:
            self.check_qq()

    # -- Lemma-style queries -------------------------------------------------

    def shock_rate(self, l: int, k: int) -> float:
        _check_range(l, k, self.n)
        return float(self.shock_rates[l, k])

    def aggregate_rate(self, i: int, j: int) -> float:
        """Rate of going from ``i`` to ``j`` failed components."""
        if not 0 <= i < j <= self.n:
            return 0.0
        return float(self.aggregate_rates[i, j])

    def aggregate_rate_crossform(self, i: int, j: int) -> float:
        """Same rate through the single triple-binomial sum over ``Psi(n-k)``."""
        n = self.n
        if not 0 <= i < j <= n:
            return 0.0
        with mpmath.workprec(self.psi.prec):
            terms = []
            for k in range(i, j + 1):
                c = math.comb(n, j) * math.comb(j, k) * math.comb(k, i)
                sign = -1 if (j - k + 1) % 2 else 1
                terms.append(sign * c * self.psi.mp(n - k))
            return float(mpmath.fsum(terms) / math.comb(n, i))

    def qq(self, i: int, j: int) -> float:
        if 0 <= i < j <= self.n:
            return float(self.QQ[i, j])
        return 0.0

    def qqq(self, i: int, j: int, k: int) -> float:
        """Jump from ``{0..i}`` straight into ``{j..k}``."""
        lo, hi = max(j, i + 1), min(k, self.n)
        if lo > hi:
            return 0.0
        return float(math.fsum(self.QQ[i, lo : hi + 1]))

    def _check_order(self, *idx: int) -> None:
        for v in idx:
            if not 1 <= v <= self.n:
                raise ValidationError(f"order index {v} out of range 1..{self.n}")

    def prob_order_lt(self, r: int, k: int) -> float:
        """P(T_{r:n} < T_{k:n})."""
        self._check_order(r, k)
        return self.qqq(r - 1, r, k - 1) if r < k else 0.0

    def prob_order_eq(self, r: int, k: int) -> float:
        """P(T_{r:n} = T_{k:n}) for ``r <= k``; the ``r > k`` case mirrors it."""
        self._check_order(r, k)
        if r == k:
            return 1.0
        lo, hi = min(r, k), max(r, k)
        return self.qqq(lo - 1, hi, self.n)

    def prob_count_at_order(self, r: int, j: int) -> float:
        """P(N(T_{r:n}) = j)."""
        self._check_order(r, j)
        return self.qq(r - 1, j) if r <= j else 0.0

    def check_qq(self, tol: float = 1e-12) -> None:
        for i in range(self.n):
            for j in range(i + 1, self.n + 1):
                alt = qq_via_matrix_power(self.P, i, j)
                if abs(alt - self.QQ[i, j]) > tol:
                    raise NumericInstabilityError(
                        f"QQ[{i},{j}] recursion {self.QQ[i, j]!r} != matrix-power {alt!r}"
                    )

    # -- order statistics ----------------------------------------------------

    def _order_terms(self, k: int, weight):
        n = self.n
        terms = []
        for i in range(n - k + 1, n + 1):
            c = math.comb(n, i) * math.comb(i - 1, n - k)
            w = weight(i)
            terms.append(c * w if (i - n + k - 1) % 2 == 0 else -c * w)
        return mpmath.fsum(terms)

    def _order_mean_mp(self, k: int):
        return self._order_terms(k, lambda i: 1 / self.psi.mp(i))

    def order_stat_mean(self, k: int) -> float:
        """E T_{k:n}."""
        self._check_order(k)
        return self._et[k - 1]

    def order_stat_survival(self, k: int, t: float) -> float:
        """P(T_{k:n} > t)."""
        self._check_order(k)
        if t < 0:
            raise ValidationError(f"t must be >= 0, got {t!r}")
        with mpmath.workprec(self.psi.prec):
            tt = mpmath.mpf(t)
            value = float(self._order_terms(k, lambda i: mpmath.exp(-tt * self.psi.mp(i))))
        return min(max(value, 0.0), 1.0)

    def count_distribution(self, t: float) -> np.ndarray:
        """P(N(t) = k) for ``k = 0..n``."""
        if t < 0:
            raise ValidationError(f"t must be >= 0, got {t!r}")
        n = self.n
        out = np.zeros(n + 1)
        with mpmath.workprec(self.psi.prec):
            tt = mpmath.mpf(t)
            ex = [mpmath.exp(-tt * self.psi.mp(i)) for i in range(n + 1)]
            for k in range(n + 1):
                terms = []
                for i in range(n - k, n + 1):
                    c = math.comb(n, i) * math.comb(i, n - k)
                    terms.append(c * ex[i] if (i - n + k) % 2 == 0 else -c * ex[i])
                out[k] = min(max(float(mpmath.fsum(terms)), 0.0), 1.0)
        return out

    @cached_property
    def visit_probabilities(self) -> np.ndarray:
        """P(the embedded chain ever sits in state ``i``), ``i = 0..n``."""
        v = np.zeros(self.n + 1)
        v[0] = 1.0
        for i in range(1, self.n + 1):
            v[i] = self.QQ[i - 1, i]
        return v

    def __repr__(self) -> str:
        return f"FailureChain(n={self.n})"
