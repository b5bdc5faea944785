"""Performance and cost of r-out-of-n:R repair policies.

Under an r-out-of-n:R policy every failed component is repaired as soon as
``r`` or more components are down or the system fails.  A repair renews the
process, so long-run rates follow from one repair cycle by the renewal-reward
theorem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

import mpmath
import numpy as np

from .errors import NumericInstabilityError, ValidationError
from .failure_chain import FailureChain, clamp_probability
from .structure import Signature

__all__ = [
    "CostModel",
    "PolicyEvaluation",
    "evaluate_policy",
    "process_signature",
    "sweep_policies",
    "kofn_policy",
    "iid_policy",
    "system_survival",
    "system_mttf",
    "table_rows",
    "TABLE_COLUMNS",
]

_P_TOL = 1e-10


@dataclass(frozen=True)
class CostModel:
    """``c_cmp[j-1]`` is the cost of repairing ``j`` components; ``c_sys`` is
    the surcharge when the system itself has failed."""

    c_cmp: tuple[float, ...]
    c_sys: float

    def __post_init__(self) -> None:
        c = tuple(float(x) for x in self.c_cmp)
        if not c:
            raise ValidationError("c_cmp must have one entry per component count")
        if any(not math.isfinite(x) or x < 0 for x in c):
            raise ValidationError("c_cmp entries must be finite and >= 0")
        c_sys = float(self.c_sys)
        if not math.isfinite(c_sys) or c_sys < 0:
            raise ValidationError("c_sys must be finite and >= 0")
        object.__setattr__(self, "c_cmp", c)
        object.__setattr__(self, "c_sys", c_sys)

    @property
    def n(self) -> int:
        return len(self.c_cmp)

    @classmethod
    def linear(cls, n: int, unit: float = 1.0, c_sys: float = 0.0) -> "CostModel":
        return cls(tuple(unit * j for j in range(1, n + 1)), c_sys)

    @classmethod
    def from_json(cls, spec: dict[str, Any], n: int) -> "CostModel":
        if not isinstance(spec, dict) or "c_sys" not in spec:
            raise ValidationError("costs spec must be an object with 'c_sys' and 'c_cmp' or 'linear'")
        c_cmp = spec.get("c_cmp")
        if isinstance(c_cmp, dict):
            c_cmp = None
            spec = {**spec, **spec["c_cmp"]}
        if c_cmp is not None:
            if len(c_cmp) != n:
                raise ValidationError(f"c_cmp has {len(c_cmp)} entries but the system has n = {n}")
            return cls(tuple(c_cmp), spec["c_sys"])
        if "linear" in spec:
            return cls.linear(n, float(spec["linear"]), spec["c_sys"])
        raise ValidationError("costs spec needs 'c_cmp' (list) or 'linear' (unit cost)")


@dataclass(frozen=True)
class PolicyEvaluation:
    """One-cycle and long-run quantities for a single threshold ``r``.

    Distributions are indexed by failed count: entry ``j - 1`` is ``j`` failed.
    ``e_t_fail`` is ``inf`` and the ``*_fail`` means are ``None`` when the
    system never fails (``p == 0``).
    """

    r: int
    p: float
    e_t_rep: float
    e_t_fail: float
    n_rep_dist: np.ndarray
    n_fail_dist: np.ndarray | None
    n_prev_dist: np.ndarray | None
    e_n_rep: float
    e_n_fail: float | None
    e_c_rep: float
    e_c_fail: float | None
    ltmc: float
    ltmn: float
    repair_rate: float
    system_failure_rate: float

    @property
    def system_fails(self) -> bool:
        return self.p > 0.0

    def as_row(self) -> dict[str, Any]:
        return {
            "r": self.r,
            "p": self.p,
            "E_T_fail": self.e_t_fail,
            "E_T_rep": self.e_t_rep,
            "E_N_fail": self.e_n_fail,
            "E_N_rep": self.e_n_rep,
            "E_C_fail": self.e_c_fail,
            "E_C_rep": self.e_c_rep,
            "LTMN": self.ltmn,
            "LTMC": self.ltmc,
        }

    def to_json(self) -> dict[str, Any]:
        def arr(x):
            return None if x is None else [float(v) for v in x]

        out = self.as_row()
        out["E_T_fail"] = None if math.isinf(self.e_t_fail) else self.e_t_fail
        out.update(
            system_fails=self.system_fails,
            n_rep_dist=arr(self.n_rep_dist),
            n_fail_dist=arr(self.n_fail_dist),
            n_prev_dist=arr(self.n_prev_dist),
            repair_rate=self.repair_rate,
            system_failure_rate=self.system_failure_rate,
        )
        return out


TABLE_COLUMNS = ("r", "p", "E_T_fail", "E_T_rep", "E_N_fail", "E_N_rep", "E_C_fail", "E_C_rep", "LTMN", "LTMC")


def _signature_floats(sig: Signature | Sequence) -> np.ndarray:
    if isinstance(sig, Signature):
        return sig.floats()
    s = np.array([float(Fraction(x)) if isinstance(x, (str, Fraction)) else float(x) for x in sig])
    if np.any(s < 0) or abs(s.sum() - 1.0) > 1e-10:
        raise ValidationError("signature vector must be nonnegative and sum to 1")
    return s


def _check_inputs(s: np.ndarray, chain: FailureChain, r: int, costs: CostModel | None) -> None:
    n = chain.n
    if len(s) != n:
        raise ValidationError(f"signature has n = {len(s)} but the failure chain has n = {n}")
    if costs is not None and costs.n != n:
        raise ValidationError(f"cost model has n = {costs.n} but the failure chain has n = {n}")
    if not isinstance(r, (int, np.integer)) or not 1 <= r <= n:
        raise ValidationError(f"r must be in 1..n (n = {n}), got {r!r}")


def _finish(r, p, e_t_rep, n_rep, n_fail_num, n_prev_num, costs) -> PolicyEvaluation:
    n = len(n_rep)
    counts = np.arange(1, n + 1)
    c_cmp = np.asarray(costs.c_cmp)
    e_n_rep = math.fsum(counts * n_rep)
    comp_cost = math.fsum(c_cmp * n_rep)
    if p > 0.0:
        e_c_rep = p * costs.c_sys + comp_cost
        e_c_fail, e_t_fail, e_n_fail = e_c_rep / p, e_t_rep / p, e_n_rep / p
        n_fail = n_fail_num / p
    else:
        # the system never fails; c_sys is never paid
        e_c_rep = comp_cost
        e_c_fail, e_t_fail, e_n_fail, n_fail = None, math.inf, None, None
    n_prev = n_prev_num / (1.0 - p) if p < 1.0 else None
    return PolicyEvaluation(
        r=int(r),
        p=p,
        e_t_rep=e_t_rep,
        e_t_fail=e_t_fail,
        n_rep_dist=n_rep,
        n_fail_dist=n_fail,
        n_prev_dist=n_prev,
        e_n_rep=e_n_rep,
        e_n_fail=e_n_fail,
        e_c_rep=e_c_rep,
        e_c_fail=e_c_fail,
        ltmc=e_c_rep / e_t_rep,
        ltmn=e_n_rep / e_t_rep,
        repair_rate=1.0 / e_t_rep,
        system_failure_rate=p / e_t_rep,
    )


def evaluate_policy(sig: Signature | Sequence, chain: FailureChain, r: int, costs: CostModel) -> PolicyEvaluation:
    """Evaluate the r-out-of-n:R policy for a system with signature ``sig``."""
    s = _signature_floats(sig)
    _check_inputs(s, chain, r, costs)
    n = chain.n

    # P(T_rep = T_fail), directly and through the complement
    p_terms = [s[k - 1] * chain.prob_order_eq(min(k, r), k) for k in range(1, n + 1)]
    p = math.fsum(p_terms)
    q_terms = [s[k - 1] * chain.prob_order_lt(r, k) for k in range(r + 1, n + 1)]
    p_alt = 1.0 - math.fsum(q_terms)
    if abs(p - p_alt) > _P_TOL:
        raise NumericInstabilityError(f"p computed as {p!r} and as 1 - complement {p_alt!r}")
    p = clamp_probability(p, "p", tol=_P_TOL)

    n_rep = np.zeros(n)
    n_fail_num = np.zeros(n)
    n_prev_num = np.zeros(n)
    for j in range(1, n + 1):
        n_rep[j - 1] = math.fsum(s[k - 1] * chain.prob_count_at_order(min(r, k), j) for k in range(1, n + 1))
        n_fail_num[j - 1] = math.fsum(s[k - 1] * chain.prob_count_at_order(min(r, k), j) for k in range(1, j + 1))
        if j >= r:
            n_prev_num[j - 1] = math.fsum(s[j:]) * chain.prob_count_at_order(r, j)
    e_t_rep = math.fsum(s[k - 1] * chain.order_stat_mean(min(k, r)) for k in range(1, n + 1))
    return _finish(r, p, e_t_rep, n_rep, n_fail_num, n_prev_num, costs)


def process_signature(sig: Signature | Sequence, chain: FailureChain) -> np.ndarray:
    """Law of the number of failed components at system failure (no repairs)."""
    s = _signature_floats(sig)
    _check_inputs(s, chain, 1, None)
    n = chain.n
    q = np.array([math.fsum(s[k - 1] * chain.qq(k - 1, j) for k in range(1, j + 1)) for j in range(1, n + 1)])
    total = q.sum()
    if abs(total - 1.0) > 1e-10:
        raise NumericInstabilityError(f"process signature sums to {total!r}")
    return q


def sweep_policies(sig: Signature | Sequence, chain: FailureChain, costs: CostModel) -> list[PolicyEvaluation]:
    """Evaluate every threshold ``r = 1..n``."""
    return [evaluate_policy(sig, chain, r, costs) for r in range(1, chain.n + 1)]


def table_rows(evals: Sequence[PolicyEvaluation]) -> list[dict[str, Any]]:
    return [e.as_row() for e in evals]


def kofn_policy(k: int, chain: FailureChain, r: int, costs: CostModel) -> PolicyEvaluation:
    """Closed forms for a k-out-of-n:F system under the r-out-of-n:R policy."""
    n = chain.n
    if not 1 <= k <= n:
        raise ValidationError(f"k must be in 1..n (n = {n}), got {k!r}")
    e_k = np.zeros(n)
    e_k[k - 1] = 1.0
    _check_inputs(e_k, chain, r, costs)
    m = min(k, r)
    p = chain.qqq(r - 1, k, n) if k > r else 1.0
    n_rep = np.array([chain.qq(m - 1, j) if j >= m else 0.0 for j in range(1, n + 1)])
    # the system is down at the repair iff at least k components have failed
    n_fail_num = np.where(np.arange(1, n + 1) >= k, n_rep, 0.0)
    n_prev_num = n_rep - n_fail_num
    return _finish(r, p, chain.order_stat_mean(m), n_rep, n_fail_num, n_prev_num, costs)


def _harmonic(a: int, b: int) -> float:
    return math.fsum(1.0 / i for i in range(a, b + 1))


def iid_policy(sig: Signature | Sequence, n: int, mu: float, r: int, costs: CostModel) -> PolicyEvaluation:
    """Closed forms when component lifetimes are iid Exp(``mu``)."""
    s = _signature_floats(sig)
    if len(s) != n or costs.n != n:
        raise ValidationError(f"signature and costs must both have n = {n}")
    if not 1 <= r <= n:
        raise ValidationError(f"r must be in 1..n (n = {n}), got {r!r}")
    if not mu > 0:
        raise ValidationError(f"mu must be > 0, got {mu!r}")
    head, tail = s[:r], math.fsum(s[r:])
    p = math.fsum(head)
    n_rep = np.zeros(n)
    n_rep[: r - 1] = s[: r - 1]
    n_rep[r - 1] = math.fsum(s[r - 1 :])
    n_fail_num = np.zeros(n)
    n_fail_num[:r] = s[:r]
    n_prev_num = np.zeros(n)
    n_prev_num[r - 1] = tail
    e_t_rep = (
        math.fsum(s[k - 1] * _harmonic(n - k + 1, n) for k in range(1, r + 1)) + tail * _harmonic(n - r + 1, n)
    ) / mu
    ev = _finish(r, p, e_t_rep, n_rep, n_fail_num, n_prev_num, costs)
    c = costs.c_cmp
    e_c_rep = math.fsum(s[k - 1] * (costs.c_sys + c[k - 1]) for k in range(1, r + 1)) + tail * c[r - 1]
    if abs(e_c_rep - ev.e_c_rep) > 1e-12 * max(1.0, e_c_rep):
        raise NumericInstabilityError("iid cost closed form disagrees with the cycle decomposition")
    return ev


def _samaniego_terms(sig: Signature, chain: FailureChain, t: float):
    n = chain.n
    with mpmath.workprec(chain.psi.prec):
        tt = mpmath.mpf(t)
        via_a = mpmath.fsum(
            mpmath.mpf(a.numerator) / a.denominator * mpmath.exp(-tt * chain.psi.mp(i))
            for i, a in enumerate(sig.a, start=1)
        )
    via_s = math.fsum(float(sig.s[k - 1]) * chain.order_stat_survival(k, t) for k in range(1, n + 1))
    return float(via_a), via_s


def system_survival(sig: Signature, chain: FailureChain, t: float) -> float:
    """P(T_fail > t) without repairs, cross-checked between two decompositions."""
    if not isinstance(sig, Signature):
        sig = Signature.from_vector(sig)
    if sig.n != chain.n:
        raise ValidationError(f"signature has n = {sig.n} but the failure chain has n = {chain.n}")
    if t < 0:
        raise ValidationError(f"t must be >= 0, got {t!r}")
    via_a, via_s = _samaniego_terms(sig, chain, t)
    if abs(via_a - via_s) > 1e-10:
        raise NumericInstabilityError(f"survival at t={t}: {via_a!r} (minimal signature) vs {via_s!r} (signature)")
    return min(max(via_a, 0.0), 1.0)


def system_mttf(sig: Signature, chain: FailureChain) -> float:
    """Mean time to failure without repairs, ``sum_i a_i / Psi(i)``."""
    if not isinstance(sig, Signature):
        sig = Signature.from_vector(sig)
    if sig.n != chain.n:
        raise ValidationError(f"signature has n = {sig.n} but the failure chain has n = {chain.n}")
    with mpmath.workprec(chain.psi.prec):
        return float(
            mpmath.fsum(mpmath.mpf(a.numerator) / a.denominator / chain.psi.mp(i) for i, a in enumerate(sig.a, 1))
        )
