"""Monte Carlo simulation of r-out-of-n:R repair policies.

Failures are generated by the embedded failed-count chain: from ``i`` failed
components the process waits an Exp(``Psi(n - i)``) time, draws the new failed
count from row ``i`` of the transition matrix and picks that many alive
components uniformly without replacement.  Only ``Psi(1..n)`` enters, so any
subordinator can be simulated without discretising its paths.  The structure
function is evaluated on the actual component states at every event.

Random numbers
--------------
Replication ``i`` draws from ``numpy.random.Generator(PCG64(SeedSequence(seed,
spawn_key=(i,))))``.  Its uniforms are generated up front into a buffer that
the kernel consumes in a fixed order; the buffer is regrown from the same
stream when a long horizon needs more.  Results do not depend on how
replications are scheduled, and the compiled and pure-Python kernels follow
the same event sequence (event times may differ in the last bit, since the two
paths use different ``log1p`` implementations).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from ._kernels import simulate_replication
from .errors import ValidationError
from .failure_chain import transition_matrix
from .policy import CostModel, evaluate_policy
from .failure_chain import FailureChain
from .structure import SystemStructure, structural_signature
from .subordinator import PsiTable

__all__ = [
    "SimulationConfig",
    "SimulationResult",
    "FailureRound",
    "sample_failure_round",
    "simulate_policy",
    "simulate_horizons",
    "convergence_study",
    "write_csv",
    "METRICS",
    "QUANTILE_COLUMNS",
]

METRICS = ("p", "E_T_fail", "LTMN", "LTMC")
QUANTILE_COLUMNS = ("horizon", "r", "metric", "q25", "q50", "q75", "theoretical")

# columns of the per-horizon snapshot written by the kernel
_REPAIRS, _SYS_FAIL, _LAST_FAIL, _COMP_FAIL, _COST = range(5)


def replication_rng(seed: int, i: int) -> np.random.Generator:
    """Independent stream for replication ``i``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(i,))))


@dataclass(frozen=True)
class SimulationConfig:
    structure: SystemStructure
    psi: PsiTable
    r: int
    costs: CostModel
    horizon: float = 1e4
    replications: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        n = self.structure.n
        if self.psi.n != n or self.costs.n != n:
            raise ValidationError(f"structure, Psi table and costs must share n; got {n}, {self.psi.n}, {self.costs.n}")
        if not 1 <= int(self.r) <= n:
            raise ValidationError(f"r must be in 1..n (n = {n}), got {self.r!r}")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ValidationError(f"horizon must be a finite positive time, got {self.horizon!r}")
        if int(self.replications) < 1:
            raise ValidationError(f"replications must be >= 1, got {self.replications!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


@dataclass(frozen=True)
class SimulationResult:
    """Per-replication estimators at one horizon.

    Undefined estimators are ``nan``: ``p`` when no repair happened and
    ``E_T_fail`` when the system never failed.  Quantiles ignore them.
    """

    horizon: float
    r: int
    estimators: dict[str, np.ndarray]
    repairs: np.ndarray
    system_failures: np.ndarray
    repair_size_counts: np.ndarray = field(repr=False)

    @property
    def replications(self) -> int:
        return len(self.repairs)

    def quantiles(self, metric: str) -> tuple[float, float, float]:
        x = self.estimators[metric]
        if np.all(np.isnan(x)):
            return (math.nan, math.nan, math.nan)
        q = np.nanquantile(x, [0.25, 0.5, 0.75])
        return (float(q[0]), float(q[1]), float(q[2]))


@dataclass(frozen=True)
class FailureRound:
    sojourn: float
    new_failures: np.ndarray


def sample_failure_round(
    n_alive: int,
    psi: PsiTable,
    rng: np.random.Generator,
    alive: Sequence[int] | None = None,
    P: np.ndarray | None = None,
) -> FailureRound:
    """Draw the next failure epoch from a state with ``n_alive`` working components.

    ``alive`` lists the working component indices (default ``0..n_alive-1``);
    ``P`` is the transition matrix and is built from ``psi`` when omitted.
    """
    n = psi.n
    if not 1 <= n_alive <= n:
        raise ValidationError(f"n_alive must be in 1..{n}, got {n_alive!r}")
    if P is None:
        P = transition_matrix(psi)
    alive = np.arange(n_alive) if alive is None else np.asarray(alive)
    if len(alive) != n_alive:
        raise ValidationError("alive must list exactly n_alive components")
    i = n - n_alive
    sojourn = rng.exponential(1.0 / psi[n_alive])
    row = P[i, i + 1 :]
    batch = 1 + int(rng.choice(n_alive, p=row / row.sum()))
    picked = rng.choice(alive, size=batch, replace=False)
    return FailureRound(float(sojourn), np.sort(picked))


class _Prepared:
    """Arrays shared by every replication of one configuration."""

    def __init__(self, config: SimulationConfig, horizons: np.ndarray):
        n = config.structure.n
        self.n = n
        self.psi = np.asarray(config.psi.values, dtype=np.float64)
        self.cum_rows = np.cumsum(transition_matrix(config.psi), axis=1)
        self.phi = np.ascontiguousarray(config.structure.truth_table(), dtype=np.uint8)
        self.c_cmp = np.asarray(config.costs.c_cmp, dtype=np.float64)
        self.c_sys = float(config.costs.c_sys)
        self.r = int(config.r)
        self.horizons = horizons
        # uniforms per event: sojourn, batch size, then one per failed component
        expected_events = horizons[-1] * self.psi[-1]
        self.initial_buffer = int(expected_events * (2 + n) * 1.2) + 64

    def run(self, rng_factory, size: int):
        n_h = len(self.horizons)
        while True:
            uniforms = rng_factory().random(size)
            stats = np.zeros((n_h, 5))
            hist = np.zeros(self.n + 1, dtype=np.int64)
            used = simulate_replication(
                uniforms, self.n, self.psi, self.cum_rows, self.phi, self.r,
                self.c_cmp, self.c_sys, self.horizons, stats, hist,
            )
            if used >= 0:
                return stats, hist
            size *= 2


def _check_horizons(horizons: Iterable[float]) -> np.ndarray:
    h = np.asarray(list(horizons), dtype=np.float64)
    if h.ndim != 1 or len(h) == 0:
        raise ValidationError("at least one horizon is required")
    if np.any(~np.isfinite(h)) or np.any(h <= 0) or np.any(np.diff(h) <= 0):
        raise ValidationError("horizons must be finite, positive and strictly ascending")
    return h


def simulate_horizons(config: SimulationConfig, horizons: Iterable[float]) -> list[SimulationResult]:
    """Simulate each replication once up to the last horizon and read off every horizon.

    Events at exactly a horizon are counted; later ones are not.
    """
    h = _check_horizons(horizons)
    prep = _Prepared(config, h)
    reps = int(config.replications)
    stats = np.zeros((reps, len(h), 5))
    hist = np.zeros(config.structure.n + 1, dtype=np.int64)
    for i in range(reps):
        s, counts = prep.run(lambda: replication_rng(int(config.seed), i), prep.initial_buffer)
        stats[i] = s
        hist += counts

    results = []
    for k, horizon in enumerate(h):
        st = stats[:, k, :]
        repairs, fails = st[:, _REPAIRS], st[:, _SYS_FAIL]
        with np.errstate(invalid="ignore", divide="ignore"):
            p_hat = np.where(repairs > 0, fails / repairs, np.nan)
            t_fail = np.where(fails > 0, st[:, _LAST_FAIL] / fails, np.nan)
        results.append(
            SimulationResult(
                horizon=float(horizon),
                r=int(config.r),
                estimators={
                    "p": p_hat,
                    "E_T_fail": t_fail,
                    "LTMN": st[:, _COMP_FAIL] / horizon,
                    "LTMC": st[:, _COST] / horizon,
                },
                repairs=repairs.astype(np.int64),
                system_failures=fails.astype(np.int64),
                # only meaningful for the final horizon, where every cycle is counted
                repair_size_counts=hist if k == len(h) - 1 else np.zeros_like(hist),
            )
        )
    return results


def simulate_policy(config: SimulationConfig) -> SimulationResult:
    """Simulate ``config.replications`` independent runs over ``[0, config.horizon]``."""
    return simulate_horizons(config, [config.horizon])[0]


def convergence_study(
    config: SimulationConfig,
    horizons: Iterable[float],
    rs: Sequence[int] | None = None,
) -> list[dict]:
    """Quantile bands of every estimator per horizon and threshold.

    Returns rows with keys :data:`QUANTILE_COLUMNS`; ``theoretical`` comes from
    the exact policy evaluation.
    """
    h = _check_horizons(horizons)
    rs = [int(config.r)] if rs is None else [int(r) for r in rs]
    sig = structural_signature(config.structure)
    chain = FailureChain(config.psi)
    rows = []
    for r in rs:
        cfg = SimulationConfig(
            config.structure, config.psi, r, config.costs, float(h[-1]), config.replications, config.seed
        )
        exact = evaluate_policy(sig, chain, r, config.costs)
        theory = {"p": exact.p, "E_T_fail": exact.e_t_fail, "LTMN": exact.ltmn, "LTMC": exact.ltmc}
        for res in simulate_horizons(cfg, h):
            for metric in METRICS:
                q25, q50, q75 = res.quantiles(metric)
                rows.append(
                    {"horizon": res.horizon, "r": r, "metric": metric, "q25": q25, "q50": q50, "q75": q75,
                     "theoretical": theory[metric]}
                )
    return rows


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".6g")
    return str(v)


def write_csv(rows: Sequence[dict], out: TextIO | None = None, columns: Sequence[str] | None = None) -> str:
    """Write ``rows`` as CSV with floats at 6 significant digits; returns the text."""
    columns = list(columns or (rows[0].keys() if rows else QUANTILE_COLUMNS))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) if row[c] is not None else "" for c in columns])
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text
