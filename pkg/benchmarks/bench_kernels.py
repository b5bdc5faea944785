"""Compiled kernels against their pure-numpy / pure-Python fallbacks.

Usage::

    python3 benchmarks/bench_kernels.py            # in-process kernel timings
    python3 benchmarks/bench_kernels.py --e2e      # also whole commands with and without numba

The in-process part times each kernel body directly (``python_impl`` strips
the jit wrapper), so both paths see identical inputs.  The ``--e2e`` part runs
the same CLI command twice in fresh interpreters, once with
``LFMO_REPAIR_DISABLE_NUMBA=1``.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from lfmo_repair import _kernels
from lfmo_repair._accel import HAVE_NUMBA, python_impl
from lfmo_repair.policy import CostModel
from lfmo_repair.simulate import SimulationConfig, _Prepared, replication_rng
from lfmo_repair.specs import load_json
from lfmo_repair.structure import BooleanFormula, structure_from_json
from lfmo_repair.subordinator import CompoundPoissonExp, psi_table


def best_of(fn, repeats=3):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_two_terminal(n_masks: int) -> None:
    g = structure_from_json(load_json("arpa"))
    masks = np.random.default_rng(0).integers(0, 1 << g.n, size=n_masks, dtype=np.int64)
    args = (masks, g._offsets, g._inc_edge, g._inc_node, len(g.nodes), g._src, g._dst)
    ref = _kernels.two_terminal_eval_numpy(masks, g._u, g._v, g._src, g._dst)
    rows = [("numpy relaxation", lambda: _kernels.two_terminal_eval_numpy(masks, g._u, g._v, g._src, g._dst))]
    if HAVE_NUMBA:
        _kernels.two_terminal_eval(*args)  # compile
        assert np.array_equal(_kernels.two_terminal_eval(*args), ref)
        rows.append(("numba DFS", lambda: _kernels.two_terminal_eval(*args)))
    small = args[0][: max(1, n_masks // 50)]
    py = python_impl(_kernels.two_terminal_eval)
    t_py = best_of(lambda: py(small, *args[1:]), 1) * (n_masks / len(small))
    print(f"two-terminal ARPA, {n_masks} states")
    print(f"  {'python DFS (extrapolated)':28s} {t_py:9.4f} s")
    for name, fn in rows:
        print(f"  {name:28s} {best_of(fn):9.4f} s")


def bench_simulation(horizon: float) -> None:
    cfg = SimulationConfig(BooleanFormula(3, "(1&2)|3"), psi_table(CompoundPoissonExp(0.9, 0.2, 1.0), 3), 2,
                           CostModel.linear(3, 1.0, 30.0), horizon=horizon, replications=1, seed=1)
    prep = _Prepared(cfg, np.array([horizon]))
    u = replication_rng(1, 0).random(prep.initial_buffer)

    def call(kernel):
        stats = np.zeros((1, 5))
        hist = np.zeros(4, dtype=np.int64)
        kernel(u, prep.n, prep.psi, prep.cum_rows, prep.phi, prep.r, prep.c_cmp, prep.c_sys, prep.horizons,
               stats, hist)
        return stats

    print(f"one bridge replication, horizon {horizon:g} (~{horizon * prep.psi[-1]:.0f} events)")
    print(f"  {'python loop':28s} {best_of(lambda: call(python_impl(_kernels.simulate_replication)), 1):9.4f} s")
    if HAVE_NUMBA:
        call(_kernels.simulate_replication)
        print(f"  {'numba':28s} {best_of(lambda: call(_kernels.simulate_replication)):9.4f} s")


def bench_end_to_end() -> None:
    cmd = [sys.executable, "-m", "lfmo_repair", "convergence", "--spec", "run_bridge_convergence",
           "--horizons", "10", "100", "1000", "--reps", "100", "--out", os.devnull]
    print("CLI convergence, 100 replications to horizon 1000 (includes start-up and compilation)")
    for label, flag in (("numba", ""), ("fallback", "1")):
        env = dict(os.environ, LFMO_REPAIR_DISABLE_NUMBA=flag)
        t0 = time.perf_counter()
        subprocess.run(cmd, env=env, check=True)
        print(f"  {label:28s} {time.perf_counter() - t0:9.4f} s")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--masks", type=int, default=200_000)
    parser.add_argument("--horizon", type=float, default=2_000.0)
    parser.add_argument("--e2e", action="store_true")
    args = parser.parse_args()
    print(f"numba enabled: {HAVE_NUMBA}")
    bench_two_terminal(args.masks)
    bench_simulation(args.horizon)
    if args.e2e:
        bench_end_to_end()


if __name__ == "__main__":
    main()
