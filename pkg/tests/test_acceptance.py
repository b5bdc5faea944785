"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a ``PASS`` or ``FAIL`` line; the lines are printed in the
terminal summary (and directly, when run with ``-s``).
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES, ARPA_SIGNATURE

from lfmo_repair.cli import main
from lfmo_repair.failure_chain import FailureChain, qq_via_matrix_power
from lfmo_repair.oracle import FullStateModel, cycle_metrics
from lfmo_repair.policy import (
    CostModel,
    _samaniego_terms,
    evaluate_policy,
    iid_policy,
    kofn_policy,
    process_signature,
    sweep_policies,
)
from lfmo_repair.simulate import SimulationConfig, convergence_study, write_csv
from lfmo_repair.specs import RunSpec
from lfmo_repair.structure import BooleanFormula, KOutOfNF, Parallel, Series, Signature, structural_signature
from lfmo_repair.subordinator import (
    CompoundPoissonExp,
    GammaSubordinator,
    InverseGaussian,
    PureDrift,
    Stable,
    psi_table,
)


def report(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


CPP = CompoundPoissonExp(0.9, 0.2, 1.0)
BRIDGE = BooleanFormula(3, "(1&2)|3")

BRIDGE_PRINTED = {
    1: dict(p=0.0292, E_T_fail=12.0, E_T_rep=0.3509, E_N_fail=36.0, E_N_rep=1.0526, E_C_fail=66.0,
            E_C_rep=1.9298, LTMN=3.0, LTMC=5.5),
    2: dict(p=0.6836, E_T_fail=1.2434, E_T_rep=0.85, E_N_fail=3.0, E_N_rep=2.0508, E_C_fail=33.0,
            E_C_rep=22.559, LTMN=2.4128, LTMC=26.5409),
    3: dict(p=1.0, E_T_fail=1.1664, E_T_rep=1.1664, E_N_fail=2.3672, E_N_rep=2.3672, E_C_fail=32.3672,
            E_C_rep=32.3672, LTMN=2.0296, LTMC=27.7505),
}
ARPA_PRINTED = {
    1: dict(p=0.00647927, E_T_fail=6.54182, LTMN=25.9998, LTMC=65.7441),
    8: dict(p=0.826094, E_T_fail=0.334493, LTMN=23.1158, LTMC=800.412),
    21: dict(p=1.0, E_T_fail=0.30311, LTMN=22.542, LTMC=880.317),
}


def test_criterion_1_bridge_sweep():
    t0 = time.perf_counter()
    sig = structural_signature(BRIDGE)
    rows = {e.r: e.as_row() for e in sweep_policies(sig, FailureChain(psi_table(CPP, 3)),
                                                      CostModel.linear(3, 1.0, 30.0))}
    elapsed = time.perf_counter() - t0
    worst, cells = 0.0, 0
    bad = []
    for r, printed in BRIDGE_PRINTED.items():
        for key, value in printed.items():
            cells += 1
            rel = abs(rows[r][key] - value) / abs(value)
            worst = max(worst, rel)
            if rel > 5e-4:
                # say whether the miss is only the rounding of the printed figure
                decimals = len(repr(value).split(".")[1])
                within_print = abs(rows[r][key] - value) <= 0.5 * 10.0**-decimals
                bad.append(f"r={r} {key} = {rows[r][key]:.6g} vs printed {value}"
                           + (", equal at printed precision" if within_print else ""))
    ok = not bad and elapsed < 1.0
    report(1, "bridge sweep, c_sys = 30", ok,
           f"{cells} cells, worst rel {worst:.2e}, {elapsed:.2f}s" + (f", off: {bad}" if bad else ""))


def test_criterion_2_arpa_signature(arpa):
    t0 = time.perf_counter()
    sig = structural_signature(arpa)
    elapsed = time.perf_counter() - t0
    got = sig.s
    mismatched = [k for k in range(1, 27) if got[k - 1] != ARPA_SIGNATURE[k - 1]]
    ok = not mismatched and elapsed <= 600
    report(2, "ARPA signature exact", ok,
           f"{26 - len(mismatched)}/26 entries equal, {elapsed:.1f}s"
           + (f", differing k = {mismatched}, e.g. s_2 = {got[1]} vs {ARPA_SIGNATURE[1]}" if mismatched else ""))


def _arpa_rows(c_sys):
    spec = RunSpec.load(f"run_arpa_csys{c_sys}")
    assert spec.signature.s == ARPA_SIGNATURE
    chain = FailureChain(psi_table(spec.subordinator, 26))
    return {e.r: e.as_row() for e in sweep_policies(spec.signature, chain, spec.costs)}


def test_criterion_3_arpa_rows_csys260():
    rows = _arpa_rows(260)
    worst, bad = 0.0, []
    for r, printed in ARPA_PRINTED.items():
        for key, value in printed.items():
            rel = abs(rows[r][key] - value) / abs(value)
            worst = max(worst, rel)
            if rel > 1e-4:
                bad.append(f"r={r} {key}: {rows[r][key]:.6g}")
    report(3, "ARPA spot rows, c_sys = 260", not bad, f"worst rel {worst:.2e}" + (f", off: {bad}" if bad else ""))


def test_criterion_4_arpa_shape_csys1():
    rows = _arpa_rows(1)
    ltmc = [rows[r]["LTMC"] for r in range(1, 7)]
    rel = abs(ltmc[2] - 25.9594) / 25.9594
    down = ltmc[0] > ltmc[1] > ltmc[2]
    up = ltmc[2] < ltmc[3] < ltmc[4] < ltmc[5]
    ok = rel <= 1e-4 and down and up
    report(4, "ARPA LTMC shape, c_sys = 1", ok,
           f"LTMC(3) = {ltmc[2]:.6f}, rel {rel:.2e}, r=1..6: {[round(x, 4) for x in ltmc]}")


def test_criterion_5_oracle_equivalence():
    structures = [BRIDGE, Series(3), Parallel(3), KOutOfNF(3, 2), KOutOfNF(4, 2)]
    subs = [PureDrift(1.0), CPP, GammaSubordinator(1.0, 1.0)]
    t0 = time.perf_counter()
    worst = {"p": 0.0, "E_T_rep": 0.0, "LTMC": 0.0, "TV": 0.0}
    cases = 0
    for structure in structures:
        n = structure.n
        sig = structural_signature(structure)
        costs = CostModel.linear(n, 1.0, 30.0)
        for ex in subs:
            psi = psi_table(ex, n)
            model, chain = FullStateModel(structure, psi), FailureChain(psi)
            for r in range(1, n + 1):
                a, b = cycle_metrics(model, r, costs), evaluate_policy(sig, chain, r, costs)
                worst["p"] = max(worst["p"], abs(a.p - b.p))
                worst["E_T_rep"] = max(worst["E_T_rep"], abs(a.e_t_rep - b.e_t_rep))
                worst["LTMC"] = max(worst["LTMC"], abs(a.ltmc - b.ltmc))
                worst["TV"] = max(worst["TV"], 0.5 * np.abs(a.n_rep_dist - b.n_rep_dist).sum())
                cases += 1
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-10 and elapsed < 5.0
    report(5, "full-state oracle equivalence", ok,
           f"{cases} cases, worst {max(worst.values()):.1e}, {elapsed:.2f}s")


def test_criterion_6_iid_specialisation():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 16))
        w = rng.integers(0, 5, size=n)
        if w.sum() == 0:
            w[0] = 1
        s = [Fraction(int(x), int(w.sum())) for x in w]
        mu = float(rng.uniform(0.1, 5.0))
        r = int(rng.integers(1, n + 1))
        costs = CostModel(tuple(rng.uniform(0, 10, size=n)), float(rng.uniform(0, 100)))
        a = evaluate_policy(s, FailureChain(psi_table(PureDrift(mu), n)), r, costs)
        b = iid_policy(s, n, mu, r, costs)
        diffs = [abs(a.p - b.p), abs(a.e_t_rep - b.e_t_rep) / max(1, b.e_t_rep),
                 abs(a.ltmc - b.ltmc) / max(1, b.ltmc), np.abs(a.n_rep_dist - b.n_rep_dist).max()]
        worst = max(worst, *diffs)
    report(6, "iid closed forms vs general engine", worst <= 1e-12, f"50 cases, worst {worst:.1e}")


CATALOG = [PureDrift(1.0), CPP, GammaSubordinator(1.0, 1.0), InverseGaussian(1.0, 0.5), Stable(0.5),
           CompoundPoissonExp(0.0, 3.0, 0.3)]


def test_criterion_7_internal_identities():
    notes, ok = [], True

    # survival: signature mixture of order statistics vs minimal-signature exponentials
    dual = 0.0
    for ex in CATALOG:
        for structure in (BRIDGE, KOutOfNF(5, 3), Series(4)):
            sig = structural_signature(structure)
            chain = FailureChain(psi_table(ex, structure.n))
            for t in (0.0, 0.05, 0.3, 1.0, 4.0):
                via_a, via_s = _samaniego_terms(sig, chain, t)
                dual = max(dual, abs(via_a - via_s))
    arpa_chain = FailureChain(psi_table(CPP, 26))
    arpa_sig = Signature.from_vector(ARPA_SIGNATURE)
    for t in (0.01, 0.1, 0.5):
        via_a, via_s = _samaniego_terms(arpa_sig, arpa_chain, t)
        dual = max(dual, abs(via_a - via_s))
    ok &= dual <= 1e-10
    notes.append(f"survival {dual:.1e}")

    # QQ recursion vs matrix powers, and row sums, for every catalog exponent up to n = 32
    qq, rows = 0.0, 0.0
    for ex in CATALOG:
        for n in (1, 5, 16, 32):
            chain = FailureChain(psi_table(ex, n))
            rows = max(rows, np.abs(chain.P[:n].sum(axis=1) - 1).max(), np.abs(chain.QQ[:n].sum(axis=1) - 1).max())
            for i in range(n):
                for j in range(i + 1, n + 1):
                    qq = max(qq, abs(qq_via_matrix_power(chain.P, i, j) - chain.QQ[i, j]))
    ok &= qq <= 1e-12 and rows <= 1e-10
    notes.append(f"QQ {qq:.1e}, rows {rows:.1e}")

    # process signature sums to one
    qsum = 0.0
    for ex in CATALOG:
        qsum = max(qsum, abs(process_signature(arpa_sig, FailureChain(psi_table(ex, 26))).sum() - 1))
        qsum = max(qsum, abs(process_signature(structural_signature(BRIDGE), FailureChain(psi_table(ex, 3))).sum() - 1))
    ok &= qsum <= 1e-10
    notes.append(f"sum q {qsum:.1e}")

    # mixed-system quantities assembled from k-out-of-n:F closed forms
    mix = 0.0
    for ex in (CPP, GammaSubordinator(1.0, 1.0)):
        n = 8
        chain = FailureChain(psi_table(ex, n))
        costs = CostModel.linear(n, 1.0, 20.0)
        s = np.array([0, 0.05, 0.2, 0.25, 0.3, 0.1, 0.1, 0.0])
        for r in range(1, n + 1):
            mixed = evaluate_policy(s, chain, r, costs)
            parts = [kofn_policy(k, chain, r, costs) for k in range(1, n + 1)]
            mix = max(
                mix,
                abs(mixed.p - math.fsum(w * e.p for w, e in zip(s, parts))),
                abs(mixed.e_t_rep - math.fsum(w * e.e_t_rep for w, e in zip(s, parts))),
                abs(mixed.e_c_rep - math.fsum(w * e.e_c_rep for w, e in zip(s, parts))),
                np.abs(mixed.n_rep_dist - sum(w * e.n_rep_dist for w, e in zip(s, parts))).max(),
            )
    ok &= mix <= 1e-12
    notes.append(f"k-out-of-n assembly {mix:.1e}")
    report(7, "internal identities", ok, ", ".join(notes))


def _bridge_study():
    spec = RunSpec.load("run_bridge_convergence")
    sim = spec.extra["simulation"]
    cfg = SimulationConfig(spec.system, psi_table(spec.subordinator, 3), spec.r, spec.costs,
                           float(sim["horizon"]), int(sim["replications"]), int(sim["seed"]))
    return cfg, convergence_study(cfg, [10.0, 100.0, 1000.0, 10000.0])


def test_criterion_8_monte_carlo_convergence():
    t0 = time.perf_counter()
    cfg, rows = _bridge_study()
    elapsed = time.perf_counter() - t0
    assert cfg.r == 2 and cfg.replications == 1000
    last = {row["metric"]: row for row in rows if row["horizon"] == 10000.0}
    ltmc_rel = abs(last["LTMC"]["q50"] / 26.5409 - 1)
    p_rel = abs(last["p"]["q50"] / 0.6836 - 1)
    shrinking = {}
    for metric in ("p", "E_T_fail", "LTMN", "LTMC"):
        iqr = [row["q75"] - row["q25"] for row in rows if row["metric"] == metric]
        shrinking[metric] = all(b < a for a, b in zip(iqr, iqr[1:]))
    ok = ltmc_rel <= 0.02 and p_rel <= 0.05 and all(shrinking.values()) and elapsed < 120
    report(8, "Monte Carlo convergence", ok,
           f"median LTMC {last['LTMC']['q50']:.4f} ({ltmc_rel:.2%}), median p {last['p']['q50']:.4f} "
           f"({p_rel:.2%}), IQR shrinking {shrinking}, {elapsed:.1f}s")


def test_criterion_9_determinism(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    codes = [main(["convergence", "--spec", "run_bridge_convergence", "--horizons", "10", "100", "1000", "10000",
                   "--out", str(p)]) for p in paths]
    a, b = (p.read_bytes() for p in paths)
    direct = write_csv(_bridge_study()[1]).encode()
    ok = codes == [0, 0] and a == b == direct
    report(9, "byte-identical reruns", ok, f"{len(a)} bytes, identical={a == b}, matches library={a == direct}")
