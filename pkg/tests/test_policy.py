import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from lfmo_repair.errors import ValidationError
from lfmo_repair.failure_chain import FailureChain
from lfmo_repair.policy import (
    CostModel,
    evaluate_policy,
    iid_policy,
    kofn_policy,
    process_signature,
    sweep_policies,
    system_mttf,
    system_survival,
)
from lfmo_repair.structure import BooleanFormula, KOutOfNF, Series, Signature, structural_signature
from lfmo_repair.subordinator import CompoundPoissonExp, GammaSubordinator, PsiTable, PureDrift, psi_table

F = Fraction

# bridge (x1 & x2) | x3, CPP(0.9, 0.2, 1), c_cmp(i) = i, c_sys = 30, as printed
BRIDGE_PRINTED = {
    1: dict(p=0.0292, E_T_fail=12.0, E_T_rep=0.3509, E_N_fail=36.0, E_N_rep=1.0526, E_C_fail=66.0,
            E_C_rep=1.9298, LTMN=3.0, LTMC=5.5),
    2: dict(p=0.6836, E_T_fail=1.2434, E_T_rep=0.85, E_N_fail=3.0, E_N_rep=2.0508, E_C_fail=33.0,
            E_C_rep=22.559, LTMN=2.4128, LTMC=26.5409),
    3: dict(p=1.0, E_T_fail=1.1664, E_T_rep=1.1664, E_N_fail=2.3672, E_N_rep=2.3672, E_C_fail=32.3672,
            E_C_rep=32.3672, LTMN=2.0296, LTMC=27.7505),
}


@pytest.fixture(scope="module")
def bridge_chain(cpp3):
    return FailureChain(cpp3)


@pytest.fixture(scope="module")
def bridge_sig(bridge):
    return structural_signature(bridge)


def _exact_bridge_cycle(r):
    # exact first-step analysis over failed sets of the bridge, in rationals
    psi = [F(0)] + [F(9, 10) * k + F(1, 5) * k / (1 + k) for k in (1, 2, 3)]
    lam = [sum(math.comb(k, i) * (-1) ** (i + 1) * psi[3 - k + i] for i in range(k + 1)) for k in range(4)]

    def up(f):
        return (not f & 1 and not f & 2) or not f & 4

    @lru_cache(None)
    def go(f):
        size = bin(f).count("1")
        if size >= r or not up(f):
            down = int(not up(f))
            return F(0), F(size + 30 * down), F(down), F(size)
        rates = {}
        for v in range(1, 8):
            if f | v != f:
                rates[f | v] = rates.get(f | v, 0) + lam[bin(v).count("1")]
        tot = sum(rates.values())
        out = [1 / tot, F(0), F(0), F(0)]
        for g, q in rates.items():
            for i, x in enumerate(go(g)):
                out[i] += q / tot * x
        return tuple(out)

    t, c, p, n = go(0)
    return dict(p=p, E_T_rep=t, E_C_rep=c, E_N_rep=n, LTMC=c / t, LTMN=n / t)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_bridge_rows_match_exact_rationals(r, bridge_sig, bridge_chain, bridge_costs):
    row = evaluate_policy(bridge_sig, bridge_chain, r, bridge_costs).as_row()
    for key, exact in _exact_bridge_cycle(r).items():
        assert row[key] == pytest.approx(float(exact), rel=1e-12, abs=1e-15), key


def test_bridge_frozen_values(bridge_sig, bridge_chain, bridge_costs):
    ev = evaluate_policy(bridge_sig, bridge_chain, 2, bridge_costs)
    assert ev.p == pytest.approx(0.6836055656382335, rel=1e-12)
    assert ev.e_t_rep == pytest.approx(0.8499697519661222, rel=1e-12)
    assert ev.ltmc == pytest.approx(26.540925266903916, rel=1e-12)
    assert ev.ltmn == pytest.approx(2.412811387900356, rel=1e-12)
    ev3 = evaluate_policy(bridge_sig, bridge_chain, 3, bridge_costs)
    assert ev3.e_t_rep == pytest.approx(1.1663641863278886, rel=1e-12)
    assert ev3.ltmc == pytest.approx(27.75051867219917, rel=1e-12)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_bridge_table_at_printed_precision(r, bridge_sig, bridge_chain, bridge_costs):
    row = evaluate_policy(bridge_sig, bridge_chain, r, bridge_costs).as_row()
    for key, printed in BRIDGE_PRINTED[r].items():
        digits = len(repr(printed).split(".")[1]) if "." in repr(printed) else 0
        half_ulp = 0.5 * 10.0 ** (-digits)
        assert abs(row[key] - printed) <= max(5e-4 * abs(printed), half_ulp), key


def test_rational_reference_for_bridge(bridge_sig):
    # r = 1 in exact arithmetic: the cycle ends at the first shock, and the bridge
    # is down iff that shock fails 2 components (weight 2/3) or all 3 (weight 1/3)
    psi = [F(0)] + [F(9, 10) * k + F(1, 5) * k / (1 + k) for k in (1, 2, 3)]
    lam1 = psi[3] - psi[2]
    lam3 = sum(math.comb(3, i) * (-1) ** (i + 1) * psi[i] for i in range(4))
    assert lam3 == F(1, 20)
    p_at_least_2 = 1 - 3 * lam1 / psi[3]
    p_all_3 = lam3 / psi[3]
    p = bridge_sig.s[1] * p_at_least_2 + bridge_sig.s[2] * p_all_3
    costs = CostModel.linear(3, 1.0, 30.0)
    ev = evaluate_policy(bridge_sig, FailureChain(PsiTable.from_values([float(x) for x in psi[1:]])), 1, costs)
    assert ev.p == pytest.approx(float(p), rel=1e-14)
    assert ev.e_t_rep == pytest.approx(float(1 / psi[3]), rel=1e-14)
    n_rep = [3 * lam1 / psi[3], 1 - 3 * lam1 / psi[3] - p_all_3, p_all_3]
    assert ev.n_rep_dist == pytest.approx([float(x) for x in n_rep], abs=1e-14)


def test_sweep_and_last_threshold(bridge_sig, bridge_chain, bridge_costs):
    evs = sweep_policies(bridge_sig, bridge_chain, bridge_costs)
    assert [e.r for e in evs] == [1, 2, 3]
    assert evs[-1].p == 1.0
    assert evs[-1].e_t_rep == pytest.approx(system_mttf(bridge_sig, bridge_chain), rel=1e-13)


def test_evaluation_bookkeeping(bridge_sig, bridge_chain, bridge_costs):
    for ev in sweep_policies(bridge_sig, bridge_chain, bridge_costs):
        assert ev.n_rep_dist.sum() == pytest.approx(1.0, abs=1e-12)
        assert ev.n_fail_dist.sum() == pytest.approx(1.0, abs=1e-12)
        if ev.n_prev_dist is not None:
            assert ev.n_prev_dist.sum() == pytest.approx(1.0, abs=1e-12)
            mix = ev.p * ev.n_fail_dist + (1 - ev.p) * ev.n_prev_dist
            assert np.allclose(mix, ev.n_rep_dist, atol=1e-12)
        assert ev.e_c_fail == pytest.approx(ev.e_c_rep / ev.p)
        assert ev.e_c_fail == pytest.approx(
            bridge_costs.c_sys + sum(c * q for c, q in zip(bridge_costs.c_cmp, ev.n_rep_dist)) / ev.p
        )
        assert ev.system_failure_rate == pytest.approx(ev.p / ev.e_t_rep)


def test_never_failing_policy():
    # 2-out-of-3:F under pure drift with r = 1: every repair is preventive
    n = 3
    ch = FailureChain(psi_table(PureDrift(1.0), n))
    costs = CostModel.linear(n, 1.0, 100.0)
    ev = evaluate_policy(structural_signature(KOutOfNF(3, 2)), ch, 1, costs)
    assert ev.p == 0.0 and not ev.system_fails
    assert math.isinf(ev.e_t_fail) and ev.e_c_fail is None and ev.n_fail_dist is None
    assert ev.ltmc == pytest.approx(3.0)
    js = ev.to_json()
    assert js["E_T_fail"] is None and js["system_fails"] is False


def test_r_out_of_range(bridge_sig, bridge_chain, bridge_costs):
    for r in (0, 4):
        with pytest.raises(ValidationError, match="r must be in 1..n"):
            evaluate_policy(bridge_sig, bridge_chain, r, bridge_costs)


def test_cost_model_json():
    c = CostModel.from_json({"linear": 2.0, "c_sys": 5}, 3)
    assert c.c_cmp == (2.0, 4.0, 6.0) and c.c_sys == 5.0
    assert CostModel.from_json({"c_cmp": [1, 1, 1], "c_sys": 0}, 3).c_cmp == (1.0, 1.0, 1.0)
    with pytest.raises(ValidationError):
        CostModel.from_json({"c_cmp": [1, 1], "c_sys": 0}, 3)
    with pytest.raises(ValidationError):
        CostModel.from_json({"linear": 1.0}, 3)
    with pytest.raises(ValidationError):
        CostModel((1.0, -1.0), 0.0)


def test_process_signature(bridge_sig, bridge_chain):
    q = process_signature(bridge_sig, bridge_chain)
    assert q.sum() == pytest.approx(1.0, abs=1e-12)
    assert q == pytest.approx([0.0, 0.6327888687235327, 0.3672111312764673], abs=1e-13)
    drift = FailureChain(psi_table(PureDrift(1.0), 3))
    assert process_signature(bridge_sig, drift) == pytest.approx([0, 2 / 3, 1 / 3], abs=1e-15)
    series = structural_signature(Series(3))
    assert np.allclose(process_signature(series, bridge_chain), bridge_chain.P[0, 1:], atol=1e-15)


def test_survival_and_mttf(bridge_sig, bridge_chain):
    assert system_survival(bridge_sig, bridge_chain, 0.0) == pytest.approx(1.0, abs=1e-15)
    series = structural_signature(Series(3))
    assert system_survival(series, bridge_chain, 0.3) == pytest.approx(math.exp(-2.85 * 0.3), rel=1e-14)
    mttf = system_mttf(bridge_sig, bridge_chain)
    assert mttf == pytest.approx(1.1664, abs=5e-5)
    # a = (1, 1, -1): 1/Psi(1) + 1/Psi(2) - 1/Psi(3)
    assert mttf == pytest.approx(1 + 1 / (1.8 + 0.4 / 3) - 1 / 2.85, rel=1e-14)
    val, _ = integrate.quad(lambda t: system_survival(bridge_sig, bridge_chain, t), 0, np.inf)
    assert val == pytest.approx(mttf, rel=1e-8)


def test_iid_closed_form_bridge():
    ev = iid_policy((0, F(2, 3), F(1, 3)), 3, 1.0, 1, CostModel.linear(3, 1.0, 30.0))
    assert ev.p == 0.0
    assert ev.e_t_rep == pytest.approx(1 / 3, rel=1e-15)
    assert ev.ltmc == pytest.approx(3.0, rel=1e-15)


def _random_signature(rng, n):
    w = rng.integers(0, 5, size=n).astype(float)
    if w.sum() == 0:
        w[rng.integers(n)] = 1
    return w / w.sum()


def test_iid_specialisation_random_cases():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        n = int(rng.integers(1, 13))
        mu = float(rng.uniform(0.1, 5.0))
        r = int(rng.integers(1, n + 1))
        s = _random_signature(rng, n)
        costs = CostModel(tuple(rng.uniform(0, 10, size=n)), float(rng.uniform(0, 50)))
        ch = FailureChain(psi_table(PureDrift(mu), n))
        a = evaluate_policy(s, ch, r, costs)
        b = iid_policy(s, n, mu, r, costs)
        assert abs(a.p - b.p) <= 1e-12
        assert abs(a.e_t_rep - b.e_t_rep) <= 1e-12 * max(1, b.e_t_rep)
        assert abs(a.e_c_rep - b.e_c_rep) <= 1e-12 * max(1, b.e_c_rep)
        assert np.abs(a.n_rep_dist - b.n_rep_dist).max() <= 1e-12


@pytest.mark.parametrize("ex", [CompoundPoissonExp(0.9, 0.2, 1.0), GammaSubordinator(1, 1), PureDrift(1)],
                         ids=lambda e: e.kind)
def test_kofn_closed_forms(ex):
    n = 6
    ch = FailureChain(psi_table(ex, n))
    costs = CostModel.linear(n, 1.0, 7.0)
    for k in range(1, n + 1):
        e_k = [0] * n
        e_k[k - 1] = 1
        for r in range(1, n + 1):
            a = kofn_policy(k, ch, r, costs)
            b = evaluate_policy(e_k, ch, r, costs)
            assert abs(a.p - b.p) <= 1e-12
            assert abs(a.ltmc - b.ltmc) <= 1e-12 * b.ltmc
            if k <= r:
                assert a.p == 1.0


@pytest.mark.parametrize("r", range(1, 8))
def test_signature_mixture_identities(r):
    # every cycle quantity of a mixed system is the s-mixture of k-out-of-n:F quantities
    n = 7
    ch = FailureChain(psi_table(CompoundPoissonExp(0.4, 1.5, 0.7), n))
    costs = CostModel.linear(n, 2.0, 11.0)
    s = np.array([0, 0.1, 0.25, 0.3, 0.2, 0.15, 0.0])
    mixed = evaluate_policy(s, ch, r, costs)
    parts = [kofn_policy(k, ch, r, costs) for k in range(1, n + 1)]
    assert mixed.p == pytest.approx(math.fsum(sk * e.p for sk, e in zip(s, parts)), abs=1e-12)
    assert mixed.e_t_rep == pytest.approx(math.fsum(sk * e.e_t_rep for sk, e in zip(s, parts)), abs=1e-12)
    assert mixed.e_c_rep == pytest.approx(math.fsum(sk * e.e_c_rep for sk, e in zip(s, parts)), abs=1e-12)
    mix_dist = sum(sk * e.n_rep_dist for sk, e in zip(s, parts))
    assert np.abs(mixed.n_rep_dist - mix_dist).max() <= 1e-12


@st.composite
def policy_cases(draw):
    n = draw(st.integers(1, 10))
    w = draw(st.lists(st.integers(0, 6), min_size=n, max_size=n).filter(lambda x: sum(x) > 0))
    s = [F(x, sum(w)) for x in w]
    mu = draw(st.floats(0.0, 2.0))
    lam = draw(st.floats(0.01, 4.0))
    gamma = draw(st.floats(0.05, 3.0))
    r = draw(st.integers(1, n))
    c_sys = draw(st.floats(0.0, 100.0))
    return n, s, CompoundPoissonExp(mu, lam, gamma), r, c_sys


@settings(max_examples=60, deadline=None)
@given(policy_cases())
def test_policy_invariants(case):
    n, s, ex, r, c_sys = case
    ch = FailureChain(psi_table(ex, n))
    costs = CostModel.linear(n, 1.0, c_sys)
    ev = evaluate_policy(Signature.from_vector(s), ch, r, costs)
    assert 0.0 <= ev.p <= 1.0
    assert ev.n_rep_dist.sum() == pytest.approx(1.0, abs=1e-10)
    assert np.all(ev.n_rep_dist >= 0)
    assert ev.e_n_rep <= n + 1e-12
    assert ev.e_t_rep <= ch.order_stat_mean(r) + 1e-12
    if r == n:
        assert ev.p == pytest.approx(1.0, abs=1e-12)
    if ev.p > 0:
        assert ev.e_t_fail >= ev.e_t_rep - 1e-12


@settings(max_examples=30, deadline=None)
@given(policy_cases(), st.floats(0.0, 5.0))
def test_survival_dual_forms_agree(case, t):
    n, s, ex, _, _ = case
    ch = FailureChain(psi_table(ex, n))
    val = system_survival(Signature.from_vector(s), ch, t)  # raises if the two forms disagree
    assert 0.0 <= val <= 1.0
