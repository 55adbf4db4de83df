"""Joint power-allocation and energy-transfer solver."""

import numpy as np
import pytest

from ecomp import (
    EnergyState,
    ZfGains,
    as_beta_matrix,
    generate_rayleigh,
    grid_search_p1,
    kkt_residual,
    recover_transfers,
    solve_dual,
    solve_p1,
    waterfill_sum_power,
    zf_gains,
)


def _instance(seed, n_bs=2, m_ant=1, n_mt=2, e_hi=30.0):
    rng = np.random.default_rng(seed)
    var = rng.uniform(0.2, 1.0, size=(n_bs, n_mt))
    ch = generate_rayleigh(n_bs, m_ant, n_mt, var, rng)
    g = zf_gains(ch)
    es = EnergyState(re=rng.uniform(0.0, e_hi, size=n_bs))
    return g, es


def test_matches_grid_oracle_on_small_instances():
    for seed, beta in ((0, 0.0), (1, 0.4), (2, 0.8), (3, 1.0)):
        g, es = _instance(seed)
        sol = solve_p1(g, es, beta)
        ref_obj, _, _ = grid_search_p1(g, es, beta)
        assert sol.objective == pytest.approx(ref_obj, rel=1e-4, abs=1e-9)


def test_solution_is_primal_feasible():
    for seed in range(6):
        beta = 0.2 + 0.1 * seed
        g, es = _instance(seed, n_bs=3, m_ant=2, n_mt=4)
        sol = solve_p1(g, es, beta)
        bm = as_beta_matrix(beta, 3)
        slack = es.budget + (bm * sol.e).sum(axis=0) - sol.e.sum(axis=1) \
            - g.b @ sol.p
        assert np.all(slack > -1e-7 * np.maximum(es.budget, 1.0))
        assert np.all(sol.p >= 0) and np.all(sol.e >= 0)


def test_no_station_both_sends_and_receives():
    for seed in range(6):
        g, es = _instance(seed, n_bs=3, m_ant=2, n_mt=4)
        sol = solve_p1(g, es, 0.7)
        inflow = sol.e.sum(axis=0)
        outflow = sol.e.sum(axis=1)
        assert np.all(np.minimum(inflow, outflow) < 1e-8)


def test_duality_gap_certificate():
    for seed in range(6):
        g, es = _instance(seed, n_bs=3, m_ant=2, n_mt=4)
        sol = solve_p1(g, es, 0.5)
        assert sol.duality_gap < 1e-6
        assert sol.dual_value >= sol.objective - 1e-9


def test_objective_is_scale_invariant():
    # Scaling all budgets by s while dividing every gain by s maps the
    # problem onto itself with powers scaled by s.
    g, es = _instance(4)
    sol = solve_p1(g, es, 0.6)
    s = 1e-4
    g2 = ZfGains(a=g.a / s, b=g.b, t_dir=g.t_dir, weights=g.weights)
    sol2 = solve_p1(g2, EnergyState(re=es.budget * s), 0.6)
    assert sol2.objective == pytest.approx(sol.objective, rel=1e-8)
    np.testing.assert_allclose(sol2.p, sol.p * s, rtol=1e-6, atol=1e-12)


def test_tiny_budgets_remain_solvable():
    for seed in range(8):
        g, es = _instance(seed, e_hi=1e-3)
        sol = solve_p1(g, es, 0.9)
        assert np.isfinite(sol.objective)
        assert kkt_residual(sol, g, es, 0.9) < 1e-8


def test_lossless_transfers_collapse_to_sum_power_waterfilling():
    g, es = _instance(5, n_bs=3, m_ant=2, n_mt=4)
    sol = solve_p1(g, es, 1.0)
    ref = waterfill_sum_power(g.weights, g.a, g.b.sum(axis=0),
                              float(np.sum(es.budget)))
    np.testing.assert_allclose(sol.p, ref, rtol=1e-7, atol=1e-9)


def test_isolated_zero_budget_station_kills_the_rate():
    # Every beam spends power at both stations, so without transfers an
    # empty station silences the whole cluster.
    g, _ = _instance(6)
    es = EnergyState(re=np.array([12.0, 0.0]))
    sol = solve_p1(g, es, 0.0)
    assert sol.objective == 0.0
    assert np.all(sol.p == 0.0)


def test_transfers_rescue_the_zero_budget_station():
    g, _ = _instance(6)
    es = EnergyState(re=np.array([12.0, 0.0]))
    sol = solve_p1(g, es, 0.5)
    assert sol.objective > 0.1
    assert sol.e[0, 1] > 0.0


def test_zero_total_budget_gives_zero_objective():
    g, _ = _instance(7)
    sol = solve_p1(g, EnergyState(re=np.zeros(2)), 0.9)
    assert sol.objective == 0.0


def test_objective_monotone_in_transfer_efficiency():
    g, es = _instance(8)
    objs = [solve_p1(g, es, b).objective for b in (0.0, 0.3, 0.6, 0.9, 1.0)]
    assert all(hi >= lo - 1e-9 for lo, hi in zip(objs, objs[1:]))


def test_weights_tilt_the_allocation():
    g, es = _instance(9)
    gw = ZfGains(a=g.a, b=g.b, t_dir=g.t_dir,
                 weights=np.array([10.0, 1.0]))
    base = solve_p1(g, es, 0.5)
    tilted = solve_p1(gw, es, 0.5)
    assert tilted.p[0] > base.p[0]


def test_dual_prices_satisfy_the_transfer_cone():
    g, es = _instance(10, n_bs=3, m_ant=2, n_mt=4)
    dual = solve_dual(g, es, 0.8)
    mu = dual.mu
    bm = as_beta_matrix(0.8, 3)
    assert np.all(mu >= 0)
    assert np.all(bm * mu[None, :] - mu[:, None] <= 1e-8 * max(mu.max(), 1.0))


def test_recover_transfers_balances_the_books():
    g, es = _instance(11)
    sol = solve_p1(g, es, 0.7)
    e = recover_transfers(sol.p, es, 0.7, b=g.b)
    bm = as_beta_matrix(0.7, 2)
    avail = es.budget + (bm * e).sum(axis=0) - e.sum(axis=1)
    assert np.all(g.b @ sol.p <= avail + 1e-7)


def test_rates_and_objective_are_consistent():
    g, es = _instance(12)
    sol = solve_p1(g, es, 0.4)
    np.testing.assert_allclose(sol.rates,
                               g.weights * np.log2(1.0 + g.a * sol.p),
                               rtol=1e-12)
    assert sol.objective == pytest.approx(float(np.sum(sol.rates)))
