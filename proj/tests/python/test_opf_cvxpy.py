"""Cross-check of the relaxed dispatch against the same program written in
cvxpy and solved by Clarabel."""

import cvxpy as cp
import numpy as np
import pytest

import dwcplan


def hourly(run):
    base = run["baseline"]
    p = np.asarray(base["p_mw"])
    q = np.asarray(base["q_mvar"])
    k = int(round(1.0 / base["dt_h"]))
    p = p.reshape(p.shape[0], -1, k).mean(axis=2)
    q = q.reshape(q.shape[0], -1, k).mean(axis=2)
    gamma = np.asarray(run["resolved"]["solar"]["availability"]).reshape(-1, k).mean(axis=1)
    demand = {"dt_h": 1.0, "power_factor": base["power_factor"], "p_mw": p.tolist(), "q_mvar": q.tolist()}
    return demand, p, q, gamma


def reference(grid, net, p, q, gamma, solar_mw, es_units, loss_penalty):
    base = grid["base_mva"]
    c = grid["costs"]
    es = grid["es_unit"]
    B, T = p.shape
    L = len(net["line_from"])
    r, x = net["r_pu"], net["x_pu"]
    pg, qg = cp.Variable(T), cp.Variable(T)
    P, Q, l = cp.Variable((L, T)), cp.Variable((L, T)), cp.Variable((L, T))
    v = cp.Variable((B, T))
    cons = [pg >= 0, l >= 0, v[net["slack"]] == 1.0]
    for k in range(L):
        if np.isfinite(net["l_max_pu"][k]):
            cons.append(l[k] <= net["l_max_pu"][k])
    for b in range(B):
        if b != net["slack"]:
            cons += [v[b] >= net["v_min_sq"][b], v[b] <= net["v_max_sq"][b]]

    inj_p = [-p[b] / base for b in range(B)]
    inj_q = [-q[b] / base for b in range(B)]
    cost = 0
    for b in range(B):
        if solar_mw[b] > 0:
            ps, qs = cp.Variable(T), cp.Variable(T)
            cap = solar_mw[b] / base
            cons += [ps >= 0, ps <= gamma * cap, cp.abs(qs) <= grid["solar_q_fraction"] * cap]
            inj_p[b] = inj_p[b] + ps
            inj_q[b] = inj_q[b] + qs
        if es_units[b] > 0:
            n = es_units[b]
            pc, pd, qe, e = cp.Variable(T), cp.Variable(T), cp.Variable(T), cp.Variable(T + 1)
            cons += [pc >= 0, pd >= 0, pc <= n * es["p_ch_max_mw"] / base, pd <= n * es["p_dis_max_mw"] / base,
                     cp.abs(qe) <= n * es["q_lim_mvar"] / base, e >= 0, e <= n * es["e_unit_mwh"] / base,
                     e[1:] == e[:-1] + es["eta_ch"] * pc - pd / es["eta_dis"], e[0] == e[T]]
            inj_p[b] = inj_p[b] + pd - pc
            inj_q[b] = inj_q[b] + qe
            cost += c["cycling_penalty_usd_per_mwh"] * base * cp.sum(pc + pd)

    for j in range(B):
        out_p = sum(P[k] for k in range(L) if net["line_from"][k] == j)
        out_q = sum(Q[k] for k in range(L) if net["line_from"][k] == j)
        if j == net["slack"]:
            cons += [pg + inj_p[j] == out_p, qg + inj_q[j] == out_q]
        else:
            k = net["parent_line"][j]
            cons += [P[k] - r[k] * l[k] + inj_p[j] == out_p, Q[k] - x[k] * l[k] + inj_q[j] == out_q]
    for k in range(L):
        i, j = net["line_from"][k], net["line_to"][k]
        cons.append(v[j] == v[i] - 2 * (r[k] * P[k] + x[k] * Q[k]) + (r[k] ** 2 + x[k] ** 2) * l[k])
        for t in range(T):
            cons.append(cp.SOC(l[k, t] + v[i, t], cp.hstack([2 * P[k, t], 2 * Q[k, t], l[k, t] - v[i, t]])))
        cost += loss_penalty * base * max(r[k], 1e-6) * cp.sum(l[k])
    cost += cp.sum(c["a_g_usd_per_mw2h"] * base**2 * cp.square(pg) + c["b_g_usd_per_mwh"] * base * pg)
    cost += c["c_g_usd_per_h"] * T
    prob = cp.Problem(cp.Minimize(cost), cons)
    prob.solve(solver=cp.CLARABEL)
    assert prob.status == cp.OPTIMAL
    return prob.value, pg.value * base, v.value


def test_twelve_bus_day_matches_cvxpy(configs):
    run = dwcplan.load_run(configs / "case_study" / "run_reduced.json")
    grid = run["resolved"]["grid"]
    net = dwcplan.network(grid)
    demand, p, q, gamma = hourly(run)
    solar = [25.0] + [0.0] * 11
    units = [0.0] * 12
    units[5] = units[10] = 3.0
    ours = dwcplan.solve_opf(grid, demand, solar_availability=gamma.tolist(), solar_mw=solar, es_units=units,
                             loss_penalty=0.1)
    assert ours["status"] == "optimal"
    value, pg, v = reference(grid, net, p, q, gamma, solar, units, 0.1)
    assert ours["program_objective"] == pytest.approx(value, rel=1e-6)
    np.testing.assert_allclose(ours["p_g_mw"], pg, atol=1e-3)
    np.testing.assert_allclose(ours["v_pu2"], v, atol=1e-5)
    assert ours["max_cone_gap_pu2"] <= 1e-5
