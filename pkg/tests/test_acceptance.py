"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion
lines; tolerances are pinned here and match the shipped solver/grid
defaults (n = 4096, r_min = 1e-7 R, R = 40/sqrt(min(omega0, 1)/2)).
"""

import math

import numpy as np
import pytest

from deltanls import (
    DecomposedState,
    RadialField,
    branch_point,
    branch_roots,
    branch_scan,
    build_grid,
    energy,
    energy_gradient,
    evaluate,
    green_diff_grad_l2_sq,
    green_diff_l2_sq,
    green_value,
    lagrange_frequency,
    omega_threshold,
    solve_action,
    solve_ground_state,
    theta,
    verify_state,
)
from deltanls.rearrange import battery
from util import random_state


def gate(num, description, ok):
    print(f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'} - {description}")
    assert ok, f"criterion {num}: {description}"


def test_criterion_01_closed_form_norm_gates():
    lams = (0.5, 1.0, 2.0, 4.0)
    grid = build_grid(40.0 / math.sqrt(min(lams)), 4096)
    r = grid.nodes
    worst = 0.0
    for lam in lams:
        g = green_value(lam, r)
        got = grid.integrate_values(g * g)
        worst = max(worst, abs(got - 1.0 / (4 * math.pi * lam)) * 4 * math.pi * lam)
    for lam in lams:
        for nu in lams:
            if lam >= nu:
                continue
            d = green_value(lam, r) - green_value(nu, r)
            exact = green_diff_l2_sq(lam, nu)
            worst = max(worst, abs(grid.integrate_values(d * d) - exact) / exact)
            exact_g = green_diff_grad_l2_sq(lam, nu)
            worst = max(worst, abs(grid.grad_sq_values(d) - exact_g) / exact_g)
    gate(1, f"quadrature vs closed-form Green norms, worst rel {worst:.2e} <= 1e-5",
         worst <= 1e-5)


def test_criterion_02_threshold_identity():
    worst = max(abs(a + theta(omega_threshold(a))) for a in (-2.0, -1.0, 0.0, 1.0, 2.0))
    direct = abs(omega_threshold(0.0) - 4.0 * math.exp(-2.0 * 0.5772156649015329))
    ok = worst <= 1e-12 and direct <= 1e-12 * omega_threshold(0.0)
    gate(2, f"alpha + theta(omega0) root identity, worst {worst:.2e} <= 1e-12", ok)


def test_criterion_03_nehari_structure(params3):
    om0 = params3.omega0
    om = 0.5 * om0
    roots = branch_roots(om, params3)
    ok = roots is not None
    lam1, lam2 = roots
    ok &= 0 < lam1 < om0 < lam2
    from deltanls import g_function

    ok &= abs(g_function(lam1, om, params3)[0]) < 1e-12
    ok &= abs(g_function(lam2, om, params3)[0]) < 1e-12
    # collapse of the branch action approaching lam1 from the left
    sweep = np.geomspace(1e-3 * om0, lam1 * (1 - 1e-12), 200)
    actions = [branch_point(float(l), om, params3).action for l in sweep]
    ok &= actions[-1] <= 1e-4 * max(actions)
    # above the threshold: admissible everywhere, positive infimum
    lams = np.geomspace(1e-3 * om0, 1e3 * om0, 2000)
    pts = branch_scan(2.0 * om0, params3, lams)
    ok &= all(pt.admissible for pt in pts)
    inf_act = min(pt.action for pt in pts)
    ok &= inf_act > 0
    gate(3, f"branch roots (|g| < 1e-12), collapse at lam1, positive inf {inf_act:.3g}", ok)


def test_criterion_04_branch_round_trip(params3, grid_default):
    om0 = params3.omega0
    worst = 0.0
    for om in (0.5 * om0, 2.0 * om0):
        for lam in np.geomspace(0.05 * om0, 20.0 * om0, 20):
            pt = branch_point(float(lam), om, params3)
            if not pt.admissible:
                continue
            state = DecomposedState(
                lam=pt.lam, q=pt.q,
                phi=RadialField(grid_default, np.zeros(grid_default.n)),
            )
            rep = evaluate(state, params3, om)
            worst = max(worst, abs(rep.nehari) / rep.lp_p)
    gate(4, f"branch states satisfy |I_omega| <= 1e-8 ||.||_p^p, worst {worst:.2e}",
         worst <= 1e-8)


def test_criterion_05_gradient_correctness(params3, grid_small):
    rng = np.random.default_rng(20)
    om0 = params3.omega0
    worst = 0.0
    for _ in range(20):
        st = random_state(grid_small, rng, (om0 / 2, 2 * om0))
        gphi, gq = energy_gradient(st, params3)
        dphi = rng.standard_normal(grid_small.n) * np.exp(-grid_small.nodes / 4.0)
        dq = float(rng.standard_normal())
        predicted = float(np.dot(grid_small.weights * gphi.values, dphi)) + gq * dq
        h = 1e-6

        def at(sign):
            return energy(
                DecomposedState(
                    lam=st.lam, q=st.q + sign * h * dq,
                    phi=RadialField(grid_small, st.phi.values + sign * h * dphi),
                ),
                params3,
            )

        fd = (at(+1) - at(-1)) / (2 * h)
        worst = max(worst, abs(fd - predicted) / max(abs(fd), 1e-12))
    gate(5, f"analytic gradient vs central differences, worst rel {worst:.2e} <= 1e-5",
         worst <= 1e-5)


def test_criterion_06_ground_state_battery(ground_state, soliton, params3, config):
    ok = ground_state.converged and soliton.converged
    e, e0 = ground_state.report.energy, soliton.report.energy
    margin = 10.0 * config.obj_tol * max(1.0, abs(e0))
    ok &= e < e0 - margin < -margin  # E < E0 < 0 with margin
    ok &= ground_state.state.q > 0
    om = lagrange_frequency(ground_state.state, params3)
    ok &= om > params3.omega0
    lhs = 2 * e - (params3.p - 2) / params3.p * ground_state.report.lp_p
    ok &= abs(lhs + om * ground_state.report.mass) <= 1e-6 * om * ground_state.report.mass
    rep = verify_state(ground_state.state, params3, om)
    ok &= rep.el_residual_rel <= 1e-3
    ok &= rep.bc_residual_rel <= 1e-2
    ok &= rep.log_slope_rel_err <= 0.02
    ok &= rep.min_value_u > 0 and rep.monotone_violations == 0
    gate(6, f"ground state mu=1 p=3: E={e:.6f} < E0={e0:.6f} < 0, omega={om:.4f}, "
            f"el={rep.el_residual_rel:.1e}, bc={rep.bc_residual_rel:.1e}", ok)


def test_criterion_07_action_minimizer(action_2om0, action_2om0_free, ground_state,
                                        params3, grid_default, config):
    ok = action_2om0.converged and action_2om0_free.converged
    rep = action_2om0.report
    ok &= abs(rep.nehari) <= 1e-8 * rep.lp_p
    d, d0 = action_2om0.d_omega, action_2om0_free.d_omega
    margin = 10.0 * config.obj_tol
    ok &= margin < d < d0 - margin * max(1.0, d0)
    lams = np.geomspace(0.02 * params3.omega0, 100.0 * params3.omega0, 800)
    inf_branch = min(
        pt.action for pt in branch_scan(2.0 * params3.omega0, params3, lams)
        if pt.admissible
    )
    ok &= d <= inf_branch
    # bridge with criterion 6: the ground state minimizes the action at its
    # own Lagrange frequency
    om = lagrange_frequency(ground_state.state, params3)
    s_gs = evaluate(ground_state.state, params3, om).action
    bridge = solve_action(om, params3, grid_default, config)
    ok &= bridge.converged
    ok &= abs(bridge.d_omega - s_gs) <= 10.0 * config.obj_tol * max(1.0, s_gs)
    gate(7, f"action at 2*omega0: 0 < d={d:.6f} < d0={d0:.4f}, d <= branch inf "
            f"{inf_branch:.6f}, bridge |d - S|={abs(bridge.d_omega - s_gs):.2e}", ok)


@pytest.mark.parametrize("factor", [0.3, 0.7, 1.0])
def test_criterion_08_subthreshold_collapse(params3, grid_default, config, factor):
    res = solve_action(factor * params3.omega0, params3, grid_default, config)
    j0 = res.diagnostics["objective_initial"]
    j1 = res.diagnostics["objective_final"]
    ok = res.degenerate and not res.converged and j1 <= 1e-4 * j0
    gate(8, f"omega = {factor} omega0: objective {j0:.4g} -> {j1:.4g} "
            f"(<= 1e-4 ratio), no minimizer claimed", ok)


def test_criterion_09_rearrangement_battery():
    summary, _ = battery(cells=64, pairs=500, ps_trials=100,
                         p_values=(1.0, 2.0, 3.0, 3.5), seed=1234)
    ok = (
        summary["hl_violations"] == 0
        and summary["sum_violations"] == 0
        and summary["equimeasurability_failures"] == 0
        and summary["polya_szego_worst_ratio"] <= 1.0 + 5e-2
    )
    gate(9, f"rearrangement battery 64x64: hl=0 sum=0 equim exact, "
            f"PS ratio {summary['polya_szego_worst_ratio']:.4f} <= 1.05", ok)


def test_criterion_10_grid_independence(ground_state, action_2om0, params3,
                                        grid_fine, config):
    gs_fine = solve_ground_state(1.0, params3, grid_fine, config)
    act_fine = solve_action(2.0 * params3.omega0, params3, grid_fine, config)
    ok = gs_fine.converged and act_fine.converged
    de = abs(gs_fine.report.energy - ground_state.report.energy) / abs(
        ground_state.report.energy
    )
    dd = abs(act_fine.d_omega - action_2om0.d_omega) / action_2om0.d_omega
    ok &= de <= 1e-4 and dd <= 1e-4
    gate(10, f"doubling n, halving r_min: E shifts {de:.2e}, d shifts {dd:.2e} "
             f"(both <= 1e-4)", ok)
